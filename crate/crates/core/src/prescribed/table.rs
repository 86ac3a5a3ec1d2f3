use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::bracket;

/// Sampled prescribed function with monotone piecewise-cubic (Fritsch–Carlson)
/// interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    ys: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    source: String,
}

impl Table {
    /// Build from ascending nodes covering `[-1, 1]`.
    pub fn new(ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ys.len() != values.len() || ys.len() < 2 {
            return Err(Error::InvalidInput("table needs at least two (y, value) rows".into()));
        }
        if ys.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("table nodes must be strictly ascending".into()));
        }
        if (ys[0] + 1.0).abs() > 1e-9 || (ys[ys.len() - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "table must span [-1, 1], got [{}, {}]",
                ys[0],
                ys[ys.len() - 1]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("table values must be finite".into()));
        }
        let slopes = pchip_slopes(&ys, &values);
        Ok(Self {
            ys,
            values,
            slopes,
            source: "<inline>".into(),
        })
    }

    /// Two-column CSV (`y,value`), optional header row, `#` comments.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut ys = Vec::new();
        let mut values = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::Parse(format!("table row {} has fewer than two columns", i + 1)));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(y), Ok(v)) => {
                    ys.push(y);
                    values.push(v);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("table row {} is not numeric", i + 1))),
            }
        }
        Self::new(ys, values)
    }

    pub(crate) fn set_source(&mut self, source: &str) {
        self.source = source.to_string();
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.ys, &self.values)
    }

    pub fn value(&self, y: f64) -> f64 {
        let i = bracket(&self.ys, y);
        crate::numeric::hermite(
            self.ys[i],
            self.ys[i + 1],
            self.values[i],
            self.values[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            y,
        )
    }

    pub fn derivative(&self, y: f64) -> f64 {
        let i = bracket(&self.ys, y);
        let h = self.ys[i + 1] - self.ys[i];
        let t = (y - self.ys[i]) / h;
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -6.0 * t * t + 6.0 * t;
        let dh11 = 3.0 * t * t - 2.0 * t;
        (dh00 * self.values[i] + dh01 * self.values[i + 1]) / h + dh10 * self.slopes[i] + dh11 * self.slopes[i + 1]
    }

    /// Number of sign changes between consecutive nodes.
    pub(crate) fn node_sign_changes(&self) -> usize {
        self.values
            .windows(2)
            .filter(|w| (w[0] < 0.0 && w[1] > 0.0) || (w[0] > 0.0 && w[1] < 0.0))
            .count()
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let ys: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let vals: Vec<f64> = ys.iter().map(|y| 2.0 * y - 0.5).collect();
        let t = Table::new(ys.clone(), vals.clone()).unwrap();
        for (y, v) in ys.iter().zip(&vals) {
            assert!((t.value(*y) - v).abs() < 1e-14);
        }
        assert!((t.value(0.33) - 0.16).abs() < 1e-14);
        assert!((t.derivative(0.33) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let ys = vec![-1.0, -0.5, 0.0, 0.2, 1.0];
        let vals = vec![0.0, 0.0, 0.1, 5.0, 5.2];
        let t = Table::new(ys, vals).unwrap();
        let mut prev = t.value(-1.0);
        for i in 1..=2000 {
            let v = t.value(-1.0 + 2.0 * i as f64 / 2000.0);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }

    #[test]
    fn csv_parsing_with_header_and_comments() {
        let text = "# sample\ny,k\n-1,1\n0,2\n1,3\n";
        let t = Table::from_csv_str(text).unwrap();
        assert_eq!(t.nodes().0.len(), 3);
        assert!((t.value(0.5) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Table::new(vec![-1.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(Table::new(vec![-1.0, -1.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(Table::from_csv_str("-1,1\n0,x\n1,2\n").is_err());
    }
}
