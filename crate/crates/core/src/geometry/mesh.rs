use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::Serialize;

use super::{ProfileCurve, AXIS_EPS};
use crate::error::{Error, Result};
use crate::prescribed::PrescribedFunction;

/// Triangulated surface of revolution with per-vertex diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Unit normals `η = (−sin θ cos φ, −sin θ sin φ, cos θ)`.
    pub normals: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub rings: usize,
    pub sectors: usize,
    /// Angle function `cos θ` at each vertex.
    pub nu: Vec<f64>,
    /// Angle-defect Gauss curvature over the mixed area; `None` on open boundaries.
    pub discrete_gauss: Vec<Option<f64>>,
    pub tags: Vec<String>,
}

enum Ring {
    Pole(usize),
    Circle(usize),
}

/// Revolve a profile about the `z`-axis with `sectors` samples in angle.
///
/// Ends on the axis become a single pole vertex when the profile meets the
/// axis orthogonally; a cusp end is left as an open ring and tagged.
pub fn revolve(profile: &ProfileCurve, sectors: usize) -> Result<SurfaceMesh> {
    if sectors < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 sectors, got {sectors}")));
    }
    let p = &profile.samples;
    if p.len() < 2 {
        return Err(Error::Degenerate("profile has fewer than two samples".into()));
    }
    for w in p.windows(2) {
        if (w[1].x - w[0].x).abs() <= 1e-14 && (w[1].z - w[0].z).abs() <= 1e-14 {
            return Err(Error::Degenerate(format!("duplicate profile point at s = {}", w[1].s)));
        }
    }
    let mut mesh = SurfaceMesh {
        vertices: Vec::new(),
        normals: Vec::new(),
        faces: Vec::new(),
        rings: 0,
        sectors,
        nu: Vec::new(),
        discrete_gauss: Vec::new(),
        tags: Vec::new(),
    };
    let last = p.len() - 1;
    let mut rings: Vec<Ring> = Vec::new();
    let mut boundary = Vec::new();
    for (i, q) in p.iter().enumerate() {
        let (ct, st) = (q.theta.cos(), q.theta.sin());
        if q.x <= AXIS_EPS {
            let orthogonal = st.abs() < 1e-4;
            if (i == 0 || i == last) && orthogonal {
                rings.push(Ring::Pole(mesh.vertices.len()));
                mesh.vertices.push([0.0, 0.0, q.z]);
                mesh.normals.push([0.0, 0.0, ct.signum()]);
                mesh.nu.push(ct.signum());
                continue;
            }
            if i == 0 || i == last {
                mesh.tags.push(format!("singular cusp at z = {}", q.z));
                continue;
            }
            return Err(Error::Degenerate(format!(
                "profile touches the axis inside at s = {}",
                q.s
            )));
        }
        let start = mesh.vertices.len();
        for j in 0..sectors {
            let phi = TAU * j as f64 / sectors as f64;
            let (sp, cp) = phi.sin_cos();
            mesh.vertices.push([q.x * cp, q.x * sp, q.z]);
            mesh.normals.push([-st * cp, -st * sp, ct]);
            mesh.nu.push(ct);
        }
        rings.push(Ring::Circle(start));
    }
    mesh.rings = rings.len();
    if let Some(Ring::Circle(start)) = rings.first() {
        boundary.extend(*start..*start + sectors);
    }
    if rings.len() > 1 {
        if let Some(Ring::Circle(start)) = rings.last() {
            boundary.extend(*start..*start + sectors);
        }
    }
    for w in rings.windows(2) {
        match (&w[0], &w[1]) {
            (Ring::Circle(a), Ring::Circle(b)) => {
                for j in 0..sectors {
                    let jn = (j + 1) % sectors;
                    mesh.faces.push([a + j, b + j, a + jn]);
                    mesh.faces.push([b + j, b + jn, a + jn]);
                }
            }
            (Ring::Pole(p0), Ring::Circle(b)) => {
                for j in 0..sectors {
                    mesh.faces.push([*p0, b + j, b + (j + 1) % sectors]);
                }
            }
            (Ring::Circle(a), Ring::Pole(p1)) => {
                for j in 0..sectors {
                    mesh.faces.push([a + j, *p1, a + (j + 1) % sectors]);
                }
            }
            (Ring::Pole(_), Ring::Pole(_)) => {
                return Err(Error::Degenerate("two consecutive poles".into()));
            }
        }
    }
    mesh.discrete_gauss = angle_defect(&mesh.vertices, &mesh.faces, &boundary);
    Ok(mesh)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// `(2π − Σ angles) / A_mixed` at each vertex, with the mixed Voronoi area
/// (obtuse triangles fall back to area fractions).
fn angle_defect(v: &[[f64; 3]], faces: &[[usize; 3]], boundary: &[usize]) -> Vec<Option<f64>> {
    let mut angles = vec![0.0; v.len()];
    let mut areas = vec![0.0; v.len()];
    for f in faces {
        let p = [v[f[0]], v[f[1]], v[f[2]]];
        let area = 0.5 * norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
        if area <= 0.0 {
            continue;
        }
        let mut ang = [0.0; 3];
        for i in 0..3 {
            let (a, b) = (sub(p[(i + 1) % 3], p[i]), sub(p[(i + 2) % 3], p[i]));
            ang[i] = norm(cross(a, b)).atan2(dot(a, b));
        }
        let obtuse = ang.iter().position(|&a| a > PI / 2.0);
        for i in 0..3 {
            angles[f[i]] += ang[i];
            let mixed = match obtuse {
                None => {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    let eij = dot(sub(p[j], p[i]), sub(p[j], p[i]));
                    let eik = dot(sub(p[k], p[i]), sub(p[k], p[i]));
                    (eij / ang[k].tan() + eik / ang[j].tan()) / 8.0
                }
                Some(o) if o == i => area / 2.0,
                Some(_) => area / 4.0,
            };
            areas[f[i]] += mixed;
        }
    }
    let mut is_boundary = vec![false; v.len()];
    for &b in boundary {
        is_boundary[b] = true;
    }
    (0..v.len())
        .map(|i| (!is_boundary[i] && areas[i] > 0.0).then(|| (2.0 * PI - angles[i]) / areas[i]))
        .collect()
}

impl SurfaceMesh {
    /// Largest `|K_discrete − 𝔎(ν)|` over vertices with a discrete value.
    pub fn max_gauss_error(&self, k: &PrescribedFunction) -> f64 {
        self.discrete_gauss
            .iter()
            .zip(&self.nu)
            .filter_map(|(g, &nu)| g.map(|g| (g - k.value(nu)).abs()))
            .fold(0.0, f64::max)
    }

    /// Wavefront text: `v`, `vn` and `f v//vn` records (1-based).
    pub fn write_obj<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# rings {} sectors {}", self.rings, self.sectors)?;
        for tag in &self.tags {
            writeln!(w, "# {tag}")?;
        }
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for n in &self.normals {
            writeln!(w, "vn {} {} {}", n[0], n[1], n[2])?;
        }
        for f in &self.faces {
            let [a, b, c] = f.map(|i| i + 1);
            writeln!(w, "f {a}//{a} {b}//{b} {c}//{c}")?;
        }
        Ok(())
    }
}
