mod emit;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ksurf_core::classify::{classify, ClassificationReport, ClassifyOptions};
use ksurf_core::export::{
    grid_portrait, portrait_svg, profile_svg, write_orbit_csv, write_profile_csv, write_radial_csv,
};
use ksurf_core::geometry::{asymptote_report, profile_from_orbit, revolve};
use ksurf_core::phaseplane::{
    integrate_orbit, integrate_through, Direction, Orbit, OrbitLimit, OrbitOptions, PhasePoint,
};
use ksurf_core::radial::{downward_solve, handoff, picard_solve, PicardOptions};
use ksurf_core::verify::verify;
use ksurf_core::{Error, PrescribedFunction};
use serde::Serialize;

use emit::Emitter;

/// Rotational surfaces with prescribed Gauss curvature of the angle function.
#[derive(Debug, Parser, Serialize)]
#[command(name = "ksurf", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Output directory.
    #[arg(long, global = true, env = "KSURF_OUT", default_value = "ksurf-out")]
    out: PathBuf,
    /// Integrator tolerance (absolute and relative).
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    /// Arclength budget per orbit direction.
    #[arg(long, global = true, default_value_t = 1e6)]
    budget_arclength: f64,
    /// Step budget per orbit direction.
    #[arg(long, global = true, default_value_t = 2_000_000)]
    budget_steps: usize,
    /// Right edge of the portrait window.
    #[arg(long, global = true, default_value_t = 4.0)]
    xmax: f64,
    /// Starts per axis in the portrait lattice.
    #[arg(long, global = true, default_value_t = 8)]
    grid: usize,
    /// Angular samples when revolving a profile.
    #[arg(long, global = true, default_value_t = 64)]
    sectors: usize,
    /// Format of the main artifact.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Svg,
    Obj,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
enum Command {
    /// Classify every rotational surface for a prescribed function.
    Classify { spec: String },
    /// Integrate one phase-plane orbit.
    Orbit(OrbitArgs),
    /// Solve the axis problem and continue the graph into the phase plane.
    Radial {
        spec: String,
        /// Solve with downward normal at the axis.
        #[arg(long)]
        downward: bool,
    },
    /// Meridian profile of one orbit.
    Profile(OrbitArgs),
    /// Surface of revolution of one orbit, as a triangle mesh.
    Mesh {
        #[command(flatten)]
        orbit: OrbitArgs,
        /// Rings along the profile.
        #[arg(long, default_value_t = 64)]
        rings: usize,
    },
    /// Phase portrait through a lattice of starts.
    Portrait { spec: String },
    /// Check closed-form formulas against independent oracles.
    Verify,
}

#[derive(Debug, Args, Serialize)]
struct OrbitArgs {
    /// Prescribed function, e.g. `const:1`, `affine:1,2`, `pow:4`, `poly:1,0,-1`.
    spec: String,
    /// Start on the axis at `(0, 0)`, leaving upward.
    #[arg(long, conflicts_with_all = ["from_bottom", "x0", "theta0"])]
    from_axis: bool,
    /// Start on the axis at `(0, π)`, leaving downward.
    #[arg(long, conflicts_with_all = ["x0", "theta0"])]
    from_bottom: bool,
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    #[arg(long, default_value_t = PI / 2.0)]
    theta0: f64,
    #[arg(long, value_enum, default_value = "both")]
    direction: Dir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Dir {
    Forward,
    Backward,
    Both,
}

enum Failure {
    Io(String),
    Usage(String),
    Numeric(Error),
    Verify,
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(m) => Failure::Io(m),
            Error::Parse(_) | Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Io(m) => (1, format!("i/o failure: {m}")),
                Failure::Usage(m) => (2, m),
                Failure::Numeric(e) => (3, format!("numeric failure: {e}")),
                Failure::Verify => (4, "verification failed".to_string()),
            };
            eprintln!("ksurf: {msg}");
            ExitCode::from(code)
        }
    }
}

fn parse(spec: &str) -> Result<PrescribedFunction, Failure> {
    spec.parse().map_err(|e: Error| Failure::Usage(e.to_string()))
}

fn orbit_options(c: &Common) -> Result<OrbitOptions, Failure> {
    if !(c.tol > 0.0 && c.tol < 1e-2) {
        return Err(Failure::Usage(format!("--tol must lie in (0, 0.01), got {}", c.tol)));
    }
    if !(c.budget_arclength > 0.0) || c.budget_steps == 0 {
        return Err(Failure::Usage("budgets must be positive".into()));
    }
    Ok(OrbitOptions {
        tol: c.tol,
        max_arclength: c.budget_arclength,
        max_steps: c.budget_steps,
        ..OrbitOptions::default()
    })
}

fn format_for(c: &Common, allowed: &[Format], command: &str) -> Result<Format, Failure> {
    match c.format {
        None => Ok(allowed[0]),
        Some(f) if allowed.contains(&f) => Ok(f),
        Some(f) => Err(Failure::Usage(format!("{command} cannot emit {f:?} output"))),
    }
}

fn limit(l: &OrbitLimit) -> String {
    serde_json::to_string(l).unwrap_or_else(|_| l.name().to_string())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    if !(c.xmax > 0.0) || c.grid == 0 {
        return Err(Failure::Usage("--xmax and --grid must be positive".into()));
    }
    let opts = orbit_options(c)?;
    let mut out = Emitter::new(&c.out);
    match &cli.command {
        Command::Classify { spec } => {
            format_for(c, &[Format::Json], "classify")?;
            cmd_classify(&parse(spec)?, c, opts, &mut out)?
        }
        Command::Orbit(a) => {
            let k = parse(&a.spec)?;
            let o = orbit(&k, a, &opts)?;
            match format_for(c, &[Format::Csv, Format::Json], "orbit")? {
                Format::Json => out.write_json("orbit.json", &o)?,
                _ => out.write("orbit.csv", &csv(|w| write_orbit_csv(&k, &o, w))?)?,
            };
            println!("start {}", limit(&o.limit_start));
            println!("end {}", limit(&o.limit_end));
            println!("samples {} arclength {}", o.len(), o.arclength());
        }
        Command::Radial { spec, downward } => {
            format_for(c, &[Format::Csv], "radial")?;
            let k = parse(spec)?;
            let (sol, hand) = if *downward {
                downward_solve(&k, &PicardOptions::default())?
            } else {
                let sol = picard_solve(&k, &PicardOptions::default())?;
                let h = handoff(&sol);
                (sol, h)
            };
            out.write("radial.csv", &csv(|w| write_radial_csv(&sol, w))?)?;
            println!(
                "delta {} iterations {} residual {:e}",
                sol.delta,
                sol.iterations,
                sol.residual()
            );
            println!("handoff x {} theta {}", hand.point.x, hand.point.theta);
            #[derive(Serialize)]
            struct Continuation {
                handoff: ksurf_core::radial::Handoff,
                limit_end: OrbitLimit,
                asymptote: Option<ksurf_core::geometry::AsymptoteReport>,
            }
            if let Some(reason) = &hand.degenerate {
                println!("continuation none ({reason})");
                out.write_json(
                    "continuation.json",
                    &Continuation {
                        handoff: hand,
                        limit_end: OrbitLimit::AxisOrthogonalTop,
                        asymptote: None,
                    },
                )?;
            } else {
                let (start, dir) = if *downward {
                    (PhasePoint::new(0.0, PI), Direction::Backward)
                } else {
                    (PhasePoint::new(0.0, 0.0), Direction::Forward)
                };
                let o = integrate_orbit(&k, start, dir, &opts)?;
                let far = if *downward {
                    o.limit_start.clone()
                } else {
                    o.limit_end.clone()
                };
                let asym = if *downward {
                    asymptote_report(&k.reflect(), &o.reflected()).ok()
                } else {
                    asymptote_report(&k, &o).ok()
                };
                println!("continuation {}", limit(&far));
                if let Some(a) = &asym {
                    println!("asymptote {}", serde_json::to_string(a).unwrap_or_default());
                }
                out.write_json(
                    "continuation.json",
                    &Continuation {
                        handoff: hand,
                        limit_end: far,
                        asymptote: asym,
                    },
                )?;
            }
        }
        Command::Profile(a) => {
            let k = parse(&a.spec)?;
            let o = orbit(&k, a, &opts)?;
            let profile = profile_from_orbit(&o, 0.0)?;
            match format_for(c, &[Format::Csv, Format::Svg, Format::Json], "profile")? {
                Format::Svg => out.write("profile.svg", profile_svg(&profile).as_bytes())?,
                Format::Json => out.write_json("profile.json", &profile)?,
                _ => out.write("profile.csv", &csv(|w| write_profile_csv(&k, &profile, w))?)?,
            };
            println!("samples {} height {}", profile.len(), profile.height());
        }
        Command::Mesh { orbit: a, rings } => {
            format_for(c, &[Format::Obj], "mesh")?;
            let k = parse(&a.spec)?;
            let o = orbit(&k, a, &opts)?;
            let profile = profile_from_orbit(&o, 0.0)?.resample((*rings).max(2))?;
            let mesh = revolve(&profile, c.sectors)?;
            let mut buf = Vec::new();
            mesh.write_obj(&mut buf)?;
            out.write("mesh.obj", &buf)?;
            println!(
                "vertices {} faces {} max gauss error {:e}",
                mesh.vertices.len(),
                mesh.faces.len(),
                mesh.max_gauss_error(&k)
            );
        }
        Command::Portrait { spec } => {
            let k = parse(spec)?;
            let curves = grid_portrait(&k, c.grid, c.xmax, &opts)?;
            match format_for(c, &[Format::Svg, Format::Json], "portrait")? {
                Format::Json => out.write_json("portrait.json", &curves)?,
                _ => out.write("portrait.svg", portrait_svg(&k, &curves, c.xmax)?.as_bytes())?,
            };
            println!("curves {}", curves.len());
        }
        Command::Verify => {
            format_for(c, &[Format::Json], "verify")?;
            let report = verify()?;
            let table = report.table();
            print!("{table}");
            out.write("verify.txt", table.as_bytes())?;
            out.write_json("verify.json", &report)?;
            if !report.passed() {
                out.finish(cli)?;
                return Err(Failure::Verify);
            }
        }
    }
    for a in out.finish(cli)? {
        println!("wrote {} ({} bytes)", c.out.join(&a.file).display(), a.bytes);
    }
    Ok(())
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> ksurf_core::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn orbit(k: &PrescribedFunction, a: &OrbitArgs, opts: &OrbitOptions) -> Result<Orbit, Failure> {
    let dir = match a.direction {
        Dir::Forward => Direction::Forward,
        Dir::Backward => Direction::Backward,
        Dir::Both => Direction::Both,
    };
    let o = if a.from_axis {
        integrate_orbit(k, PhasePoint::new(0.0, 0.0), Direction::Forward, opts)?
    } else if a.from_bottom {
        integrate_orbit(k, PhasePoint::new(0.0, PI), Direction::Backward, opts)?
    } else if dir == Direction::Both {
        integrate_through(k, PhasePoint::new(a.x0, a.theta0), opts)?
    } else {
        integrate_orbit(k, PhasePoint::new(a.x0, a.theta0), dir, opts)?
    };
    Ok(o)
}

fn cmd_classify(k: &PrescribedFunction, c: &Common, orbit: OrbitOptions, out: &mut Emitter) -> Result<(), Failure> {
    let opts = ClassifyOptions {
        orbit,
        portrait_x_max: c.xmax,
        ..ClassifyOptions::default()
    };
    let report = classify(k, &opts)?;
    out.write("portrait.svg", portrait_svg(k, &report.portrait, c.xmax)?.as_bytes())?;
    for fam in &report.families {
        for (i, w) in fam.witnesses.iter().enumerate() {
            if let Some(o) = &w.orbit {
                let name = format!(
                    "witness-{}-{i}.csv",
                    serde_json::to_value(fam.kind)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default()
                );
                out.write(&name, &csv(|buf| write_orbit_csv(k, o, buf))?)?;
            }
        }
    }
    #[derive(Serialize)]
    struct Document<'a> {
        report: &'a ClassificationReport,
        artifacts: &'a [emit::Artifact],
    }
    let artifacts = out.artifacts().to_vec();
    out.write_json(
        "report.json",
        &Document {
            report: &report,
            artifacts: &artifacts,
        },
    )?;
    println!("function {}", report.function);
    println!("regime {:?}", report.regime);
    if let Some(m) = report.minkowski_value {
        println!("minkowski {m}");
    }
    for fam in &report.families {
        let data: Vec<String> = fam.data.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("family {:?}: {}", fam.kind, data.join(" "));
        for w in &fam.warnings {
            println!("  warning: {w}");
        }
    }
    if let Some(e) = report.max_check_error {
        println!("max check error {e:e}");
    }
    Ok(())
}
