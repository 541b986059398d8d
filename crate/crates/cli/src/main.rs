use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use parmel_core::identities::run_identities;
use parmel_core::melnikov::{melnikov_direct, reduce};
use parmel_core::simulator::{cross_validate, find_limit_cycles, return_map, SimConfig};
use parmel_core::zeros::{count_zeros, realize_with, theoretical_bound, RealizeOptions};
use parmel_core::{melnikov_canonical, u_of_h, EnergyLevel, Mode, PerturbationSpec, SpecFile};

// stdout writes propagate errors so a closed pipe ends the process quietly
macro_rules! out {
    ($($arg:tt)*) => {
        write!(std::io::stdout().lock(), $($arg)*)?
    };
}

macro_rules! outln {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

#[derive(Parser)]
#[command(name = "parmel", version, about = "Melnikov analysis of a center perturbed across parabolic switching curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Direct,
    Canonical,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate M(h) at one level or on a grid.
    Eval {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, conflicts_with = "h_grid", required_unless_present = "h_grid")]
        h: Option<f64>,
        /// LO:HI:N
        #[arg(long)]
        h_grid: Option<String>,
        /// Geometric grid spacing.
        #[arg(long, requires = "h_grid")]
        log: bool,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the canonical and u-space forms.
    Structure {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count positive zeros of M.
    Zeros {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        u_max: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the upper bound on the number of zeros.
    Bound {
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
    },
    /// Build a degree-one spec with zeros of M near the targets.
    Realize {
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One return-map sample with its crossing trace.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long)]
        h: f64,
    },
    /// Locate limit cycles from the return-map displacement.
    Cycles {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
        /// LO:HI
        #[arg(long)]
        h_range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare simulated cycles with the zeros of M for several eps.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        eps_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical identity suite.
    Identities {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: parmel_core::Error| e.to_string())
}

fn load_spec(path: &Path) -> Result<PerturbationSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SpecFile::from_json(&text)
        .and_then(|f| f.to_spec())
        .with_context(|| format!("parsing {}", path.display()))
}

fn level(h: f64) -> Result<EnergyLevel> {
    Ok(EnergyLevel::new(h)?)
}

fn parse_floats(s: &str, what: &str, count: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != count {
        bail!("{what}: expected {count} ':'-separated fields, got `{s}`");
    }
    parts
        .iter()
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("{what}: `{p}` is not a number")))
        .collect()
}

/// Strictly increasing `h` values from `LO:HI:N`.
fn parse_grid(s: &str, log: bool) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("--h-grid: expected LO:HI:N, got `{s}`");
    }
    let lo: f64 = parts[0].parse().with_context(|| format!("--h-grid: bad LO `{}`", parts[0]))?;
    let hi: f64 = parts[1].parse().with_context(|| format!("--h-grid: bad HI `{}`", parts[1]))?;
    let n: usize = parts[2].parse().with_context(|| format!("--h-grid: bad N `{}`", parts[2]))?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        bail!("--h-grid: need 0 < LO < HI and N ≥ 2, got `{s}`");
    }
    let grid: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            if k == n - 1 {
                hi
            } else if log {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect();
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        bail!("--h-grid: `{s}` does not resolve to strictly increasing values");
    }
    Ok(grid)
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            outln!("{text}");
            Ok(())
        }
    }
}

fn eval(spec: &PerturbationSpec, h: f64, method: Method) -> Result<(Option<f64>, Option<f64>)> {
    let lvl = level(h)?;
    let direct = match method {
        Method::Canonical => None,
        _ => Some(melnikov_direct(spec, lvl)?),
    };
    let canonical = match method {
        Method::Direct => None,
        _ => Some(melnikov_canonical(&reduce(spec)?.1, lvl)),
    };
    Ok((direct, canonical))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval {
            spec,
            h,
            h_grid,
            log,
            method,
            out,
        } => {
            let spec = load_spec(&spec)?;
            if let Some(h) = h {
                let (d, c) = eval(&spec, h, method)?;
                let mut lines = vec![format!("h = {h:?}")];
                if let Some(d) = d {
                    lines.push(format!("direct = {d:?}"));
                }
                if let Some(c) = c {
                    lines.push(format!("canonical = {c:?}"));
                }
                if let (Some(d), Some(c)) = (d, c) {
                    lines.push(format!("difference = {:?}", c - d));
                }
                let text = lines.join("\n") + "\n";
                match out {
                    Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                    None => out!("{text}"),
                }
                return Ok(());
            }
            let grid = parse_grid(h_grid.as_deref().expect("clap enforces --h or --h-grid"), log)?;
            let sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
                None => Box::new(std::io::stdout()),
            };
            let mut w = csv::Writer::from_writer(sink);
            let mut header = vec!["h", "u"];
            match method {
                Method::Direct => header.push("direct"),
                Method::Canonical => header.push("canonical"),
                Method::Both => header.extend(["direct", "canonical", "difference"]),
            }
            w.write_record(&header)?;
            for h in grid {
                let (d, c) = eval(&spec, h, method)?;
                let mut row = vec![format!("{h:?}"), format!("{:?}", u_of_h(level(h)?).value())];
                row.extend(d.map(|v| format!("{v:?}")));
                row.extend(c.map(|v| format!("{v:?}")));
                if let (Some(d), Some(c)) = (d, c) {
                    row.push(format!("{:?}", c - d));
                }
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        Command::Structure { spec, out } => {
            let spec = load_spec(&spec)?;
            let (cf, uf) = reduce(&spec)?;
            #[derive(Serialize)]
            struct Structure<'a> {
                canonical_form: &'a parmel_core::CanonicalForm,
                u_form: &'a parmel_core::UForm,
                degree_violations: Vec<parmel_core::melnikov::DegreeViolation>,
            }
            emit_json(
                &Structure {
                    canonical_form: &cf,
                    u_form: &uf,
                    degree_violations: cf.degree_violations(),
                },
                out.as_deref(),
            )?;
        }
        Command::Zeros { spec, u_max, tol, out } => {
            let spec = load_spec(&spec)?;
            let (_, uf) = reduce(&spec)?;
            let report = count_zeros(&uf, u_max, tol)?;
            emit_json(&report, out.as_deref())?;
            if out.is_some() {
                outln!("{} zeros", report.count);
            }
        }
        Command::Bound { n, mode } => outln!("{}", theoretical_bound(n, mode)?),
        Command::Realize { mode, targets, out } => {
            let r = realize_with(&targets, mode, &RealizeOptions::default())?;
            let file = SpecFile::from_spec(&r.spec);
            match out {
                Some(p) => {
                    fs::write(&p, file.to_json() + "\n").with_context(|| format!("writing {}", p.display()))?;
                    emit_json(&r.report, None)?;
                }
                None => outln!("{}", file.to_json()),
            }
        }
        Command::Simulate { spec, eps, h } => {
            let spec = load_spec(&spec)?;
            let sample = return_map(&spec, &SimConfig::with_eps(eps), level(h)?)?;
            emit_json(&sample, None)?;
        }
        Command::Cycles {
            spec,
            eps,
            h_range,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let r = parse_floats(&h_range, "--h-range", 2)?;
            let scan = find_limit_cycles(&spec, &SimConfig::with_eps(eps), level(r[0])?, level(r[1])?)?;
            emit_json(&scan, out.as_deref())?;
        }
        Command::Verify { spec, eps_list, out } => {
            let spec = load_spec(&spec)?;
            let report = cross_validate(&spec, &eps_list)?;
            emit_json(&report, out.as_deref())?;
        }
        Command::Identities { seed } => {
            let checks = run_identities(seed)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                outln!(
                    "{} {:<26} max_err={:.3e} tol={:.0e} {} cases={}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_error,
                    c.tolerance,
                    if c.relative { "rel" } else { "abs" },
                    c.cases
                );
            }
            if failed > 0 {
                bail!("{failed} identit{} failed", if failed == 1 { "y" } else { "ies" });
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match run(Cli::parse()) {
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => Ok(()),
        other => other,
    }
}
