use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dynlab::balls::{default_horizon, default_levels, dynamical_ball, write_members_csv, BallParams};
use dynlab::chainrec::{chain_graph, example1_class_counts, nonwandering_estimate, write_class_counts_csv};
use dynlab::entropy::{entropy_trend, write_entropy_csv, TREND_DELTAS};
use dynlab::experiments::{run_experiment, ExperimentConfig, Outcome};
use dynlab::horseshoe::{sphere_horseshoe, verify_certificate, SphereSearch, MAX_DEPTH};
use dynlab::orbits::{perturbed_pseudo_orbit, shadow, write_pseudo_orbit_csv};
use dynlab::spaces::{CantorPoint, Example1Point, Point, ShiftPoint, SystemHandle, SystemKind, Torus2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "dynlab", version, about = "Numerical laboratory for expansive and shadowing dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file with configuration keys; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// System id: cat, sphere, example1, shift2, cantor-id.
    #[arg(long, global = true)]
    system: Option<String>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    horizon: Option<i64>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    length: Option<usize>,
    /// Output file; defaults to `$DYNLAB_OUT/<name>` when that is set, stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Default output directory.
    #[arg(long, global = true, env = "DYNLAB_OUT", hide_env_values = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dynamical ball, local stable/unstable sets and classification at a point.
    Ball {
        /// `x,y` (decimals or fractions `p/q`), `p<k>` for an ideal point of
        /// example1, a binary word for shift2 / cantor-id.
        #[arg(long)]
        point: String,
    },
    /// Shadow a seeded pseudo-orbit starting at a point.
    Shadow {
        #[arg(long)]
        point: String,
    },
    /// Find a link on the quotient sphere and certify a horseshoe.
    Horseshoe,
    /// Growth of separated sets on a global grid.
    Entropy,
    /// δ-chain graph and recurrent classes.
    Chains,
    /// Run a named experiment and report per-clause verdicts.
    Experiment { id: String },
}

fn parse_coord(s: &str) -> Result<Coord> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        Ok(Coord::Frac(p.trim().parse()?, q.trim().parse()?))
    } else {
        Ok(Coord::Real(s.parse()?))
    }
}

enum Coord {
    Frac(i64, i64),
    Real(f64),
}

fn parse_torus(s: &str) -> Result<Torus2> {
    let Some((a, b)) = s.split_once(',') else {
        bail!("expected a point `x,y`, got {s:?}");
    };
    Ok(match (parse_coord(a)?, parse_coord(b)?) {
        (Coord::Frac(p1, q1), Coord::Frac(p2, q2)) => {
            let den = q1 / gcd(q1, q2) * q2;
            Torus2::exact([p1 * (den / q1), p2 * (den / q2)], den)?
        }
        (x, y) => {
            let f = |c: Coord| match c {
                Coord::Frac(p, q) => p as f64 / q as f64,
                Coord::Real(v) => v,
            };
            Torus2::real(f(x), f(y))
        }
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => bail!("invalid symbol {other:?} in word {s:?}"),
        })
        .collect()
}

fn parse_point(system: &SystemHandle, s: &str) -> Result<Point> {
    Ok(match &system.kind {
        SystemKind::Torus { .. } | SystemKind::Sphere { .. } => system.torus_point(parse_torus(s)?)?,
        SystemKind::Example1 { .. } => match s.strip_prefix('p') {
            Some(k) => Point::Example1(Example1Point::ideal(k.parse().context("ideal index")?)?),
            None => Point::Example1(Example1Point::Base(parse_torus(s)?)),
        },
        SystemKind::Shift { .. } => Point::Shift(ShiftPoint::centered(parse_bits(s)?)?),
        SystemKind::CantorIdentity => Point::Cantor(CantorPoint { bits: parse_bits(s)? }),
    })
}

fn merged_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $( if cli.$f.is_some() { cfg.$f = cli.$f.clone(); } )* };
    }
    set!(system, epsilon, delta, horizon, depth, seed, grid_step, samples, length);
    if let Some(o) = &cli.out {
        cfg.out = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn system_of(cfg: &ExperimentConfig, default: &str) -> Result<SystemHandle> {
    Ok(SystemHandle::from_id(cfg.system.as_deref().unwrap_or(default), None)?)
}

/// Where output goes: `--out`/config `out`, else `$DYNLAB_OUT/<name>`, else stdout.
fn destination(cli: &Cli, cfg: &ExperimentConfig, name: &str) -> Option<PathBuf> {
    let ext = match cli.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    cfg.out
        .as_ref()
        .map(PathBuf::from)
        .or_else(|| cli.out_dir.as_ref().map(|d| d.join(format!("{name}.{ext}"))))
}

fn emit(dest: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match dest {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write(&mut f)
        }
        None => write(&mut std::io::stdout().lock()),
    }
}

fn emit_json(dest: Option<&Path>, v: &Value) -> Result<()> {
    emit(dest, |w| {
        serde_json::to_writer_pretty(&mut *w, v)?;
        writeln!(w)?;
        Ok(())
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = merged_config(cli)?;
    match &cli.command {
        Command::Ball { point } => {
            let system = system_of(&cfg, "cat")?;
            let x = parse_point(&system, point)?;
            let c = cfg.epsilon.unwrap_or(0.05);
            let n = cfg.horizon.unwrap_or_else(|| default_horizon(&system, &x));
            let report = dynamical_ball(&system, &x, BallParams::new(c, n), &default_levels(&system, &x)?)?;
            let dest = destination(cli, &cfg, "ball");
            match cli.format {
                Format::Json => emit_json(dest.as_deref(), &serde_json::to_value(&report)?)?,
                Format::Csv => emit(dest.as_deref(), |w| Ok(write_members_csv(&report, w)?))?,
            }
        }
        Command::Shadow { point } => {
            let system = system_of(&cfg, "cat")?;
            let x = parse_point(&system, point)?;
            let seed = cfg.seed.context("shadow is randomized: --seed is required")?;
            let po = perturbed_pseudo_orbit(
                &system,
                &x,
                cfg.delta.unwrap_or(1e-4),
                cfg.length.unwrap_or(2000),
                seed,
            )?;
            let s = shadow(&system, &po)?;
            let dest = destination(cli, &cfg, "shadow");
            match cli.format {
                Format::Json => emit_json(
                    dest.as_deref(),
                    &json!({"system": system.name, "delta": po.delta, "length": po.len(), "shadow": s}),
                )?,
                Format::Csv => emit(dest.as_deref(), |w| Ok(write_pseudo_orbit_csv(&system, &po, w)?))?,
            }
        }
        Command::Horseshoe => {
            let system = system_of(&cfg, "sphere")?;
            let depth = cfg.depth.unwrap_or(8);
            if depth > MAX_DEPTH {
                bail!("depth {depth} exceeds the cap {MAX_DEPTH}");
            }
            let mut search = SphereSearch::default();
            if let Some(e) = cfg.epsilon {
                search.link.epsilon = e;
            }
            if let Some(d) = cfg.delta {
                search.link.delta = d;
            }
            let h = sphere_horseshoe(&system, search, depth)?;
            let check = h.certificate.as_ref().map(|c| verify_certificate(&system, c)).transpose()?;
            let passed = match (&h.certificate, &check) {
                (Some(c), Some(k)) => k.passed(c),
                _ => false,
            };
            emit_json(destination(cli, &cfg, "horseshoe").as_deref(), &json!({"horseshoe": h, "check": check}))?;
            return Ok(if passed { Outcome::Pass } else { Outcome::Fail });
        }
        Command::Entropy => {
            let system = system_of(&cfg, "cat")?;
            let step = cfg.grid_step.unwrap_or(0.02);
            let cloud: Vec<_> = dynlab::balls::global_grid(&system, (1.0 / step).round() as i64)?
                .into_iter()
                .map(Into::into)
                .collect();
            let deltas = cfg.delta.map_or(TREND_DELTAS.to_vec(), |d| vec![d]);
            let n_max = cfg.horizon.unwrap_or(16).max(2) as usize;
            let est = entropy_trend(&system, &cloud, &deltas, &(1..=n_max).collect::<Vec<_>>())?;
            let dest = destination(cli, &cfg, "entropy");
            match cli.format {
                Format::Json => emit_json(dest.as_deref(), &json!({"system": system.name, "cloud": cloud.len(), "estimates": est}))?,
                Format::Csv => emit(dest.as_deref(), |w| Ok(write_entropy_csv(&est, w)?))?,
            }
        }
        Command::Chains => {
            let system = system_of(&cfg, "cat")?;
            let delta = cfg.delta.unwrap_or(0.02);
            let dest = destination(cli, &cfg, "chains");
            if matches!(system.kind, SystemKind::Example1 { .. }) {
                let deltas = cfg.delta.map_or(vec![0.2, 0.1, 0.05], |d| vec![d]);
                let counts = example1_class_counts(&system, &deltas, 10)?;
                match cli.format {
                    Format::Json => emit_json(dest.as_deref(), &json!({"system": system.name, "class_counts": counts}))?,
                    Format::Csv => emit(dest.as_deref(), |w| Ok(write_class_counts_csv(&counts, w)?))?,
                }
            } else {
                let den = (1.0 / cfg.grid_step.unwrap_or(1.0 / 64.0)).round() as i64;
                let cloud = dynlab::balls::global_grid(&system, den)?;
                let g = chain_graph(&system, &cloud, delta)?;
                let omega = nonwandering_estimate(&g);
                emit_json(
                    dest.as_deref(),
                    &json!({
                        "system": system.name, "delta": delta, "nodes": g.nodes.len(), "edges": g.edges.len(),
                        "classes": g.classes.len(),
                        "class_sizes": g.classes.iter().map(Vec::len).collect::<Vec<_>>(),
                        "nonwandering": omega.len(),
                    }),
                )?;
            }
        }
        Command::Experiment { id } => {
            let mut cfg = cfg.clone();
            cfg.experiment = Some(id.clone());
            let report = run_experiment(&cfg)?;
            for v in &report.verdicts {
                eprintln!("[{:?}] criterion {}: {} ({})", v.outcome, v.criterion, v.clause, v.detail);
            }
            emit_json(destination(cli, &cfg, id).as_deref(), &serde_json::to_value(&report)?)?;
            return Ok(report.outcome);
        }
    }
    Ok(Outcome::Pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_stay_exact() {
        assert_eq!(parse_torus("1/5, 2/5").unwrap(), Torus2::exact([1, 2], 5).unwrap());
        assert_eq!(parse_torus("1/2,1/3").unwrap(), Torus2::exact([3, 2], 6).unwrap());
        assert!(!parse_torus("0.25,1/3").unwrap().is_exact());
        assert!(parse_torus("0.25").is_err());
    }

    #[test]
    fn points_per_system() {
        let ex = SystemHandle::example1();
        assert_eq!(parse_point(&ex, "p7").unwrap(), Point::Example1(Example1Point::Ideal(7)));
        assert!(parse_point(&ex, "p0").is_err());
        let c = SystemHandle::cantor_identity();
        assert_eq!(parse_point(&c, "101").unwrap(), Point::Cantor(CantorPoint { bits: vec![1, 0, 1] }));
        assert!(parse_point(&c, "102").is_err());
    }
}
