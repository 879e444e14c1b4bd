//! `kel`: knot-energy discretization experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 an asserted
//! experiment threshold failed. `KEL_THREADS` caps the worker pool; results
//! do not depend on it.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use kel_core::energy::{
    blatt_report, cos_energy, kim_kusner_energy, ohara_energy, random_ohara_energy, simon_energy, sobolev_seminorm,
    weighted_ohara_energy, KimKusnerVariant,
};
use kel_core::experiments::{self, ExperimentConfig};
use kel_core::oracle::circle_energy;
use kel_core::sampling::sample_iid;
use kel_core::{ClosedCurve, CurveSpec, DensitySpec, EnergyParams};

#[derive(Parser)]
#[command(name = "kel", version, about = "Knot energies, their discretizations and the TL^q metric")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one energy functional and print its report as JSON.
    Energy(EnergyArgs),
    /// Run a named experiment, writing `<name>.csv` and `<name>.json` to the output directory.
    Experiment {
        /// One of mc-convergence, gamma-sequence, compactness-probe,
        /// transport-rates, ngon-min, blatt-divergence.
        name: String,
        /// JSON config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Independent reference values.
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Energy of a round circle by one-dimensional adaptive quadrature.
    CircleEnergy {
        #[arg(long, default_value_t = 1e-12)]
        quad_tol: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        length: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Functional {
    Ohara,
    OharaWeighted,
    OharaRandom,
    KimKusner,
    KimKusnerAveraged,
    Simon,
    Cos,
    Sobolev,
    Blatt,
}

#[derive(clap::Args)]
struct EnergyArgs {
    #[arg(long, value_enum)]
    functional: Functional,
    /// Curve spec as inline JSON or a path to a JSON file,
    /// e.g. '{"kind":"circle","length":6.283185307179586}'.
    #[arg(long)]
    curve: String,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Sample size of the random energy.
    #[arg(short = 'n', long = "n")]
    n: Option<usize>,
    /// Grid size of the continuum quadratures.
    #[arg(short = 'N', long = "N")]
    grid: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Density spec as inline JSON or a path to a JSON file; uniform by default.
    #[arg(long)]
    density: Option<String>,
}

/// Inline JSON, or the contents of a file, plus the directory relative paths resolve against.
fn json_arg(text: &str) -> Result<(String, Option<PathBuf>)> {
    if text.trim_start().starts_with('{') {
        return Ok((text.to_string(), None));
    }
    let path = Path::new(text);
    let body = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((body, path.parent().map(Path::to_path_buf)))
}

fn build_curve(text: &str) -> Result<ClosedCurve> {
    let (body, base) = json_arg(text)?;
    let spec: CurveSpec = serde_json::from_str(&body).context("parsing curve spec")?;
    Ok(spec.build_relative_to(base.as_deref())?)
}

fn energy(args: &EnergyArgs) -> Result<serde_json::Value> {
    let curve = build_curve(&args.curve)?;
    let params = EnergyParams::new(args.alpha, args.p)?;
    let density = match &args.density {
        Some(text) => {
            let (body, base) = json_arg(text)?;
            let spec: DensitySpec = serde_json::from_str(&body).context("parsing density spec")?;
            spec.build_relative_to(curve.length(), base.as_deref())?
        }
        None => DensitySpec::Uniform.build(curve.length())?,
    };
    let grid = args.grid.unwrap_or(1024);
    let polygon = || {
        curve
            .as_polygon()
            .ok_or_else(|| anyhow!("this functional needs a polygonal curve"))
    };
    let report = match args.functional {
        Functional::Ohara => serde_json::to_value(ohara_energy(&curve, &params, grid)?)?,
        Functional::OharaWeighted => serde_json::to_value(weighted_ohara_energy(&curve, &density, &params, grid)?)?,
        Functional::OharaRandom => {
            let n = args.n.ok_or_else(|| anyhow!("--n is required for ohara-random"))?;
            let set = sample_iid(&density, n, args.seed)?;
            serde_json::to_value(random_ohara_energy(&curve, &set, &params)?)?
        }
        Functional::KimKusner => serde_json::to_value(kim_kusner_energy(polygon()?, KimKusnerVariant::Endpoint)?)?,
        Functional::KimKusnerAveraged => {
            serde_json::to_value(kim_kusner_energy(polygon()?, KimKusnerVariant::Averaged)?)?
        }
        Functional::Simon => serde_json::to_value(simon_energy(polygon()?)?)?,
        Functional::Cos => serde_json::to_value(cos_energy(polygon()?)?)?,
        Functional::Sobolev => serde_json::to_value(sobolev_seminorm(&curve, params.s(), 2.0 * params.p, grid)?)?,
        Functional::Blatt => serde_json::to_value(blatt_report(&curve, &params, grid)?)?,
    };
    Ok(report)
}

/// Exit status of a successful dispatch: 0, or 2 on a failed threshold.
fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Energy(args) => {
            println!("{}", serde_json::to_string_pretty(&energy(&args)?)?);
            Ok(0)
        }
        Command::Experiment { name, config, out } => {
            let (cfg, base) = match &config {
                Some(path) => (ExperimentConfig::from_file(path)?, path.parent().map(Path::to_path_buf)),
                None => (ExperimentConfig::default(), None),
            };
            let outcome = experiments::run(&name, &cfg, base.as_deref())?;
            let (csv, sidecar) = outcome.write(&out)?;
            for c in &outcome.sidecar.checks {
                eprintln!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            for w in &outcome.sidecar.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(reason) = &outcome.sidecar.aborted {
                eprintln!("aborted: {reason}");
            }
            println!("{}", csv.display());
            println!("{}", sidecar.display());
            Ok(if outcome.passed() { 0 } else { 2 })
        }
        Command::Oracle {
            which: Oracle::CircleEnergy { quad_tol, alpha, p, length },
        } => {
            if !(quad_tol > 0.0) {
                bail!("--quad-tol must be positive");
            }
            let params = EnergyParams::new(alpha, p)?;
            let r = circle_energy(length, &params, quad_tol);
            let out = json!({
                "functional": "circle-oracle",
                "length": length,
                "alpha": alpha,
                "p": p,
                "value": r.value,
                "error_estimate": r.error_estimate,
                "evaluations": r.evaluations,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var("KEL_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("KEL_THREADS must be a positive integer, got {text:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match configure_threads().and_then(|_| dispatch(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
