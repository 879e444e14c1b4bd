//! Reproducible experiment drivers.
//!
//! Every experiment turns an [`ExperimentConfig`] into CSV rows with the
//! fixed header `experiment,param,seed,stat,value,runtime_s` plus a JSON
//! sidecar holding the echoed configuration, thresholds, summaries, checks
//! and timing. Cells run in parallel but rows are emitted in cell order, and
//! the `runtime_s` column is left empty, so CSV bodies are byte-identical
//! across reruns and thread counts. Wall-clock data lives in the sidecar.

mod blatt;
mod compactness;
mod mc;
mod ngon;
mod rates;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{ClosedCurve, CurveError, CurveSpec};
use crate::energy::{EnergyError, EnergyParams};
use crate::sampling::{Density, DensitySpec, SamplingError};
use crate::transport::{ConvergenceCriteria, TransportError};

pub use compactness::greedy_net;

/// Names accepted by [`run`].
pub const EXPERIMENTS: [&str; 6] = [
    "mc-convergence",
    "gamma-sequence",
    "compactness-probe",
    "transport-rates",
    "ngon-min",
    "blatt-divergence",
];

pub const CSV_HEADER: [&str; 6] = ["experiment", "param", "seed", "stat", "value", "runtime_s"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment {0:?}; expected one of {list}", list = EXPERIMENTS.join(", "))]
    Unknown(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Additive perturbation of the first coordinate of a recovery sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Offset {
    #[default]
    None,
    /// `gamma_n = gamma + value`.
    Constant { value: f64 },
    /// `gamma_n = gamma + scale / sqrt(n)`.
    Vanishing { scale: f64 },
}

impl Offset {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Offset::None => 0.0,
            Offset::Constant { value } => value,
            Offset::Vanishing { scale } => scale / (n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgonConfig {
    /// Vertex count of the polygon under perturbation.
    pub m: usize,
    pub trials: usize,
    /// Each vertex coordinate moves by `delta * u`, `u ~ U[-1, 1]`, circumradius 1.
    pub delta: f64,
    pub dim: usize,
}

impl Default for NgonConfig {
    fn default() -> Self {
        Self {
            m: 16,
            trials: 100,
            delta: 0.05,
            dim: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompactnessConfig {
    /// Size of the base family; the probe is repeated on twice as many members.
    pub family_size: usize,
    /// Atoms per co-quantized element.
    pub atoms: usize,
    pub epsilon: f64,
    /// Upper bound on `sum |c_k|` of the radial Fourier perturbation.
    pub amplitude: f64,
    /// Highest Fourier mode perturbed (modes `2..=modes`).
    pub modes: usize,
    /// Aspect ratios `a / b` of the thinning-ellipse control family.
    pub control_aspects: Vec<f64>,
}

impl Default for CompactnessConfig {
    fn default() -> Self {
        Self {
            family_size: 16,
            atoms: 256,
            epsilon: 0.2,
            amplitude: 0.1,
            modes: 5,
            control_aspects: vec![1.0, 2.0, 4.0, 8.0, 16.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlattConfig {
    /// Finest grid sizes `N` for the energy and seminorm ladders.
    pub grid_sizes: Vec<usize>,
}

impl Default for BlattConfig {
    fn default() -> Self {
        Self {
            grid_sizes: vec![256, 512, 1024],
        }
    }
}

/// Pass/fail thresholds; all are echoed into the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Allowed `|mean - (1 - 1/n) E_rho|` in standard errors.
    pub mean_se: f64,
    /// Target log-log slope of Monte-Carlo SD and GC statistics.
    pub slope: f64,
    pub slope_tol: f64,
    /// Gap tolerance for the sequential convergence experiment.
    pub gap_tol: f64,
    /// Median sup displacement at the finest `n`, as a fraction of `L`.
    pub sup_fraction: f64,
    pub net_size_max: usize,
    /// Allowed growth of the net when the family is doubled.
    pub net_growth_max: usize,
    /// Bound on the random energy across the perturbed family.
    pub energy_bound: f64,
    /// Control family is flagged when its largest energy exceeds this
    /// multiple of its smallest.
    pub control_growth: f64,
    /// `|E_m(R_m) - 4|` at the largest `m`.
    pub ngon_gap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            mean_se: 3.0,
            slope: -0.5,
            slope_tol: 0.15,
            gap_tol: 0.1,
            sup_fraction: 0.02,
            net_size_max: 8,
            net_growth_max: 1,
            energy_bound: 8.0,
            control_growth: 4.0,
            ngon_gap: 0.15,
        }
    }
}

fn default_curve() -> CurveSpec {
    CurveSpec::Circle { length: 1.0, dim: 2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Informational; the experiment actually run is chosen by the caller.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub curve: CurveSpec,
    pub density: DensitySpec,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    /// Sample sizes `n` (or polygon sizes `m`); empty selects the experiment default.
    pub n_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Grid size for continuum reference energies.
    pub reference_n: usize,
    pub sequence_offset: Offset,
    pub convergence: ConvergenceCriteria,
    pub ngon: NgonConfig,
    pub compactness: CompactnessConfig,
    pub blatt: BlattConfig,
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            curve: default_curve(),
            density: DensitySpec::Uniform,
            alpha: 2.0,
            p: 1.0,
            q: 1.0,
            n_grid: Vec::new(),
            seeds: (0..20).collect(),
            reference_n: 1024,
            sequence_offset: Offset::None,
            convergence: ConvergenceCriteria::default(),
            ngon: NgonConfig::default(),
            compactness: CompactnessConfig::default(),
            blatt: BlattConfig::default(),
            thresholds: Thresholds::default(),
        }
    }
}

fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

fn default_grid(name: &str) -> Vec<usize> {
    match name {
        "mc-convergence" => powers_of_two(7, 12),
        "gamma-sequence" => vec![64, 256, 1024, 4096],
        "transport-rates" => powers_of_two(6, 14),
        "ngon-min" => vec![4, 16, 64, 256],
        "blatt-divergence" => vec![256, 1024, 4096],
        _ => vec![256],
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.as_ref().display())))
    }

    /// `n_grid`, or the experiment's default when empty.
    pub fn grid_for(&self, name: &str) -> Vec<usize> {
        if self.n_grid.is_empty() {
            default_grid(name)
        } else {
            self.n_grid.clone()
        }
    }

    pub fn params(&self) -> Result<EnergyParams, ExperimentError> {
        Ok(EnergyParams::new(self.alpha, self.p)?)
    }

    fn validate(&self, name: &str) -> Result<(), ExperimentError> {
        let grid = self.grid_for(name);
        if grid.contains(&0) {
            return Err(ExperimentError::Config("n_grid entries must be positive".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ExperimentError::Config(format!("n_grid must be strictly increasing, got {grid:?}")));
        }
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config("seeds must be nonempty".into()));
        }
        if !(self.q >= 1.0) {
            return Err(ExperimentError::Config(format!("q must be >= 1, got {}", self.q)));
        }
        if self.convergence.window == 0 {
            return Err(ExperimentError::Config("convergence window must be positive".into()));
        }
        self.params()?;
        Ok(())
    }
}

/// One CSV line. `runtime_s` is always written empty; see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub experiment: &'static str,
    pub param: String,
    pub seed: u64,
    pub stat: String,
    pub value: f64,
}

/// Outcome of one threshold test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub thresholds: Thresholds,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    pub started_unix_s: f64,
    pub runtime_s: f64,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ExperimentRow>,
    pub sidecar: Sidecar,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.sidecar.passed
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.sidecar.checks.iter().find(|c| c.name == name)
    }

    pub fn values<'a>(&'a self, stat: &'a str) -> impl Iterator<Item = &'a ExperimentRow> + 'a {
        self.rows.iter().filter(move |r| r.stat == stat)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.experiment,
                &r.param,
                &r.seed.to_string(),
                &r.stat,
                &r.value.to_string(),
                "",
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<dir>/<experiment>.csv` and `<dir>/<experiment>.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf), ExperimentError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.sidecar.experiment));
        let json_path = dir.join(format!("{}.json", self.sidecar.experiment));
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        let mut text = serde_json::to_string_pretty(&self.sidecar)?;
        text.push('\n');
        std::fs::write(&json_path, text)?;
        Ok((csv_path, json_path))
    }
}

/// What a driver hands back before timing and bookkeeping are attached.
#[derive(Default)]
struct Draft {
    rows: Vec<ExperimentRow>,
    summary: serde_json::Map<String, serde_json::Value>,
    checks: Vec<Check>,
    notes: Vec<String>,
    warnings: Vec<String>,
    aborted: Option<String>,
}

impl Draft {
    fn row(&mut self, experiment: &'static str, param: impl ToString, seed: u64, stat: &str, value: f64) {
        self.rows.push(ExperimentRow {
            experiment,
            param: param.to_string(),
            seed,
            stat: stat.into(),
            value,
        });
    }

    fn summarize<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.summary.insert(key.into(), v);
    }
}

/// Shared inputs resolved from the config.
struct Setup {
    curve: ClosedCurve,
    density: Density,
    params: EnergyParams,
    grid: Vec<usize>,
}

fn setup(name: &str, config: &ExperimentConfig, base: Option<&Path>) -> Result<Setup, ExperimentError> {
    let curve = config.curve.build_relative_to(base)?;
    let density = config.density.build_relative_to(curve.length(), base)?;
    Ok(Setup {
        curve,
        density,
        params: config.params()?,
        grid: config.grid_for(name),
    })
}

/// Runs experiment `name`. Relative file paths in the config resolve
/// against `base` (normally the config file's directory).
pub fn run(name: &str, config: &ExperimentConfig, base: Option<&Path>) -> Result<ExperimentOutcome, ExperimentError> {
    let name: &'static str = EXPERIMENTS
        .iter()
        .find(|&&e| e == name)
        .ok_or_else(|| ExperimentError::Unknown(name.into()))?;
    config.validate(name)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let s = setup(name, config, base)?;
    let draft = match name {
        "mc-convergence" => mc::mc_convergence(config, &s)?,
        "gamma-sequence" => mc::gamma_sequence(config, &s)?,
        "compactness-probe" => compactness::compactness_probe(config, &s)?,
        "transport-rates" => rates::transport_rates(config, &s)?,
        "ngon-min" => ngon::ngon_min(config, &s)?,
        "blatt-divergence" => blatt::blatt_divergence(config, &s)?,
        _ => unreachable!("name validated above"),
    };
    let passed = draft.aborted.is_none() && draft.checks.iter().all(|c| c.passed);
    Ok(ExperimentOutcome {
        rows: draft.rows,
        sidecar: Sidecar {
            experiment: name.into(),
            config: config.clone(),
            thresholds: config.thresholds.clone(),
            summary: serde_json::Value::Object(draft.summary),
            checks: draft.checks,
            passed,
            aborted: draft.aborted,
            notes: draft.notes,
            warnings: draft.warnings,
            started_unix_s: started,
            runtime_s: clock.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        },
    })
}

/// Per-key medians of `(key, value)` pairs, keys ascending.
fn medians_by(pairs: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut keys: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|k| {
            let v: Vec<f64> = pairs.iter().filter(|p| p.0 == k).map(|p| p.1).collect();
            (k, crate::numeric::median(&v))
        })
        .collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}
