//! Densities on `R/LZ`, reproducible i.i.d. sampling, empirical-CDF
//! statistics and quantile transportation maps.

mod density;
mod rng;
mod samples;
mod transport_map;

use thiserror::Error;

pub use density::{Density, DensitySpec};
pub use rng::CounterRng;
pub use samples::{gc_statistic, sample_iid, SampleSet, SampleSidecar};
pub use transport_map::{quantile_transport_map, stagnation_statistic, Cut, TransportMap, MAX_CUT_CANDIDATES};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("duplicate samples persisted after {retries} redraws; the uniform stream is broken")]
    DuplicateSamples { retries: u32 },
    #[error("sample value {value} outside [0, {length})")]
    OutOfRange { value: f64, length: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
