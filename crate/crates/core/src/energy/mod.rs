//! O'Hara `(alpha, p)` energies and their discretizations.
//!
//! Continuum energies are evaluated with a midpoint rule on the `N x N`
//! torus grid of cell centres. Divergence cannot be computed, so it is
//! operationalized by a refinement ladder `N/4, N/2, N` judged by a
//! [`DivergenceRule`] whose thresholds travel with every report.

mod grid;
mod polygonal;
mod random;
mod sobolev;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{ClosedCurve, CurveError};
use crate::sampling::SamplingError;

pub use grid::{grid_energy, ohara_energy, ohara_energy_with, weighted_ohara_energy, Diagonal, GridValue};
pub use polygonal::{
    cos_energy, kim_kusner_energy, segment_distance, simon_energy, simon_raw_energy, KimKusnerVariant,
};
pub use random::{random_ohara_energy, random_ohara_value};
pub use sobolev::{blatt_report, seminorm_grid, sobolev_seminorm, BlattReport};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("integrand undefined on the diagonal (x = y = {0} mod L)")]
    Diagonal(f64),
    #[error("curve is not arc-length parametrized; reparametrize it first")]
    NotArclength,
    #[error("grid size {0} is below the minimum of {MIN_GRID}")]
    GridTooSmall(usize),
    #[error("samples {0} and {1} coincide; the random energy needs distinct samples")]
    DuplicateSamples(usize, usize),
    #[error("polygon needs at least {need} vertices, got {found}")]
    TooFewVertices { need: usize, found: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("density length {density} does not match curve length {curve}")]
    LengthMismatch { density: f64, curve: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Smallest grid accepted by the continuum quadratures.
pub const MIN_GRID: usize = 64;

/// Exponents of the O'Hara energy. Defaults to the Möbius case `(2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub alpha: f64,
    pub p: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self { alpha: 2.0, p: 1.0 }
    }
}

impl EnergyParams {
    pub fn new(alpha: f64, p: f64) -> Result<Self, EnergyError> {
        if !(alpha.is_finite() && alpha > 0.0 && p.is_finite() && p > 0.0) {
            return Err(EnergyError::Params(format!(
                "alpha and p must be positive, got alpha={alpha}, p={p}"
            )));
        }
        Ok(Self { alpha, p })
    }

    pub fn mobius() -> Self {
        Self::default()
    }

    fn ap(&self) -> f64 {
        self.alpha * self.p
    }

    /// Fractional order `s = (alpha p - 1) / (2p)` of the matching Sobolev space.
    pub fn s(&self) -> f64 {
        (self.ap() - 1.0) / (2.0 * self.p)
    }

    /// `alpha p >= 2`.
    pub fn in_lower_range(&self) -> bool {
        self.ap() >= 2.0
    }

    /// `alpha p < 2p + 1`, equivalently `s < 1`.
    pub fn in_finite_range(&self) -> bool {
        self.ap() < 2.0 * self.p + 1.0
    }

    /// `alpha p > 2p + 1/2`: the Monte-Carlo summand has infinite variance
    /// or close to it.
    pub fn heavy_tailed(&self) -> bool {
        self.ap() > 2.0 * self.p + 0.5
    }

    pub(crate) fn validate(&self) -> Result<(), EnergyError> {
        Self::new(self.alpha, self.p).map(|_| ())
    }
}

/// `(chord^-alpha - arc^-alpha)^p`, clamped at 0 against rounding; `+inf`
/// for a zero chord.
#[inline]
pub(crate) fn kernel(chord: f64, arc: f64, params: &EnergyParams) -> f64 {
    if chord <= 0.0 {
        return f64::INFINITY;
    }
    let diff = if params.alpha == 2.0 {
        1.0 / (chord * chord) - 1.0 / (arc * arc)
    } else {
        chord.powf(-params.alpha) - arc.powf(-params.alpha)
    };
    let diff = diff.max(0.0);
    if params.p == 1.0 {
        diff
    } else {
        diff.powf(params.p)
    }
}

/// The integrand `M^{alpha,p}(gamma)(x, y)`.
///
/// Returns `+inf` when `gamma(x) = gamma(y)` with `x != y` (self-intersection).
pub fn integrand(curve: &ClosedCurve, x: f64, y: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    params.validate()?;
    let probes = curve.probe(&[x, y]);
    let arc = probes.arc(0, 1);
    if arc == 0.0 {
        return Err(EnergyError::Diagonal(probes.params[0]));
    }
    Ok(probes.kernel(0, 1, arc, params))
}

/// Energy at one rung of a refinement ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub resolution: usize,
    #[serde(with = "finite_or_null")]
    pub value: f64,
}

/// Refinement-growth test for divergence on a ladder `E_{N/4}, E_{N/2}, E_N`.
///
/// Divergent when `E_N > growth_ratio * E_{N/2}`, or when the increments
/// `d1 = E_{N/2} - E_{N/4}` and `d2 = E_N - E_{N/2}` satisfy `d1 > 0`,
/// `d2 >= persistence * d1` and `d2 > min_relative_increment * E_N`. The
/// second branch catches logarithmic growth, whose increments stay constant
/// per doubling, while convergent quadratures shrink them geometrically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRule {
    pub growth_ratio: f64,
    pub persistence: f64,
    pub min_relative_increment: f64,
}

impl Default for DivergenceRule {
    fn default() -> Self {
        Self {
            growth_ratio: 1.5,
            persistence: 0.75,
            min_relative_increment: 1e-3,
        }
    }
}

impl DivergenceRule {
    pub fn is_divergent(&self, ladder: &[LadderStep]) -> bool {
        let v: Vec<f64> = ladder.iter().map(|s| s.value).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return true;
        }
        let k = v.len();
        if k < 2 {
            return false;
        }
        let (prev, last) = (v[k - 2], v[k - 1]);
        if last > self.growth_ratio * prev && last > 0.0 {
            return true;
        }
        if k < 3 {
            return false;
        }
        let d1 = v[k - 2] - v[k - 3];
        let d2 = last - prev;
        d1 > 0.0 && d2 >= self.persistence * d1 && d2 > self.min_relative_increment * last.abs()
    }
}

/// Result of an energy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub functional: String,
    /// `+inf` (serialized as `null`) when `infinite` is set.
    #[serde(with = "finite_or_null")]
    pub value: f64,
    pub infinite: bool,
    pub params: EnergyParams,
    /// Grid size `N`, sample size `n` or vertex count `m`.
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub runtime_s: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<LadderStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_rule: Option<DivergenceRule>,
    /// Functional-specific scalars (e.g. `s` for the seminorm).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl EnergyReport {
    pub(crate) fn new(functional: &str, params: EnergyParams, resolution: usize) -> Self {
        Self {
            functional: functional.to_string(),
            value: 0.0,
            infinite: false,
            params,
            resolution,
            seed: None,
            runtime_s: 0.0,
            warnings: Vec::new(),
            ladder: Vec::new(),
            divergence_rule: None,
            extra: BTreeMap::new(),
        }
    }

    pub(crate) fn set_value(&mut self, value: f64) {
        if value.is_finite() {
            self.value = value;
        } else {
            self.mark_infinite();
        }
    }

    pub(crate) fn mark_infinite(&mut self) {
        self.value = f64::INFINITY;
        self.infinite = true;
    }

    /// Finite value at the finest rung, also for reports flagged divergent.
    pub fn finest_value(&self) -> f64 {
        self.ladder.last().map_or(self.value, |s| s.value)
    }
}

pub(crate) fn check_arclength(curve: &ClosedCurve) -> Result<(), EnergyError> {
    if curve.is_arclength() {
        Ok(())
    } else {
        Err(EnergyError::NotArclength)
    }
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
