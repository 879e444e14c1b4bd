//! The `TL^q` space of (measure, function) pairs on `R/LZ`.
//!
//! Discrete elements carry uniform weights `1/n` on their atoms. Distances
//! between discrete elements are solved exactly; distances to a continuum
//! element are bounded above through a transportation map.

mod assignment;
mod bound;
mod exact;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{intrinsic_distance, ClosedCurve};
use crate::sampling::{Density, SampleSet};

pub use assignment::{hungarian, transportation};
pub use bound::{
    tlq_map_bound, tlq_sequence_convergence, ConvergenceCriteria, ConvergenceReport, ConvergenceRow, MapBound,
    NSummary,
};
pub use exact::{circular_wasserstein, tlq_brute_force, tlq_exact, tlq_exact_with_cap, BRUTE_FORCE_MAX, DEFAULT_CAP};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("{n} atoms exceed the exact-solver cap of {cap}; use tlq_map_bound or raise the cap")]
    TooLarge { n: usize, cap: usize },
    #[error("sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("circle lengths differ: {0} vs {1}")]
    LengthMismatch(f64, f64),
    #[error("value dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("unsupported exponent q = {0}")]
    Unsupported(f64),
    #[error("map does not push the measure forward: block {block} has mass {mass}, expected {expected}")]
    PushForward { block: usize, mass: f64, expected: f64 },
    #[error("map target of block {block} is not an atom of the discrete element")]
    TargetMismatch { block: usize },
    #[error("map was built for a different density")]
    DensityMismatch,
    #[error("element has no atoms")]
    Empty,
    #[error("{0}")]
    Invalid(String),
}

fn check_q(q: f64) -> Result<(), TransportError> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(TransportError::Unsupported(q))
    }
}

/// `(nu_n, g)`: atoms `x_i` with weight `1/n` and values `g_i in R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteElement {
    length: f64,
    positions: Vec<f64>,
    /// Row-major `n x dim`.
    values: Vec<f64>,
    dim: usize,
}

impl DiscreteElement {
    pub fn new(length: f64, positions: Vec<f64>, values: &[Vec<f64>]) -> Result<Self, TransportError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(TransportError::Invalid(format!("length must be positive, got {length}")));
        }
        if positions.is_empty() {
            return Err(TransportError::Empty);
        }
        if positions.len() != values.len() {
            return Err(TransportError::SizeMismatch(positions.len(), values.len()));
        }
        let dim = values[0].len();
        if let Some(v) = values.iter().find(|v| v.len() != dim) {
            return Err(TransportError::DimMismatch(dim, v.len()));
        }
        let positions = positions.into_iter().map(|x| crate::curve::wrap(x, length)).collect();
        Ok(Self {
            length,
            positions,
            values: values.concat(),
            dim,
        })
    }

    /// `(nu_n, gamma(X_i))` in draw order.
    pub fn from_samples(set: &SampleSet, curve: &ClosedCurve) -> Result<Self, TransportError> {
        Self::from_samples_with(set, curve, |_, _| {})
    }

    /// As [`from_samples`](Self::from_samples), then `edit(i, value)` on each value.
    pub fn from_samples_with<F: FnMut(usize, &mut [f64])>(
        set: &SampleSet,
        curve: &ClosedCurve,
        mut edit: F,
    ) -> Result<Self, TransportError> {
        if (set.length() - curve.length()).abs() > 1e-9 * curve.length() {
            return Err(TransportError::LengthMismatch(set.length(), curve.length()));
        }
        let values: Vec<Vec<f64>> = set
            .samples()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut v = curve.eval(x);
                edit(i, &mut v);
                v
            })
            .collect();
        Self::new(set.length(), set.samples().to_vec(), &values)
    }

    /// Atoms with all values zero in dimension 1 (pure measure transport).
    pub fn measure_only(length: f64, positions: Vec<f64>) -> Result<Self, TransportError> {
        let values = vec![vec![0.0]; positions.len()];
        Self::new(length, positions, &values)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> f64 {
        self.positions[i]
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// `|x_i - y_j|_circ^q + |f_i - g_j|^q`.
    pub fn ground_cost(&self, i: usize, other: &Self, j: usize, q: f64) -> f64 {
        let dx = intrinsic_distance(self.positions[i], other.positions[j], self.length);
        let df = crate::numeric::dist(self.value(i), other.value(j));
        dx.powf(q) + df.powf(q)
    }
}

/// `(rho dx, gamma)`.
#[derive(Debug, Clone)]
pub struct ContinuumElement {
    density: Density,
    curve: ClosedCurve,
}

impl ContinuumElement {
    pub fn new(density: Density, curve: ClosedCurve) -> Result<Self, TransportError> {
        if (density.length() - curve.length()).abs() > 1e-9 * curve.length() {
            return Err(TransportError::LengthMismatch(density.length(), curve.length()));
        }
        Ok(Self { density, curve })
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    pub fn length(&self) -> f64 {
        self.curve.length()
    }

    /// Discrete element on the quantile midpoints `F^{-1}((i - 1/2)/n)`.
    pub fn quantize(&self, atoms: usize) -> Result<DiscreteElement, TransportError> {
        let set = SampleSet::quantile_midpoints(&self.density, atoms).map_err(|e| TransportError::Invalid(e.to_string()))?;
        DiscreteElement::from_samples(&set, &self.curve)
    }
}

/// Sparse transport plan between two discrete elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub rows: usize,
    pub cols: usize,
    /// `(i, j, pi_ij)` for the nonzero entries, sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, f64)>,
    pub row_positions: Vec<f64>,
    pub col_positions: Vec<f64>,
}

impl CouplingMatrix {
    pub fn identity(a: &DiscreteElement) -> Self {
        let w = a.weight();
        Self {
            rows: a.len(),
            cols: a.len(),
            entries: (0..a.len()).map(|i| (i, i, w)).collect(),
            row_positions: a.positions.clone(),
            col_positions: a.positions.clone(),
        }
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &(i, _, w) in &self.entries {
            out[i] += w;
        }
        out
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for &(_, j, w) in &self.entries {
            out[j] += w;
        }
        out
    }

    /// Largest deviation of either marginal from the uniform weights.
    pub fn marginal_error(&self) -> f64 {
        let r = 1.0 / self.rows as f64;
        let c = 1.0 / self.cols as f64;
        let rows = self.row_marginals().into_iter().map(|m| (m - r).abs());
        let cols = self.col_marginals().into_iter().map(|m| (m - c).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    /// `sum pi_ij c_ij` for the given cost.
    pub fn cost<F: Fn(usize, usize) -> f64>(&self, c: F) -> f64 {
        let terms: Vec<f64> = self.entries.iter().map(|&(i, j, w)| w * c(i, j)).collect();
        crate::numeric::pairwise_sum(&terms)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["i", "j", "weight"])?;
        for &(i, j, pi) in &self.entries {
            w.write_record([i.to_string(), j.to_string(), format!("{pi:e}")])?;
        }
        w.flush()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_validation() {
        assert!(matches!(DiscreteElement::new(1.0, vec![], &[]), Err(TransportError::Empty)));
        assert!(matches!(
            DiscreteElement::new(1.0, vec![0.1, 0.2], &[vec![0.0]]),
            Err(TransportError::SizeMismatch(2, 1))
        ));
        assert!(matches!(
            DiscreteElement::new(1.0, vec![0.1, 0.2], &[vec![0.0], vec![0.0, 1.0]]),
            Err(TransportError::DimMismatch(1, 2))
        ));
        let e = DiscreteElement::new(1.0, vec![1.25, 0.5], &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(e.position(0), 0.25);
        assert_eq!(e.value(1), &[3.0, 4.0]);
    }

    #[test]
    fn quantized_circle_lies_on_the_curve() {
        let l = 1.0;
        let c = ClosedCurve::circle(l, 2).unwrap();
        let el = ContinuumElement::new(Density::cosine(l, 0.5).unwrap(), c.clone()).unwrap();
        let q = el.quantize(64).unwrap();
        assert_eq!(q.len(), 64);
        for i in 0..64 {
            assert!(crate::numeric::dist(q.value(i), &c.eval(q.position(i))) < 1e-15);
        }
        assert!(ContinuumElement::new(Density::uniform(2.0).unwrap(), c).is_err());
    }

    #[test]
    fn coupling_csv_and_json_round_trip() {
        let a = DiscreteElement::measure_only(1.0, vec![0.0, 0.5]).unwrap();
        let pi = CouplingMatrix::identity(&a);
        assert_eq!(pi.marginal_error(), 0.0);
        let dir = tempfile::tempdir().unwrap();
        pi.write_csv(dir.path().join("pi.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("pi.csv")).unwrap();
        assert_eq!(text.lines().next(), Some("i,j,weight"));
        assert_eq!(text.lines().count(), 3);
        pi.write_json(dir.path().join("pi.json")).unwrap();
        let back: CouplingMatrix =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("pi.json")).unwrap()).unwrap();
        assert_eq!(back, pi);
    }
}
