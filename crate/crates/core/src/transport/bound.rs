use serde::{Deserialize, Serialize};

use super::{check_q, ContinuumElement, DiscreteElement, TransportError};
use crate::curve::intrinsic_distance;
use crate::numeric::{dist, median, pairwise_sum};
use crate::quadrature::gl10;
use crate::sampling::{stagnation_statistic, TransportMap};

/// Tolerance on block masses and target positions.
const PUSH_FORWARD_TOL: f64 = 1e-8;
/// Gauss–Legendre panels per monotone piece of a block.
const PANELS: usize = 4;

/// Upper bound on `d_{TL^q}` induced by the coupling `(Id, T)_# mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapBound {
    /// `(stagnation + function_term)^{1/q}`.
    pub bound: f64,
    /// `int |x - T(x)|_circ^q rho(x) dx`.
    pub stagnation: f64,
    /// `int |gamma(x) - g(T(x))|^q rho(x) dx`.
    pub function_term: f64,
}

pub fn tlq_map_bound(
    continuum: &ContinuumElement,
    discrete: &DiscreteElement,
    map: &TransportMap,
    q: f64,
) -> Result<MapBound, TransportError> {
    check_q(q)?;
    let l = continuum.length();
    if (discrete.length() - l).abs() > 1e-9 * l {
        return Err(TransportError::LengthMismatch(l, discrete.length()));
    }
    if map.density() != continuum.density() {
        return Err(TransportError::DensityMismatch);
    }
    let n = discrete.len();
    if map.len() != n {
        return Err(TransportError::SizeMismatch(map.len(), n));
    }
    if continuum.curve().dim() != discrete.dim() {
        return Err(TransportError::DimMismatch(continuum.curve().dim(), discrete.dim()));
    }
    let expected = 1.0 / n as f64;
    for k in 0..n {
        let j = map.target_index(k);
        if j >= n || intrinsic_distance(map.target(k), discrete.position(j), l) > PUSH_FORWARD_TOL {
            return Err(TransportError::TargetMismatch { block: k });
        }
        let mass = map.block_mass(k);
        if (mass - expected).abs() > PUSH_FORWARD_TOL {
            return Err(TransportError::PushForward { block: k, mass, expected });
        }
    }
    let density = continuum.density();
    let curve = continuum.curve();
    let per_block: Vec<f64> = (0..n)
        .map(|k| {
            let g = discrete.value(map.target_index(k));
            map.block_pieces(k)
                .into_iter()
                .map(|(a, b, _)| {
                    let h = (b - a) / PANELS as f64;
                    (0..PANELS)
                        .map(|p| {
                            let lo = a + p as f64 * h;
                            gl10().integrate(lo, lo + h, |x| dist(&curve.eval(x), g).powf(q) * density.pdf(x))
                        })
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();
    let function_term = pairwise_sum(&per_block);
    let stagnation = stagnation_statistic(map, q);
    Ok(MapBound {
        bound: (stagnation + function_term).powf(1.0 / q),
        stagnation,
        function_term,
    })
}

/// Thresholds for declaring a sequence convergent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceCriteria {
    /// Largest admissible median bound at the finest `n`.
    pub epsilon: f64,
    /// Number of sizes whose medians are compared at each end of the ladder.
    pub window: usize,
}

impl Default for ConvergenceCriteria {
    fn default() -> Self {
        Self { epsilon: 0.05, window: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub map_bound: f64,
    pub stagnation: f64,
}

/// Medians over all rows sharing one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub median_bound: f64,
    pub median_stagnation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub summary: Vec<NSummary>,
    pub criteria: ConvergenceCriteria,
    pub bound_decreasing: bool,
    pub stagnation_decreasing: bool,
    pub final_bound: f64,
    pub converging: bool,
}

/// Median of the last `window` entries is below the median of the first `window`.
fn decreasing_in_median(series: &[f64], window: usize) -> bool {
    if series.len() < 2 {
        return false;
    }
    let w = window.clamp(1, series.len() - 1);
    median(&series[series.len() - w..]) < median(&series[..w])
}

/// Map bound and stagnation statistic along a sequence of discrete
/// elements, each with the map pushing `target`'s measure onto it.
pub fn tlq_sequence_convergence(
    seq: &[(DiscreteElement, TransportMap)],
    target: &ContinuumElement,
    q: f64,
    criteria: ConvergenceCriteria,
) -> Result<ConvergenceReport, TransportError> {
    let rows = seq
        .iter()
        .map(|(el, map)| {
            let b = tlq_map_bound(target, el, map, q)?;
            Ok(ConvergenceRow {
                n: el.len(),
                map_bound: b.bound,
                stagnation: b.stagnation.powf(1.0 / q),
            })
        })
        .collect::<Result<Vec<_>, TransportError>>()?;
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let summary: Vec<NSummary> = sizes
        .iter()
        .map(|&n| {
            let (b, s): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.n == n).map(|r| (r.map_bound, r.stagnation)).unzip();
            NSummary {
                n,
                median_bound: median(&b),
                median_stagnation: median(&s),
            }
        })
        .collect();
    let bounds: Vec<f64> = summary.iter().map(|s| s.median_bound).collect();
    let stag: Vec<f64> = summary.iter().map(|s| s.median_stagnation).collect();
    let bound_decreasing = decreasing_in_median(&bounds, criteria.window);
    let stagnation_decreasing = decreasing_in_median(&stag, criteria.window);
    let final_bound = bounds.last().copied().unwrap_or(f64::INFINITY);
    Ok(ConvergenceReport {
        rows,
        summary,
        criteria,
        bound_decreasing,
        stagnation_decreasing,
        final_bound,
        converging: bound_decreasing && stagnation_decreasing && final_bound < criteria.epsilon,
    })
}
