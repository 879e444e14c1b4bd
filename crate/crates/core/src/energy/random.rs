use std::time::Instant;

use rayon::prelude::*;

use super::{check_arclength, EnergyError, EnergyParams, EnergyReport};
use crate::curve::ClosedCurve;
use crate::numeric::pairwise_sum;
use crate::sampling::SampleSet;

/// `(1/n^2) sum_{i != j} M(X_i, X_j)` over parameters sorted ascending.
///
/// Each unordered pair is evaluated once and counted twice. Rows are summed
/// in parallel and reduced in a fixed order. Returns the value and whether a
/// vanishing chord was met.
pub fn random_ohara_value(
    curve: &ClosedCurve,
    sorted: &[f64],
    params: &EnergyParams,
) -> Result<(f64, bool), EnergyError> {
    let n = sorted.len();
    if n < 2 {
        return Ok((0.0, false));
    }
    let probes = curve.probe(sorted);
    let rows: Vec<Result<(f64, bool), EnergyError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(n - i - 1);
            let mut hit = false;
            for j in i + 1..n {
                let arc = probes.arc(i, j);
                if arc == 0.0 {
                    return Err(EnergyError::DuplicateSamples(i, j));
                }
                let v = probes.kernel(i, j, arc, params);
                hit |= v.is_infinite();
                row.push(v);
            }
            Ok((pairwise_sum(&row), hit))
        })
        .collect();
    let mut sums = Vec::with_capacity(n);
    let mut hit = false;
    for r in rows {
        let (s, h) = r?;
        sums.push(s);
        hit |= h;
    }
    let nf = n as f64;
    Ok((2.0 * pairwise_sum(&sums) / (nf * nf), hit))
}

/// Random O'Hara energy `R_n(gamma)` of the samples in `set`.
///
/// Samples are sorted first, so the value is invariant under reordering
/// the set, bit for bit.
pub fn random_ohara_energy(
    curve: &ClosedCurve,
    set: &SampleSet,
    params: &EnergyParams,
) -> Result<EnergyReport, EnergyError> {
    params.validate()?;
    check_arclength(curve)?;
    if (set.length() - curve.length()).abs() > 1e-9 * curve.length() {
        return Err(EnergyError::LengthMismatch {
            density: set.length(),
            curve: curve.length(),
        });
    }
    let start = Instant::now();
    let mut report = EnergyReport::new("ohara-random", *params, set.len());
    report.seed = Some(set.seed());
    let (value, hit) = random_ohara_value(curve, &set.sorted(), params)?;
    if hit {
        report.warnings.push("chord vanishes between distinct samples: the curve self-intersects".into());
        report.mark_infinite();
    } else {
        report.set_value(value);
    }
    if params.heavy_tailed() {
        report.warnings.push(format!(
            "alpha p = {} exceeds 2p + 0.5: the estimator's variance is infinite or nearly so",
            params.alpha * params.p
        ));
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}
