use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_arclength, ohara_energy, DivergenceRule, EnergyError, EnergyParams, EnergyReport, LadderStep, MIN_GRID};
use crate::curve::ClosedCurve;
use crate::numeric::pairwise_sum;

/// `int_0^L int_{-L/2}^{L/2} |f(u + w) - f(u)|^p / |w|^{1 + s p} dw du` by
/// the midpoint rule on `n` cells, with `f` sampled at the cell centres.
/// Offsets are multiples of the cell width, so only `w = 0` is skipped.
pub fn seminorm_grid(values: &[Vec<f64>], length: f64, s: f64, p: f64) -> f64 {
    let n = values.len();
    let h = length / n as f64;
    let half = n / 2;
    let weight: Vec<f64> = (0..=half).map(|k| (k as f64 * h).powf(-(1.0 + s * p))).collect();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            // k = -half+1 ..= half, k != 0
            let row: Vec<f64> = (1..=half)
                .flat_map(|k| {
                    let fwd = (i + k) % n;
                    let back = (i + n - k) % n;
                    let first = (k < half || n % 2 == 1).then_some(back);
                    std::iter::once(fwd).chain(first).map(move |j| (j, k))
                })
                .map(|(j, k)| {
                    let diff: f64 = values[j].iter().zip(&values[i]).map(|(a, b)| (a - b) * (a - b)).sum();
                    diff.sqrt().powf(p) * weight[k]
                })
                .collect();
            pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&rows) * h * h
}

/// `[gamma']^p_{W^{s,p}}` on the ladder `n/4, n/2, n`, with divergence
/// judged by the default [`DivergenceRule`].
pub fn sobolev_seminorm(curve: &ClosedCurve, s: f64, p: f64, n: usize) -> Result<EnergyReport, EnergyError> {
    if !(s > 0.0 && s < 1.0 && p >= 1.0) {
        return Err(EnergyError::Params(format!("need 0 < s < 1 and p >= 1, got s={s}, p={p}")));
    }
    check_arclength(curve)?;
    if n < MIN_GRID {
        return Err(EnergyError::GridTooSmall(n));
    }
    let start = Instant::now();
    let l = curve.length();
    let rule = DivergenceRule::default();
    // the (alpha, p) pair whose matching space is W^{s,p}
    let paired = EnergyParams {
        alpha: 2.0 * (s * p + 1.0) / p,
        p: 0.5 * p,
    };
    let mut report = EnergyReport::new("sobolev", paired, n);
    for level in [n / 4, n / 2, n] {
        let h = l / level as f64;
        let tangents: Vec<Vec<f64>> = (0..level).map(|i| curve.tangent((i as f64 + 0.5) * h)).collect();
        report.ladder.push(LadderStep {
            resolution: level,
            value: seminorm_grid(&tangents, l, s, p),
        });
    }
    report.divergence_rule = Some(rule);
    report.extra.insert("s".into(), s);
    report.extra.insert("exponent".into(), p);
    if rule.is_divergent(&report.ladder) {
        report.warnings.push("seminorm grows under refinement".into());
        report.mark_infinite();
    } else {
        let v = report.finest_value();
        report.set_value(v);
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Finiteness comparison between `E^{alpha,p}(gamma)` and
/// `[gamma']^{2p}_{W^{s,2p}}`, `s = (alpha p - 1) / (2p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlattReport {
    pub params: EnergyParams,
    pub s: f64,
    pub energy: EnergyReport,
    pub seminorm: EnergyReport,
    /// `||gamma'||^{2p}_{L^{2p}}`, equal to `L` for unit speed.
    pub lp_norm_power: f64,
    pub energy_finite: bool,
    pub seminorm_finite: bool,
    pub agree: bool,
}

pub fn blatt_report(curve: &ClosedCurve, params: &EnergyParams, n: usize) -> Result<BlattReport, EnergyError> {
    params.validate()?;
    if !(params.in_lower_range() && params.in_finite_range() && params.p >= 1.0) {
        return Err(EnergyError::Params(format!(
            "need 2 <= alpha p < 2p + 1 and p >= 1, got alpha={}, p={}",
            params.alpha, params.p
        )));
    }
    let s = params.s();
    let energy = ohara_energy(curve, params, n)?;
    let seminorm = sobolev_seminorm(curve, s, 2.0 * params.p, n)?;
    let h = curve.length() / n as f64;
    let speeds: Vec<f64> = (0..n)
        .map(|i| crate::numeric::norm(&curve.tangent((i as f64 + 0.5) * h)).powf(2.0 * params.p) * h)
        .collect();
    let energy_finite = !energy.infinite;
    let seminorm_finite = !seminorm.infinite;
    Ok(BlattReport {
        params: *params,
        s,
        energy,
        seminorm,
        lp_norm_power: pairwise_sum(&speeds),
        energy_finite,
        seminorm_finite,
        agree: energy_finite == seminorm_finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Polygon;
    use std::f64::consts::PI;

    #[test]
    fn constant_function_has_zero_seminorm() {
        let vals = vec![vec![0.3, -1.0]; 128];
        assert_eq!(seminorm_grid(&vals, 2.0, 0.5, 2.0), 0.0);
    }

    #[test]
    fn seminorm_grid_matches_circle_quadrature() {
        // unit circle, s = 1/2, p = 2: |T(u+w) - T(u)|^2 = 4 sin^2(w/2)
        let n = 512;
        let h = 2.0 * PI / n as f64;
        let c = ClosedCurve::circle(2.0 * PI, 2).unwrap();
        let t: Vec<Vec<f64>> = (0..n).map(|i| c.tangent((i as f64 + 0.5) * h)).collect();
        let grid = seminorm_grid(&t, 2.0 * PI, 0.5, 2.0);
        let exact = 2.0 * PI
            * 2.0
            * crate::quadrature::adaptive(|w| 4.0 * (0.5 * w).sin().powi(2) / (w * w), 0.0, PI, 1e-13).value;
        assert!((grid - exact).abs() < 2.0 * h * 2.0 * PI, "{grid} vs {exact}");
    }

    #[test]
    fn circle_finite_square_divergent() {
        let circle = ClosedCurve::circle(2.0 * PI, 2).unwrap();
        let r = sobolev_seminorm(&circle, 0.5, 2.0, 512).unwrap();
        assert!(!r.infinite);
        let k = r.ladder.len();
        assert!((r.ladder[k - 1].value / r.ladder[k - 2].value - 1.0).abs() < 0.05);
        let sq = ClosedCurve::from_polygon(Polygon::unit_square());
        assert!(sobolev_seminorm(&sq, 0.5, 2.0, 512).unwrap().infinite);
    }

    #[test]
    fn blatt_verdicts() {
        let m = EnergyParams::mobius();
        let circle = ClosedCurve::circle(2.0 * PI, 2).unwrap();
        let b = blatt_report(&circle, &m, 256).unwrap();
        assert!(b.energy_finite && b.seminorm_finite && b.agree);
        assert!((b.lp_norm_power - 2.0 * PI).abs() < 1e-12);
        let sq = ClosedCurve::from_polygon(Polygon::unit_square());
        let b = blatt_report(&sq, &m, 512).unwrap();
        assert!(!b.energy_finite && !b.seminorm_finite && b.agree);
        assert!(blatt_report(&circle, &EnergyParams::new(1.0, 1.0).unwrap(), 64).is_err());
        assert!(blatt_report(&circle, &EnergyParams::new(3.0, 1.0).unwrap(), 64).is_err());
    }
}
