use rayon::prelude::*;
use serde::Serialize;

use super::{medians_by, strictly_decreasing, Check, Draft, ExperimentConfig, ExperimentError, Setup};
use crate::energy::{random_ohara_energy, weighted_ohara_energy};
use crate::numeric::{fit_loglog, mean, median, std_dev};
use crate::oracle::circle_energy;
use crate::sampling::{quantile_transport_map, sample_iid, Cut};
use crate::transport::{tlq_sequence_convergence, ContinuumElement, DiscreteElement};

/// `E_rho(gamma)`: reduced quadrature for a circle with uniform density,
/// the weighted grid energy otherwise.
pub(super) fn reference_energy(config: &ExperimentConfig, s: &Setup) -> Result<(f64, &'static str), ExperimentError> {
    let l = s.curve.length();
    if s.curve.circle_radius().is_some() && s.density.is_uniform() {
        let e = circle_energy(l, &s.params, 1e-12).value;
        return Ok((e / (l * l), "circle quadrature"));
    }
    let r = weighted_ohara_energy(&s.curve, &s.density, &s.params, config.reference_n)?;
    if r.infinite {
        return Err(ExperimentError::Config(
            "weighted energy of the target curve diverges; pick a finite-energy curve".into(),
        ));
    }
    Ok((r.value, "weighted grid"))
}

fn cells(grid: &[usize], seeds: &[u64]) -> Vec<(usize, u64)> {
    grid.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect()
}

fn random_energy(s: &Setup, n: usize, seed: u64) -> Result<f64, ExperimentError> {
    let set = sample_iid(&s.density, n, seed)?;
    let r = random_ohara_energy(&s.curve, &set, &s.params)?;
    Ok(if r.infinite { f64::INFINITY } else { r.value })
}

#[derive(Serialize)]
struct MomentRow {
    n: usize,
    mean: f64,
    sd: f64,
    se: f64,
    expected: f64,
    bias: f64,
}

pub(super) fn mc_convergence(config: &ExperimentConfig, s: &Setup) -> Result<Draft, ExperimentError> {
    const NAME: &str = "mc-convergence";
    let t = &config.thresholds;
    let mut d = Draft::default();
    let (e_rho, source) = reference_energy(config, s)?;
    d.summarize("reference_energy", e_rho);
    d.summarize("reference_source", source);
    if s.params.heavy_tailed() {
        d.warnings.push("alpha p > 2p + 1/2: the estimator may have infinite variance".into());
    }
    let cells = cells(&s.grid, &config.seeds);
    let values = cells
        .par_iter()
        .map(|&(n, seed)| random_energy(s, n, seed))
        .collect::<Result<Vec<f64>, _>>()?;
    for (&(n, seed), &v) in cells.iter().zip(&values) {
        d.row(NAME, n, seed, "energy", v);
    }
    let k = config.seeds.len() as f64;
    let moments: Vec<MomentRow> = s
        .grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let vals = &values[g * config.seeds.len()..(g + 1) * config.seeds.len()];
            let (m, sd) = (mean(vals), std_dev(vals));
            let expected = (1.0 - 1.0 / n as f64) * e_rho;
            MomentRow {
                n,
                mean: m,
                sd,
                se: sd / k.sqrt(),
                expected,
                bias: (m - expected).abs(),
            }
        })
        .collect();
    for m in &moments {
        let ok = if m.se > 0.0 {
            m.bias <= t.mean_se * m.se
        } else {
            m.bias <= 1e-12
        };
        d.checks.push(Check::new(
            &format!("unbiased_n{}", m.n),
            ok,
            format!("|mean - (1-1/n) E| = {:.3e}, {} SE = {:.3e}", m.bias, t.mean_se, t.mean_se * m.se),
        ));
    }
    let fit_pts: Vec<&MomentRow> = moments.iter().filter(|m| m.n >= 2 && m.sd > 0.0).collect();
    if fit_pts.len() >= 3 {
        let xs: Vec<f64> = fit_pts.iter().map(|m| m.n as f64).collect();
        let ys: Vec<f64> = fit_pts.iter().map(|m| m.sd).collect();
        let fit = fit_loglog(&xs, &ys);
        d.checks.push(Check::new(
            "sd_slope",
            (fit.slope - t.slope).abs() <= t.slope_tol,
            format!("slope {:.4} (95% CI +-{:.4}, R^2 {:.3}), target {} +- {}", fit.slope, fit.slope_ci95(), fit.r_squared, t.slope, t.slope_tol),
        ));
        d.summarize("sd_fit", fit);
    }
    d.summarize("moments", &moments);
    Ok(d)
}

#[derive(Serialize)]
struct GapRow {
    n: usize,
    median_energy: f64,
    median_gap: f64,
}

pub(super) fn gamma_sequence(config: &ExperimentConfig, s: &Setup) -> Result<Draft, ExperimentError> {
    const NAME: &str = "gamma-sequence";
    let t = &config.thresholds;
    let mut d = Draft::default();
    let target = ContinuumElement::new(s.density.clone(), s.curve.clone())?;
    let cells = cells(&s.grid, &config.seeds);
    let offset = config.sequence_offset;
    let seq = cells
        .par_iter()
        .map(|&(n, seed)| {
            let set = sample_iid(&s.density, n, seed)?;
            let shift = offset.at(n);
            let el = DiscreteElement::from_samples_with(&set, &s.curve, |_, v| v[0] += shift)?;
            Ok((el, quantile_transport_map(&s.density, &set, Cut::At(0.0))))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let report = tlq_sequence_convergence(&seq, &target, config.q, config.convergence)?;
    for (&(n, seed), r) in cells.iter().zip(&report.rows) {
        d.row(NAME, n, seed, "map_bound", r.map_bound);
        d.row(NAME, n, seed, "stagnation", r.stagnation);
    }
    d.checks.push(Check::new(
        "tl_convergence",
        report.converging,
        format!(
            "final median bound {:.4e} (epsilon {}), bound decreasing {}, stagnation decreasing {}",
            report.final_bound, report.criteria.epsilon, report.bound_decreasing, report.stagnation_decreasing
        ),
    ));
    d.summarize("convergence", &report.summary);
    d.summarize("sequence_offset", offset);
    if !report.converging {
        d.aborted = Some("input sequence fails the TL^q convergence diagnostic; energies not evaluated".into());
        return Ok(d);
    }
    let (e_rho, source) = reference_energy(config, s)?;
    d.summarize("reference_energy", e_rho);
    d.summarize("reference_source", source);
    // gamma_n(X_i) = gamma(X_i) + c leaves every chord unchanged, so
    // R_n(gamma_n) is the random energy of gamma on the same samples.
    let energies = cells
        .par_iter()
        .map(|&(n, seed)| random_energy(s, n, seed))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut by_n_energy = Vec::with_capacity(cells.len());
    let mut by_n_gap = Vec::with_capacity(cells.len());
    for (&(n, seed), &e) in cells.iter().zip(&energies) {
        let gap = (e - e_rho).abs();
        d.row(NAME, n, seed, "energy", e);
        d.row(NAME, n, seed, "gap", gap);
        by_n_energy.push((n, e));
        by_n_gap.push((n, gap));
    }
    let med_e = medians_by(&by_n_energy);
    let med_g = medians_by(&by_n_gap);
    let gaps: Vec<f64> = med_g.iter().map(|p| p.1).collect();
    let w = config.convergence.window.min(med_e.len());
    let tail: Vec<f64> = med_e[med_e.len() - w..].iter().map(|p| p.1).collect();
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let final_gap = *gaps.last().expect("nonempty grid");
    d.checks.push(Check::new(
        "final_gap",
        final_gap < t.gap_tol,
        format!("median gap {final_gap:.4e} at n = {}, tolerance {}", s.grid[s.grid.len() - 1], t.gap_tol),
    ));
    d.checks.push(Check::new(
        "liminf",
        lo >= e_rho - t.gap_tol,
        format!("min of final-window medians {lo:.5} vs E_rho - eps = {:.5}", e_rho - t.gap_tol),
    ));
    d.checks.push(Check::new(
        "limsup",
        hi <= e_rho + t.gap_tol,
        format!("max of final-window medians {hi:.5} vs E_rho + eps = {:.5}", e_rho + t.gap_tol),
    ));
    let wd = w.min(gaps.len().saturating_sub(1)).max(1);
    let decreasing = gaps.len() >= 2 && median(&gaps[gaps.len() - wd..]) < median(&gaps[..wd]);
    d.checks.push(Check::new(
        "gap_decreasing",
        decreasing,
        format!("per-n median gaps {gaps:?}; strictly decreasing: {}", strictly_decreasing(&gaps)),
    ));
    let table: Vec<GapRow> = med_e
        .iter()
        .zip(&med_g)
        .map(|(e, g)| GapRow {
            n: e.0,
            median_energy: e.1,
            median_gap: g.1,
        })
        .collect();
    d.summarize("gaps", table);
    Ok(d)
}
