use rayon::prelude::*;

use super::mc::reference_energy;
use super::{medians_by, strictly_increasing, Check, Draft, ExperimentConfig, ExperimentError, Setup};
use crate::curve::{ClosedCurve, Polygon};
use crate::energy::{blatt_report, random_ohara_energy, BlattReport};
use crate::sampling::sample_iid;

fn finite_or_inf(r: &crate::EnergyReport) -> f64 {
    if r.infinite {
        f64::INFINITY
    } else {
        r.value
    }
}

fn emit(d: &mut Draft, label: &str, n: usize, seed: u64, b: &BlattReport) {
    const NAME: &str = "blatt-divergence";
    d.row(NAME, n, seed, &format!("{label}_energy"), finite_or_inf(&b.energy));
    d.row(NAME, n, seed, &format!("{label}_energy_finest_grid"), b.energy.finest_value());
    d.row(NAME, n, seed, &format!("{label}_seminorm"), finite_or_inf(&b.seminorm));
    d.row(NAME, n, seed, &format!("{label}_seminorm_finest_grid"), b.seminorm.finest_value());
    d.row(NAME, n, seed, &format!("{label}_energy_finite"), b.energy_finite as u8 as f64);
    d.row(NAME, n, seed, &format!("{label}_seminorm_finite"), b.seminorm_finite as u8 as f64);
}

fn verdict(b: &BlattReport) -> &'static str {
    match (b.energy_finite, b.seminorm_finite) {
        (true, true) => "(finite, finite)",
        (false, false) => "(divergent, divergent)",
        (true, false) => "(finite, divergent)",
        (false, true) => "(divergent, finite)",
    }
}

pub(super) fn blatt_divergence(config: &ExperimentConfig, s: &Setup) -> Result<Draft, ExperimentError> {
    const NAME: &str = "blatt-divergence";
    let p = &s.params;
    if !(p.in_lower_range() && p.in_finite_range() && p.p >= 1.0) {
        return Err(ExperimentError::Config(format!(
            "parameters outside 2 <= alpha p < 2p + 1, p >= 1: alpha={}, p={}",
            p.alpha, p.p
        )));
    }
    let sizes = &config.blatt.grid_sizes;
    if sizes.is_empty() {
        return Err(ExperimentError::Config("blatt.grid_sizes must be nonempty".into()));
    }
    let mut d = Draft::default();
    let seed = config.seeds[0];
    let l = s.curve.length();
    let square = ClosedCurve::from_polygon(Polygon::unit_square().scaled(l / 4.0)?);
    let mut last = None;
    for &n in sizes {
        let smooth = blatt_report(&s.curve, p, n)?;
        let cornered = blatt_report(&square, p, n)?;
        emit(&mut d, "smooth", n, seed, &smooth);
        emit(&mut d, "square", n, seed, &cornered);
        last = Some((n, smooth, cornered));
    }
    let (n_fine, smooth, cornered) = last.expect("nonempty sizes");
    d.checks.push(Check::new(
        "smooth_finite",
        smooth.energy_finite && smooth.seminorm_finite,
        format!("verdict at N = {n_fine}: {}", verdict(&smooth)),
    ));
    d.checks.push(Check::new(
        "square_divergent",
        !cornered.energy_finite && !cornered.seminorm_finite,
        format!("verdict at N = {n_fine}: {}", verdict(&cornered)),
    ));
    d.summarize("s", smooth.s);
    d.summarize("smooth", &smooth);
    d.summarize("square", &cornered);

    let (reference, source) = reference_energy(config, s)?;
    d.summarize("smooth_reference_energy", reference);
    d.summarize("smooth_reference_source", source);
    let cells: Vec<(usize, u64)> = s
        .grid
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&sd| (n, sd)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(n, sd)| {
            let set = sample_iid(&s.density, n, sd)?;
            let r = random_ohara_energy(&square, &set, p)?;
            Ok(if r.infinite { f64::INFINITY } else { r.value })
        })
        .collect::<Result<Vec<f64>, ExperimentError>>()?;
    for (&(n, sd), &v) in cells.iter().zip(&values) {
        d.row(NAME, n, sd, "square_random_energy", v);
    }
    let pairs: Vec<(usize, f64)> = cells.iter().zip(&values).map(|(c, &v)| (c.0, v)).collect();
    let medians = medians_by(&pairs);
    let meds: Vec<f64> = medians.iter().map(|m| m.1).collect();
    d.checks.push(Check::new(
        "square_random_increasing",
        strictly_increasing(&meds),
        format!("medians {medians:?}"),
    ));
    d.checks.push(Check::new(
        "square_random_exceeds_smooth",
        meds.iter().all(|&m| m > reference),
        format!("smallest median {:.4} vs smooth-curve E_rho = {reference:.4}", meds.iter().copied().fold(f64::INFINITY, f64::min)),
    ));
    d.summarize("square_random_medians", medians);
    Ok(d)
}
