use rayon::prelude::*;
use serde::Serialize;

use super::{medians_by, strictly_decreasing, Check, Draft, ExperimentConfig, ExperimentError, Setup};
use crate::numeric::{fit_loglog, LineFit};
use crate::sampling::{gc_statistic, quantile_transport_map, sample_iid, stagnation_statistic, Cut};

const STATS: [&str; 4] = ["gc_statistic", "sup_displacement_cut0", "sup_displacement_optimized", "stagnation"];

#[derive(Serialize)]
struct SlopeSummary {
    stat: &'static str,
    medians: Vec<(usize, f64)>,
    fit: LineFit,
    ci95: f64,
}

pub(super) fn transport_rates(config: &ExperimentConfig, s: &Setup) -> Result<Draft, ExperimentError> {
    const NAME: &str = "transport-rates";
    let t = &config.thresholds;
    let l = s.density.length();
    let mut d = Draft::default();
    let cells: Vec<(usize, u64)> = s
        .grid
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&seed| (n, seed)))
        .collect();
    let stats = cells
        .par_iter()
        .map(|&(n, seed)| {
            let set = sample_iid(&s.density, n, seed)?;
            let fixed = quantile_transport_map(&s.density, &set, Cut::At(0.0));
            let best = quantile_transport_map(&s.density, &set, Cut::Optimize);
            Ok([
                gc_statistic(&set),
                fixed.sup_displacement(),
                best.sup_displacement(),
                stagnation_statistic(&fixed, config.q),
            ])
        })
        .collect::<Result<Vec<[f64; 4]>, ExperimentError>>()?;
    for (&(n, seed), v) in cells.iter().zip(&stats) {
        for (name, &x) in STATS.iter().zip(v) {
            d.row(NAME, n, seed, name, x);
        }
    }
    let mut slopes = Vec::new();
    for (k, &name) in STATS.iter().enumerate() {
        let pairs: Vec<(usize, f64)> = cells.iter().zip(&stats).map(|(c, v)| (c.0, v[k])).collect();
        let medians = medians_by(&pairs);
        let fit = (medians.len() >= 2).then(|| {
            let xs: Vec<f64> = medians.iter().map(|m| m.0 as f64).collect();
            let ys: Vec<f64> = medians.iter().map(|m| m.1).collect();
            fit_loglog(&xs, &ys)
        });
        if let Some(fit) = fit {
            slopes.push(SlopeSummary {
                stat: name,
                medians,
                fit,
                ci95: fit.slope_ci95(),
            });
        }
    }
    d.notes.push(
        "sup-displacement slopes are empirical one-dimensional measurements; the available rate theory covers dimension two and up".into(),
    );
    if let Some(gc) = slopes.iter().find(|x| x.stat == "gc_statistic") {
        d.checks.push(Check::new(
            "gc_slope",
            (gc.fit.slope - t.slope).abs() <= t.slope_tol,
            format!("slope {:.4} +- {:.4} (95%), target {} +- {}", gc.fit.slope, gc.ci95, t.slope, t.slope_tol),
        ));
    }
    let n_max = *s.grid.last().expect("nonempty grid");
    for x in &slopes {
        let meds: Vec<f64> = x.medians.iter().map(|m| m.1).collect();
        if x.stat.starts_with("sup_") {
            let last = *meds.last().expect("nonempty");
            d.checks.push(Check::new(
                &format!("{}_final", x.stat),
                last < t.sup_fraction * l,
                format!("median {last:.4e} at n = {n_max} vs {} L = {:.4e}", t.sup_fraction, t.sup_fraction * l),
            ));
        }
        if x.stat != "stagnation" {
            d.checks.push(Check::new(
                &format!("{}_decreasing", x.stat),
                strictly_decreasing(&meds),
                format!("medians {meds:?}"),
            ));
        }
    }
    d.summarize("slopes", &slopes);
    Ok(d)
}
