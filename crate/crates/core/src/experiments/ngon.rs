use rayon::prelude::*;
use serde::Serialize;

use super::{Check, Draft, ExperimentConfig, ExperimentError, Setup};
use crate::curve::Polygon;
use crate::energy::{kim_kusner_energy, segment_distance, KimKusnerVariant};
use crate::sampling::CounterRng;

/// Non-adjacent edges closer than this fraction of the length count as touching.
const TOUCH_TOL: f64 = 1e-9;

fn perturbed(base: &Polygon, delta: f64, seed: u64) -> Result<Polygon, ExperimentError> {
    let mut rng = CounterRng::new(seed, 0);
    let dim = base.dim();
    let mut k = 0u64;
    let verts: Vec<Vec<f64>> = base
        .vertices()
        .map(|v| {
            v.iter()
                .map(|&x| {
                    let u = rng.uniform(k);
                    k += 1;
                    x + delta * (2.0 * u - 1.0)
                })
                .collect::<Vec<f64>>()
        })
        .collect();
    debug_assert!(verts.iter().all(|v| v.len() == dim));
    Ok(Polygon::new(&verts)?)
}

/// Smallest distance between non-adjacent edges.
fn min_separation(p: &Polygon) -> Result<f64, ExperimentError> {
    let m = p.num_vertices();
    let mut best = f64::INFINITY;
    for i in 0..m {
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            let d = segment_distance(p.vertex(i), p.vertex((i + 1) % m), p.vertex(j), p.vertex((j + 1) % m))?;
            best = best.min(d);
        }
    }
    Ok(best)
}

#[derive(Serialize)]
struct TrialSummary {
    m: usize,
    regular: f64,
    evaluated: usize,
    skipped: usize,
    min: f64,
    max: f64,
    regular_wins: usize,
}

pub(super) fn ngon_min(config: &ExperimentConfig, s: &Setup) -> Result<Draft, ExperimentError> {
    const NAME: &str = "ngon-min";
    let c = &config.ngon;
    let t = &config.thresholds;
    if c.m < 4 {
        return Err(ExperimentError::Config(format!("ngon.m must be at least 4, got {}", c.m)));
    }
    if !(c.delta > 0.0) {
        return Err(ExperimentError::Config(format!("ngon.delta must be positive, got {}", c.delta)));
    }
    let mut d = Draft::default();
    let base_seed = config.seeds[0];
    let regular = Polygon::regular(c.m, 1.0, c.dim)?;
    let e_reg = kim_kusner_energy(&regular, KimKusnerVariant::Endpoint)?.value;
    d.row(NAME, c.m, base_seed, "regular_energy", e_reg);
    let trials = (0..c.trials as u64)
        .into_par_iter()
        .map(|k| {
            let seed = base_seed.wrapping_add(k);
            let p = perturbed(&regular, c.delta, seed)?;
            if min_separation(&p)? < TOUCH_TOL * p.length() {
                return Ok((seed, None));
            }
            let e = kim_kusner_energy(&p, KimKusnerVariant::Endpoint)?;
            Ok((seed, Some(e.value)))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut energies = Vec::new();
    for &(seed, e) in &trials {
        match e {
            Some(v) => {
                d.row(NAME, c.m, seed, "perturbed_energy", v);
                energies.push(v);
            }
            None => d.row(NAME, c.m, seed, "skipped_self_touching", 1.0),
        }
    }
    let wins = energies.iter().filter(|&&e| e_reg <= e).count();
    let summary = TrialSummary {
        m: c.m,
        regular: e_reg,
        evaluated: energies.len(),
        skipped: trials.len() - energies.len(),
        min: energies.iter().copied().fold(f64::INFINITY, f64::min),
        max: energies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        regular_wins: wins,
    };
    d.checks.push(Check::new(
        "regular_minimal",
        !energies.is_empty() && wins == energies.len(),
        format!(
            "regular {e_reg:.6} <= {wins}/{} perturbed values (min {:.6}, delta {})",
            energies.len(),
            summary.min,
            c.delta
        ),
    ));
    d.summarize("trials", summary);
    let mut ladder = Vec::new();
    for &m in &s.grid {
        if m < 3 {
            continue;
        }
        let e = kim_kusner_energy(&Polygon::regular(m, 1.0, c.dim)?, KimKusnerVariant::Endpoint)?.value;
        d.row(NAME, m, base_seed, "regular_ladder_energy", e);
        ladder.push((m, e));
    }
    if let Some(&(_, e4)) = ladder.iter().find(|x| x.0 == 4) {
        d.checks.push(Check::new("square_is_one", (e4 - 1.0).abs() <= 1e-12, format!("E_4(R_4) = {e4}")));
    }
    if let Some(&(m, e)) = ladder.last() {
        d.checks.push(Check::new(
            "approach_to_four",
            (e - 4.0).abs() < t.ngon_gap,
            format!("|E_{m}(R_{m}) - 4| = {:.4e}, tolerance {}", (e - 4.0).abs(), t.ngon_gap),
        ));
        let dist: Vec<f64> = ladder.iter().map(|x| (x.1 - 4.0).abs()).collect();
        d.checks.push(Check::new(
            "monotone_approach",
            dist.windows(2).all(|w| w[1] < w[0]),
            format!("|E_m - 4| along m = {:?}: {dist:?}", ladder.iter().map(|x| x.0).collect::<Vec<_>>()),
        ));
    }
    d.summarize("ladder", ladder);
    Ok(d)
}
