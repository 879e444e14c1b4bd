use rayon::prelude::*;
use serde::Serialize;

use super::{strictly_increasing, Check, Draft, ExperimentConfig, ExperimentError, Setup};
use crate::curve::{arclength_reparametrize, ClosedCurve, Parametric, DEFAULT_REPARAM_GRID, DEFAULT_REPARAM_TOL};
use crate::energy::random_ohara_energy;
use crate::numeric::norm;
use crate::sampling::{sample_iid, CounterRng, SampleSet};
use crate::transport::{tlq_exact, DiscreteElement};

/// Greedy `epsilon`-net over a symmetric `k x k` distance matrix: scan in
/// order, open a new centre whenever no centre is within `epsilon`.
pub fn greedy_net(distances: &[f64], k: usize, epsilon: f64) -> Vec<usize> {
    assert_eq!(distances.len(), k * k);
    let mut centres: Vec<usize> = Vec::new();
    for i in 0..k {
        if centres.iter().all(|&c| distances[i * k + c] > epsilon) {
            centres.push(i);
        }
    }
    centres
}

/// Radially perturbed circle of length `length`, arc-length parametrized.
fn perturbed_circle(length: f64, amplitude: f64, modes: usize, seed: u64) -> Result<ClosedCurve, ExperimentError> {
    let mut rng = CounterRng::new(seed, 1);
    let per = amplitude / (2.0 * (modes.max(2) - 1) as f64);
    let mut cos = vec![0.0; modes];
    let mut sin = vec![0.0; modes];
    for k in 1..modes {
        cos[k] = per * (2.0 * rng.uniform(2 * k as u64) - 1.0);
        sin[k] = per * (2.0 * rng.uniform(2 * k as u64 + 1) - 1.0);
    }
    let unit = Parametric::radial_fourier(1.0, cos.clone(), sin.clone())?.total_length();
    let raw = ClosedCurve::raw(Parametric::radial_fourier(length / unit, cos, sin)?)?;
    Ok(arclength_reparametrize(&raw, DEFAULT_REPARAM_GRID, DEFAULT_REPARAM_TOL)?)
}

/// Ellipse with axis ratio `aspect`, scaled to the given length.
fn thin_ellipse(length: f64, aspect: f64) -> Result<ClosedCurve, ExperimentError> {
    let b = 1.0 / aspect;
    let unit = Parametric::ellipse(1.0, b)?.total_length();
    let s = length / unit;
    let raw = ClosedCurve::raw(Parametric::ellipse(s, s * b)?)?;
    let grid = DEFAULT_REPARAM_GRID * (aspect.ceil() as usize).clamp(1, 16);
    Ok(arclength_reparametrize(&raw, grid, DEFAULT_REPARAM_TOL)?)
}

/// Values of `f` at the given positions of `R/LZ`.
fn element(length: f64, positions: &[f64], f: impl Fn(f64) -> Vec<f64>) -> Result<DiscreteElement, ExperimentError> {
    let values: Vec<Vec<f64>> = positions.iter().map(|&x| f(x)).collect();
    Ok(DiscreteElement::new(length, positions.to_vec(), &values)?)
}

fn pairwise(elements: &[DiscreteElement], q: f64) -> Result<Vec<f64>, ExperimentError> {
    let k = elements.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| Ok(tlq_exact(&elements[i], &elements[j], q)?.0))
        .collect::<Result<Vec<f64>, ExperimentError>>()?;
    let mut m = vec![0.0; k * k];
    for (&(i, j), &d) in pairs.iter().zip(&dists) {
        m[i * k + j] = d;
        m[j * k + i] = d;
    }
    Ok(m)
}

/// Random energy and `L^1(nu_n)` norm of `curve` on `n` samples.
fn energy_and_norm(config: &ExperimentConfig, curve: &ClosedCurve, n: usize, seed: u64) -> Result<(f64, f64), ExperimentError> {
    let density = config.density.build(curve.length())?;
    let set = sample_iid(&density, n, seed)?;
    let r = random_ohara_energy(curve, &set, &config.params()?)?;
    let e = if r.infinite { f64::INFINITY } else { r.value };
    let l1 = set.samples().iter().map(|&x| norm(&curve.eval(x))).sum::<f64>() / n as f64;
    Ok((e, l1))
}

#[derive(Serialize)]
struct NetSummary {
    family: &'static str,
    members: usize,
    net_size: usize,
    centres: Vec<usize>,
    max_distance: f64,
}

pub(super) fn compactness_probe(config: &ExperimentConfig, s: &Setup) -> Result<Draft, ExperimentError> {
    const NAME: &str = "compactness-probe";
    let c = &config.compactness;
    let t = &config.thresholds;
    if !(s.density.lower_bound() > 0.0) {
        return Err(ExperimentError::Config("density must be bounded away from zero".into()));
    }
    let p = &s.params;
    if !(p.in_lower_range() && p.in_finite_range()) {
        return Err(ExperimentError::Config(format!(
            "parameters outside 2 <= alpha p < 2p + 1: alpha={}, p={}",
            p.alpha, p.p
        )));
    }
    if c.family_size == 0 || c.atoms == 0 || c.modes < 2 || !(c.amplitude > 0.0 && c.amplitude < 1.0) {
        return Err(ExperimentError::Config(
            "compactness needs family_size, atoms >= 1, modes >= 2 and 0 < amplitude < 1".into(),
        ));
    }
    let mut d = Draft::default();
    let l = s.curve.length();
    let base = config.seeds[0];
    let k2 = 2 * c.family_size;
    let seeds: Vec<u64> = (0..k2 as u64).map(|k| base.wrapping_add(k)).collect();
    let family = seeds
        .par_iter()
        .map(|&sd| perturbed_circle(l, c.amplitude, c.modes, sd))
        .collect::<Result<Vec<_>, _>>()?;

    // hypothesis: uniformly bounded energy and L^1 norm along the family
    let cells: Vec<(usize, usize)> = (0..k2).flat_map(|m| s.grid.iter().map(move |&n| (m, n))).collect();
    let bounds = cells
        .par_iter()
        .map(|&(m, n)| energy_and_norm(config, &family[m], n, seeds[m]))
        .collect::<Result<Vec<_>, _>>()?;
    for (&(m, n), &(e, l1)) in cells.iter().zip(&bounds) {
        d.row(NAME, n, seeds[m], "family_energy", e);
        d.row(NAME, n, seeds[m], "family_l1", l1);
    }
    let sup_e = bounds.iter().map(|b| b.0).fold(f64::NEG_INFINITY, f64::max);
    let sup_l1 = bounds.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    d.checks.push(Check::new(
        "family_energy_bounded",
        sup_e <= t.energy_bound,
        format!("sup R_n = {sup_e:.4} (bound {}), sup L^1 = {sup_l1:.4}", t.energy_bound),
    ));
    d.summarize("family_sup_energy", sup_e);
    d.summarize("family_sup_l1", sup_l1);

    // co-quantized elements on the quantile midpoints of rho
    let atoms = SampleSet::quantile_midpoints(&s.density, c.atoms)?;
    let pos = atoms.samples();
    let elements = family
        .iter()
        .map(|g| {
            let scale = g.length() / l;
            element(l, pos, |x| g.eval(x * scale))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let dist = pairwise(&elements, config.q)?;
    for i in 0..k2 {
        for j in i + 1..k2 {
            d.row(NAME, c.atoms, seeds[i], &format!("distance_to_{}", seeds[j]), dist[i * k2 + j]);
        }
    }
    let k1 = c.family_size;
    let sub: Vec<f64> = (0..k1).flat_map(|i| (0..k1).map(move |j| (i, j))).map(|(i, j)| dist[i * k2 + j]).collect();
    let net_small = greedy_net(&sub, k1, c.epsilon);
    let net_full = greedy_net(&dist, k2, c.epsilon);
    d.row(NAME, k1, base, "net_size", net_small.len() as f64);
    d.row(NAME, k2, base, "net_size", net_full.len() as f64);
    d.checks.push(Check::new(
        "net_size",
        net_small.len() <= t.net_size_max,
        format!("{} centres for {k1} members at epsilon {} (max {})", net_small.len(), c.epsilon, t.net_size_max),
    ));
    d.checks.push(Check::new(
        "net_stable_under_doubling",
        net_full.len() <= net_small.len() + t.net_growth_max,
        format!("{} -> {} centres when doubling to {k2} members", net_small.len(), net_full.len()),
    ));
    let mut nets = vec![
        NetSummary {
            family: "perturbed",
            members: k1,
            net_size: net_small.len(),
            centres: net_small,
            max_distance: sub.iter().copied().fold(0.0, f64::max),
        },
        NetSummary {
            family: "perturbed",
            members: k2,
            net_size: net_full.len(),
            centres: net_full,
            max_distance: dist.iter().copied().fold(0.0, f64::max),
        },
    ];

    // mutually rotated copies of the configured curve
    let mut rng = CounterRng::new(base, 2);
    let shifts: Vec<f64> = (0..k1 as u64).map(|k| l * rng.uniform(k)).collect();
    let rotated = shifts
        .iter()
        .map(|&sh| element(l, pos, |x| s.curve.eval(x + sh)))
        .collect::<Result<Vec<_>, _>>()?;
    let rdist = pairwise(&rotated, config.q)?;
    let rnet = greedy_net(&rdist, k1, c.epsilon);
    d.row(NAME, k1, base, "rotated_net_size", rnet.len() as f64);
    d.checks.push(Check::new(
        "rotated_net_size",
        rnet.len() <= t.net_size_max,
        format!("{} centres for {k1} rotated copies", rnet.len()),
    ));
    nets.push(NetSummary {
        family: "rotated",
        members: k1,
        net_size: rnet.len(),
        centres: rnet,
        max_distance: rdist.iter().copied().fold(0.0, f64::max),
    });

    // control: thinning ellipses, energy unbounded
    let controls = c
        .control_aspects
        .par_iter()
        .map(|&a| thin_ellipse(l, a))
        .collect::<Result<Vec<_>, _>>()?;
    let n_ctrl = *s.grid.last().expect("nonempty grid");
    let ctrl = controls
        .par_iter()
        .map(|g| energy_and_norm(config, g, n_ctrl, base).map(|x| x.0))
        .collect::<Result<Vec<f64>, _>>()?;
    for (&a, &e) in c.control_aspects.iter().zip(&ctrl) {
        d.row(NAME, n_ctrl, base, &format!("control_energy_aspect_{a}"), e);
    }
    let growth = ctrl.last().copied().unwrap_or(f64::NAN) / ctrl.first().copied().unwrap_or(f64::NAN);
    let flagged = ctrl.len() >= 2 && strictly_increasing(&ctrl) && growth >= t.control_growth;
    if flagged {
        d.warnings.push(format!(
            "control family: random energy grows {growth:.1}x along aspects {:?}; energy bound hypothesis violated",
            c.control_aspects
        ));
    }
    d.checks.push(Check::new(
        "control_flagged",
        flagged,
        format!("control energies {ctrl:?}, growth {growth:.2} (flag at {})", t.control_growth),
    ));
    d.summarize("nets", nets);
    d.summarize("control_energies", ctrl);
    d.notes.push("probe of total boundedness on finite families; not a verification of compactness".into());
    Ok(d)
}
