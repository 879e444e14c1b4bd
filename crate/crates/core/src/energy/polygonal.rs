use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kernel, EnergyError, EnergyParams, EnergyReport};
use crate::curve::Polygon;
use crate::numeric::{dist, dot, norm, pairwise_sum};

/// Vertex weights of the Kim–Kusner energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KimKusnerVariant {
    /// `w_k = |P_{k+1} - P_k|`.
    #[default]
    Endpoint,
    /// `w_k = (|P_k - P_{k-1}| + |P_{k+1} - P_k|) / 2`.
    Averaged,
}

#[inline]
fn cyclic_gap(i: usize, j: usize, m: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(m - d)
}

fn need_vertices(p: &Polygon, need: usize) -> Result<usize, EnergyError> {
    let m = p.num_vertices();
    if m < need {
        Err(EnergyError::TooFewVertices { need, found: m })
    } else {
        Ok(m)
    }
}

/// Sums `f(i, j)` over all ordered pairs with `cyclic_gap(i, j) >= min_gap`,
/// rows in parallel, reduced in a fixed order.
fn pair_sum<F>(m: usize, min_gap: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = (0..m)
                .filter(|&j| j != i && cyclic_gap(i, j, m) >= min_gap)
                .map(|j| f(i, j))
                .collect();
            pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&rows)
}

fn finish(mut report: EnergyReport, value: f64, start: Instant, what: &str) -> EnergyReport {
    if value.is_finite() {
        report.set_value(value);
    } else {
        report.warnings.push(format!("{what} vanishes: the polygon touches itself"));
        report.mark_infinite();
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    report
}

/// Kim–Kusner discrete Möbius energy
/// `sum_{i != j} (|P_j - P_i|^-2 - d(a_j, a_i)^-2) w_i w_j`,
/// `d` the intrinsic distance along the polygon.
pub fn kim_kusner_energy(p: &Polygon, variant: KimKusnerVariant) -> Result<EnergyReport, EnergyError> {
    let m = need_vertices(p, 3)?;
    let start = Instant::now();
    let e = p.edge_lengths();
    let cum = p.cum_length();
    let l = p.length();
    let w: Vec<f64> = match variant {
        KimKusnerVariant::Endpoint => e.to_vec(),
        KimKusnerVariant::Averaged => (0..m).map(|k| 0.5 * (e[(k + m - 1) % m] + e[k])).collect(),
    };
    let mobius = EnergyParams::mobius();
    let value = pair_sum(m, 1, |i, j| {
        let d = (cum[i] - cum[j]).abs();
        let arc = d.min(l - d);
        kernel(dist(p.vertex(i), p.vertex(j)), arc, &mobius) * w[i] * w[j]
    });
    let mut report = EnergyReport::new("kim-kusner", mobius, m);
    if variant == KimKusnerVariant::Averaged {
        report.functional = "kim-kusner-averaged".into();
    }
    Ok(finish(report, value, start, "distance between vertices"))
}

/// Euclidean distance between the closed segments `[a0, a1]` and `[b0, b1]`.
pub fn segment_distance(a0: &[f64], a1: &[f64], b0: &[f64], b1: &[f64]) -> Result<f64, EnergyError> {
    let d1: Vec<f64> = a1.iter().zip(a0).map(|(x, y)| x - y).collect();
    let d2: Vec<f64> = b1.iter().zip(b0).map(|(x, y)| x - y).collect();
    let r: Vec<f64> = a0.iter().zip(b0).map(|(x, y)| x - y).collect();
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    if a == 0.0 || e == 0.0 {
        return Err(EnergyError::Params("zero-length segment".into()));
    }
    let b = dot(&d1, &d2);
    let c = dot(&d1, &r);
    let f = dot(&d2, &r);
    let denom = a * e - b * b;
    // minimize |a0 + s d1 - b0 - t d2| over the unit square; the parallel
    // case picks s = 0 and lets the clamping below finish the job
    let mut s = if denom > 1e-14 * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    let gap: Vec<f64> = (0..a0.len()).map(|k| r[k] + s * d1[k] - t * d2[k]).collect();
    Ok(norm(&gap))
}

/// `sum |X_i| |X_j| / dist(X_i, X_j)^2` over ordered pairs of cyclically
/// non-adjacent edges.
pub fn simon_raw_energy(p: &Polygon) -> Result<f64, EnergyError> {
    let m = need_vertices(p, 4)?;
    let e = p.edge_lengths();
    Ok(pair_sum(m, 2, |i, j| {
        let d = segment_distance(p.vertex(i), p.vertex(i + 1), p.vertex(j), p.vertex(j + 1))
            .expect("polygon edges have positive length");
        if d == 0.0 {
            f64::INFINITY
        } else {
            e[i] * e[j] / (d * d)
        }
    }))
}

/// Raw Simon energy of the regular `m`-gon, computed once per `m`.
fn regular_reference(m: usize) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().expect("cache lock").get(&m) {
        return v;
    }
    let reg = Polygon::regular(m, 1.0, 2).expect("m >= 4");
    let v = simon_raw_energy(&reg).expect("m >= 4");
    cache.lock().expect("cache lock").insert(m, v);
    v
}

/// Simon's minimal distance energy normalized so that the regular `m`-gon
/// scores exactly 4.
pub fn simon_energy(p: &Polygon) -> Result<EnergyReport, EnergyError> {
    let m = need_vertices(p, 4)?;
    let start = Instant::now();
    let raw = simon_raw_energy(p)?;
    let reference = regular_reference(m);
    let mut report = EnergyReport::new("simon", EnergyParams::mobius(), m);
    report.extra.insert("raw".into(), raw);
    report.extra.insert("regular_reference".into(), reference);
    Ok(finish(report, raw - reference + 4.0, start, "distance between non-adjacent edges"))
}

/// Tangent at `x` of the circle through `x, y, z`, oriented in the order
/// `x -> y -> z`. Collinear points give the line direction.
#[inline]
fn circle_tangent(x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
    let (mut yy, mut zz) = (0.0, 0.0);
    for k in 0..x.len() {
        yy += (y[k] - x[k]).powi(2);
        zz += (z[k] - x[k]).powi(2);
    }
    for k in 0..x.len() {
        out[k] = (y[k] - x[k]) / yy - (z[k] - x[k]) / zz;
    }
}

#[inline]
fn cos_between(u: &[f64], v: &[f64]) -> f64 {
    (dot(u, v) / (norm(u) * norm(v))).clamp(-1.0, 1.0)
}

/// One summand of the cosine energy for the edge pair `(i, j)`.
fn cos_summand(p: &Polygon, i: usize, j: usize) -> f64 {
    let (pi, pi1, pj, pj1) = (p.vertex(i), p.vertex(i + 1), p.vertex(j), p.vertex(j + 1));
    let e = p.edge_lengths();
    let m = p.num_vertices();
    let dij = dist(pi, pj);
    let dij1 = dist(pi1, pj1);
    if dij == 0.0 || dij1 == 0.0 || pi1 == pj || pi == pj1 {
        return f64::INFINITY;
    }
    let cross_ratio = e[i % m] * e[j % m] / (dij * dij1);
    let d = p.dim();
    let mut t = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    // circles through (P_i, P_i+1, P_j) and (P_j, P_j+1, P_i), meeting at P_j
    circle_tangent(pj, pi, pi1, &mut t[0]);
    circle_tangent(pj, pj1, pi, &mut t[1]);
    // circles through (P_i, P_i+1, P_j+1) and (P_j, P_j+1, P_i+1), meeting at P_i+1
    circle_tangent(pi1, pj1, pi, &mut t[2]);
    circle_tangent(pi1, pj, pj1, &mut t[3]);
    let ca = cos_between(&t[0], &t[1]);
    let cb = cos_between(&t[2], &t[3]);
    let v = cross_ratio * (1.0 - 0.5 * (ca + cb));
    debug_assert!(v > -1e-12 * cross_ratio, "negative summand {v}");
    v.max(0.0)
}

/// Möbius-invariant cosine energy.
///
/// Each circle is oriented so that its defining edge (`P_i -> P_i+1` or
/// `P_j -> P_j+1`) is traversed forward; with this convention the regular
/// polygon has energy 0 and the angles are preserved by inversions.
pub fn cos_energy(p: &Polygon) -> Result<EnergyReport, EnergyError> {
    let m = need_vertices(p, 4)?;
    let start = Instant::now();
    let value = pair_sum(m, 2, |i, j| cos_summand(p, i, j));
    let report = EnergyReport::new("cos", EnergyParams::mobius(), m);
    Ok(finish(report, value, start, "vertex distance"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_kim_kusner_is_one() {
        let r = kim_kusner_energy(&Polygon::unit_square(), KimKusnerVariant::Endpoint).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = kim_kusner_energy(&Polygon::unit_square(), KimKusnerVariant::Averaged).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kim_kusner_regular_polygons_approach_four() {
        let vals: Vec<f64> = [16, 64, 256]
            .iter()
            .map(|&m| {
                kim_kusner_energy(&Polygon::regular(m, 1.0, 2).unwrap(), KimKusnerVariant::Endpoint)
                    .unwrap()
                    .value
            })
            .collect();
        // independent O(m^2) evaluation from the closed-form chord 2 sin(pi k / m)
        for (&m, &v) in [16usize, 64, 256].iter().zip(&vals) {
            let h = 2.0 * (std::f64::consts::PI / m as f64).sin();
            let mut s = 0.0;
            for k in 1..m {
                let chord = 2.0 * (std::f64::consts::PI * k as f64 / m as f64).sin();
                let arc = h * k.min(m - k) as f64;
                s += m as f64 * (1.0 / (chord * chord) - 1.0 / (arc * arc)) * h * h;
            }
            assert!((s - v).abs() < 1e-10 * s);
        }
        assert!(vals.windows(2).all(|w| (4.0 - w[1]).abs() < (4.0 - w[0]).abs()));
        assert!((vals[2] - 4.0).abs() < 0.15);
    }

    #[test]
    fn segment_distance_cases() {
        let d = segment_distance(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let d = segment_distance(&[0.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(d < 1e-15);
        let d = segment_distance(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        // collinear, disjoint
        let d = segment_distance(&[0.0, 0.0], &[1.0, 0.0], &[3.0, 0.0], &[2.0, 0.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        assert!(segment_distance(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0]).is_err());
    }

    #[test]
    fn segment_distance_matches_grid_minimization() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..50 {
            let pts: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| next()).collect()).collect();
            let d = segment_distance(&pts[0], &pts[1], &pts[2], &pts[3]).unwrap();
            let k = 200;
            let mut best = f64::INFINITY;
            for a in 0..=k {
                for b in 0..=k {
                    let (s, t) = (a as f64 / k as f64, b as f64 / k as f64);
                    let g: Vec<f64> = (0..3)
                        .map(|c| pts[0][c] + s * (pts[1][c] - pts[0][c]) - pts[2][c] - t * (pts[3][c] - pts[2][c]))
                        .collect();
                    best = best.min(norm(&g));
                }
            }
            assert!(d <= best + 1e-12 && best - d < 2e-2, "{d} vs {best}");
        }
    }

    #[test]
    fn simon_regular_is_four_and_scale_invariant() {
        for m in [4, 8, 32] {
            let r = simon_energy(&Polygon::regular(m, 1.0, 2).unwrap()).unwrap();
            assert_eq!(r.value, 4.0);
        }
        let p = Polygon::new(&[
            vec![0.0, 0.0, 0.0],
            vec![2.0, 0.1, 0.0],
            vec![2.2, 1.5, 0.3],
            vec![0.7, 2.0, -0.4],
            vec![-0.5, 1.0, 0.2],
        ])
        .unwrap();
        let a = simon_energy(&p).unwrap().value;
        let b = simon_energy(&p.scaled(7.5).unwrap()).unwrap().value;
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn simon_square_by_hand() {
        // opposite edges at distance 1, two unordered pairs counted twice
        assert_eq!(simon_raw_energy(&Polygon::unit_square()).unwrap(), 4.0);
    }

    #[test]
    fn cos_energy_vanishes_on_regular_polygon() {
        for m in [4, 7, 16] {
            let r = cos_energy(&Polygon::regular(m, 2.0, 3).unwrap()).unwrap();
            assert!(r.value.abs() < 1e-12, "{m}: {}", r.value);
        }
    }

    #[test]
    fn cos_energy_is_invariant_under_inversion() {
        let p = Polygon::new(&[
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.2, 0.1],
            vec![1.3, 1.1, -0.2],
            vec![0.4, 1.6, 0.5],
            vec![-0.6, 0.9, 0.1],
            vec![-0.3, 0.3, -0.6],
        ])
        .unwrap();
        let a = cos_energy(&p).unwrap().value;
        assert!(a > 0.0);
        let c = [6.0, -2.0, 3.0];
        let q = p
            .map_vertices(|v| {
                let r2: f64 = v.iter().zip(&c).map(|(x, y)| (x - y).powi(2)).sum();
                v.iter().zip(&c).map(|(x, y)| y + (x - y) / r2).collect()
            })
            .unwrap();
        let b = cos_energy(&q).unwrap().value;
        assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
    }

    #[test]
    fn coincident_vertices_are_flagged() {
        let p = Polygon::new(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![0.0, 0.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        assert!(kim_kusner_energy(&p, KimKusnerVariant::Endpoint).unwrap().infinite);
        assert!(simon_energy(&p).unwrap().infinite);
        assert!(cos_energy(&p).unwrap().infinite);
    }
}
