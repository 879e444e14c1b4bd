use itertools::Itertools;
use rayon::prelude::*;

use super::{check_q, hungarian, transportation, CouplingMatrix, DiscreteElement, TransportError};
use crate::curve::wrap;
use crate::numeric::pairwise_sum;

/// Default atom cap for [`tlq_exact`].
pub const DEFAULT_CAP: usize = 1024;
/// Largest size accepted by [`tlq_brute_force`].
pub const BRUTE_FORCE_MAX: usize = 8;

fn check_pair(a: &DiscreteElement, b: &DiscreteElement) -> Result<(), TransportError> {
    if (a.length() - b.length()).abs() > 1e-12 * a.length() {
        return Err(TransportError::LengthMismatch(a.length(), b.length()));
    }
    if a.dim() != b.dim() {
        return Err(TransportError::DimMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

fn cost_matrix(a: &DiscreteElement, b: &DiscreteElement, q: f64) -> Vec<f64> {
    let m = b.len();
    let mut cost = vec![0.0; a.len() * m];
    cost.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        for (j, c) in row.iter_mut().enumerate() {
            *c = a.ground_cost(i, b, j, q);
        }
    });
    cost
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `d_{TL^q}` between two discrete elements with an explicit atom cap.
pub fn tlq_exact_with_cap(
    a: &DiscreteElement,
    b: &DiscreteElement,
    q: f64,
    cap: usize,
) -> Result<(f64, CouplingMatrix), TransportError> {
    check_q(q)?;
    check_pair(a, b)?;
    let (n, m) = (a.len(), b.len());
    if n.max(m) > cap {
        return Err(TransportError::TooLarge { n: n.max(m), cap });
    }
    let cost = cost_matrix(a, b, q);
    let entries: Vec<(usize, usize, f64)> = if n == m {
        let w = 1.0 / n as f64;
        hungarian(n, &cost).into_iter().enumerate().map(|(i, j)| (i, j, w)).collect()
    } else {
        // weights 1/n and 1/m as integers over the common denominator n m / g
        let g = gcd(n, m);
        let total = (n / g * m) as f64;
        let flow = transportation(&vec![(m / g) as u64; n], &vec![(n / g) as u64; m], &cost);
        flow.iter()
            .enumerate()
            .filter(|(_, &f)| f > 0)
            .map(|(k, &f)| (k / m, k % m, f as f64 / total))
            .collect()
    };
    let pi = CouplingMatrix {
        rows: n,
        cols: m,
        entries,
        row_positions: a.positions().to_vec(),
        col_positions: b.positions().to_vec(),
    };
    let total = pi.cost(|i, j| cost[i * m + j]).max(0.0);
    Ok((total.powf(1.0 / q), pi))
}

/// `d_{TL^q}` between two discrete elements: exact optimal coupling under
/// the ground cost `|x - y|_circ^q + |f - g|^q`. Refuses more than
/// [`DEFAULT_CAP`] atoms per side.
pub fn tlq_exact(a: &DiscreteElement, b: &DiscreteElement, q: f64) -> Result<(f64, CouplingMatrix), TransportError> {
    tlq_exact_with_cap(a, b, q, DEFAULT_CAP)
}

/// Minimum over all `n!` matchings; equal sizes up to [`BRUTE_FORCE_MAX`].
pub fn tlq_brute_force(a: &DiscreteElement, b: &DiscreteElement, q: f64) -> Result<f64, TransportError> {
    check_q(q)?;
    check_pair(a, b)?;
    let n = a.len();
    if b.len() != n {
        return Err(TransportError::SizeMismatch(n, b.len()));
    }
    if n > BRUTE_FORCE_MAX {
        return Err(TransportError::TooLarge { n, cap: BRUTE_FORCE_MAX });
    }
    let cost = cost_matrix(a, b, q);
    let w = 1.0 / n as f64;
    let best = (0..n)
        .permutations(n)
        .map(|p| {
            let terms: Vec<f64> = (0..n).map(|i| w * cost[i * n + p[i]]).collect();
            pairwise_sum(&terms)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best.max(0.0).powf(1.0 / q))
}

/// `W_1` between the uniform empirical measures on atoms `a` and `b` of
/// `R/LZ`: `min_s int_0^L |F_a - F_b - s|`, attained at a weighted median
/// of `F_a - F_b`.
pub fn circular_wasserstein(a: &[f64], b: &[f64], length: f64, q: f64) -> Result<f64, TransportError> {
    if q != 1.0 {
        return Err(TransportError::Unsupported(q));
    }
    if a.is_empty() || b.is_empty() {
        return Err(TransportError::Empty);
    }
    let (wa, wb) = (1.0 / a.len() as f64, 1.0 / b.len() as f64);
    let mut events: Vec<(f64, f64)> = a
        .iter()
        .map(|&x| (wrap(x, length), wa))
        .chain(b.iter().map(|&y| (wrap(y, length), -wb)))
        .collect();
    events.sort_by(|u, v| u.0.total_cmp(&v.0));
    // (F_a - F_b, interval length) on each gap; the wrap-around gap has difference 0
    let k = events.len();
    let mut pieces = Vec::with_capacity(k);
    let mut diff = 0.0;
    // integer-exact running counts keep the difference free of drift
    let (mut ca, mut cb) = (0usize, 0usize);
    for e in 0..k {
        if events[e].1 > 0.0 {
            ca += 1;
        } else {
            cb += 1;
        }
        diff = ca as f64 * wa - cb as f64 * wb;
        let next = if e + 1 < k { events[e + 1].0 } else { events[0].0 + length };
        pieces.push((diff, next - events[e].0));
    }
    debug_assert!(diff.abs() < 1e-12);
    let last = pieces.len() - 1;
    pieces[last].0 = 0.0;
    let mut by_value = pieces.clone();
    by_value.sort_by(|u, v| u.0.total_cmp(&v.0));
    let half = 0.5 * length;
    let mut acc = 0.0;
    let mut shift = by_value[0].0;
    for &(d, w) in &by_value {
        acc += w;
        shift = d;
        if acc >= half {
            break;
        }
    }
    let terms: Vec<f64> = pieces.iter().map(|&(d, w)| (d - shift).abs() * w).collect();
    Ok(pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(l: f64, xs: &[f64], fs: &[Vec<f64>]) -> DiscreteElement {
        DiscreteElement::new(l, xs.to_vec(), fs).unwrap()
    }

    #[test]
    fn identical_elements_are_at_distance_zero() {
        let a = el(1.0, &[0.1, 0.4, 0.7], &[vec![0.0], vec![1.0], vec![-2.0]]);
        let (d, pi) = tlq_exact(&a, &a, 2.0).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(pi, CouplingMatrix::identity(&a));
    }

    #[test]
    fn single_atoms() {
        let a = el(1.0, &[0.9], &[vec![0.0, 0.0]]);
        let b = el(1.0, &[0.05], &[vec![3.0, 4.0]]);
        let (d, _) = tlq_exact(&a, &b, 1.0).unwrap();
        assert!((d - (0.15 + 5.0)).abs() < 1e-14);
        assert!((tlq_brute_force(&a, &b, 1.0).unwrap() - d).abs() < 1e-14);
    }

    #[test]
    fn two_point_swap() {
        let a = el(1.0, &[0.0, 0.5], &[vec![0.0], vec![1.0]]);
        let b = el(1.0, &[0.0, 0.5], &[vec![1.0], vec![0.0]]);
        let (d, pi) = tlq_exact(&a, &b, 1.0).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(pi.entries, vec![(0, 1, 0.5), (1, 0, 0.5)]);
    }

    #[test]
    fn unequal_sizes_respect_marginals() {
        let a = el(1.0, &[0.0, 0.25, 0.5, 0.75], &vec![vec![0.0]; 4]);
        let b = el(1.0, &[0.1, 0.6], &vec![vec![0.0]; 2]);
        let (d, pi) = tlq_exact(&a, &b, 1.0).unwrap();
        assert!(pi.marginal_error() < 1e-12);
        let w = circular_wasserstein(a.positions(), b.positions(), 1.0, 1.0).unwrap();
        assert!((d - w).abs() < 1e-12, "{d} vs {w}");
    }

    #[test]
    fn refuses_oversized_inputs() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let a = DiscreteElement::measure_only(1.0, xs).unwrap();
        assert!(matches!(
            tlq_exact_with_cap(&a, &a, 1.0, 8),
            Err(TransportError::TooLarge { n: 10, cap: 8 })
        ));
        assert!(matches!(tlq_brute_force(&a, &a, 1.0), Err(TransportError::TooLarge { .. })));
        assert!(matches!(tlq_exact(&a, &a, 0.5), Err(TransportError::Unsupported(_))));
    }

    #[test]
    fn circular_w1_hand_values() {
        let w = circular_wasserstein(&[0.9], &[0.2], 1.0, 1.0).unwrap();
        assert!((w - 0.3).abs() < 1e-15);
        let n = 16;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        for s in [0.01, 0.03, 0.5 / n as f64] {
            let shifted: Vec<f64> = grid.iter().map(|x| x + s).collect();
            let w = circular_wasserstein(&grid, &shifted, 1.0, 1.0).unwrap();
            assert!((w - s).abs() < 1e-14, "{s}: {w}");
        }
        assert!(circular_wasserstein(&[0.1], &[0.2], 1.0, 2.0).is_err());
    }
}
