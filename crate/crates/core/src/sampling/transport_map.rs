use serde::{Deserialize, Serialize};

use super::{Density, SampleSet};
use crate::curve::wrap;
use crate::quadrature::gl10;

/// Upper limit on candidate cuts scanned by [`Cut::Optimize`].
pub const MAX_CUT_CANDIDATES: usize = 2048;

/// Where the circle is cut before matching quantile blocks to sorted samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cut {
    At(f64),
    /// Scan cuts at the circular midpoints between consecutive samples
    /// (plus 0) and keep the map with the smallest sup displacement.
    Optimize,
}

impl Default for Cut {
    fn default() -> Self {
        Cut::At(0.0)
    }
}

/// Piecewise-constant transportation map pushing `rho dx` onto the empirical
/// measure: block `k`, the parameters between `boundaries[k]` and
/// `boundaries[k + 1]`, is sent to the `k`-th sample after the cut.
///
/// Boundaries and targets are unwrapped: they increase from `cut` to `cut + L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap {
    density: Density,
    cut: f64,
    boundaries: Vec<f64>,
    targets: Vec<f64>,
    target_index: Vec<usize>,
    sup_displacement: f64,
}

#[inline]
fn circ(d: f64, l: f64) -> f64 {
    let d = d.abs() % l;
    d.min(l - d)
}

/// Sup over `[a, b]` of the circular distance to `s`.
fn block_sup(a: f64, b: f64, s: f64, l: f64) -> f64 {
    let half = 0.5 * l;
    for antipode in [s - half, s + half] {
        if antipode > a && antipode < b {
            return half;
        }
    }
    circ(a - s, l).max(circ(b - s, l))
}

/// Block boundary `k` of `n` for a cut whose CDF value is `f_cut`.
fn boundary(density: &Density, cut: f64, f_cut: f64, k: usize, n: usize) -> f64 {
    let l = density.length();
    if k == 0 {
        return cut;
    }
    if k == n {
        return cut + l;
    }
    let v = f_cut + k as f64 / n as f64;
    if v < 1.0 {
        density.inverse_cdf(v).max(cut)
    } else {
        density.inverse_cdf(v - 1.0) + l
    }
}

/// Sorted sample positions unwrapped into `[cut, cut + L)` with their original indices.
fn unwrapped_targets(samples: &SampleSet, cut: f64) -> (Vec<f64>, Vec<usize>) {
    let l = samples.length();
    let mut pairs: Vec<(f64, usize)> = samples
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &x)| (cut + wrap(x - cut, l), i))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    pairs.into_iter().unzip()
}

fn sup_for_cut(density: &Density, samples: &SampleSet, cut: f64) -> f64 {
    let l = density.length();
    let n = samples.len();
    let (targets, _) = unwrapped_targets(samples, cut);
    let f_cut = density.cdf(cut);
    let mut lo = cut;
    let mut worst: f64 = 0.0;
    for (k, &s) in targets.iter().enumerate() {
        let hi = boundary(density, cut, f_cut, k + 1, n);
        worst = worst.max(block_sup(lo, hi, s, l));
        lo = hi;
    }
    worst
}

impl TransportMap {
    fn with_cut(density: &Density, samples: &SampleSet, cut: f64) -> Self {
        let l = density.length();
        let cut = wrap(cut, l);
        let n = samples.len();
        let f_cut = density.cdf(cut);
        let mut boundaries = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let b = boundary(density, cut, f_cut, k, n);
            let prev = boundaries.last().copied().unwrap_or(cut);
            boundaries.push(b.max(prev));
        }
        let (targets, target_index) = unwrapped_targets(samples, cut);
        let sup_displacement = (0..n)
            .map(|k| block_sup(boundaries[k], boundaries[k + 1], targets[k], l))
            .fold(0.0, f64::max);
        Self {
            density: density.clone(),
            cut,
            boundaries,
            targets,
            target_index,
            sup_displacement,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn cut(&self) -> f64 {
        self.cut
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn length(&self) -> f64 {
        self.density.length()
    }

    /// `sup_x |x - T(x)|` in circular distance.
    pub fn sup_displacement(&self) -> f64 {
        self.sup_displacement
    }

    /// Unwrapped block boundaries, `n + 1` entries.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Index into the originating [`SampleSet`] of the sample receiving block `k`.
    pub fn target_index(&self, k: usize) -> usize {
        self.target_index[k]
    }

    /// Sample position (wrapped to `[0, L)`) receiving block `k`.
    pub fn target(&self, k: usize) -> f64 {
        wrap(self.targets[k], self.length())
    }

    /// Largest block width, measured along the circle.
    pub fn max_block_width(&self) -> f64 {
        self.boundaries
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Block containing parameter `x`.
    pub fn block_of(&self, x: f64) -> usize {
        let u = self.cut + wrap(x - self.cut, self.length());
        let n = self.len();
        self.boundaries[1..n].partition_point(|&b| b < u)
    }

    /// `T(x)`, wrapped to `[0, L)`.
    pub fn apply(&self, x: f64) -> f64 {
        self.target(self.block_of(x))
    }

    /// `rho`-mass of block `k`, by quadrature of the density (independent of the CDF).
    pub fn block_mass(&self, k: usize) -> f64 {
        let (a, b) = (self.boundaries[k], self.boundaries[k + 1]);
        let mut nodes = vec![a];
        nodes.extend(self.density.kinks(a, b));
        nodes.push(b);
        nodes
            .windows(2)
            .map(|w| gl10().integrate(w[0], w[1], |x| self.density.pdf(x)))
            .sum()
    }

    /// Sub-intervals of block `k` on which `|x - T(x)|_circ = |x - image|`
    /// for a fixed lift `image` of the target; splits at the target and its
    /// antipodes.
    pub(crate) fn block_pieces(&self, k: usize) -> Vec<(f64, f64, f64)> {
        let l = self.length();
        let (a, b) = (self.boundaries[k], self.boundaries[k + 1]);
        let s = self.targets[k];
        let mut cuts = vec![a];
        for c in [s - 0.5 * l, s, s + 0.5 * l] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
        cuts.extend(self.density.kinks(a, b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let image = [s - l, s, s + l]
                    .into_iter()
                    .min_by(|p, q| (mid - p).abs().total_cmp(&(mid - q).abs()))
                    .expect("three candidates");
                (w[0], w[1], image)
            })
            .collect()
    }
}

/// Builds the quantile transportation map from `density` to the empirical
/// measure of `samples`.
pub fn quantile_transport_map(density: &Density, samples: &SampleSet, cut: Cut) -> TransportMap {
    match cut {
        Cut::At(c) => TransportMap::with_cut(density, samples, c),
        Cut::Optimize => {
            let l = density.length();
            let sorted = samples.sorted();
            let n = sorted.len();
            let stride = n.div_ceil(MAX_CUT_CANDIDATES).max(1);
            let mut candidates = vec![0.0];
            for i in (0..n).step_by(stride) {
                let next = if i + 1 < n { sorted[i + 1] } else { sorted[0] + l };
                candidates.push(wrap(0.5 * (sorted[i] + next), l));
            }
            let mut best = (f64::INFINITY, 0.0);
            for c in candidates {
                let sup = sup_for_cut(density, samples, c);
                if sup < best.0 {
                    best = (sup, c);
                }
            }
            TransportMap::with_cut(density, samples, best.1)
        }
    }
}

/// `int |x - T(x)|_circ^q rho(x) dx`, exact per block for uniform `rho`,
/// Gauss–Legendre per monotone piece otherwise.
pub fn stagnation_statistic(map: &TransportMap, q: f64) -> f64 {
    assert!(q >= 1.0, "exponent q must be >= 1");
    let anti = |t: f64| t.signum() * t.abs().powf(q + 1.0) / (q + 1.0);
    let density = map.density();
    let per_block: Vec<f64> = (0..map.len())
        .map(|k| {
            map.block_pieces(k)
                .into_iter()
                .map(|(a, b, s)| {
                    if density.is_uniform() {
                        (anti(b - s) - anti(a - s)) / density.length()
                    } else {
                        gl10().integrate(a, b, |x| (x - s).abs().powf(q) * density.pdf(x))
                    }
                })
                .sum()
        })
        .collect();
    crate::numeric::pairwise_sum(&per_block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_iid;

    #[test]
    fn two_point_hand_example() {
        let d = Density::uniform(1.0).unwrap();
        let s = SampleSet::from_values(&d, vec![0.6, 0.1], 0).unwrap();
        let t = quantile_transport_map(&d, &s, Cut::At(0.0));
        assert!((t.apply(0.3) - 0.1).abs() < 1e-15);
        assert!((t.apply(0.5) - 0.1).abs() < 1e-15);
        assert!((t.apply(0.7) - 0.6).abs() < 1e-15);
        assert!((t.apply(0.999) - 0.6).abs() < 1e-15);
        assert_eq!(t.target_index(0), 1);
        assert!((t.sup_displacement() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn midpoint_samples_have_half_block_displacement() {
        for d in [Density::uniform(2.0).unwrap(), Density::cosine(2.0, 0.4).unwrap()] {
            let n = 50;
            let s = SampleSet::quantile_midpoints(&d, n).unwrap();
            let t = quantile_transport_map(&d, &s, Cut::At(0.0));
            let half_width = (0..n)
                .map(|k| {
                    let (a, b) = (t.boundaries()[k], t.boundaries()[k + 1]);
                    (t.targets[k] - a).max(b - t.targets[k])
                })
                .fold(0.0, f64::max);
            assert!((t.sup_displacement() - half_width).abs() < 1e-12);
            if d.is_uniform() {
                assert!((t.sup_displacement() - 2.0 / (2.0 * n as f64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn optimized_cut_recovers_equispaced_half_width() {
        let d = Density::uniform(1.0).unwrap();
        let n = 32;
        let s = SampleSet::from_values(&d, (0..n).map(|i| i as f64 / n as f64).collect(), 0).unwrap();
        let fixed = quantile_transport_map(&d, &s, Cut::At(0.0));
        assert!((fixed.sup_displacement() - 1.0 / n as f64).abs() < 1e-12);
        let best = quantile_transport_map(&d, &s, Cut::Optimize);
        assert!((best.sup_displacement() - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn push_forward_blocks_have_equal_mass() {
        for d in [
            Density::uniform(3.0).unwrap(),
            Density::cosine(3.0, -0.7).unwrap(),
            Density::tabulated(3.0, &[1.0, 3.0, 0.2, 2.0]).unwrap(),
        ] {
            let s = sample_iid(&d, 200, 4).unwrap();
            for cut in [Cut::At(0.0), Cut::At(1.7), Cut::Optimize] {
                let t = quantile_transport_map(&d, &s, cut);
                for k in 0..t.len() {
                    assert!((t.block_mass(k) - 1.0 / 200.0).abs() < 1e-10, "{cut:?} block {k} {} {:?}", t.block_mass(k), &t.boundaries()[k..k + 2]);
                }
            }
        }
    }

    #[test]
    fn sup_displacement_at_least_half_widest_block() {
        let d = Density::cosine(1.0, 0.6).unwrap();
        for seed in 0..10 {
            let s = sample_iid(&d, 64, seed).unwrap();
            let t = quantile_transport_map(&d, &s, Cut::Optimize);
            assert!(t.sup_displacement() >= 0.5 * t.max_block_width() - 1e-15);
        }
    }

    #[test]
    fn stagnation_midpoint_oracle() {
        let n = 40;
        let d = Density::uniform(1.0).unwrap();
        let s = SampleSet::quantile_midpoints(&d, n).unwrap();
        let t = quantile_transport_map(&d, &s, Cut::At(0.0));
        let stat = stagnation_statistic(&t, 1.0);
        assert!((stat - 1.0 / (4.0 * n as f64)).abs() < 1e-14);
        // brute-force midpoint quadrature of |x - T(x)|
        let m = 400_000;
        let brute: f64 = (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) / m as f64;
                let tx = t.apply(x);
                let dd = (x - tx).abs();
                dd.min(1.0 - dd)
            })
            .sum::<f64>()
            / m as f64;
        assert!((stat - brute).abs() < 1e-8);
    }

    #[test]
    fn stagnation_bounded_by_sup_and_matches_quadrature_for_cosine() {
        let d = Density::cosine(2.0, 0.5).unwrap();
        let s = sample_iid(&d, 30, 2).unwrap();
        let t = quantile_transport_map(&d, &s, Cut::At(0.3));
        for q in [1.0, 2.0, 1.5] {
            let stat = stagnation_statistic(&t, q);
            assert!(stat <= t.sup_displacement().powf(q) + 1e-15);
            let brute = crate::quadrature::adaptive(
                |x| {
                    let dd = (x - t.apply(x)).abs();
                    dd.min(2.0 - dd).powf(q) * d.pdf(x)
                },
                0.0,
                2.0,
                1e-9,
            )
            .value;
            assert!((stat - brute).abs() < 1e-6, "q={q}: {stat} vs {brute}");
        }
    }

    #[test]
    fn stagnation_decreases_along_refinements() {
        let d = Density::uniform(1.0).unwrap();
        let stats: Vec<f64> = [64, 256, 1024, 4096]
            .iter()
            .map(|&n| {
                let v: Vec<f64> = (0..9)
                    .map(|seed| {
                        let s = sample_iid(&d, n, seed).unwrap();
                        stagnation_statistic(&quantile_transport_map(&d, &s, Cut::At(0.0)), 1.0)
                    })
                    .collect();
                crate::numeric::median(&v)
            })
            .collect();
        assert!(stats.windows(2).all(|w| w[1] < w[0]), "{stats:?}");
    }
}
