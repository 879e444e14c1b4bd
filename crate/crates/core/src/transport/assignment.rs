//! Exact min-cost matching and transportation on dense cost matrices.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Minimum-cost perfect matching on an `n x n` cost matrix (row-major) by
/// shortest augmenting paths with potentials. Returns `col_of[row]`.
pub fn hungarian(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays, index 0 is the virtual root column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            let base = (i0 - 1) * n;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[base + j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Balanced transportation problem with integer supplies and demands on a
/// complete bipartite graph, solved exactly by successive shortest paths
/// (Dijkstra with potentials). Returns the flow matrix, row-major `m x n`.
pub fn transportation(supply: &[u64], demand: &[u64], cost: &[f64]) -> Vec<u64> {
    let (m, n) = (supply.len(), demand.len());
    assert_eq!(cost.len(), m * n);
    assert_eq!(supply.iter().sum::<u64>(), demand.iter().sum::<u64>());
    let mut flow = vec![0u64; m * n];
    let mut left_supply = supply.to_vec();
    let mut left_demand = demand.to_vec();
    // nodes: source 0, rows 1..=m, columns m+1..=m+n, sink m+n+1
    let nodes = m + n + 2;
    let sink = m + n + 1;
    // costs are nonnegative, so zero potentials are feasible to start
    let mut pot = vec![0.0; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    loop {
        if left_supply.iter().all(|&s| s == 0) {
            break;
        }
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        dist[0] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(State { dist: 0.0, node: 0 });
        while let Some(State { dist: d, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            let mut relax = |to: usize, c: f64, heap: &mut BinaryHeap<State>| {
                let reduced = (c + pot[node] - pot[to]).max(0.0);
                let nd = d + reduced;
                if nd < dist[to] {
                    dist[to] = nd;
                    prev[to] = node;
                    heap.push(State { dist: nd, node: to });
                }
            };
            if node == 0 {
                for i in 0..m {
                    if left_supply[i] > 0 {
                        relax(1 + i, 0.0, &mut heap);
                    }
                }
            } else if node <= m {
                let i = node - 1;
                for j in 0..n {
                    relax(m + 1 + j, cost[i * n + j], &mut heap);
                }
            } else if node < sink {
                let j = node - m - 1;
                if left_demand[j] > 0 {
                    relax(sink, 0.0, &mut heap);
                }
                // residual backward edges to rows carrying flow into this column
                for i in 0..m {
                    if flow[i * n + j] > 0 {
                        relax(1 + i, -cost[i * n + j], &mut heap);
                    }
                }
            }
        }
        assert!(dist[sink].is_finite(), "transportation problem is infeasible");
        let cap = dist[sink];
        for k in 0..nodes {
            pot[k] += dist[k].min(cap);
        }
        // bottleneck along the path
        let mut bottleneck = u64::MAX;
        let mut v = sink;
        while v != 0 {
            let u = prev[v];
            if u == 0 {
                bottleneck = bottleneck.min(left_supply[v - 1]);
            } else if v == sink {
                bottleneck = bottleneck.min(left_demand[u - m - 1]);
            } else if u > m && v <= m {
                bottleneck = bottleneck.min(flow[(v - 1) * n + (u - m - 1)]);
            }
            v = u;
        }
        let mut v = sink;
        while v != 0 {
            let u = prev[v];
            if u == 0 {
                left_supply[v - 1] -= bottleneck;
            } else if v == sink {
                left_demand[u - m - 1] -= bottleneck;
            } else if u <= m {
                flow[(u - 1) * n + (v - m - 1)] += bottleneck;
            } else {
                flow[(v - 1) * n + (u - m - 1)] -= bottleneck;
            }
            v = u;
        }
    }
    flow
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn hungarian_matches_permutation_search() {
        let mut s = 9u64;
        for n in 1..=7 {
            for _ in 0..20 {
                let c: Vec<f64> = (0..n * n).map(|_| lcg(&mut s)).collect();
                let assign = hungarian(n, &c);
                let got: f64 = (0..n).map(|i| c[i * n + assign[i]]).sum();
                let best = (0..n)
                    .permutations(n)
                    .map(|p| (0..n).map(|i| c[i * n + p[i]]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                assert!((got - best).abs() < 1e-12);
                assert_eq!(assign.iter().sorted().copied().collect::<Vec<_>>(), (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn transportation_reduces_to_matching_for_unit_supplies() {
        let mut s = 3u64;
        let n = 6;
        let c: Vec<f64> = (0..n * n).map(|_| lcg(&mut s)).collect();
        let flow = transportation(&vec![1; n], &vec![1; n], &c);
        let a = hungarian(n, &c);
        let f_cost: f64 = (0..n * n).map(|k| flow[k] as f64 * c[k]).sum();
        let h_cost: f64 = (0..n).map(|i| c[i * n + a[i]]).sum();
        assert!((f_cost - h_cost).abs() < 1e-12);
    }

    #[test]
    fn transportation_respects_marginals_and_small_lp() {
        // 2 sources x 3 sinks, checked against enumeration of all integer plans
        let supply = [3u64, 3];
        let demand = [2u64, 2, 2];
        let c = [0.3, 1.0, 0.7, 0.9, 0.2, 0.4];
        let flow = transportation(&supply, &demand, &c);
        for i in 0..2 {
            assert_eq!((0..3).map(|j| flow[i * 3 + j]).sum::<u64>(), supply[i]);
        }
        for j in 0..3 {
            assert_eq!((0..2).map(|i| flow[i * 3 + j]).sum::<u64>(), demand[j]);
        }
        let got: f64 = (0..6).map(|k| flow[k] as f64 * c[k]).sum();
        let mut best = f64::INFINITY;
        for a in 0..=2u64 {
            for b in 0..=2u64 {
                if a + b > 3 || 3 - a - b > 2 {
                    continue;
                }
                let r0 = [a, b, 3 - a - b];
                let r1 = [2 - a, 2 - b, 2 - r0[2]];
                let v: f64 = (0..3).map(|j| r0[j] as f64 * c[j] + r1[j] as f64 * c[3 + j]).sum();
                best = best.min(v);
            }
        }
        assert!((got - best).abs() < 1e-12, "{got} vs {best}");
    }
}
