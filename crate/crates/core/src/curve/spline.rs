use super::CurveError;

/// Interpolating periodic cubic spline through `K` nodes with parameter
/// period `K` (node `k` sits at `t = k`).
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    nodes: Vec<f64>,
    /// Second derivatives at the nodes, same layout as `nodes`.
    moments: Vec<f64>,
    dim: usize,
    count: usize,
}

/// Solves the cyclic system `x[k-1] + 4 x[k] + x[k+1] = rhs[k]` by
/// Sherman–Morrison on the tridiagonal part.
fn solve_cyclic_141(rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let tridiag = |diag0: f64, diag_last: f64, r: &[f64]| -> Vec<f64> {
        // Thomas algorithm with unit off-diagonals
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let diag = |i: usize| {
            if i == 0 {
                diag0
            } else if i == n - 1 {
                diag_last
            } else {
                4.0
            }
        };
        c[0] = 1.0 / diag(0);
        d[0] = r[0] / diag(0);
        for i in 1..n {
            let denom = diag(i) - c[i - 1];
            c[i] = 1.0 / denom;
            d[i] = (r[i] - d[i - 1]) / denom;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    };
    let gamma = -4.0;
    let diag0 = 4.0 - gamma;
    let diag_last = 4.0 - 1.0 / gamma;
    let x = tridiag(diag0, diag_last, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = 1.0;
    let z = tridiag(diag0, diag_last, &u);
    let fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

impl PeriodicSpline {
    pub fn new(points: &[Vec<f64>]) -> Result<Self, CurveError> {
        let count = points.len();
        if count < 3 {
            return Err(CurveError::TooFewVertices(count));
        }
        let dim = points[0].len();
        if dim < 2 {
            return Err(CurveError::BadDimension(dim));
        }
        let mut nodes = Vec::with_capacity(count * dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(CurveError::InconsistentDimension {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(CurveError::NonFinite);
            }
            nodes.extend_from_slice(p);
        }
        for k in 0..count {
            let a = &nodes[k * dim..(k + 1) * dim];
            let j = (k + 1) % count;
            if crate::numeric::dist(a, &nodes[j * dim..(j + 1) * dim]) == 0.0 {
                return Err(CurveError::DegenerateEdge(k));
            }
        }
        let mut moments = vec![0.0; count * dim];
        for c in 0..dim {
            let rhs: Vec<f64> = (0..count)
                .map(|k| {
                    let prev = nodes[((k + count - 1) % count) * dim + c];
                    let next = nodes[((k + 1) % count) * dim + c];
                    6.0 * (next - 2.0 * nodes[k * dim + c] + prev)
                })
                .collect();
            for (k, m) in solve_cyclic_141(&rhs).into_iter().enumerate() {
                moments[k * dim + c] = m;
            }
        }
        Ok(Self {
            nodes,
            moments,
            dim,
            count,
        })
    }

    pub fn period(&self) -> f64 {
        self.count as f64
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn segment(&self, t: f64) -> (usize, usize, f64) {
        let t = t.rem_euclid(self.period());
        let k = (t.floor() as usize).min(self.count - 1);
        (k, (k + 1) % self.count, t - k as f64)
    }

    pub fn point_into(&self, t: f64, out: &mut [f64]) {
        let (k, j, u) = self.segment(t);
        let v = 1.0 - u;
        let d = self.dim;
        for (c, o) in out.iter_mut().enumerate() {
            let (pk, pj) = (self.nodes[k * d + c], self.nodes[j * d + c]);
            let (mk, mj) = (self.moments[k * d + c], self.moments[j * d + c]);
            *o = v * pk + u * pj + ((v * v * v - v) * mk + (u * u * u - u) * mj) / 6.0;
        }
    }

    pub fn deriv_into(&self, t: f64, out: &mut [f64]) {
        let (k, j, u) = self.segment(t);
        let v = 1.0 - u;
        let d = self.dim;
        for (c, o) in out.iter_mut().enumerate() {
            let (pk, pj) = (self.nodes[k * d + c], self.nodes[j * d + c]);
            let (mk, mj) = (self.moments[k * d + c], self.moments[j * d + c]);
            *o = pj - pk + ((1.0 - 3.0 * v * v) * mk + (3.0 * u * u - 1.0) * mj) / 6.0;
        }
    }
}
