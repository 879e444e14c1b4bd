use super::Parametric;
use crate::quadrature::gl10;

/// Inverse cumulative-length table `s -> t` with monotone cubic Hermite
/// interpolation. Node slopes start from the exact `dt/ds = 1/|c'(t)|` and
/// are limited with the Fritsch–Carlson rule.
#[derive(Debug, Clone)]
pub struct ArcTable {
    /// Arc length at the nodes, `cells + 1` entries starting at 0.
    s: Vec<f64>,
    /// Base parameter at the nodes.
    t: Vec<f64>,
    /// `dt/ds` at the nodes.
    slope: Vec<f64>,
}

impl ArcTable {
    pub fn build(base: &Parametric, cells: usize) -> Self {
        let period = base.period();
        let h = period / cells as f64;
        let rule = gl10();
        let t: Vec<f64> = (0..=cells).map(|k| k as f64 * h).collect();
        let mut s = Vec::with_capacity(cells + 1);
        s.push(0.0);
        let mut acc = 0.0;
        for k in 0..cells {
            acc += rule.integrate(t[k], t[k + 1], |u| base.speed(u));
            s.push(acc);
        }
        let mut slope: Vec<f64> = t.iter().map(|&u| 1.0 / base.speed(u)).collect();
        for k in 0..cells {
            let secant = (t[k + 1] - t[k]) / (s[k + 1] - s[k]);
            let a = slope[k] / secant;
            let b = slope[k + 1] / secant;
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                slope[k] = tau * a * secant;
                slope[k + 1] = tau * b * secant;
            }
        }
        Self { s, t, slope }
    }

    pub fn length(&self) -> f64 {
        *self.s.last().expect("non-empty table")
    }

    fn cell(&self, s: f64) -> usize {
        let n = self.s.len() - 1;
        self.s[1..n].partition_point(|&v| v <= s)
    }

    /// Base parameter and `dt/ds` at arc length `s` in `[0, L)`.
    pub fn param_and_slope_at(&self, s: f64) -> (f64, f64) {
        let k = self.cell(s);
        let ds = self.s[k + 1] - self.s[k];
        let u = (s - self.s[k]) / ds;
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let (m0, m1) = (self.slope[k] * ds, self.slope[k + 1] * ds);
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let value = h00 * t0 + h10 * m0 + h01 * t1 + h11 * m1;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        let deriv = (d00 * t0 + d10 * m0 + d01 * t1 + d11 * m1) / ds;
        (value, deriv)
    }

    pub fn param_at(&self, s: f64) -> f64 {
        self.param_and_slope_at(s).0
    }

    /// Exact arc length of the base curve up to `t(s)`. Differs from `s`
    /// by the interpolation error; pair loops use it so that chord and arc
    /// are measured consistently near the diagonal.
    pub fn true_arc_at(&self, base: &Parametric, s: f64) -> f64 {
        let k = self.cell(s);
        let t = self.param_at(s);
        self.s[k] + gl10().integrate(self.t[k], t, |u| base.speed(u))
    }

    /// Largest `| |c'(t(s))| t'(s) - 1 |` over cell midpoints and nodes.
    pub fn max_speed_error(&self, base: &Parametric) -> f64 {
        let n = self.s.len() - 1;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for frac in [0.0, 0.25, 0.5, 0.75] {
                let s = self.s[k] + frac * (self.s[k + 1] - self.s[k]);
                let (t, dt) = self.param_and_slope_at(s);
                worst = worst.max((base.speed(t) * dt - 1.0).abs());
            }
        }
        worst
    }
}
