use std::f64::consts::PI;

use super::{CurveError, CurveKind, PeriodicSpline};
use crate::quadrature::gl10;

/// Smooth periodic shapes that need numerical arc-length reparametrization.
#[derive(Debug, Clone)]
pub enum Parametric {
    Ellipse {
        a: f64,
        b: f64,
    },
    TorusKnot {
        p: i64,
        q: i64,
        big_r: f64,
        small_r: f64,
    },
    Spline(PeriodicSpline),
    /// Planar star-shaped curve `r(t) = radius * (1 + sum a_k cos kt + b_k sin kt)`.
    RadialFourier {
        radius: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Parametric {
    pub fn ellipse(a: f64, b: f64) -> Result<Self, CurveError> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(CurveError::BadShape(format!("ellipse axes {a}, {b}")));
        }
        Ok(Parametric::Ellipse { a, b })
    }

    pub fn torus_knot(p: i64, q: i64, big_r: f64, small_r: f64) -> Result<Self, CurveError> {
        if gcd(p, q) != 1 {
            return Err(CurveError::TorusKnotGcd { p, q });
        }
        if !(small_r > 0.0 && big_r > small_r && big_r.is_finite()) {
            return Err(CurveError::TorusKnotRadii { big_r, small_r });
        }
        Ok(Parametric::TorusKnot {
            p,
            q,
            big_r,
            small_r,
        })
    }

    pub fn radial_fourier(radius: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, CurveError> {
        let amp: f64 = cos.iter().chain(&sin).map(|c| c.abs()).sum();
        if !(radius > 0.0) || amp >= 1.0 || !amp.is_finite() {
            return Err(CurveError::BadShape(format!(
                "radial perturbation needs radius > 0 and sum |coef| < 1, got {radius}, {amp}"
            )));
        }
        Ok(Parametric::RadialFourier { radius, cos, sin })
    }

    /// Length of the parameter domain.
    pub fn period(&self) -> f64 {
        match self {
            Parametric::Spline(s) => s.period(),
            _ => 2.0 * PI,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Parametric::Ellipse { .. } | Parametric::RadialFourier { .. } => 2,
            Parametric::TorusKnot { .. } => 3,
            Parametric::Spline(s) => s.dim(),
        }
    }

    pub fn kind(&self) -> CurveKind {
        match *self {
            Parametric::Ellipse { a, b } => CurveKind::Ellipse { a, b },
            Parametric::TorusKnot {
                p,
                q,
                big_r,
                small_r,
            } => CurveKind::TorusKnot {
                p,
                q,
                big_r,
                small_r,
            },
            Parametric::Spline(_) => CurveKind::Tabulated,
            Parametric::RadialFourier { .. } => CurveKind::RadialFourier,
        }
    }

    fn radial(radius: f64, cos: &[f64], sin: &[f64], t: f64) -> (f64, f64) {
        let mut r = 1.0;
        let mut dr = 0.0;
        for (k, (a, b)) in cos.iter().zip(sin).enumerate() {
            let kf = (k + 1) as f64;
            let (s, c) = (kf * t).sin_cos();
            r += a * c + b * s;
            dr += kf * (b * c - a * s);
        }
        (radius * r, radius * dr)
    }

    pub fn point_into(&self, t: f64, out: &mut [f64]) {
        match self {
            Parametric::Ellipse { a, b } => {
                out[0] = a * t.cos();
                out[1] = b * t.sin();
            }
            Parametric::TorusKnot {
                p,
                q,
                big_r,
                small_r,
            } => {
                let (pt, qt) = (*p as f64 * t, *q as f64 * t);
                let rr = big_r + small_r * qt.cos();
                out[0] = rr * pt.cos();
                out[1] = rr * pt.sin();
                out[2] = -small_r * qt.sin();
            }
            Parametric::Spline(s) => s.point_into(t, out),
            Parametric::RadialFourier { radius, cos, sin } => {
                let (r, _) = Self::radial(*radius, cos, sin, t);
                out[0] = r * t.cos();
                out[1] = r * t.sin();
            }
        }
    }

    pub fn deriv_into(&self, t: f64, out: &mut [f64]) {
        match self {
            Parametric::Ellipse { a, b } => {
                out[0] = -a * t.sin();
                out[1] = b * t.cos();
            }
            Parametric::TorusKnot {
                p,
                q,
                big_r,
                small_r,
            } => {
                let (pf, qf) = (*p as f64, *q as f64);
                let (pt, qt) = (pf * t, qf * t);
                let rr = big_r + small_r * qt.cos();
                let drr = -small_r * qf * qt.sin();
                out[0] = drr * pt.cos() - rr * pf * pt.sin();
                out[1] = drr * pt.sin() + rr * pf * pt.cos();
                out[2] = -small_r * qf * qt.cos();
            }
            Parametric::Spline(s) => s.deriv_into(t, out),
            Parametric::RadialFourier { radius, cos, sin } => {
                let (r, dr) = Self::radial(*radius, cos, sin, t);
                let (s, c) = t.sin_cos();
                out[0] = dr * c - r * s;
                out[1] = dr * s + r * c;
            }
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        let mut d = [0.0; 8];
        let n = self.dim();
        if n <= 8 {
            self.deriv_into(t, &mut d[..n]);
            crate::numeric::norm(&d[..n])
        } else {
            let mut v = vec![0.0; n];
            self.deriv_into(t, &mut v);
            crate::numeric::norm(&v)
        }
    }

    /// Arc length over one period, by panel Gauss–Legendre quadrature.
    pub fn total_length(&self) -> f64 {
        let panels = 512;
        let h = self.period() / panels as f64;
        let rule = gl10();
        (0..panels)
            .map(|k| rule.integrate(k as f64 * h, (k + 1) as f64 * h, |t| self.speed(t)))
            .sum()
    }
}
