//! Independent reference values.
//!
//! On a round circle the O'Hara integrand depends only on the arc distance
//! `w = |x - y|`, so the double integral collapses to
//! `E = 2 L int_0^{L/2} ((2r sin(w/2r))^-alpha - w^-alpha)^p dw` with
//! `r = L / 2 pi`. For the Möbius case this is exactly 4.

use crate::energy::EnergyParams;
use crate::quadrature::{adaptive, Integral};

/// `sin(u)/u - 1`, accurate for small `u`.
fn sinc_minus_one(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let u2 = u * u;
        // Taylor series, truncation error below u^10 / 4e7
        u2 * (-1.0 / 6.0 + u2 * (1.0 / 120.0 + u2 * (-1.0 / 5040.0 + u2 / 362_880.0)))
    } else {
        u.sin() / u - 1.0
    }
}

/// `(chord^-alpha - w^-alpha)^p` on the circle of radius `r`, written as
/// `w^-alpha (sinc^-alpha - 1)` to avoid cancellation near `w = 0`.
pub fn circle_kernel(w: f64, r: f64, params: &EnergyParams) -> f64 {
    let u = 0.5 * w / r;
    let rel = (-params.alpha * sinc_minus_one(u).ln_1p()).exp_m1();
    (w.powf(-params.alpha) * rel).max(0.0).powf(params.p)
}

/// `E^{alpha,p}` of the round circle of circumference `length` by adaptive
/// quadrature of the reduced one-dimensional integral.
pub fn circle_energy(length: f64, params: &EnergyParams, tol: f64) -> Integral {
    let r = length / (2.0 * std::f64::consts::PI);
    let half = 0.5 * length;
    let inner = adaptive(|w| circle_kernel(w, r, params), 0.0, half, tol / (2.0 * length));
    Integral {
        value: 2.0 * length * inner.value,
        error_estimate: 2.0 * length * inner.error_estimate,
        evaluations: inner.evaluations,
    }
}

/// Möbius energy of the unit circle; the exact answer is 4.
pub fn mobius_circle_energy(tol: f64) -> Integral {
    circle_energy(2.0 * std::f64::consts::PI, &EnergyParams::mobius(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mobius_circle_is_four() {
        let r = mobius_circle_energy(1e-12);
        assert!((r.value - 4.0).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn kernel_series_near_zero() {
        // 1/(4 sin^2(w/2)) - 1/w^2 = 1/12 + w^2/240 + w^4/6048 + ...
        for w in [1e-6f64, 1e-3, 0.05, 0.19] {
            let series = 1.0 / 12.0 + w * w / 240.0 + w.powi(4) / 6048.0;
            let k = circle_kernel(w, 1.0, &EnergyParams::mobius());
            assert!((k - series).abs() < 1e-9, "{w}: {k} vs {series}");
        }
        let w = 2.0;
        let direct = 1.0 / (4.0 * (0.5f64 * w).sin().powi(2)) - 1.0 / (w * w);
        assert!((circle_kernel(w, 1.0, &EnergyParams::mobius()) - direct).abs() < 1e-15);
    }

    #[test]
    fn mobius_value_is_scale_free() {
        for l in [1.0, 3.0, 40.0] {
            assert!((circle_energy(l, &EnergyParams::mobius(), 1e-11).value - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn general_exponents_scale_like_length_power() {
        // E^{alpha,p}(lambda gamma) = lambda^{2 - alpha p} E^{alpha,p}(gamma)
        let e = EnergyParams::new(2.5, 1.2).unwrap();
        let a = circle_energy(2.0 * PI, &e, 1e-10).value;
        let b = circle_energy(4.0 * PI, &e, 1e-10).value;
        assert!((b / a - 2f64.powf(2.0 - 3.0)).abs() < 1e-7);
    }
}
