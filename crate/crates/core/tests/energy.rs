use kel_core::curve::ClosedCurve;
use kel_core::energy::{integrand, ohara_energy, random_ohara_energy, weighted_ohara_energy};
use kel_core::sampling::sample_iid;
use kel_core::{CurveSpec, Density, EnergyParams};

fn ellipse() -> ClosedCurve {
    serde_json::from_str::<CurveSpec>(r#"{"kind":"ellipse","a":1.0,"b":0.4}"#)
        .unwrap()
        .build()
        .unwrap()
}

#[test]
fn integrand_has_a_finite_diagonal_limit_on_parametric_curves() {
    let c = ellipse();
    let params = EnergyParams::mobius();
    for x in [0.0, 0.3, 1.1, 2.0] {
        let limit = c.curvature(x).powi(2) / 12.0;
        for h in [1e-12, 1e-9, 1e-6, 1e-3] {
            let v = integrand(&c, x, x + h, &params).unwrap();
            assert!((v - limit).abs() < 1e-2 * limit, "x {x}, h {h}: {v} vs {limit}");
        }
    }
}

#[test]
fn random_energy_tracks_the_weighted_energy_on_an_ellipse() {
    let c = ellipse();
    let params = EnergyParams::mobius();
    let density = Density::uniform(c.length()).unwrap();
    let grid = weighted_ohara_energy(&c, &density, &params, 1024).unwrap().value;
    let n = 512;
    let mean = (0..16u64)
        .map(|seed| random_ohara_energy(&c, &sample_iid(&density, n, seed).unwrap(), &params).unwrap().value)
        .sum::<f64>()
        / 16.0;
    let expected = (1.0 - 1.0 / n as f64) * grid;
    assert!((mean - expected).abs() < 0.05 * expected, "{mean} vs {expected}");
}

#[test]
fn uniform_weight_rescales_the_plain_energy() {
    let c = ellipse();
    let params = EnergyParams::new(2.0, 1.5).unwrap();
    let plain = ohara_energy(&c, &params, 512).unwrap().value;
    let weighted = weighted_ohara_energy(&c, &Density::uniform(c.length()).unwrap(), &params, 512)
        .unwrap()
        .value;
    let l2 = c.length().powi(2);
    assert!((plain - l2 * weighted).abs() < 1e-9 * plain, "{plain} vs {}", l2 * weighted);
}

#[test]
fn random_energy_ignores_sample_order() {
    let c = ellipse();
    let density = Density::cosine(c.length(), 0.5).unwrap();
    let set = sample_iid(&density, 300, 9).unwrap();
    let perm: Vec<usize> = (0..300).rev().collect();
    let params = EnergyParams::mobius();
    let a = random_ohara_energy(&c, &set, &params).unwrap().value;
    let b = random_ohara_energy(&c, &set.permuted(&perm), &params).unwrap().value;
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn integrable_singular_kernels_converge_on_smooth_curves() {
    let params = EnergyParams::new(2.5, 1.2).unwrap();
    let circle = kel_core::curve::make_circle(std::f64::consts::TAU, 2).unwrap();
    let r = ohara_energy(&circle, &params, 1024).unwrap();
    let oracle = kel_core::oracle::circle_energy(std::f64::consts::TAU, &params, 1e-12).value;
    assert!(!r.infinite);
    assert!((r.value - oracle).abs() < 1e-5 * oracle, "{} vs {oracle}", r.value);
    let e = ohara_energy(&ellipse(), &params, 512).unwrap();
    assert!(!e.infinite && e.value > oracle, "{e:?}");
}
