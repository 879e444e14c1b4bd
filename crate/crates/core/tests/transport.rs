use kel_core::curve::make_circle;
use kel_core::sampling::{quantile_transport_map, sample_iid, Cut};
use kel_core::transport::{tlq_exact, tlq_map_bound};
use kel_core::{ContinuumElement, Density, DiscreteElement};
use proptest::prelude::*;

fn element(positions: Vec<f64>, values: Vec<f64>) -> DiscreteElement {
    let vals: Vec<Vec<f64>> = values.into_iter().map(|v| vec![v]).collect();
    DiscreteElement::new(1.0, positions, &vals).unwrap()
}

proptest! {
    #[test]
    fn exact_distance_is_a_symmetric_premetric(
        a in prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 1..12),
        b in prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 1..12),
        q in 1.0..3.0f64,
    ) {
        let (pa, va): (Vec<f64>, Vec<f64>) = a.into_iter().unzip();
        let (pb, vb): (Vec<f64>, Vec<f64>) = b.into_iter().unzip();
        let x = element(pa, va);
        let y = element(pb, vb);
        let (dxy, pi) = tlq_exact(&x, &y, q).unwrap();
        let dyx = tlq_exact(&y, &x, q).unwrap().0;
        prop_assert!((dxy - dyx).abs() < 1e-10);
        prop_assert!(pi.marginal_error() < 1e-12);
        prop_assert!(tlq_exact(&x, &x, q).unwrap().0 < 1e-12);
    }
}

#[test]
fn map_bound_dominates_the_exact_distance_to_a_fine_quantization() {
    let curve = make_circle(1.0, 2).unwrap();
    let density = Density::cosine(1.0, 0.5).unwrap();
    let cont = ContinuumElement::new(density.clone(), curve.clone()).unwrap();
    let fine = cont.quantize(512).unwrap();
    for seed in 0..4 {
        let set = sample_iid(&density, 128, seed).unwrap();
        let disc = DiscreteElement::from_samples(&set, &curve).unwrap();
        let map = quantile_transport_map(&density, &set, Cut::At(0.0));
        let bound = tlq_map_bound(&cont, &disc, &map, 1.0).unwrap().bound;
        let exact = tlq_exact(&fine, &disc, 1.0).unwrap().0;
        // the quantization itself is within one atom width of the continuum
        assert!(exact <= bound + 4.0 / 512.0, "seed {seed}: {exact} > {bound}");
    }
}
