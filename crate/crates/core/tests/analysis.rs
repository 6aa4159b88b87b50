use heatbath::analysis::{
    chi_square_normal, curve_distance, default_gof_bins, histogram, weak_error, weak_error_paired, BinSpec, Curve,
};
use heatbath::SeedSequence;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn curve(values: Vec<f64>) -> Curve {
    let n = values.len();
    Curve {
        t: (0..n).map(|i| i as f64 * 0.1).collect(),
        value: values,
        stderr: vec![0.0; n],
    }
}

#[test]
fn chi_square_accepts_true_normals_and_rejects_scaled_ones() {
    let mut rng = SeedSequence::new(7, "gof").rng(0);
    let xs: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
    let bins = default_gof_bins(xs.len());
    let fit = chi_square_normal(&xs, 0.0, 1.0, bins).unwrap();
    assert!(fit.p_value > 1e-3, "p = {}", fit.p_value);
    let wide: Vec<f64> = xs.iter().map(|x| 1.1 * x).collect();
    assert!(chi_square_normal(&wide, 0.0, 1.0, bins).unwrap().p_value < 1e-6);
}

#[test]
fn weak_error_of_shifted_ensembles() {
    let mut rng = SeedSequence::new(3, "shift").rng(0);
    let a: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = a.iter().map(|x| x + 0.25).collect();
    let paired = weak_error_paired(&a, &b).unwrap();
    assert!((paired.value + 0.25).abs() < 1e-12);
    assert!(paired.stderr < 1e-12);
    let pooled = weak_error(&a, &b).unwrap();
    assert!((pooled.value + 0.25).abs() < 1e-12);
    assert!(pooled.stderr > 0.04);
}

#[test]
fn distance_of_constant_offset() {
    // √(∫_0^1 δ² dt) = δ
    let a = curve(vec![0.0; 11]);
    let b = curve(vec![0.3; 11]);
    assert!((curve_distance(&a, &b, None).unwrap().value - 0.3).abs() < 1e-12);
}

proptest! {
    #[test]
    fn histogram_accounts_for_every_sample(
        xs in prop::collection::vec(-10.0f64..10.0, 1..400),
        bins in 1usize..30,
    ) {
        let h = histogram(&xs, &BinSpec::Uniform { lo: -3.0, hi: 4.0, bins }).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>() + h.underflow + h.overflow, xs.len() as u64);
        prop_assert_eq!(h.counts.len(), bins);
    }

    #[test]
    fn curve_distance_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 8),
        b in prop::collection::vec(-5.0f64..5.0, 8),
        c in prop::collection::vec(-5.0f64..5.0, 8),
    ) {
        let (a, b, c) = (curve(a), curve(b), curve(c));
        let d = |x: &Curve, y: &Curve| curve_distance(x, y, None).unwrap().value;
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-12);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}
