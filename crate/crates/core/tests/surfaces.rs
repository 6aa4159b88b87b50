use heatbath::kernel::FrictionMatrix;
use heatbath::langevin::FrictionScaling;
use heatbath::potential::{DoubleWell, Harmonic};
use heatbath::surfaces::{mixed_observable, surface_weights, MixedRun, Surface, SurfaceSet, WeightMethod};

fn surface(potential: impl heatbath::potential::Potential + 'static, log_det: f64) -> Surface {
    Surface {
        potential: Box::new(potential),
        kappa: FrictionMatrix::zero(1),
        bath_log_det: log_det,
    }
}

fn well(offset: f64) -> DoubleWell {
    DoubleWell {
        dim: 1,
        height: 0.5,
        minimum: 1.2,
        offset,
    }
}

// ∫ exp(−λ(x)/T) dx on a wide uniform grid
fn brute_partition(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let h = 1e-4;
    (-200_000..=200_000).map(|i| (-f(i as f64 * h) / t).exp() * h).sum()
}

#[test]
fn weights_match_brute_force_partition_functions() {
    let t = 0.7;
    let set = SurfaceSet::new(vec![
        surface(well(0.0), 0.0),
        surface(
            Harmonic {
                stiffness: 4.0,
                center: vec![0.5],
                offset: 0.1,
            },
            0.3,
        ),
    ])
    .unwrap();
    let w = surface_weights(&set, t, WeightMethod::Quadrature).unwrap();
    let z1 = brute_partition(|x| 0.5 * (x * x - 1.44).powi(2), t);
    let z2 = brute_partition(|x| 0.1 + 2.0 * (x - 0.5).powi(2), t) * (-0.15f64).exp();
    let q1 = z1 / (z1 + z2);
    assert!((w.q[0] - q1).abs() < 1e-8, "{} vs {q1}", w.q[0]);
    assert!((w.q[0] + w.q[1] - 1.0).abs() < 1e-14);
}

#[test]
fn common_shift_leaves_weights_unchanged() {
    let t = 1.3;
    let base = surface_weights(
        &SurfaceSet::new(vec![surface(well(0.0), 0.0), surface(well(0.4), 0.0)]).unwrap(),
        t,
        WeightMethod::Quadrature,
    )
    .unwrap();
    let shifted = surface_weights(
        &SurfaceSet::new(vec![surface(well(2.0), 0.7), surface(well(2.4), 0.7)]).unwrap(),
        t,
        WeightMethod::Quadrature,
    )
    .unwrap();
    for (a, b) in base.q.iter().zip(&shifted.q) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn monte_carlo_weights_agree_with_quadrature() {
    let t = 1.0;
    let set = SurfaceSet::new(vec![
        surface(well(0.0), 0.0),
        surface(Harmonic::unit(1).shifted(0.2), 0.0),
    ])
    .unwrap();
    let exact = surface_weights(&set, t, WeightMethod::Quadrature).unwrap();
    let mc = surface_weights(
        &set,
        t,
        WeightMethod::MonteCarlo {
            samples: 200_000,
            seed: 5,
        },
    )
    .unwrap();
    for j in 0..2 {
        assert!(
            (mc.q[j] - exact.q[j]).abs() < 5.0 * mc.stderr[j].max(1e-6),
            "surface {j}"
        );
    }
}

#[test]
fn mixed_observable_of_constants_is_one() {
    let set = SurfaceSet::new(vec![surface(well(0.0), 0.0), surface(Harmonic::unit(1), 0.2)]).unwrap();
    let w = surface_weights(&set, 1.0, WeightMethod::Quadrature).unwrap();
    let run = MixedRun {
        time: 0.5,
        temperature: 1.0,
        scaling: FrictionScaling::SmallMass { m: 0.1 },
        dt: 0.01,
        paths: 50,
        seed: 2,
    };
    let est = mixed_observable(&set, &w, |_, _| 1.0, |_, _| 1.0, &run).unwrap();
    assert!((est.value - 1.0).abs() < 1e-14);
}
