use std::f64::consts::PI;

use heatbath::gle::{gle_run, si, ConvolutionRule, DampingWeights, GleConfig, SineIntegralTable};
use heatbath::kernel::{lattice_frequencies, CouplingSpec, FiniteKernel, LatticeBathSpec, MemoryKernel, SincKernel};
use heatbath::noise::NoisePath;
use heatbath::potential::Harmonic;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn lattice_frequencies_match_direct_enumeration() {
    let spec = LatticeBathSpec::new(6, 1.3, 0.4, 0.25).unwrap();
    let spectrum = lattice_frequencies(&spec).unwrap();
    let n = 6i64;
    let mut direct = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let s: f64 = [a, b, c]
                    .iter()
                    .map(|&k| 2.0 * (1.0 - (2.0 * PI * k as f64 / n as f64).cos()))
                    .sum();
                direct.push(1.3 * 1.3 * s + 0.4 * 0.4);
            }
        }
    }
    let mut ours = spectrum.omega2().to_vec();
    assert_eq!(ours.len(), direct.len());
    ours.sort_by(f64::total_cmp);
    direct.sort_by(f64::total_cmp);
    for (a, b) in ours.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn finite_kernel_at_zero_lag_is_symmetric_and_positive() {
    let spec = LatticeBathSpec::with_default_eta(8, 1.0, 0.25).unwrap();
    let k = FiniteKernel::new(&spec, &CouplingSpec::example()).unwrap();
    let k0 = k.eval(0.0).unwrap();
    assert!((&k0 - k0.transpose()).amax() < 1e-12);
    assert!(k0.clone().symmetric_eigen().eigenvalues.min() > -1e-10);
}

#[test]
fn sine_integral_table_matches_quadrature_weights_in_a_run() {
    // the two routes to the damping weights must drive identical dynamics
    let (dt, m, steps) = (0.01, 0.04, 300);
    let pattern = DMatrix::from_element(1, 1, 1.0);
    let table = SineIntegralTable::new(dt, m, 2 * steps).unwrap();
    let si_weights = DampingWeights::from_si_table(&table, 12.0 * PI, &pattern, ConvolutionRule::HalfStepLeft).unwrap();
    let quad_weights =
        DampingWeights::new(&SincKernel::reduced(), dt, m, steps, ConvolutionRule::HalfStepLeft).unwrap();
    let potential = Harmonic::unit(1);
    let noise = NoisePath::zero(dt, steps, 1);
    let run = |w: &DampingWeights| {
        let cfg = GleConfig {
            potential: &potential,
            weights: w,
            steps,
            record_every: 1,
            truncation: None,
        };
        gle_run(&cfg, &noise, &[1.0], &[0.0]).unwrap()
    };
    let a = run(&si_weights);
    let b = run(&quad_weights);
    let worst = (0..a.len()).map(|i| (a.x(i)[0] - b.x(i)[0]).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "max deviation {worst:e}");
}

#[test]
fn sine_integral_reference_values() {
    // mpmath.si at 25 digits
    for (x, v) in [
        (0.5, 0.493_107_418_043_066_7),
        (1.0, 0.946_083_070_367_183),
        (5.0, 1.549_931_244_944_674),
        (20.0, 1.548_241_701_043_44),
    ] {
        assert!((si(x).unwrap() - v).abs() < 1e-14, "Si({x})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sinc_kernel_gram_matrix_is_psd(taus in prop::collection::vec(0.0f64..30.0, 2..12)) {
        let k = SincKernel::example(1);
        let n = taus.len();
        let g = DMatrix::from_fn(n, n, |i, j| k.eval((taus[i] - taus[j]).abs()).unwrap()[(0, 0)]);
        let scale = g.amax();
        let min = g.symmetric_eigen().eigenvalues.min();
        prop_assert!(min > -1e-9 * scale);
    }

    #[test]
    fn kernels_are_symmetric(tau in 0.0f64..40.0) {
        let spec = LatticeBathSpec::with_default_eta(4, 1.0, 0.25).unwrap();
        let finite = FiniteKernel::new(&spec, &CouplingSpec::example()).unwrap();
        for k in [finite.eval(tau).unwrap(), SincKernel::example(3).eval(tau).unwrap()] {
            prop_assert!((&k - k.transpose()).amax() <= 1e-12 * k.amax().max(1.0));
        }
    }
}
