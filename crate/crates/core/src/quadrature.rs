//! Globally adaptive Gauss–Kronrod (7/15) quadrature for scalar and
//! vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            max_intervals: 2000,
        }
    }

    pub fn with_rel(mut self, rel: f64) -> Self {
        self.rel = rel;
        self
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub value: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Panel
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];

    f(center, buf);
    for d in 0..dim {
        kronrod[d] += WGK[7] * buf[d];
        gauss[d] += WG[3] * buf[d];
    }
    for i in 0..7 {
        let dx = half * XGK[i];
        for x in [center - dx, center + dx] {
            f(x, buf);
            for d in 0..dim {
                kronrod[d] += WGK[i] * buf[d];
                if i % 2 == 1 {
                    gauss[d] += WG[i / 2] * buf[d];
                }
            }
        }
    }

    let mut error: f64 = 0.0;
    for d in 0..dim {
        kronrod[d] *= half;
        gauss[d] *= half;
        error = error.max((kronrod[d] - gauss[d]).abs());
    }
    Panel {
        a,
        b,
        value: kronrod,
        error,
    }
}

/// Integrates a vector-valued function over `[a, b]`. Errors are measured
/// in the max norm across components.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, dim: usize, tol: Tolerance) -> Result<Estimate>
where
    F: FnMut(f64, &mut [f64]),
{
    let mut buf = vec![0.0; dim];
    if a == b {
        return Ok(Estimate {
            value: vec![0.0; dim],
            error: 0.0,
            evaluations: 0,
        });
    }
    let first = gk15(&mut f, a, b, dim, &mut buf);
    let mut evaluations = 15;
    let mut total = first.value.clone();
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    loop {
        let scale = total.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let target = tol.abs.max(tol.rel * scale);
        if total_err <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                achieved: total_err,
                tolerance: target,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval below floating-point resolution
            return Err(Error::Quadrature {
                achieved: total_err,
                tolerance: target,
            });
        }
        let left = gk15(&mut f, worst.a, mid, dim, &mut buf);
        let right = gk15(&mut f, mid, worst.b, dim, &mut buf);
        evaluations += 30;
        for d in 0..dim {
            total[d] += left.value[d] + right.value[d] - worst.value[d];
        }
        heap.push(left);
        heap.push(right);
        // recompute instead of updating incrementally; keeps the estimate
        // free of cancellation drift
        total_err = heap.iter().map(|p| p.error).sum();
    }

    // final sum in a fixed order for reproducibility
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = vec![0.0; dim];
    for p in &panels {
        for d in 0..dim {
            value[d] += p.value[d];
        }
    }
    Ok(Estimate {
        value,
        error: total_err,
        evaluations,
    })
}

/// Nodes and weights of composite 7-point Gauss–Legendre on `panels`
/// equal subintervals of `[a, b]`.
pub fn gauss_legendre_composite(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(7 * panels);
    let mut weights = Vec::with_capacity(7 * panels);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let center = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for i in [1usize, 3, 5] {
            nodes.push(center - half * XGK[i]);
            weights.push(half * WG[i / 2]);
        }
        nodes.push(center);
        weights.push(half * WG[3]);
        for i in [5usize, 3, 1] {
            nodes.push(center + half * XGK[i]);
            weights.push(half * WG[i / 2]);
        }
    }
    (nodes, weights)
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let est = integrate_vec(|x, out| out[0] = f(x), a, b, 1, tol)?;
    Ok((est.value[0], est.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_gauss_is_exact_for_degree_13() {
        let (x, w) = gauss_legendre_composite(0.0, 2.0, 3);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(13)).sum();
        assert!((v - 2f64.powi(14) / 14.0).abs() < 1e-10);
    }

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, Tolerance::absolute(1e-14)).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let (v, _) = integrate(|x| (40.0 * x).cos(), 0.0, 3.0, Tolerance::absolute(1e-12)).unwrap();
        assert!((v - (120.0_f64).sin() / 40.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let (v, _) = integrate(
            |x| if x > 0.0 { x.powf(-0.5) } else { 0.0 },
            0.0,
            1.0,
            Tolerance::absolute(1e-9),
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn reports_failure_with_residual() {
        let err = integrate(
            |x| (1.0 / x.max(1e-300)).sin() / x.max(1e-300),
            0.0,
            1.0,
            Tolerance::absolute(1e-12).with_max_intervals(20),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn vector_components_are_independent() {
        let est = integrate_vec(
            |x, out| {
                out[0] = x;
                out[1] = x.exp();
            },
            0.0,
            1.0,
            2,
            Tolerance::absolute(1e-13),
        )
        .unwrap();
        assert!((est.value[0] - 0.5).abs() < 1e-14);
        assert!((est.value[1] - (1f64.exp() - 1.0)).abs() < 1e-13);
    }
}
