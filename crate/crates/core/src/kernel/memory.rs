use nalgebra::DMatrix;

use super::coupling::{CouplingCoefficients, CouplingSpec};
use super::lattice::{lattice_frequencies, BathSpectrum, LatticeBathSpec};
use crate::error::{Error, Result};
use crate::gle::si;
use crate::quadrature::{integrate, integrate_vec, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    FiniteN,
    LimitQuadrature,
    AnalyticExample,
    Zero,
}

/// Matrix-valued memory kernel K(τ) of the fast time τ = (t − s)/√m.
pub trait MemoryKernel: Send + Sync {
    fn dim(&self) -> usize;

    fn mode(&self) -> KernelMode;

    fn eval(&self, tau: f64) -> Result<DMatrix<f64>>;

    /// Returns (∫_a^b K(u) du, ∫_a^b K(u)(u − a)/(b − a) du).
    fn interval_moments(&self, a: f64, b: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        check_interval(a, b)?;
        let n = self.dim();
        let mut failure = None;
        let est = integrate_vec(
            |u, out| match self.eval(u) {
                Ok(k) => {
                    let w = (u - a) / (b - a);
                    for (i, v) in k.iter().enumerate() {
                        out[i] = *v;
                        out[n * n + i] = v * w;
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            },
            a,
            b,
            2 * n * n,
            Tolerance::absolute(1e-15 * (b - a)).with_rel(1e-13),
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        let whole = DMatrix::from_column_slice(n, n, &est.value[..n * n]);
        let ramp = DMatrix::from_column_slice(n, n, &est.value[n * n..]);
        Ok((whole, ramp))
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::invalid(
            "tau",
            format!("lag must be finite and nonnegative, got {tau}"),
        ));
    }
    Ok(())
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    check_tau(a)?;
    check_tau(b)?;
    if b < a {
        return Err(Error::invalid("interval", format!("[{a}, {b}] is reversed")));
    }
    Ok(())
}

pub(crate) fn pair_count(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Expands upper-triangle pair values (row-major over ℓ ≤ ℓ′) into an
/// exactly symmetric matrix.
pub(crate) fn unpack_pairs(dim: usize, pairs: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    let mut p = 0;
    for i in 0..dim {
        for j in i..dim {
            m[(i, j)] = pairs[p];
            m[(j, i)] = pairs[p];
            p += 1;
        }
    }
    m
}

/// sin τ / τ with the removable singularity filled in.
pub fn sinc(tau: f64) -> f64 {
    if tau.abs() < 1e-4 {
        let t2 = tau * tau;
        1.0 - t2 / 6.0 * (1.0 - t2 / 20.0)
    } else {
        tau.sin() / tau
    }
}

/// K(τ) = amplitude · sin τ/τ · pattern, the closed form of the example
/// kernel and of its reduced one-dimensional projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SincKernel {
    pub amplitude: f64,
    pub pattern: DMatrix<f64>,
}

impl SincKernel {
    /// 4π sin τ/τ in every entry of an N×N matrix.
    pub fn example(dim: usize) -> Self {
        Self {
            amplitude: 4.0 * std::f64::consts::PI,
            pattern: DMatrix::from_element(dim, dim, 1.0),
        }
    }

    /// The example kernel seen along (1,1,1)/√3: 12π sin τ/τ.
    pub fn reduced() -> Self {
        Self {
            amplitude: 12.0 * std::f64::consts::PI,
            pattern: DMatrix::from_element(1, 1, 1.0),
        }
    }
}

impl MemoryKernel for SincKernel {
    fn dim(&self) -> usize {
        self.pattern.nrows()
    }

    fn mode(&self) -> KernelMode {
        KernelMode::AnalyticExample
    }

    fn eval(&self, tau: f64) -> Result<DMatrix<f64>> {
        check_tau(tau)?;
        Ok(&self.pattern * (self.amplitude * sinc(tau)))
    }

    fn interval_moments(&self, a: f64, b: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        check_interval(a, b)?;
        let whole = si(b)? - si(a)?;
        let ramp = if b > a {
            let tol = Tolerance::absolute(1e-17 * (b - a)).with_rel(1e-14);
            integrate(|u| sinc(u) * (u - a) / (b - a), a, b, tol)?.0
        } else {
            0.0
        };
        Ok((
            &self.pattern * (self.amplitude * whole),
            &self.pattern * (self.amplitude * ramp),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroKernel {
    pub dim: usize,
}

impl MemoryKernel for ZeroKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mode(&self) -> KernelMode {
        KernelMode::Zero
    }

    fn eval(&self, tau: f64) -> Result<DMatrix<f64>> {
        check_tau(tau)?;
        Ok(DMatrix::zeros(self.dim, self.dim))
    }

    fn interval_moments(&self, a: f64, b: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        check_interval(a, b)?;
        Ok((DMatrix::zeros(self.dim, self.dim), DMatrix::zeros(self.dim, self.dim)))
    }
}

/// K_n(τ) = Σ_k cos(τω_k) Re(β*_{ℓk}β_{ℓ′k}) / (ω_k² n) on a finite lattice.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    dim: usize,
    omega: Vec<f64>,
    // mode-major, pair_count(dim) entries per mode
    weights: Vec<f64>,
}

impl FiniteKernel {
    pub fn new(spec: &LatticeBathSpec, coupling: &CouplingSpec) -> Result<Self> {
        let spectrum = lattice_frequencies(spec)?;
        let beta = coupling.lattice_coefficients(&spectrum)?;
        Self::from_coefficients(&spectrum, &beta)
    }

    pub fn from_coefficients(spectrum: &BathSpectrum, beta: &CouplingCoefficients) -> Result<Self> {
        if beta.n_modes() != spectrum.len() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.len(),
                found: beta.n_modes(),
            });
        }
        let dim = beta.dim();
        let pc = pair_count(dim);
        let n = spectrum.len() as f64;
        let mut omega = Vec::with_capacity(spectrum.len());
        let mut weights = Vec::with_capacity(spectrum.len() * pc);
        for (k, &w2) in spectrum.omega2().iter().enumerate() {
            let b = beta.mode(k);
            let zero = b.iter().all(|v| v.re == 0.0 && v.im == 0.0);
            if zero {
                continue;
            }
            if w2 <= 0.0 {
                return Err(Error::invalid(
                    "eta",
                    "a coupled zero-frequency mode needs a positive regulariser",
                ));
            }
            omega.push(w2.sqrt());
            for i in 0..dim {
                for j in i..dim {
                    weights.push((b[i].conj() * b[j]).re / (w2 * n));
                }
            }
        }
        Ok(Self { dim, omega, weights })
    }

    /// Number of modes with nonzero coupling.
    pub fn active_modes(&self) -> usize {
        self.omega.len()
    }
}

impl MemoryKernel for FiniteKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mode(&self) -> KernelMode {
        KernelMode::FiniteN
    }

    fn eval(&self, tau: f64) -> Result<DMatrix<f64>> {
        check_tau(tau)?;
        let pc = pair_count(self.dim);
        let mut acc = vec![0.0; pc];
        for (k, w) in self.omega.iter().enumerate() {
            let c = (tau * w).cos();
            for (a, wt) in acc.iter_mut().zip(&self.weights[k * pc..(k + 1) * pc]) {
                *a += c * wt;
            }
        }
        Ok(unpack_pairs(self.dim, &acc))
    }

    fn interval_moments(&self, a: f64, b: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        check_interval(a, b)?;
        let pc = pair_count(self.dim);
        let mut whole = vec![0.0; pc];
        let mut ramp = vec![0.0; pc];
        let len = b - a;
        let mid = 0.5 * (a + b);
        for (k, &w) in self.omega.iter().enumerate() {
            // ∫_a^b cos(wu) du and ∫_a^b cos(wu)(u − a)/(b − a) du in forms
            // that stay accurate when w(b − a) is small
            let half_sin = (0.5 * w * len).sin();
            let i0 = 2.0 * (w * mid).cos() * half_sin / w;
            let i1 = if len > 0.0 {
                (w * b).sin() / w - 2.0 * (w * mid).sin() * half_sin / (w * w * len)
            } else {
                0.0
            };
            for p in 0..pc {
                let wt = self.weights[k * pc + p];
                whole[p] += wt * i0;
                ramp[p] += wt * i1;
            }
        }
        Ok((unpack_pairs(self.dim, &whole), unpack_pairs(self.dim, &ramp)))
    }
}

/// Evaluates K_n at a single lag. Builds the mode table on every call; use
/// [`FiniteKernel`] for sweeps.
pub fn kernel_finite(spec: &LatticeBathSpec, coupling: &CouplingSpec, tau: f64) -> Result<DMatrix<f64>> {
    check_tau(tau)?;
    FiniteKernel::new(spec, coupling)?.eval(tau)
}
