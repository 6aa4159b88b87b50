use num_complex::Complex64;

use super::{check_grid, NoiseMethod, NoisePath};
use crate::bath::{mode_force, GibbsBathSample};
use crate::error::{Error, Result};
use crate::kernel::{lattice_frequencies, CouplingCoefficients, CouplingSpec, LatticeBathSpec};

/// Finite-lattice fluctuation ζ^ℓ(t) = Σ_k Re(e^{itω_k/√m} γ_k* β_{kℓ}) / √n
/// driven by a Gibbs bath sample.
#[derive(Debug, Clone)]
pub struct SpectralNoise {
    spec: LatticeBathSpec,
    omega: Vec<f64>,
    beta: CouplingCoefficients,
}

impl SpectralNoise {
    pub fn new(spec: &LatticeBathSpec, coupling: &CouplingSpec) -> Result<Self> {
        let spectrum = lattice_frequencies(spec)?;
        let beta = coupling.lattice_coefficients(&spectrum)?;
        let omega = (0..spectrum.len()).map(|k| spectrum.omega(k)).collect();
        Ok(Self {
            spec: *spec,
            omega,
            beta,
        })
    }

    pub fn dim(&self) -> usize {
        self.beta.dim()
    }

    /// Evaluates the mode sum on t_i = iΔt, advancing each amplitude by the
    /// exact per-step rotation e^{−iω_kΔt/√m}.
    pub fn path(&self, sample: &GibbsBathSample, dt: f64, steps: usize, seed: u64) -> Result<NoisePath> {
        check_grid(dt, sample.temperature, self.spec.m)?;
        if sample.gamma.len() != self.omega.len() {
            return Err(Error::DimensionMismatch {
                expected: self.omega.len(),
                found: sample.gamma.len(),
            });
        }
        let dim = self.dim();
        let sqrt_m = self.spec.m.sqrt();
        let rot: Vec<Complex64> = self
            .omega
            .iter()
            .map(|w| Complex64::from_polar(1.0, -w * dt / sqrt_m))
            .collect();
        let inv_sqrt_n = 1.0 / (self.omega.len() as f64).sqrt();
        let mut amp = sample.gamma.clone();
        let mut values = vec![0.0; (steps + 1) * dim];
        for i in 0..=steps {
            if i > 0 {
                for (a, r) in amp.iter_mut().zip(&rot) {
                    *a *= r;
                }
            }
            mode_force(&amp, &self.beta, inv_sqrt_n, &mut values[i * dim..(i + 1) * dim]);
        }
        Ok(NoisePath {
            dt,
            dim,
            values,
            seed,
            method: NoiseMethod::Spectral,
            m: self.spec.m,
            temperature: sample.temperature,
        })
    }
}

pub fn spectral_noise_finite(
    spec: &LatticeBathSpec,
    coupling: &CouplingSpec,
    dt: f64,
    steps: usize,
    sample: &GibbsBathSample,
    seed: u64,
) -> Result<NoisePath> {
    SpectralNoise::new(spec, coupling)?.path(sample, dt, steps, seed)
}
