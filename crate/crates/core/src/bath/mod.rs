//! Finite lattice heat bath integrated together with the system in bath
//! eigencoordinates.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::io::{write_table, Provenance};
use crate::kernel::{lattice_frequencies, BathSpectrum, CouplingCoefficients, CouplingSpec, LatticeBathSpec};
use crate::potential::Potential;
use crate::trajectory::Trajectory;

/// Gibbs-distributed initial bath amplitudes γ_k = γ_k^r + iγ_k^i with
/// independent N(0, T/ω_k²) parts.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsBathSample {
    pub temperature: f64,
    pub gamma: Vec<Complex64>,
}

/// Draws γ in mode order, real part before imaginary part.
pub fn sample_bath_initial<R: Rng + ?Sized>(
    spectrum: &BathSpectrum,
    temperature: f64,
    rng: &mut R,
) -> Result<GibbsBathSample> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("T", format!("must be nonnegative, got {temperature}")));
    }
    if let Some(k) = spectrum.omega2().iter().position(|w| *w <= 0.0) {
        return Err(Error::invalid(
            "eta",
            format!(
                "mode {:?} has zero frequency; the regulariser must be positive",
                spectrum.wavevector(k)
            ),
        ));
    }
    let gamma = spectrum
        .omega2()
        .iter()
        .map(|w2| {
            let sd = (temperature / w2).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect();
    Ok(GibbsBathSample { temperature, gamma })
}

/// out_ℓ = Σ_k Re(c_k* β_{kℓ}) / √n.
pub(crate) fn mode_force(amp: &[Complex64], beta: &CouplingCoefficients, inv_sqrt_n: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (k, c) in amp.iter().enumerate() {
        for (o, b) in out.iter_mut().zip(beta.mode(k)) {
            *o += c.re * b.re + c.im * b.im;
        }
    }
    out.iter_mut().for_each(|o| *o *= inv_sqrt_n);
}

/// Complex mode amplitudes c_k of the bath displacement from its
/// equilibrium; without system motion they rotate as e^{−iω_k t/√m}.
#[derive(Debug, Clone, PartialEq)]
pub struct BathModeState {
    pub amplitudes: Vec<Complex64>,
}

#[derive(Debug)]
pub struct BathRunConfig<'a> {
    pub potential: &'a dyn Potential,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    /// Holds X fixed and drops the back-reaction of the system on the bath.
    pub frozen_system: bool,
    /// Steps at which per-mode energies are stored.
    pub mode_dump_steps: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ModeEnergyDump {
    pub t: f64,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BathRun {
    pub trajectory: Trajectory,
    /// Total energy at every recorded sample.
    pub energy: Vec<f64>,
    /// Bath force Σ_k Re(c_k* β_{kℓ})/√n at every full step, row-major.
    pub bath_force: Vec<f64>,
    pub modes: BathModeState,
    pub mode_dumps: Vec<ModeEnergyDump>,
}

/// Lattice bath in eigencoordinates: frequencies, coupling coefficients and
/// the response vectors b_{kℓ} = β_{kℓ} / (ω_k² √n).
#[derive(Debug, Clone)]
pub struct HeatBath {
    spec: LatticeBathSpec,
    spectrum: BathSpectrum,
    beta: CouplingCoefficients,
}

impl HeatBath {
    pub fn new(spec: &LatticeBathSpec, coupling: &CouplingSpec) -> Result<Self> {
        let spectrum = lattice_frequencies(spec)?;
        let beta = coupling.lattice_coefficients(&spectrum)?;
        Ok(Self {
            spec: *spec,
            spectrum,
            beta,
        })
    }

    pub fn spectrum(&self) -> &BathSpectrum {
        &self.spectrum
    }

    pub fn spec(&self) -> &LatticeBathSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.beta.dim()
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, temperature: f64, rng: &mut R) -> Result<GibbsBathSample> {
        sample_bath_initial(&self.spectrum, temperature, rng)
    }

    /// H = |P|²/2 + λ(X) + ½ Σ_k ω_k² |c_k|².
    pub fn energy(&self, potential: &dyn Potential, x: &[f64], p: &[f64], modes: &[Complex64]) -> f64 {
        let kinetic: f64 = 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        let bath: f64 = 0.5
            * modes
                .iter()
                .zip(self.spectrum.omega2())
                .map(|(c, w2)| w2 * c.norm_sqr())
                .sum::<f64>();
        kinetic + potential.value(x) + bath
    }

    /// Strang splitting: half kick with −∇λ plus the bath force, then the
    /// exact joint flow of Ẋ = P and ċ_k = −iω_k c_k/√m − P·b_k for frozen
    /// P, then the second half kick.
    pub fn run(&self, cfg: &BathRunConfig, sample: &GibbsBathSample, x0: &[f64], p0: &[f64]) -> Result<BathRun> {
        let dim = self.dim();
        if x0.len() != dim || p0.len() != dim || cfg.potential.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x0.len(),
            });
        }
        if sample.gamma.len() != self.spectrum.len() {
            return Err(Error::GridMismatch(format!(
                "bath sample has {} modes, lattice has {}",
                sample.gamma.len(),
                self.spectrum.len()
            )));
        }
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) || cfg.record_every == 0 {
            return Err(Error::invalid("dt", "need a positive step and record stride"));
        }
        let h = cfg.dt;
        let sqrt_m = self.spec.m.sqrt();
        let n_modes = self.spectrum.len();
        let inv_sqrt_n = 1.0 / (n_modes as f64).sqrt();
        let mut rot = Vec::with_capacity(n_modes);
        // (1 − e^{−iθ})√m/(iω_k) · b_k, folded into one complex response per (k, ℓ)
        let mut response = Vec::with_capacity(n_modes * dim);
        for k in 0..n_modes {
            let w2 = self.spectrum.omega2()[k];
            let w = w2.sqrt();
            let r = Complex64::from_polar(1.0, -w * h / sqrt_m);
            rot.push(r);
            let factor = (Complex64::new(1.0, 0.0) - r) * sqrt_m / Complex64::new(0.0, w);
            for b in self.beta.mode(k) {
                response.push(factor * b / (w2 / inv_sqrt_n));
            }
        }

        let mut x = x0.to_vec();
        let mut p = p0.to_vec();
        let mut c = sample.gamma.clone();
        let mut grad = vec![0.0; dim];
        let mut fb = vec![0.0; dim];
        let mut bath_force = Vec::with_capacity((cfg.steps + 1) * dim);
        let mut traj = Trajectory::with_capacity(dim, cfg.steps / cfg.record_every + 1);
        let mut energy = Vec::new();
        let mut dumps = Vec::new();

        mode_force(&c, &self.beta, inv_sqrt_n, &mut fb);
        bath_force.extend_from_slice(&fb);
        traj.push(0.0, &x, &p);
        energy.push(self.energy(cfg.potential, &x, &p, &c));
        if cfg.mode_dump_steps.contains(&0) {
            dumps.push(self.dump(0.0, &c));
        }

        for n in 0..cfg.steps {
            if !cfg.frozen_system {
                cfg.potential.gradient(&x, &mut grad);
                for l in 0..dim {
                    p[l] += 0.5 * h * (fb[l] - grad[l]);
                }
                for l in 0..dim {
                    x[l] += h * p[l];
                }
            }
            for k in 0..n_modes {
                let mut forcing = Complex64::new(0.0, 0.0);
                if !cfg.frozen_system {
                    for l in 0..dim {
                        forcing += response[k * dim + l] * p[l];
                    }
                }
                c[k] = rot[k] * c[k] - forcing;
            }
            mode_force(&c, &self.beta, inv_sqrt_n, &mut fb);
            if !cfg.frozen_system {
                cfg.potential.gradient(&x, &mut grad);
                for l in 0..dim {
                    p[l] += 0.5 * h * (fb[l] - grad[l]);
                }
            }
            bath_force.extend_from_slice(&fb);
            let step = n + 1;
            let t = step as f64 * h;
            if step % cfg.record_every == 0 {
                traj.push(t, &x, &p);
                energy.push(self.energy(cfg.potential, &x, &p, &c));
            }
            if cfg.mode_dump_steps.contains(&step) {
                dumps.push(self.dump(t, &c));
            }
        }
        Ok(BathRun {
            trajectory: traj,
            energy,
            bath_force,
            modes: BathModeState { amplitudes: c },
            mode_dumps: dumps,
        })
    }

    fn dump(&self, t: f64, c: &[Complex64]) -> ModeEnergyDump {
        ModeEnergyDump {
            t,
            energies: c
                .iter()
                .zip(self.spectrum.omega2())
                .map(|(a, w2)| 0.5 * w2 * a.norm_sqr())
                .collect(),
        }
    }

    /// CSV `k1,k2,k3,omega,energy` for one dump.
    pub fn write_mode_energies<W: Write>(
        &self,
        w: &mut W,
        dump: &ModeEnergyDump,
        provenance: &Provenance,
    ) -> Result<()> {
        let mut prov = provenance.clone();
        prov.push("t", dump.t);
        let cols: Vec<String> = ["k1", "k2", "k3", "omega", "energy"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows = dump.energies.iter().enumerate().map(|(k, e)| {
            let kv = self.spectrum.wavevector(k);
            vec![kv[0] as f64, kv[1] as f64, kv[2] as f64, self.spectrum.omega(k), *e]
        });
        write_table(w, &prov, &cols, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Harmonic;
    use crate::rng::SeedSequence;

    fn small_bath() -> HeatBath {
        let spec = LatticeBathSpec::with_default_eta(4, 1.0, 0.25).unwrap();
        HeatBath::new(&spec, &CouplingSpec::example()).unwrap()
    }

    #[test]
    fn zero_temperature_sample_is_zero() {
        let bath = small_bath();
        let s = bath.sample_initial(0.0, &mut SeedSequence::new(1, "b").rng(0)).unwrap();
        assert!(s.gamma.iter().all(|g| g.norm() == 0.0));
    }

    #[test]
    fn rejects_zero_frequency_mode() {
        let spec = LatticeBathSpec::new(4, 1.0, 0.0, 1.0).unwrap();
        let s = lattice_frequencies(&spec).unwrap();
        assert!(sample_bath_initial(&s, 1.0, &mut SeedSequence::new(1, "b").rng(0)).is_err());
    }

    #[test]
    fn frozen_system_rotates_modes_isometrically() {
        let bath = small_bath();
        let pot = Harmonic::unit(3);
        let s = bath.sample_initial(3.0, &mut SeedSequence::new(2, "b").rng(0)).unwrap();
        let cfg = BathRunConfig {
            potential: &pot,
            dt: 0.01,
            steps: 500,
            record_every: 1,
            frozen_system: true,
            mode_dump_steps: vec![],
        };
        let run = bath.run(&cfg, &s, &[0.3, 0.0, 0.0], &[0.0; 3]).unwrap();
        let worst = run
            .modes
            .amplitudes
            .iter()
            .zip(&s.gamma)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12);
        assert_eq!(run.trajectory.last_x(), &[0.3, 0.0, 0.0]);
    }
}
