//! Langevin limit dP = −∇λ dt − s κ P dt + (2 s T)^{1/2} κ^{1/2} dW, s the
//! friction prefactor, integrated by the O–B–A–B–O splitting with exact
//! Ornstein–Uhlenbeck substeps.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::{check_symmetric_psd, FrictionMatrix};
use crate::potential::{Harmonic, Potential};
use crate::trajectory::Trajectory;

/// Friction prefactor: √m in the small-mass limit, χ^{2δ−1/2}√m for a stiff
/// bath with frequency scale χ^{−1/2} and coupling scale χ^δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrictionScaling {
    SmallMass { m: f64 },
    Stiff { chi: f64, delta: f64, m: f64 },
}

impl FrictionScaling {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FrictionScaling::SmallMass { m } => {
                if !(m > 0.0 && m.is_finite()) {
                    return Err(Error::invalid("m", format!("must be positive, got {m}")));
                }
            }
            FrictionScaling::Stiff { chi, delta, m } => {
                if !(m > 0.0 && m.is_finite()) {
                    return Err(Error::invalid("m", format!("must be positive, got {m}")));
                }
                if !(chi > 0.0 && chi.is_finite()) {
                    return Err(Error::invalid("chi", format!("must be positive, got {chi}")));
                }
                if !(delta > 0.25) {
                    return Err(Error::invalid(
                        "delta",
                        format!("stiff scaling needs delta > 1/4, got {delta}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn prefactor(&self) -> f64 {
        match *self {
            FrictionScaling::SmallMass { m } => m.sqrt(),
            FrictionScaling::Stiff { chi, delta, m } => chi.powf(2.0 * delta - 0.5) * m.sqrt(),
        }
    }
}

/// Exact OU substep of length Δt/2: P ← E P + F ξ with E = exp(−sκΔt/2)
/// and F F = T(I − E²).
#[derive(Debug, Clone, PartialEq)]
pub struct OuStepOperator {
    pub decay: DMatrix<f64>,
    pub noise_factor: DMatrix<f64>,
}

impl OuStepOperator {
    pub fn dim(&self) -> usize {
        self.decay.nrows()
    }

    /// T(I − E²).
    pub fn noise_covariance(&self) -> DMatrix<f64> {
        &self.noise_factor * &self.noise_factor
    }

    pub fn apply<R: Rng + ?Sized>(&self, p: &mut [f64], rng: &mut R) {
        let xi: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        self.apply_with(p, &xi);
    }

    /// P ← E P + F ξ for given standard normals ξ.
    pub fn apply_with(&self, p: &mut [f64], xi: &[f64]) {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut v = 0.0;
            for j in 0..n {
                v += self.decay[(i, j)] * p[j] + self.noise_factor[(i, j)] * xi[j];
            }
            *o = v;
        }
        p.copy_from_slice(&out);
    }
}

/// Builds the OU substep for friction `kappa`, prefactor s, temperature T
/// and full step Δt.
pub fn build_ou_operator(kappa: &DMatrix<f64>, prefactor: f64, temperature: f64, dt: f64) -> Result<OuStepOperator> {
    check_symmetric_psd(kappa, 1e-12)?;
    if !(prefactor > 0.0 && prefactor.is_finite()) {
        return Err(Error::invalid(
            "prefactor",
            format!("must be positive, got {prefactor}"),
        ));
    }
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("T", format!("must be nonnegative, got {temperature}")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    let n = kappa.nrows();
    let mut decay = DMatrix::identity(n, n);
    let mut noise_factor = DMatrix::zeros(n, n);
    if kappa.amax() == 0.0 {
        return Ok(OuStepOperator { decay, noise_factor });
    }
    let eig = SymmetricEigen::new((kappa + kappa.transpose()) * 0.5);
    let v = &eig.eigenvectors;
    for (i, &k) in eig.eigenvalues.iter().enumerate() {
        let k = k.max(0.0);
        if k == 0.0 {
            continue;
        }
        let a = prefactor * k * dt / 2.0;
        // E − I and the noise amplitude along this eigenvector
        let em1 = if a.is_infinite() { -1.0 } else { (-a).exp_m1() };
        let sd = (temperature * -(-2.0 * a).exp_m1()).sqrt();
        let col = v.column(i);
        for r in 0..n {
            for c in 0..n {
                let outer = col[r] * col[c];
                decay[(r, c)] += em1 * outer;
                noise_factor[(r, c)] += sd * outer;
            }
        }
    }
    Ok(OuStepOperator { decay, noise_factor })
}

#[derive(Debug, Clone)]
pub struct LangevinConfig<P: Potential> {
    pub potential: P,
    pub kappa: FrictionMatrix,
    pub temperature: f64,
    pub scaling: FrictionScaling,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
}

impl<P: Potential> LangevinConfig<P> {
    pub fn validate(&self) -> Result<()> {
        self.scaling.validate()?;
        if self.kappa.dim() != self.potential.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.potential.dim(),
                found: self.kappa.dim(),
            });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be positive"));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid(
                "T",
                format!("must be nonnegative, got {}", self.temperature),
            ));
        }
        Ok(())
    }

    pub fn ou_operator(&self) -> Result<OuStepOperator> {
        self.validate()?;
        build_ou_operator(self.kappa.matrix(), self.scaling.prefactor(), self.temperature, self.dt)
    }
}

/// Ẋ = P, Ṗ = −X − 6π²√m P + 2π m^{1/4} T^{1/2} Ẇ: the example coupling
/// seen along (1,1,1)/√3, i.e. friction 6π² at temperature T/3.
pub fn reduced_1d_preset(m: f64, temperature: f64, dt: f64, steps: usize) -> Result<LangevinConfig<Harmonic>> {
    let cfg = LangevinConfig {
        potential: Harmonic::unit(1),
        kappa: FrictionMatrix::user(DMatrix::from_element(1, 1, 6.0 * PI * PI))?,
        temperature: temperature / 3.0,
        scaling: FrictionScaling::SmallMass { m },
        dt,
        steps,
        record_every: 1,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// One path of the O–B–A–B–O scheme with a prebuilt OU operator.
pub fn langevin_run_with<P: Potential, R: Rng + ?Sized>(
    config: &LangevinConfig<P>,
    ou: &OuStepOperator,
    x0: &[f64],
    p0: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    run_scheme(config, ou, x0, p0, |xi| {
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    })
}

/// Like [`langevin_run_with`] with the OU normals supplied up front:
/// 2·steps·N values, consumed N per OU substep in order.
pub fn langevin_run_driven<P: Potential>(
    config: &LangevinConfig<P>,
    ou: &OuStepOperator,
    x0: &[f64],
    p0: &[f64],
    normals: &[f64],
) -> Result<Trajectory> {
    let n = config.potential.dim();
    if normals.len() != 2 * config.steps * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * config.steps * n,
            found: normals.len(),
        });
    }
    let mut chunks = normals.chunks_exact(n);
    run_scheme(config, ou, x0, p0, |xi| {
        xi.copy_from_slice(chunks.next().expect("length checked above"));
    })
}

fn run_scheme<P: Potential, F: FnMut(&mut [f64])>(
    config: &LangevinConfig<P>,
    ou: &OuStepOperator,
    x0: &[f64],
    p0: &[f64],
    mut normals: F,
) -> Result<Trajectory> {
    let n = config.potential.dim();
    if x0.len() != n || p0.len() != n || ou.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let h = config.dt;
    let mut x = x0.to_vec();
    let mut p = p0.to_vec();
    let mut g = vec![0.0; n];
    let mut xi = vec![0.0; n];
    let mut traj = Trajectory::with_capacity(n, config.steps / config.record_every + 1);
    traj.push(0.0, &x, &p);
    config.potential.gradient(&x, &mut g);
    for step in 1..=config.steps {
        normals(&mut xi);
        ou.apply_with(&mut p, &xi);
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi -= 0.5 * h * gi;
        }
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += h * pi;
        }
        config.potential.gradient(&x, &mut g);
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi -= 0.5 * h * gi;
        }
        normals(&mut xi);
        ou.apply_with(&mut p, &xi);
        if step % config.record_every == 0 {
            traj.push(step as f64 * h, &x, &p);
        }
    }
    Ok(traj)
}

pub fn langevin_run<P: Potential, R: Rng + ?Sized>(
    config: &LangevinConfig<P>,
    x0: &[f64],
    p0: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    let ou = config.ou_operator()?;
    langevin_run_with(config, &ou, x0, p0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSequence;

    #[test]
    fn zero_friction_is_identity() {
        let ou = build_ou_operator(&DMatrix::zeros(3, 3), 0.5, 3.0, 0.01).unwrap();
        assert_eq!(ou.decay, DMatrix::identity(3, 3));
        assert_eq!(ou.noise_factor, DMatrix::zeros(3, 3));
    }

    #[test]
    fn reduced_preset_matches_scalar_formulas() {
        let m: f64 = 0.25;
        let dt = 0.005;
        let cfg = reduced_1d_preset(m, 3.0, dt, 10).unwrap();
        let ou = cfg.ou_operator().unwrap();
        let decay = (-6.0 * PI * PI * m.sqrt() * dt / 2.0).exp();
        let sd = 3f64.sqrt() * ((1.0 - (-12.0 * PI * PI * m.sqrt() * dt / 2.0).exp()) / 3.0).sqrt();
        assert!((ou.decay[(0, 0)] - decay).abs() < 1e-15);
        assert!((ou.noise_factor[(0, 0)] - sd).abs() < 1e-15);
    }

    #[test]
    fn stiff_delta_must_exceed_quarter() {
        assert!(FrictionScaling::Stiff {
            chi: 2.0,
            delta: 0.2,
            m: 0.1
        }
        .validate()
        .is_err());
        assert!(FrictionScaling::Stiff {
            chi: 2.0,
            delta: 0.3,
            m: 0.1
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn no_friction_no_noise_is_verlet() {
        let cfg = LangevinConfig {
            potential: Harmonic::unit(1),
            kappa: FrictionMatrix::zero(1),
            temperature: 0.0,
            scaling: FrictionScaling::SmallMass { m: 1.0 },
            dt: 0.1,
            steps: 4,
            record_every: 1,
        };
        let tr = langevin_run(&cfg, &[1.0], &[0.0], &mut SeedSequence::new(0, "l").rng(0)).unwrap();
        let (mut x, mut p) = (1.0, 0.0);
        for i in 1..=4 {
            p -= 0.05 * x;
            x += 0.1 * p;
            p -= 0.05 * x;
            assert_eq!(tr.x(i)[0], x);
            assert_eq!(tr.p(i)[0], p);
        }
    }
}
