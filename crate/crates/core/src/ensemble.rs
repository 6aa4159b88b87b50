//! Ensembles of the reduced one-dimensional dynamics: the example coupling
//! seen along (1,1,1)/√3 with λ(X) = X²/2.
//!
//! Path i draws its initial data and noise from `seeds.rng(i)`, so results
//! do not depend on thread count or batch size.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gle::{gle_run_batch, ConvolutionRule, DampingWeights, GleConfig, SineIntegralTable};
use crate::io::Provenance;
use crate::kernel::SincKernel;
use crate::langevin::{langevin_run_driven, langevin_run_with, reduced_1d_preset, FrictionScaling, LangevinConfig};
use crate::noise::ToeplitzSampler;
use crate::potential::Harmonic;
use crate::rng::SeedSequence;
use crate::trajectory::Trajectory;

/// Paths integrated in lockstep per GLE batch.
pub const DEFAULT_BATCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSetup {
    pub temperature: f64,
    pub m: f64,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    /// (χ, δ) of a stiff bath; replaces √m by χ^{2δ−1/2}√m in the Langevin
    /// friction.
    pub stiff: Option<(f64, f64)>,
}

impl ReducedSetup {
    /// T = 3, Δt = 0.005, 4000 steps.
    pub fn preset(m: f64) -> Self {
        Self {
            temperature: 3.0,
            m,
            dt: 0.005,
            steps: 4000,
            record_every: 1,
            stiff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid(
                "T",
                format!("must be nonnegative, got {}", self.temperature),
            ));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::invalid("m", format!("must be positive, got {}", self.m)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.steps == 0 || self.record_every == 0 {
            return Err(Error::invalid("steps", "steps and record_every must be positive"));
        }
        if let Some((chi, delta)) = self.stiff {
            self.langevin_scaling(chi, delta).validate()?;
        }
        Ok(())
    }

    fn langevin_scaling(&self, chi: f64, delta: f64) -> FrictionScaling {
        FrictionScaling::Stiff { chi, delta, m: self.m }
    }

    fn langevin_config(&self) -> Result<LangevinConfig<Harmonic>> {
        let mut cfg = reduced_1d_preset(self.m, self.temperature, self.dt, self.steps)?;
        cfg.record_every = self.record_every;
        if let Some((chi, delta)) = self.stiff {
            cfg.scaling = self.langevin_scaling(chi, delta);
        }
        Ok(cfg)
    }

    /// Stationary variance of X and P along the coupled direction.
    pub fn stationary_variance(&self) -> f64 {
        self.temperature / 3.0
    }

    pub fn final_time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn provenance(&self) -> Provenance {
        let mut p = Provenance::new()
            .with("T", self.temperature)
            .with("m", self.m)
            .with("dt", self.dt)
            .with("steps", self.steps)
            .with("record_every", self.record_every);
        if let Some((chi, delta)) = self.stiff {
            p.push("chi", chi);
            p.push("delta", delta);
        }
        p
    }
}

/// Initial (X, P) drawn from the stationary law N(0, T/3) each.
pub fn stationary_initial<R: Rng + ?Sized>(setup: &ReducedSetup, rng: &mut R) -> (f64, f64) {
    let sd = setup.stationary_variance().sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let p: f64 = rng.sample(StandardNormal);
    (sd * x, sd * p)
}

pub fn langevin_ensemble(setup: &ReducedSetup, paths: usize, seeds: &SeedSequence) -> Result<Vec<Trajectory>> {
    setup.validate()?;
    let cfg = setup.langevin_config()?;
    let ou = cfg.ou_operator()?;
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.rng(i as u64);
            let (x0, p0) = stationary_initial(setup, &mut rng);
            langevin_run_with(&cfg, &ou, &[x0], &[p0], &mut rng)
        })
        .collect()
}

/// Damping weights and noise factor of the reduced GLE, built once and
/// shared by every path.
#[derive(Debug, Clone)]
pub struct GleEnsemble {
    setup: ReducedSetup,
    weights: DampingWeights,
    sampler: ToeplitzSampler,
}

impl GleEnsemble {
    /// Kernel 12π sin τ/τ; the left rule uses the sine-integral table.
    pub fn new(setup: &ReducedSetup, rule: ConvolutionRule) -> Result<Self> {
        setup.validate()?;
        if setup.stiff.is_some() {
            return Err(Error::invalid(
                "stiff",
                "stiff scaling applies to the Langevin limit only",
            ));
        }
        let kernel = SincKernel::reduced();
        let weights = match rule {
            ConvolutionRule::HalfStepLeft => {
                let table = SineIntegralTable::new(setup.dt, setup.m, 2 * setup.steps)?;
                DampingWeights::from_si_table(&table, kernel.amplitude, &kernel.pattern, rule)?
            }
            ConvolutionRule::Trapezoid => DampingWeights::new(&kernel, setup.dt, setup.m, setup.steps, rule)?,
        };
        let sampler = ToeplitzSampler::new(&kernel, setup.dt, setup.steps, setup.stationary_variance(), setup.m)?;
        Ok(Self {
            setup: *setup,
            weights,
            sampler,
        })
    }

    pub fn setup(&self) -> &ReducedSetup {
        &self.setup
    }

    pub fn sampler(&self) -> &ToeplitzSampler {
        &self.sampler
    }

    pub fn weights(&self) -> &DampingWeights {
        &self.weights
    }

    pub fn run(&self, paths: usize, seeds: &SeedSequence, batch: usize) -> Result<Vec<Trajectory>> {
        let batch = batch.max(1);
        let potential = Harmonic::unit(1);
        let cfg = GleConfig {
            potential: &potential,
            weights: &self.weights,
            steps: self.setup.steps,
            record_every: self.setup.record_every,
            truncation: None,
        };
        let starts: Vec<usize> = (0..paths).step_by(batch).collect();
        let chunks: Vec<Vec<Trajectory>> = starts
            .par_iter()
            .map(|&start| {
                let end = (start + batch).min(paths);
                let mut noises = Vec::with_capacity(end - start);
                let mut x0 = Vec::with_capacity(end - start);
                let mut p0 = Vec::with_capacity(end - start);
                for i in start..end {
                    let mut rng = seeds.rng(i as u64);
                    let (x, p) = stationary_initial(&self.setup, &mut rng);
                    x0.push(vec![x]);
                    p0.push(vec![p]);
                    noises.push(self.sampler.sample(&mut rng, i as u64));
                }
                gle_run_batch(&cfg, &noises, &x0, &p0)
            })
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }
}

/// GLE and Langevin paths coupled through shared randomness: both start
/// from the same (X, P), and the Toeplitz noise of GLE path i is built from
/// ξ_n = (η_{2n−1} + η_{2n})/√2, where η are the OU normals of Langevin path
/// i (two extra normals pad the ends). Each marginal law is unchanged.
pub fn coupled_ensembles(
    ens: &GleEnsemble,
    paths: usize,
    seeds: &SeedSequence,
    batch: usize,
) -> Result<(Vec<Trajectory>, Vec<Trajectory>)> {
    let setup = ens.setup;
    if ens.sampler.direction().is_none() || ens.sampler.factor().size() != setup.steps + 1 {
        return Err(Error::invalid("noise", "coupling needs a scalar noise factor"));
    }
    let batch = batch.max(1);
    let lcfg = setup.langevin_config()?;
    let ou = lcfg.ou_operator()?;
    let potential = Harmonic::unit(1);
    let gcfg = GleConfig {
        potential: &potential,
        weights: &ens.weights,
        steps: setup.steps,
        record_every: setup.record_every,
        truncation: None,
    };
    let starts: Vec<usize> = (0..paths).step_by(batch).collect();
    let chunks: Vec<(Vec<Trajectory>, Vec<Trajectory>)> = starts
        .par_iter()
        .map(|&start| -> Result<_> {
            let end = (start + batch).min(paths);
            let mut noises = Vec::with_capacity(end - start);
            let mut x0 = Vec::with_capacity(end - start);
            let mut p0 = Vec::with_capacity(end - start);
            let mut lang = Vec::with_capacity(end - start);
            for i in start..end {
                let mut rng = seeds.rng(i as u64);
                let (x, p) = stationary_initial(&setup, &mut rng);
                let eta: Vec<f64> = (0..2 * setup.steps + 2).map(|_| rng.sample(StandardNormal)).collect();
                let xi: Vec<f64> = eta
                    .chunks_exact(2)
                    .map(|c| (c[0] + c[1]) * std::f64::consts::FRAC_1_SQRT_2)
                    .collect();
                lang.push(langevin_run_driven(&lcfg, &ou, &[x], &[p], &eta[1..eta.len() - 1])?);
                noises.push(ens.sampler.path_from_normals(&xi, i as u64)?);
                x0.push(vec![x]);
                p0.push(vec![p]);
            }
            Ok((gle_run_batch(&gcfg, &noises, &x0, &p0)?, lang))
        })
        .collect::<Result<_>>()?;
    let mut gle = Vec::with_capacity(paths);
    let mut lang = Vec::with_capacity(paths);
    for (g, l) in chunks {
        gle.extend(g);
        lang.extend(l);
    }
    Ok((gle, lang))
}

pub fn gle_ensemble(
    setup: &ReducedSetup,
    rule: ConvolutionRule,
    paths: usize,
    seeds: &SeedSequence,
) -> Result<Vec<Trajectory>> {
    GleEnsemble::new(setup, rule)?.run(paths, seeds, DEFAULT_BATCH)
}

/// Values of X¹ (or P¹) at the last recorded time, one per path.
pub fn final_values(trajectories: &[Trajectory], momentum: bool) -> Vec<f64> {
    trajectories
        .iter()
        .map(|t| if momentum { t.last_p()[0] } else { t.last_x()[0] })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gle_paths_do_not_depend_on_batch_size() {
        let setup = ReducedSetup {
            steps: 60,
            ..ReducedSetup::preset(0.25)
        };
        let seeds = SeedSequence::new(5, "batch");
        let ens = GleEnsemble::new(&setup, ConvolutionRule::HalfStepLeft).unwrap();
        let a = ens.run(5, &seeds, 1).unwrap();
        let b = ens.run(5, &seeds, 3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.x_component(0), y.x_component(0));
            assert_eq!(x.p_component(0), y.p_component(0));
        }
    }

    #[test]
    fn langevin_ensemble_is_reproducible() {
        let setup = ReducedSetup {
            steps: 50,
            ..ReducedSetup::preset(0.25)
        };
        let seeds = SeedSequence::new(9, "lang");
        let a = langevin_ensemble(&setup, 4, &seeds).unwrap();
        let b = langevin_ensemble(&setup, 4, &seeds).unwrap();
        assert_eq!(final_values(&a, false), final_values(&b, false));
    }
}
