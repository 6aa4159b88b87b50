//! Several electronic surfaces, each with its own potential, friction and
//! bath, mixed with canonical weights q_j ∝ Z_sys,j · Z_bath,j.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::FrictionMatrix;
use crate::langevin::{langevin_run_with, FrictionScaling, LangevinConfig};
use crate::potential::Potential;
use crate::quadrature::{integrate, Tolerance};
use crate::rng::{SeedSequence, TrajectoryRng};

#[derive(Debug)]
pub struct Surface {
    pub potential: Box<dyn Potential>,
    pub kappa: FrictionMatrix,
    /// log det of the bath Hessian on this surface.
    pub bath_log_det: f64,
}

#[derive(Debug)]
pub struct SurfaceSet {
    surfaces: Vec<Surface>,
}

impl SurfaceSet {
    pub fn new(surfaces: Vec<Surface>) -> Result<Self> {
        let first = surfaces
            .first()
            .ok_or_else(|| Error::invalid("surfaces", "need at least one surface"))?;
        let dim = first.potential.dim();
        for s in &surfaces {
            if s.potential.dim() != dim || s.kappa.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.potential.dim(),
                });
            }
            if !s.bath_log_det.is_finite() {
                return Err(Error::invalid("bath_log_det", "must be finite"));
            }
        }
        Ok(Self { surfaces })
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.surfaces[0].potential.dim()
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMethod {
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceWeights {
    pub q: Vec<f64>,
    pub stderr: Vec<f64>,
    /// log Z_sys,j + log Z_bath,j up to a constant common to all surfaces.
    pub log_z: Vec<f64>,
}

/// Box [−L, L]^N holding the Boltzmann factor, its minimum λ*, and a
/// Gaussian envelope used for importance and rejection sampling.
#[derive(Debug, Clone)]
struct Confinement {
    half_width: f64,
    lambda_star: f64,
    center: Vec<f64>,
    sigma: f64,
    bound: f64,
}

const TAIL: f64 = 1e-18;
const MAX_HALF_WIDTH: f64 = 1e4;

fn grid_points(dim: usize, half_width: f64) -> Vec<Vec<f64>> {
    let per_axis = match dim {
        1 => 401,
        2 => 61,
        _ => 21,
    };
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (per_axis - 1) as f64)
        .collect();
    let mut pts = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(pts.len() * per_axis);
        for p in &pts {
            for a in &axis {
                let mut q = p.clone();
                q.push(*a);
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

fn confine(potential: &dyn Potential, temperature: f64) -> Result<Confinement> {
    let dim = potential.dim();
    if dim == 0 || dim > 3 {
        return Err(Error::invalid(
            "dim",
            format!("surface weights support 1 to 3 coordinates, got {dim}"),
        ));
    }
    let mut half_width = 2.0;
    loop {
        let pts = grid_points(dim, half_width);
        let values: Vec<f64> = pts.iter().map(|p| potential.value(p)).collect();
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("potential", "evaluates to NaN"));
        }
        let (imin, lambda_star) =
            values
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        if !lambda_star.is_finite() {
            return Err(Error::Divergent(
                "potential is unbounded below on the search box".into(),
            ));
        }
        let on_face = |p: &Vec<f64>| p.iter().any(|x| x.abs() == half_width);
        let tail = pts
            .iter()
            .zip(&values)
            .filter(|(p, _)| on_face(p))
            .map(|(_, v)| (-(v - lambda_star) / temperature).exp())
            .fold(0.0, f64::max);
        if tail < TAIL {
            let center = pts[imin].clone();
            let sigma = envelope_width(potential, &center, temperature, half_width);
            let bound = pts
                .iter()
                .zip(&values)
                .map(|(p, v)| log_ratio(p, *v, lambda_star, &center, sigma, temperature))
                .fold(f64::NEG_INFINITY, f64::max);
            return Ok(Confinement {
                half_width,
                lambda_star,
                center,
                sigma,
                bound: bound + 0.2,
            });
        }
        half_width *= 2.0;
        if half_width > MAX_HALF_WIDTH {
            return Err(Error::Divergent(format!(
                "Boltzmann factor still {tail:e} of its peak at |x| = {}",
                half_width / 2.0
            )));
        }
    }
}

fn envelope_width(potential: &dyn Potential, center: &[f64], temperature: f64, half_width: f64) -> f64 {
    let h = 1e-4 * half_width.max(1.0);
    let mut curv = f64::INFINITY;
    let c0 = potential.value(center);
    for i in 0..center.len() {
        let mut xp = center.to_vec();
        let mut xm = center.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let d2 = (potential.value(&xp) - 2.0 * c0 + potential.value(&xm)) / (h * h);
        curv = curv.min(d2);
    }
    if curv > 0.0 && curv.is_finite() {
        (1.5 * (temperature / curv).sqrt()).min(half_width)
    } else {
        half_width / 4.0
    }
}

// log of e^{−(λ−λ*)/T} divided by the unnormalised Gaussian envelope
fn log_ratio(x: &[f64], lambda: f64, lambda_star: f64, center: &[f64], sigma: f64, temperature: f64) -> f64 {
    let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
    -(lambda - lambda_star) / temperature + r2 / (2.0 * sigma * sigma)
}

fn box_integral(potential: &dyn Potential, c: &Confinement, temperature: f64) -> Result<f64> {
    let dim = potential.dim();
    let mut x = vec![0.0; dim];
    nested(potential, c, temperature, &mut x, 0)
}

fn nested(potential: &dyn Potential, c: &Confinement, temperature: f64, x: &mut Vec<f64>, axis: usize) -> Result<f64> {
    let dim = x.len();
    let tol = Tolerance::absolute(1e-300).with_rel(1e-12).with_max_intervals(4000);
    let mut failure = None;
    let (v, _) = integrate(
        |s| {
            x[axis] = s;
            if axis + 1 == dim {
                (-(potential.value(x) - c.lambda_star) / temperature).exp()
            } else {
                match nested(potential, c, temperature, x, axis + 1) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            }
        },
        -c.half_width,
        c.half_width,
        tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(v)
}

fn sample_envelope<R: Rng + ?Sized>(c: &Confinement, dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|i| c.center[i] + c.sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Canonical surface weights. The momentum factor is common to all surfaces
/// and drops out.
pub fn surface_weights(set: &SurfaceSet, temperature: f64, method: WeightMethod) -> Result<SurfaceWeights> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("T", format!("must be positive, got {temperature}")));
    }
    let dim = set.dim();
    let mut log_z = Vec::with_capacity(set.len());
    let mut rel_err = Vec::with_capacity(set.len());
    for (j, s) in set.surfaces().iter().enumerate() {
        let c = confine(s.potential.as_ref(), temperature)?;
        let (log_int, rel) = match method {
            WeightMethod::Quadrature => (box_integral(s.potential.as_ref(), &c, temperature)?.ln(), 0.0),
            WeightMethod::MonteCarlo { samples, seed } => {
                if samples < 2 {
                    return Err(Error::invalid("samples", "need at least two samples"));
                }
                let mut rng = SeedSequence::new(seed, "surface-weights").rng(j as u64);
                let norm = (2.0 * std::f64::consts::PI * c.sigma * c.sigma).powf(dim as f64 / 2.0);
                let mut sum = 0.0;
                let mut sum2 = 0.0;
                for _ in 0..samples {
                    let x = sample_envelope(&c, dim, &mut rng);
                    let lr = log_ratio(
                        &x,
                        s.potential.value(&x),
                        c.lambda_star,
                        &c.center,
                        c.sigma,
                        temperature,
                    );
                    let w = lr.exp() * norm;
                    sum += w;
                    sum2 += w * w;
                }
                let n = samples as f64;
                let mean = sum / n;
                let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
                (mean.ln(), (var / n).sqrt() / mean)
            }
        };
        log_z.push(-c.lambda_star / temperature + log_int - 0.5 * s.bath_log_det);
        rel_err.push(rel);
    }
    let top = log_z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_z.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    let q: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let stderr = (0..q.len())
        .map(|j| {
            let v: f64 = (0..q.len())
                .map(|i| {
                    let d = if i == j { 1.0 - q[i] } else { -q[i] };
                    (q[j] * d * rel_err[i]).powi(2)
                })
                .sum();
            v.sqrt()
        })
        .collect();
    Ok(SurfaceWeights { q, stderr, log_z })
}

/// Sampler for the configurational Gibbs density e^{−λ/T} by rejection
/// against a Gaussian envelope.
#[derive(Debug, Clone)]
pub struct GibbsPositionSampler {
    confinement: Confinement,
    temperature: f64,
}

impl GibbsPositionSampler {
    pub fn new(potential: &dyn Potential, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("T", format!("must be positive, got {temperature}")));
        }
        Ok(Self {
            confinement: confine(potential, temperature)?,
            temperature,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, potential: &dyn Potential, rng: &mut R) -> Vec<f64> {
        let c = &self.confinement;
        loop {
            let x = sample_envelope(c, potential.dim(), rng);
            let lr = log_ratio(
                &x,
                potential.value(&x),
                c.lambda_star,
                &c.center,
                c.sigma,
                self.temperature,
            );
            let u: f64 = rng.random();
            if u.ln() < lr - c.bound {
                return x;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MixedRun {
    pub time: f64,
    pub temperature: f64,
    pub scaling: FrictionScaling,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedEstimate {
    pub value: f64,
    pub stderr: f64,
    /// (mean, stderr) of A(X_t, P_t)·B(X_0, P_0) per surface.
    pub per_surface: Vec<(f64, f64)>,
}

/// Σ_j q_j E_j[A(X_t, P_t) B(X_0, P_0)] with (X_0, P_0) Gibbs-distributed on
/// surface j and X_t the Langevin evolution on that surface.
pub fn mixed_observable<A, B>(
    set: &SurfaceSet,
    weights: &SurfaceWeights,
    a: A,
    b: B,
    run: &MixedRun,
) -> Result<MixedEstimate>
where
    A: Fn(&[f64], &[f64]) -> f64 + Sync,
    B: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    if weights.q.len() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            found: weights.q.len(),
        });
    }
    if run.paths < 2 {
        return Err(Error::invalid("paths", "need at least two paths"));
    }
    if !(run.dt > 0.0) || !(run.time >= 0.0) {
        return Err(Error::invalid("dt", "need a positive step and nonnegative time"));
    }
    let steps = (run.time / run.dt).round() as usize;
    let seeds = SeedSequence::new(run.seed, "mixed-observable");
    let mut per_surface = Vec::with_capacity(set.len());
    for (j, s) in set.surfaces().iter().enumerate() {
        let pot = s.potential.as_ref();
        let sampler = GibbsPositionSampler::new(pot, run.temperature)?;
        let cfg = LangevinConfig {
            potential: pot,
            kappa: s.kappa.clone(),
            temperature: run.temperature,
            scaling: run.scaling,
            dt: run.dt,
            steps,
            record_every: steps.max(1),
        };
        let ou = cfg.ou_operator()?;
        let surface_seeds = seeds.child(&format!("surface-{j}"));
        let sd = run.temperature.sqrt();
        let samples: Vec<f64> = (0..run.paths)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let mut rng: TrajectoryRng = surface_seeds.rng(i as u64);
                let x0 = sampler.sample(pot, &mut rng);
                let p0: Vec<f64> = (0..pot.dim())
                    .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let tr = langevin_run_with(&cfg, &ou, &x0, &p0, &mut rng)?;
                Ok(a(tr.last_x(), tr.last_p()) * b(&x0, &p0))
            })
            .collect::<Result<_>>()?;
        per_surface.push(crate::analysis::mean_stderr(&samples));
    }
    let value = per_surface.iter().zip(&weights.q).map(|((m, _), q)| q * m).sum();
    let stderr = per_surface
        .iter()
        .zip(&weights.q)
        .map(|((_, se), q)| (q * se).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(MixedEstimate {
        value,
        stderr,
        per_surface,
    })
}
