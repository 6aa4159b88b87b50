//! Gaussian fluctuation paths with covariance T·K((t − s)/√m).

mod factor;
mod spectral;

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

pub use factor::{sqrt_psd, CovarianceFactor, CLIP_THRESHOLD, SPECTRAL_FLOOR};
pub use spectral::{spectral_noise_finite, SpectralNoise};

use crate::error::{Error, Result};
use crate::io::{write_table, Provenance};
use crate::kernel::MemoryKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMethod {
    Toeplitz,
    Spectral,
    Zero,
}

impl fmt::Display for NoiseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMethod::Toeplitz => "toeplitz",
            NoiseMethod::Spectral => "spectral",
            NoiseMethod::Zero => "zero",
        })
    }
}

/// ζ(t_i) ∈ ℝ^N on the uniform grid t_i = iΔt, i = 0..=steps.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub dt: f64,
    pub dim: usize,
    pub values: Vec<f64>,
    pub seed: u64,
    pub method: NoiseMethod,
    pub m: f64,
    pub temperature: f64,
}

impl NoisePath {
    pub fn zero(dt: f64, steps: usize, dim: usize) -> Self {
        Self {
            dt,
            dim,
            values: vec![0.0; (steps + 1) * dim],
            seed: 0,
            method: NoiseMethod::Zero,
            m: 1.0,
            temperature: 0.0,
        }
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn component(&self, l: usize) -> Vec<f64> {
        (0..=self.steps()).map(|i| self.values[i * self.dim + l]).collect()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::new()
            .with("seed", self.seed)
            .with("method", self.method)
            .with("m", self.m)
            .with("T", self.temperature)
            .with("dt", self.dt)
    }

    /// CSV `t, zeta_1..zeta_N`.
    pub fn write_csv<W: Write>(&self, w: &mut W, extra: &Provenance) -> Result<()> {
        let mut prov = self.provenance();
        prov.extend(extra);
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=self.dim).map(|l| format!("zeta_{l}")));
        let rows = (0..=self.steps()).map(|i| {
            let mut r = vec![i as f64 * self.dt];
            r.extend_from_slice(self.at(i));
            r
        });
        write_table(w, &prov, &cols, rows)
    }
}

fn check_grid(dt: f64, temperature: f64, m: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("T", format!("must be nonnegative, got {temperature}")));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid("m", format!("must be positive, got {m}")));
    }
    Ok(())
}

/// (steps+1)×(steps+1) Toeplitz matrix Σ_ij = T·K^{ℓℓ′}(|t_i − t_j|/√m).
/// The zero lag is evaluated at 0.
pub fn toeplitz_covariance(
    kernel: &dyn MemoryKernel,
    entry: (usize, usize),
    dt: f64,
    steps: usize,
    temperature: f64,
    m: f64,
) -> Result<DMatrix<f64>> {
    check_grid(dt, temperature, m)?;
    let n = kernel.dim();
    if entry.0 >= n || entry.1 >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: entry.0.max(entry.1) + 1,
        });
    }
    let sqrt_m = m.sqrt();
    let mut row = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        row.push(temperature * kernel.eval(i as f64 * dt / sqrt_m)?[entry]);
    }
    Ok(DMatrix::from_fn(steps + 1, steps + 1, |i, j| row[i.abs_diff(j)]))
}

/// Toeplitz sampler for ζ. When every K(τ) is a multiple of one fixed rank-one
/// matrix v vᵀ the scalar process along v is factored and mapped back;
/// otherwise the full block covariance of size (steps+1)·N is factored,
/// which costs O(((steps+1)N)³).
#[derive(Debug, Clone)]
pub struct ToeplitzSampler {
    dim: usize,
    dt: f64,
    steps: usize,
    m: f64,
    temperature: f64,
    direction: Option<Vec<f64>>,
    factor: CovarianceFactor,
}

impl ToeplitzSampler {
    pub fn new(kernel: &dyn MemoryKernel, dt: f64, steps: usize, temperature: f64, m: f64) -> Result<Self> {
        check_grid(dt, temperature, m)?;
        let n = kernel.dim();
        let sqrt_m = m.sqrt();
        let lags: Vec<DMatrix<f64>> = (0..=steps)
            .map(|i| kernel.eval(i as f64 * dt / sqrt_m))
            .collect::<Result<_>>()?;
        let direction = rank_one_direction(&lags);
        let factor = match &direction {
            Some(u) => {
                let row: Vec<f64> = lags.iter().map(|k| temperature * quad_form(k, u)).collect();
                let sigma = DMatrix::from_fn(steps + 1, steps + 1, |i, j| row[i.abs_diff(j)]);
                sqrt_psd(&sigma)?
            }
            None => {
                let size = (steps + 1) * n;
                let sigma = DMatrix::from_fn(size, size, |a, b| {
                    let (i, l) = (a / n, a % n);
                    let (j, l2) = (b / n, b % n);
                    temperature * lags[i.abs_diff(j)][(l, l2)]
                });
                sqrt_psd(&sigma)?
            }
        };
        Ok(Self {
            dim: n,
            dt,
            steps,
            m,
            temperature,
            direction,
            factor,
        })
    }

    pub fn factor(&self) -> &CovarianceFactor {
        &self.factor
    }

    /// Unit vector u with K(τ) = k(τ) u uᵀ, if the kernel has that structure.
    pub fn direction(&self) -> Option<&[f64]> {
        self.direction.as_deref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> NoisePath {
        let raw = self.factor.sample(rng);
        self.assemble(raw, seed)
    }

    /// Path S·ξ for given standard normals ξ of the factor size.
    pub fn path_from_normals(&self, xi: &[f64], seed: u64) -> Result<NoisePath> {
        if xi.len() != self.factor.size() {
            return Err(Error::DimensionMismatch {
                expected: self.factor.size(),
                found: xi.len(),
            });
        }
        let mut raw = vec![0.0; xi.len()];
        self.factor.apply(xi, &mut raw);
        Ok(self.assemble(raw, seed))
    }

    fn assemble(&self, raw: Vec<f64>, seed: u64) -> NoisePath {
        let values = match &self.direction {
            Some(u) => {
                let mut v = Vec::with_capacity((self.steps + 1) * self.dim);
                for z in &raw {
                    v.extend(u.iter().map(|ui| ui * z));
                }
                v
            }
            None => raw,
        };
        NoisePath {
            dt: self.dt,
            dim: self.dim,
            values,
            seed,
            method: NoiseMethod::Toeplitz,
            m: self.m,
            temperature: self.temperature,
        }
    }
}

/// ζ = S·ξ for a scalar factor, as a one-component path.
pub fn sample_noise_path<R: Rng + ?Sized>(factor: &CovarianceFactor, dt: f64, rng: &mut R, seed: u64) -> NoisePath {
    NoisePath {
        dt,
        dim: 1,
        values: factor.sample(rng),
        seed,
        method: NoiseMethod::Toeplitz,
        m: f64::NAN,
        temperature: f64::NAN,
    }
}

fn quad_form(k: &DMatrix<f64>, u: &[f64]) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += u[i] * k[(i, j)] * u[j];
        }
    }
    acc
}

fn rank_one_direction(lags: &[DMatrix<f64>]) -> Option<Vec<f64>> {
    let n = lags[0].nrows();
    if n == 1 {
        return Some(vec![1.0]);
    }
    let scale = lags.iter().map(|k| k.amax()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Some(vec![1.0 / (n as f64).sqrt(); n]);
    }
    let k0 = &lags[0];
    let eig = SymmetricEigen::new((k0 + k0.transpose()) * 0.5);
    let imax = eig.eigenvalues.iamax();
    let mut u: Vec<f64> = eig.eigenvectors.column(imax).iter().copied().collect();
    // fix the sign so the direction is reproducible
    let lead = u
        .iter()
        .cloned()
        .fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
    if lead < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let uu = nalgebra::DVector::from_vec(u.clone());
    let proj = &uu * uu.transpose();
    for k in lags {
        let s = quad_form(k, &u);
        if (k - &proj * s).amax() > 1e-10 * scale {
            return None;
        }
    }
    Some(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SincKernel;
    use std::f64::consts::PI;

    #[test]
    fn example_covariance_entries() {
        let k = SincKernel::example(3);
        let s = toeplitz_covariance(&k, (0, 1), 0.005, 10, 3.0, 0.01).unwrap();
        assert!((s[(4, 4)] - 12.0 * PI).abs() < 1e-12);
        let z = toeplitz_covariance(&k, (0, 0), 0.005, 10, 0.0, 0.01).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        let s = toeplitz_covariance(&k, (0, 0), PI, 4, 3.0, 1.0).unwrap();
        assert!(s[(1, 2)].abs() < 1e-14);
    }

    #[test]
    fn example_kernel_is_rank_one() {
        let k = SincKernel::example(3);
        let sampler = ToeplitzSampler::new(&k, 0.01, 50, 3.0, 0.25).unwrap();
        let u = sampler.direction().unwrap();
        for v in u {
            assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        let mut rng = crate::rng::SeedSequence::new(3, "noise").rng(0);
        let path = sampler.sample(&mut rng, 3);
        assert_eq!(path.steps(), 50);
        let z = path.at(7);
        assert!((z[0] - z[1]).abs() < 1e-12 && (z[1] - z[2]).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_path() {
        let k = SincKernel::reduced();
        let sampler = ToeplitzSampler::new(&k, 0.005, 100, 3.0, 0.01).unwrap();
        let seq = crate::rng::SeedSequence::new(11, "noise");
        let a = sampler.sample(&mut seq.rng(4), 11);
        let b = sampler.sample(&mut seq.rng(4), 11);
        assert_eq!(a, b);
        let c = sampler.sample(&mut seq.rng(5), 11);
        assert_ne!(a, c);
    }
}
