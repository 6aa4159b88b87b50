use faer::{Mat, Side};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Negative eigenvalues down to this multiple of λ_max are clipped to zero.
pub const CLIP_THRESHOLD: f64 = 1e-8;
/// Eigenpairs below this multiple of λ_max are dropped from the factor.
pub const SPECTRAL_FLOOR: f64 = 1e-12;

/// Symmetric square root S = U√Λ₊Uᵀ of a covariance matrix, stored in
/// low-rank form: only eigenpairs above the spectral floor are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceFactor {
    size: usize,
    rank: usize,
    // row-major size × rank
    basis: Vec<f64>,
    sqrt_eigs: Vec<f64>,
    floor: f64,
}

impl CovarianceFactor {
    pub fn zero(size: usize) -> Self {
        Self {
            size,
            rank: 0,
            basis: Vec::new(),
            sqrt_eigs: Vec::new(),
            floor: 0.0,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Absolute eigenvalue cutoff that was applied.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Dense symmetric factor S.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.size, self.size);
        for i in 0..self.size {
            for j in 0..self.size {
                let mut acc = 0.0;
                for r in 0..self.rank {
                    acc += self.basis[i * self.rank + r] * self.sqrt_eigs[r] * self.basis[j * self.rank + r];
                }
                s[(i, j)] = acc;
            }
        }
        s
    }

    /// S·Sᵀ = U Λ₊ Uᵀ.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.size, self.size);
        for i in 0..self.size {
            for j in 0..=i {
                let mut acc = 0.0;
                for r in 0..self.rank {
                    let l = self.sqrt_eigs[r];
                    acc += self.basis[i * self.rank + r] * l * l * self.basis[j * self.rank + r];
                }
                s[(i, j)] = acc;
                s[(j, i)] = acc;
            }
        }
        s
    }

    /// Applies S to `xi`.
    pub fn apply(&self, xi: &[f64], out: &mut [f64]) {
        assert_eq!(xi.len(), self.size);
        assert_eq!(out.len(), self.size);
        let mut coeff = vec![0.0; self.rank];
        for (i, x) in xi.iter().enumerate() {
            let row = &self.basis[i * self.rank..(i + 1) * self.rank];
            for (c, u) in coeff.iter_mut().zip(row) {
                *c += u * x;
            }
        }
        for (c, l) in coeff.iter_mut().zip(&self.sqrt_eigs) {
            *c *= l;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.basis[i * self.rank..(i + 1) * self.rank];
            *o = row.iter().zip(&coeff).map(|(u, c)| u * c).sum();
        }
    }

    /// Draws ξ ~ N(0, I) of full size and returns S·ξ.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let xi: Vec<f64> = (0..self.size).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = vec![0.0; self.size];
        self.apply(&xi, &mut out);
        out
    }
}

/// Symmetric eigendecomposition square root of a covariance matrix.
pub fn sqrt_psd(sigma: &DMatrix<f64>) -> Result<CovarianceFactor> {
    let n = sigma.nrows();
    if sigma.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sigma.ncols(),
        });
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sigma", "entries must be finite"));
    }
    let scale = sigma.amax();
    let asym = (sigma - sigma.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if n == 0 || scale == 0.0 {
        return Ok(CovarianceFactor::zero(n));
    }
    let a = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (sigma[(i, j)] + sigma[(j, i)]));
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = eig.S();
    let u = eig.U();
    let eigs: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let lmax = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lmin = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmax <= 0.0 {
        return Err(Error::NotPositiveSemidefinite {
            eigenvalue: lmin,
            threshold: 0.0,
        });
    }
    let threshold = -CLIP_THRESHOLD * lmax;
    if lmin < threshold {
        return Err(Error::NotPositiveSemidefinite {
            eigenvalue: lmin,
            threshold,
        });
    }
    let floor = SPECTRAL_FLOOR * lmax;
    let kept: Vec<usize> = (0..n).filter(|&i| eigs[i] > floor).collect();
    let rank = kept.len();
    let mut basis = vec![0.0; n * rank];
    for i in 0..n {
        for (r, &k) in kept.iter().enumerate() {
            basis[i * rank + r] = u[(i, k)];
        }
    }
    let sqrt_eigs = kept.iter().map(|&k| eigs[k].sqrt()).collect();
    Ok(CovarianceFactor {
        size: n,
        rank,
        basis,
        sqrt_eigs,
        floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let f = sqrt_psd(&DMatrix::identity(4, 4)).unwrap();
        assert!((f.to_dense() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-14);
        let f = sqrt_psd(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]))).unwrap();
        let s = f.to_dense();
        assert!((s[(0, 0)] - 2.0).abs() < 1e-14 && (s[(1, 1)] - 3.0).abs() < 1e-14 && s[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(sqrt_psd(&m), Err(Error::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn clips_tiny_negative_eigenvalues() {
        let v = nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let mut m = &v * v.transpose();
        m[(0, 0)] -= 1e-10;
        let f = sqrt_psd(&m).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.reconstruct() - &v * v.transpose()).amax() < 1e-9);
    }

    #[test]
    fn zero_matrix_gives_zero_factor() {
        let f = sqrt_psd(&DMatrix::zeros(3, 3)).unwrap();
        let mut rng = crate::rng::SeedSequence::new(1, "t").rng(0);
        assert_eq!(f.sample(&mut rng), vec![0.0; 3]);
    }
}
