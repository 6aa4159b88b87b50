use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::coupling::{CouplingSpec, ExampleBeta, ForceTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrictionProvenance {
    Forces,
    Beta,
    User,
}

/// Symmetric positive semidefinite friction matrix κ.
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionMatrix {
    matrix: DMatrix<f64>,
    provenance: FrictionProvenance,
}

impl FrictionMatrix {
    /// Validates a user-supplied κ: square, symmetric to 10⁻¹² relative and
    /// with no eigenvalue below −10⁻¹²·‖κ‖.
    pub fn user(matrix: DMatrix<f64>) -> Result<Self> {
        check_symmetric_psd(&matrix, 1e-12)?;
        Ok(Self {
            matrix: symmetrize(&matrix),
            provenance: FrictionProvenance::User,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
            provenance: FrictionProvenance::User,
        }
    }

    fn outer(v: &DVector<f64>, scale: f64, provenance: FrictionProvenance) -> Self {
        Self {
            matrix: symmetrize(&(v * v.transpose() * scale)),
            provenance,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn provenance(&self) -> FrictionProvenance {
        self.provenance
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Checks symmetry and positive semidefiniteness up to `rel` times the
/// largest absolute entry.
pub(crate) fn check_symmetric_psd(m: &DMatrix<f64>, rel: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix", "entries must be finite"));
    }
    let scale = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > rel * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if m.nrows() == 0 || scale == 0.0 {
        return Ok(());
    }
    let ev = SymmetricEigen::new(symmetrize(m)).eigenvalues;
    let min = ev.min();
    let threshold = -rel * scale * m.nrows() as f64;
    if min < threshold {
        return Err(Error::NotPositiveSemidefinite {
            eigenvalue: min,
            threshold,
        });
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid("c", format!("must be positive, got {c}")));
    }
    Ok(())
}

/// κ = s sᵀ / (4π c³) with s_ℓ = Σ_j F̄_{ℓj}.
pub fn friction_from_forces(forces: &ForceTable, c: f64) -> Result<FrictionMatrix> {
    check_c(c)?;
    let s = DVector::from_vec(forces.row_sums());
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("forces", "row sums must be finite"));
    }
    Ok(FrictionMatrix::outer(
        &s,
        1.0 / (4.0 * PI * c.powi(3)),
        FrictionProvenance::Forces,
    ))
}

/// κ = 2π² f(0) with f(0) = β(0)β(0)ᵀ (2cπ)^{−3}.
pub fn friction_from_beta(coupling: &CouplingSpec, c: f64) -> Result<FrictionMatrix> {
    check_c(c)?;
    let b0 = match coupling {
        CouplingSpec::Forces(t) => DVector::from_vec(t.row_sums()),
        CouplingSpec::Example(e) => {
            ExampleBeta::check_stiffness(c)?;
            let mut out = vec![0.0; e.dim];
            e.eval([0.0; 3], c, &mut out);
            DVector::from_vec(out)
        }
        CouplingSpec::Beta(b) => {
            let mut out = vec![0.0; b.dim()];
            b.eval([0.0; 3], &mut out);
            DVector::from_vec(out)
        }
    };
    if b0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("beta", "coupling is undefined at zero frequency"));
    }
    let scale = 2.0 * PI * PI / (2.0 * c * PI).powi(3);
    Ok(FrictionMatrix::outer(&b0, scale, FrictionProvenance::Beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_row_table() {
        let t = ForceTable::parse("1 0 0 0 2\n2 0 0 0 1\n2 1 0 0 2\n").unwrap();
        let k = friction_from_forces(&t, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[4.0, 6.0, 6.0, 9.0]) / (4.0 * PI);
        assert!((k.matrix() - expected).amax() < 1e-15);
        assert_eq!(k.provenance(), FrictionProvenance::Forces);
    }

    #[test]
    fn example_value() {
        let k = friction_from_beta(&CouplingSpec::example(), 1.0).unwrap();
        assert!(k.matrix().iter().all(|v| (v - 2.0 * PI * PI).abs() < 1e-12));
    }

    #[test]
    fn user_matrix_validation() {
        assert!(FrictionMatrix::user(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
        assert!(FrictionMatrix::user(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        assert!(FrictionMatrix::user(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])).is_ok());
    }
}
