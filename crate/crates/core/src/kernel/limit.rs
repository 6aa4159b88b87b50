use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::coupling::CouplingSpec;
use super::memory::{check_tau, pair_count, unpack_pairs, KernelMode, MemoryKernel, SincKernel};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_composite, integrate_vec, Tolerance};

/// Default absolute tolerance per kernel entry.
pub const LIMIT_TOLERANCE: f64 = 1e-8;

fn continuum_dim(coupling: &CouplingSpec, c: f64) -> Result<usize> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid("c", format!("must be positive, got {c}")));
    }
    match coupling {
        CouplingSpec::Forces(_) => Err(Error::invalid(
            "coupling",
            "the limit kernel needs a continuum coupling profile",
        )),
        CouplingSpec::Beta(b) => {
            b.check_support(c)?;
            Ok(b.dim())
        }
        CouplingSpec::Example(e) => {
            super::coupling::ExampleBeta::check_stiffness(c)?;
            Ok(e.dim)
        }
    }
}

fn radial_extent(coupling: &CouplingSpec, c: f64) -> f64 {
    let cube = 2.0 * c * 3f64.sqrt();
    match coupling {
        CouplingSpec::Beta(b) => b.support_radius().min(cube),
        CouplingSpec::Example(_) => 1.0,
        CouplingSpec::Forces(_) => 0.0,
    }
}

/// Density f(𝛚, ℓ, ℓ′) = β_ℓ β_ℓ′ ∏ (π (4c² − ω_i²)^{1/2})^{−1}, packed by pairs.
fn density(coupling: &CouplingSpec, c: f64, w: [f64; 3], beta: &mut [f64], out: &mut [f64]) -> Result<()> {
    let mut jac = 1.0;
    for wi in w {
        let s = 4.0 * c * c - wi * wi;
        if s <= 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return Ok(());
        }
        jac /= PI * s.sqrt();
    }
    coupling.beta_at(w, c, beta)?;
    let dim = beta.len();
    let mut p = 0;
    for i in 0..dim {
        for j in i..dim {
            out[p] = beta[i] * beta[j] * jac;
            p += 1;
        }
    }
    Ok(())
}

/// Angular integral S(r) = ∫_0^π ∫_0^{2π} f(r n̂(θ, α)) sin θ dα dθ of the
/// density over the sphere of radius r, packed by pairs.
pub fn angular_profile(coupling: &CouplingSpec, c: f64, r: f64, tol: f64) -> Result<Vec<f64>> {
    let dim = continuum_dim(coupling, c)?;
    angular_inner(coupling, c, dim, r, tol)
}

fn angular_inner(coupling: &CouplingSpec, c: f64, dim: usize, r: f64, tol: f64) -> Result<Vec<f64>> {
    let pc = pair_count(dim);
    let mut beta = vec![0.0; dim];
    let mut failure: Option<Error> = None;
    let theta_tol = Tolerance::absolute(tol).with_max_intervals(400);
    let alpha_tol = Tolerance::absolute(tol / (2.0 * PI)).with_max_intervals(400);
    let est = integrate_vec(
        |theta, out| {
            let (st, ct) = theta.sin_cos();
            let inner = integrate_vec(
                |alpha, o| {
                    let (sa, ca) = alpha.sin_cos();
                    let w = [r * st * ca, r * st * sa, r * ct];
                    if let Err(e) = density(coupling, c, w, &mut beta, o) {
                        failure.get_or_insert(e);
                    }
                },
                0.0,
                2.0 * PI,
                pc,
                alpha_tol,
            );
            match inner {
                Ok(v) => {
                    for (o, x) in out.iter_mut().zip(v.value) {
                        *o = st * x;
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            }
        },
        0.0,
        PI,
        pc,
        theta_tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value)
}

/// K∞(τ) = ∫ cos(τ|𝛚|) f(𝛚) d𝛚/|𝛚|² by nested adaptive quadrature in
/// spherical coordinates, to absolute tolerance `tol` per entry.
pub fn kernel_limit_quadrature(coupling: &CouplingSpec, c: f64, tau: f64, tol: f64) -> Result<DMatrix<f64>> {
    check_tau(tau)?;
    let dim = continuum_dim(coupling, c)?;
    let pc = pair_count(dim);
    let radius = radial_extent(coupling, c);
    let inner_tol = tol / (4.0 * radius);
    let mut failure: Option<Error> = None;
    let est = integrate_vec(
        |r, out| match angular_inner(coupling, c, dim, r, inner_tol) {
            Ok(s) => {
                let w = (tau * r).cos();
                for (o, v) in out.iter_mut().zip(s) {
                    *o = w * v;
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
                out.iter_mut().for_each(|o| *o = 0.0);
            }
        },
        0.0,
        radius,
        pc,
        Tolerance::absolute(tol / 2.0),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(unpack_pairs(dim, &est.value))
}

/// K∞(τ). The example coupling uses its closed form 4π sin τ/τ; other
/// continuum profiles go through [`kernel_limit_quadrature`].
pub fn kernel_limit(coupling: &CouplingSpec, c: f64, tau: f64) -> Result<DMatrix<f64>> {
    check_tau(tau)?;
    match coupling {
        CouplingSpec::Example(e) => {
            super::coupling::ExampleBeta::check_stiffness(c)?;
            SincKernel::example(e.dim).eval(tau)
        }
        _ => kernel_limit_quadrature(coupling, c, tau, LIMIT_TOLERANCE),
    }
}

/// K∞ evaluated by quadrature at every call.
#[derive(Debug, Clone)]
pub struct LimitKernel {
    coupling: CouplingSpec,
    c: f64,
    dim: usize,
    tol: f64,
}

impl LimitKernel {
    pub fn new(coupling: CouplingSpec, c: f64) -> Result<Self> {
        let dim = continuum_dim(&coupling, c)?;
        Ok(Self {
            coupling,
            c,
            dim,
            tol: LIMIT_TOLERANCE,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

impl MemoryKernel for LimitKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mode(&self) -> KernelMode {
        KernelMode::LimitQuadrature
    }

    fn eval(&self, tau: f64) -> Result<DMatrix<f64>> {
        kernel_limit_quadrature(&self.coupling, self.c, tau, self.tol)
    }
}

/// K∞ on a lag range [0, τ_max] from a radial profile S(r) tabulated once at
/// composite Gauss–Legendre nodes; each evaluation is a single weighted
/// cosine sum. Panels are sized so that τ_max·h stays below one radian.
#[derive(Debug, Clone)]
pub struct RadialProfileKernel {
    dim: usize,
    tau_max: f64,
    nodes: Vec<f64>,
    // weight times S(r), pair-packed per node
    weighted: Vec<f64>,
}

impl RadialProfileKernel {
    pub fn new(coupling: &CouplingSpec, c: f64, tau_max: f64) -> Result<Self> {
        check_tau(tau_max)?;
        let dim = continuum_dim(coupling, c)?;
        let pc = pair_count(dim);
        let radius = radial_extent(coupling, c);
        let panels = (tau_max * radius).ceil() as usize + 8;
        let (nodes, weights) = gauss_legendre_composite(0.0, radius, panels);
        let mut weighted = Vec::with_capacity(nodes.len() * pc);
        for (r, w) in nodes.iter().zip(&weights) {
            let s = angular_inner(coupling, c, dim, *r, 1e-12)?;
            weighted.extend(s.iter().map(|v| v * w));
        }
        Ok(Self {
            dim,
            tau_max,
            nodes,
            weighted,
        })
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }
}

impl MemoryKernel for RadialProfileKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mode(&self) -> KernelMode {
        KernelMode::LimitQuadrature
    }

    fn eval(&self, tau: f64) -> Result<DMatrix<f64>> {
        check_tau(tau)?;
        if tau > self.tau_max * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "tau",
                format!("lag {tau} beyond the tabulated range {}", self.tau_max),
            ));
        }
        let pc = pair_count(self.dim);
        let mut acc = vec![0.0; pc];
        for (i, r) in self.nodes.iter().enumerate() {
            let w = (tau * r).cos();
            for (a, s) in acc.iter_mut().zip(&self.weighted[i * pc..(i + 1) * pc]) {
                *a += w * s;
            }
        }
        Ok(unpack_pairs(self.dim, &acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::coupling::BetaFunction;

    #[test]
    fn example_short_circuit_values() {
        let c = CouplingSpec::example();
        let k0 = kernel_limit(&c, 1.0, 0.0).unwrap();
        assert!(k0.iter().all(|v| (v - 4.0 * PI).abs() < 1e-14));
        let kp = kernel_limit(&c, 1.0, PI).unwrap();
        assert!(kp.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn example_quadrature_matches_closed_form() {
        let c = CouplingSpec::example();
        for tau in [0.5, 1.0, 5.0, 20.0] {
            let k = kernel_limit_quadrature(&c, 1.0, tau, LIMIT_TOLERANCE).unwrap();
            let exact = 4.0 * PI * tau.sin() / tau;
            assert!(k.iter().all(|v| (v - exact).abs() < 1e-6), "tau={tau}");
            assert_eq!(k, k.transpose());
        }
    }

    #[test]
    fn radial_profile_agrees_with_adaptive_path() {
        let beta = BetaFunction::from_fn(2, 0.9, |w, out| {
            let r2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
            out[0] = (0.81 - r2).max(0.0);
            out[1] = w[0] * (0.81 - r2).max(0.0);
        })
        .unwrap();
        let coupling = CouplingSpec::Beta(beta);
        let tab = RadialProfileKernel::new(&coupling, 1.0, 30.0).unwrap();
        for tau in [0.0, 2.5, 17.0, 30.0] {
            let a = tab.eval(tau).unwrap();
            let b = kernel_limit_quadrature(&coupling, 1.0, tau, 1e-10).unwrap();
            assert!((a - b).amax() < 1e-9, "tau={tau}");
        }
        assert!(tab.eval(31.0).is_err());
    }

    #[test]
    fn rejects_force_tables_and_wide_support() {
        let t = crate::kernel::ForceTable::parse("1 0 0 0 1\n").unwrap();
        assert!(kernel_limit(&CouplingSpec::Forces(t), 1.0, 0.0).is_err());
        let beta = BetaFunction::from_fn(1, 1.5, |_, o| o[0] = 1.0).unwrap();
        assert!(kernel_limit(&CouplingSpec::Beta(beta), 1.0, 0.0).is_err());
    }
}
