//! System potentials λ(X).

use std::fmt::Debug;

pub trait Potential: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
}

impl<T: Potential + ?Sized> Potential for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, grad)
    }
}

impl<T: Potential + ?Sized> Potential for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, grad)
    }
}

/// λ(X) = offset + ½ k |X − center|².
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    pub stiffness: f64,
    pub center: Vec<f64>,
    pub offset: f64,
}

impl Harmonic {
    pub fn unit(dim: usize) -> Self {
        Self {
            stiffness: 1.0,
            center: vec![0.0; dim],
            offset: 0.0,
        }
    }

    pub fn shifted(mut self, offset: f64) -> Self {
        self.offset += offset;
        self
    }
}

impl Potential for Harmonic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.offset + 0.5 * self.stiffness * r2
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        for ((g, a), c) in grad.iter_mut().zip(x).zip(&self.center) {
            *g = self.stiffness * (a - c);
        }
    }
}

/// Separable quartic double well, λ(X) = offset + Σ_i a (X_i² − b²)².
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWell {
    pub dim: usize,
    pub height: f64,
    pub minimum: f64,
    pub offset: f64,
}

impl Potential for DoubleWell {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let b2 = self.minimum * self.minimum;
        self.offset + x.iter().map(|xi| self.height * (xi * xi - b2).powi(2)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let b2 = self.minimum * self.minimum;
        for (g, xi) in grad.iter_mut().zip(x) {
            *g = 4.0 * self.height * xi * (xi * xi - b2);
        }
    }
}
