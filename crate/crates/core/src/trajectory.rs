use std::io::Write;

use crate::error::Result;
use crate::io::{write_table, Provenance};

/// Recorded (X, P) samples of one path at times `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    x: Vec<f64>,
    p: Vec<f64>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            times: Vec::new(),
            x: Vec::new(),
            p: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, samples: usize) -> Self {
        Self {
            dim,
            times: Vec::with_capacity(samples),
            x: Vec::with_capacity(samples * dim),
            p: Vec::with_capacity(samples * dim),
        }
    }

    pub fn push(&mut self, t: f64, x: &[f64], p: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.times.push(t);
        self.x.extend_from_slice(x);
        self.p.extend_from_slice(p);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn p(&self, i: usize) -> &[f64] {
        &self.p[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_x(&self) -> &[f64] {
        self.x(self.len() - 1)
    }

    pub fn last_p(&self) -> &[f64] {
        self.p(self.len() - 1)
    }

    /// Series of X component `l` over the recorded times.
    pub fn x_component(&self, l: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.x[i * self.dim + l]).collect()
    }

    pub fn p_component(&self, l: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.p[i * self.dim + l]).collect()
    }

    /// CSV with columns `t, X_1..X_N, P_1..P_N`.
    pub fn write_csv<W: Write>(&self, w: &mut W, provenance: &Provenance) -> Result<()> {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=self.dim).map(|l| format!("X_{l}")));
        cols.extend((1..=self.dim).map(|l| format!("P_{l}")));
        let rows = (0..self.len()).map(|i| {
            let mut r = Vec::with_capacity(1 + 2 * self.dim);
            r.push(self.times[i]);
            r.extend_from_slice(self.x(i));
            r.extend_from_slice(self.p(i));
            r
        });
        write_table(w, provenance, &cols, rows)
    }
}
