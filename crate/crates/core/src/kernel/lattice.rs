use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Finite periodic cubic lattice bath: side `nbar` (n = nbar³ modes),
/// nearest-neighbour stiffness `c`, convexity regulariser `eta`, and
/// bath/system mass ratio `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeBathSpec {
    pub nbar: usize,
    pub c: f64,
    pub eta: f64,
    pub m: f64,
}

impl LatticeBathSpec {
    pub fn new(nbar: usize, c: f64, eta: f64, m: f64) -> Result<Self> {
        let spec = Self { nbar, c, eta, m };
        spec.validate()?;
        Ok(spec)
    }

    /// Uses η = 1/n̄, which vanishes while n^{1/2} η = n̄^{1/2} still diverges.
    pub fn with_default_eta(nbar: usize, c: f64, m: f64) -> Result<Self> {
        if nbar == 0 {
            return Err(Error::invalid("nbar", "must be positive"));
        }
        Self::new(nbar, c, 1.0 / nbar as f64, m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nbar < 2 || !self.nbar.is_multiple_of(2) {
            return Err(Error::invalid(
                "nbar",
                format!("lattice side must be even and at least 2, got {}", self.nbar),
            ));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("c", format!("must be positive, got {}", self.c)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta", format!("must be nonnegative, got {}", self.eta)));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::invalid("m", format!("must be positive, got {}", self.m)));
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.nbar.pow(3)
    }
}

/// Eigenfrequencies of the circulant lattice Hessian, one per wavevector
/// k ∈ {−n̄/2, …, n̄/2−1}³. Modes are ordered with k₁ slowest and k₃ fastest.
#[derive(Debug, Clone)]
pub struct BathSpectrum {
    nbar: usize,
    c: f64,
    eta: f64,
    omega2: Vec<f64>,
}

pub fn lattice_frequencies(spec: &LatticeBathSpec) -> Result<BathSpectrum> {
    spec.validate()?;
    let nbar = spec.nbar;
    let half = (nbar / 2) as i64;
    // per-axis 2(1 − cos(2πk/n̄))
    let axis: Vec<f64> = (-half..half)
        .map(|k| 2.0 * (1.0 - (2.0 * PI * k as f64 / nbar as f64).cos()))
        .collect();
    let c2 = spec.c * spec.c;
    let eta2 = spec.eta * spec.eta;
    let mut omega2 = Vec::with_capacity(spec.n_modes());
    for a in &axis {
        for b in &axis {
            for d in &axis {
                omega2.push(c2 * (a + b + d) + eta2);
            }
        }
    }
    Ok(BathSpectrum {
        nbar,
        c: spec.c,
        eta: spec.eta,
        omega2,
    })
}

impl BathSpectrum {
    pub fn len(&self) -> usize {
        self.omega2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega2.is_empty()
    }

    pub fn nbar(&self) -> usize {
        self.nbar
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn omega2(&self) -> &[f64] {
        &self.omega2
    }

    pub fn omega(&self, mode: usize) -> f64 {
        self.omega2[mode].sqrt()
    }

    pub fn wavevector(&self, mode: usize) -> [i64; 3] {
        let n = self.nbar;
        let half = (n / 2) as i64;
        [
            (mode / (n * n)) as i64 - half,
            ((mode / n) % n) as i64 - half,
            (mode % n) as i64 - half,
        ]
    }

    pub fn mode_index(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.nbar as i64;
        let half = n / 2;
        let mut idx = 0usize;
        for ki in k {
            if ki < -half || ki >= half {
                return None;
            }
            idx = idx * self.nbar + (ki + half) as usize;
        }
        Some(idx)
    }

    /// Image of the mode under ω_i = √2 c sgn(r_i) √(1 − cos 2πr_i), r = k/n̄.
    pub fn frequency_coordinates(&self, mode: usize) -> [f64; 3] {
        let k = self.wavevector(mode);
        let mut w = [0.0; 3];
        for (wi, ki) in w.iter_mut().zip(k) {
            let r = ki as f64 / self.nbar as f64;
            *wi = frequency_coordinate(r, self.c);
        }
        w
    }
}

pub(crate) fn frequency_coordinate(r: f64, c: f64) -> f64 {
    let mag = std::f64::consts::SQRT_2 * c * (1.0 - (2.0 * PI * r).cos()).max(0.0).sqrt();
    if r < 0.0 {
        -mag
    } else {
        mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_lattice_values() {
        let spec = LatticeBathSpec::new(2, 1.0, 0.0, 1.0).unwrap();
        let s = lattice_frequencies(&spec).unwrap();
        let at = |k| s.omega2()[s.mode_index(k).unwrap()];
        assert_eq!(at([0, 0, 0]), 0.0);
        assert_eq!(at([-1, 0, 0]), 4.0);
        assert_eq!(at([-1, -1, -1]), 12.0);
    }

    #[test]
    fn minimum_is_eta_squared_and_maximum_at_corner() {
        let spec = LatticeBathSpec::new(6, 1.3, 0.2, 0.5).unwrap();
        let s = lattice_frequencies(&spec).unwrap();
        let min = s.omega2().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = s.omega2().iter().cloned().fold(0.0, f64::max);
        assert!((min - 0.04).abs() < 1e-15);
        assert!((max - (12.0 * 1.69 + 0.04)).abs() < 1e-12);
        let corner = s.mode_index([-3, -3, -3]).unwrap();
        assert_eq!(s.omega2()[corner], max);
    }

    #[test]
    fn rejects_odd_or_tiny_sides() {
        assert!(LatticeBathSpec::new(3, 1.0, 0.1, 1.0).is_err());
        assert!(LatticeBathSpec::new(0, 1.0, 0.1, 1.0).is_err());
        assert!(LatticeBathSpec::new(4, -1.0, 0.1, 1.0).is_err());
        assert!(LatticeBathSpec::new(4, 1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn index_round_trip() {
        let s = lattice_frequencies(&LatticeBathSpec::with_default_eta(8, 1.0, 1.0).unwrap()).unwrap();
        for mode in 0..s.len() {
            assert_eq!(s.mode_index(s.wavevector(mode)), Some(mode));
        }
        assert_eq!(s.mode_index([4, 0, 0]), None);
    }

    #[test]
    fn frequency_map_covers_cube() {
        assert_eq!(frequency_coordinate(0.0, 1.0), 0.0);
        assert!((frequency_coordinate(-0.5, 1.0) + 2.0).abs() < 1e-15);
        assert!((frequency_coordinate(0.25, 2.0) - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-14);
    }
}
