use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::lattice::BathSpectrum;
use crate::error::{Error, Result};

/// Force-derivative data F̄_{ℓj}: for each system coordinate ℓ a finitely
/// supported list of lattice sites j with real weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTable {
    rows: Vec<Vec<([i64; 3], f64)>>,
}

impl ForceTable {
    pub fn new(rows: Vec<Vec<([i64; 3], f64)>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("forces", "table needs at least one system coordinate"));
        }
        for row in &rows {
            for (_, v) in row {
                if !v.is_finite() {
                    return Err(Error::invalid("forces", "entries must be finite"));
                }
            }
        }
        Ok(Self { rows })
    }

    /// Parses lines of the form `ℓ j1 j2 j3 value` with ℓ counted from 1.
    /// Blank lines and lines starting with `#` are skipped. Coordinates
    /// without entries become zero rows.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<([i64; 3], f64)>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |reason: String| Error::Parse {
                line: lineno + 1,
                reason,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(parse_err(format!("expected 5 fields, found {}", fields.len())));
            }
            let l: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad coordinate index `{}`", fields[0])))?;
            if l == 0 {
                return Err(parse_err("coordinate index starts at 1".into()));
            }
            let mut j = [0i64; 3];
            for (ji, f) in j.iter_mut().zip(&fields[1..4]) {
                *ji = f.parse().map_err(|_| parse_err(format!("bad site index `{f}`")))?;
            }
            let value: f64 = fields[4]
                .parse()
                .map_err(|_| parse_err(format!("bad value `{}`", fields[4])))?;
            if !value.is_finite() {
                return Err(parse_err("value must be finite".into()));
            }
            if rows.len() < l {
                rows.resize(l, Vec::new());
            }
            rows[l - 1].push((j, value));
        }
        Self::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<([i64; 3], f64)>] {
        &self.rows
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|(_, v)| v).sum()).collect()
    }

    pub fn l1_norms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|(_, v)| v.abs()).sum()).collect()
    }

    /// Σ_j |j|² |F̄_{ℓj}| per row.
    pub fn second_moments(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|(j, v)| {
                        let j2: i64 = j.iter().map(|x| x * x).sum();
                        j2 as f64 * v.abs()
                    })
                    .sum()
            })
            .collect()
    }

    /// β_{ℓk} = Σ_j F̄_{ℓj} e^{−2πi j·k/n̄}.
    pub fn transform(&self, spectrum: &BathSpectrum) -> CouplingCoefficients {
        let dim = self.dim();
        let nbar = spectrum.nbar() as f64;
        let n_modes = spectrum.len();
        let mut beta = vec![Complex64::new(0.0, 0.0); n_modes * dim];
        for mode in 0..n_modes {
            let k = spectrum.wavevector(mode);
            for (l, row) in self.rows.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in row {
                    let dot = j[0] * k[0] + j[1] * k[1] + j[2] * k[2];
                    let phase = -2.0 * PI * dot.rem_euclid(spectrum.nbar() as i64) as f64 / nbar;
                    acc += Complex64::from_polar(*v, phase);
                }
                beta[mode * dim + l] = acc;
            }
        }
        CouplingCoefficients { dim, n_modes, beta }
    }
}

type BetaClosure = dyn Fn([f64; 3], &mut [f64]) + Send + Sync;

/// Real-valued coupling profile β_ℓ(𝛚) on the frequency cube [−2c, 2c]³.
#[derive(Clone)]
pub struct BetaFunction {
    dim: usize,
    support_radius: f64,
    source: BetaSource,
}

#[derive(Clone)]
enum BetaSource {
    Closure(Arc<BetaClosure>),
    Grid(Arc<BetaGrid>),
}

impl fmt::Debug for BetaFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.source {
            BetaSource::Closure(_) => "closure",
            BetaSource::Grid(_) => "grid",
        };
        f.debug_struct("BetaFunction")
            .field("dim", &self.dim)
            .field("support_radius", &self.support_radius)
            .field("source", &kind)
            .finish()
    }
}

impl BetaFunction {
    /// `support_radius` bounds the region |𝛚| ≤ R where β may be nonzero;
    /// the closure is never called outside it.
    pub fn from_fn<F>(dim: usize, support_radius: f64, f: F) -> Result<Self>
    where
        F: Fn([f64; 3], &mut [f64]) + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::invalid("beta", "dimension must be positive"));
        }
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(Error::invalid("beta", "support radius must be positive"));
        }
        Ok(Self {
            dim,
            support_radius,
            source: BetaSource::Closure(Arc::new(f)),
        })
    }

    pub fn from_grid(grid: BetaGrid) -> Self {
        Self {
            dim: grid.dim,
            support_radius: grid.support_radius(),
            source: BetaSource::Grid(Arc::new(grid)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Checks the support condition β = 0 for |𝛚| > c.
    pub fn check_support(&self, c: f64) -> Result<()> {
        if self.support_radius > c * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "beta",
                format!(
                    "support radius {} exceeds the stiffness constant {c}",
                    self.support_radius
                ),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, w: [f64; 3], out: &mut [f64]) {
        let r2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        if r2 > self.support_radius * self.support_radius {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        match &self.source {
            BetaSource::Closure(f) => f(w, out),
            BetaSource::Grid(g) => g.interpolate(w, out),
        }
    }
}

/// β tabulated on a full uniform grid. CSV columns are
/// `w1,w2,w3,beta_1,...,beta_N`; values are trilinearly interpolated and
/// vanish outside the tabulated box.
#[derive(Debug, Clone)]
pub struct BetaGrid {
    dim: usize,
    axes: [Vec<f64>; 3],
    values: Vec<f64>,
}

impl BetaGrid {
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "empty beta table".into(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 4 || cols[0] != "w1" || cols[1] != "w2" || cols[2] != "w3" {
            return Err(Error::Parse {
                line: hline + 1,
                reason: "header must start with w1,w2,w3 followed by beta columns".into(),
            });
        }
        let dim = cols.len() - 3;
        let mut points: Vec<([f64; 3], Vec<f64>)> = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim + 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    reason: format!("expected {} columns, found {}", dim + 3, fields.len()),
                });
            }
            let mut nums = Vec::with_capacity(fields.len());
            for f in fields {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    reason: format!("bad number `{f}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        reason: "values must be finite".into(),
                    });
                }
                nums.push(v);
            }
            points.push(([nums[0], nums[1], nums[2]], nums[3..].to_vec()));
        }
        Self::from_points(dim, points)
    }

    pub fn from_points(dim: usize, points: Vec<([f64; 3], Vec<f64>)>) -> Result<Self> {
        let mut axes: [Vec<f64>; 3] = Default::default();
        for (a, axis) in axes.iter_mut().enumerate() {
            let mut v: Vec<f64> = points.iter().map(|(w, _)| w[a]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            if v.len() < 2 {
                return Err(Error::invalid("beta grid", "each axis needs at least two nodes"));
            }
            let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
            for (i, x) in v.iter().enumerate() {
                if (x - (v[0] + i as f64 * h)).abs() > 1e-9 * h.max(1.0) {
                    return Err(Error::invalid("beta grid", "axis nodes must be uniformly spaced"));
                }
            }
            *axis = v;
        }
        let shape = [axes[0].len(), axes[1].len(), axes[2].len()];
        let total = shape[0] * shape[1] * shape[2];
        if points.len() != total {
            return Err(Error::invalid(
                "beta grid",
                format!("expected {total} grid points, found {}", points.len()),
            ));
        }
        let mut values = vec![f64::NAN; total * dim];
        for (w, b) in &points {
            if b.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.len(),
                });
            }
            let mut idx = 0;
            for a in 0..3 {
                let pos = axes[a].partition_point(|x| *x < w[a]);
                idx = idx * shape[a] + pos;
            }
            values[idx * dim..(idx + 1) * dim].copy_from_slice(b);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("beta grid", "duplicate grid points"));
        }
        Ok(Self { dim, axes, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Radius beyond which the interpolant is identically zero.
    fn support_radius(&self) -> f64 {
        let shape = [self.axes[0].len(), self.axes[1].len(), self.axes[2].len()];
        let h: Vec<f64> = self.axes.iter().map(|a| a[1] - a[0]).collect();
        let diag = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        let mut r: f64 = 0.0;
        let mut any = false;
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let idx = (i * shape[1] + j) * shape[2] + k;
                    if self.values[idx * self.dim..(idx + 1) * self.dim]
                        .iter()
                        .any(|v| *v != 0.0)
                    {
                        any = true;
                        let w = [self.axes[0][i], self.axes[1][j], self.axes[2][k]];
                        r = r.max((w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt());
                    }
                }
            }
        }
        if !any {
            return f64::MIN_POSITIVE;
        }
        let corner = self
            .axes
            .iter()
            .map(|a| a[0].abs().max(a[a.len() - 1].abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        (r + diag).min(corner)
    }

    fn interpolate(&self, w: [f64; 3], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let ax = &self.axes[a];
            let lo = ax[0];
            let hi = ax[ax.len() - 1];
            if w[a] < lo || w[a] > hi {
                return;
            }
            let h = (hi - lo) / (ax.len() - 1) as f64;
            let s = ((w[a] - lo) / h).min((ax.len() - 1) as f64);
            let i = (s.floor() as usize).min(ax.len() - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let shape = [self.axes[0].len(), self.axes[1].len(), self.axes[2].len()];
        for corner in 0..8 {
            let mut weight = 1.0;
            let mut idx = 0;
            for a in 0..3 {
                let bit = (corner >> (2 - a)) & 1;
                weight *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx = idx * shape[a] + base[a] + bit;
            }
            if weight == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&self.values[idx * self.dim..(idx + 1) * self.dim]) {
                *o += weight * v;
            }
        }
    }
}

/// The concrete coupling β_ℓ(𝛚) = 𝟙_{|𝛚|≤1} ∏ π^{1/2}(4c² − ω_i²)^{1/4},
/// identical for every coordinate ℓ. Its density f equals one on the unit
/// ball, which gives K∞(τ) = 4π sin τ/τ in every entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleBeta {
    pub dim: usize,
}

impl Default for ExampleBeta {
    fn default() -> Self {
        Self { dim: 3 }
    }
}

impl ExampleBeta {
    pub fn eval(&self, w: [f64; 3], c: f64, out: &mut [f64]) {
        let r2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        let v = if r2 <= 1.0 {
            w.iter()
                .map(|wi| (PI * (4.0 * c * c - wi * wi).max(0.0).sqrt()).sqrt())
                .product()
        } else {
            0.0
        };
        out.iter_mut().for_each(|o| *o = v);
    }

    /// The unit ball must fit inside the frequency cube [−2c, 2c]³.
    pub fn check_stiffness(c: f64) -> Result<()> {
        if c <= 0.5 {
            return Err(Error::invalid(
                "c",
                format!("the example coupling needs c > 1/2, got {c}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum CouplingSpec {
    Forces(ForceTable),
    Beta(BetaFunction),
    Example(ExampleBeta),
}

impl CouplingSpec {
    pub fn example() -> Self {
        CouplingSpec::Example(ExampleBeta::default())
    }

    pub fn dim(&self) -> usize {
        match self {
            CouplingSpec::Forces(t) => t.dim(),
            CouplingSpec::Beta(b) => b.dim(),
            CouplingSpec::Example(e) => e.dim,
        }
    }

    /// Evaluates a continuum profile β(𝛚); errors for force tables.
    pub fn beta_at(&self, w: [f64; 3], c: f64, out: &mut [f64]) -> Result<()> {
        match self {
            CouplingSpec::Forces(_) => Err(Error::invalid(
                "coupling",
                "force tables have no continuum profile; use the lattice transform",
            )),
            CouplingSpec::Beta(b) => {
                b.eval(w, out);
                Ok(())
            }
            CouplingSpec::Example(e) => {
                e.eval(w, c, out);
                Ok(())
            }
        }
    }

    /// Coupling coefficients β_{ℓk} for every lattice mode.
    pub fn lattice_coefficients(&self, spectrum: &BathSpectrum) -> Result<CouplingCoefficients> {
        if let CouplingSpec::Forces(t) = self {
            return Ok(t.transform(spectrum));
        }
        let dim = self.dim();
        let n_modes = spectrum.len();
        let mut beta = vec![Complex64::new(0.0, 0.0); n_modes * dim];
        let mut buf = vec![0.0; dim];
        for mode in 0..n_modes {
            let w = spectrum.frequency_coordinates(mode);
            self.beta_at(w, spectrum.c(), &mut buf)?;
            for (l, v) in buf.iter().enumerate() {
                beta[mode * dim + l] = Complex64::new(*v, 0.0);
            }
        }
        Ok(CouplingCoefficients { dim, n_modes, beta })
    }
}

/// β_{ℓk} stored mode-major: entry (k, ℓ) at `k * dim + ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCoefficients {
    dim: usize,
    n_modes: usize,
    beta: Vec<Complex64>,
}

impl CouplingCoefficients {
    pub fn from_raw(dim: usize, n_modes: usize, beta: Vec<Complex64>) -> Result<Self> {
        if beta.len() != dim * n_modes {
            return Err(Error::DimensionMismatch {
                expected: dim * n_modes,
                found: beta.len(),
            });
        }
        Ok(Self { dim, n_modes, beta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mode(&self, k: usize) -> &[Complex64] {
        &self.beta[k * self.dim..(k + 1) * self.dim]
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.beta[k * self.dim + l]
    }

    pub fn is_zero(&self) -> bool {
        self.beta.iter().all(|b| b.re == 0.0 && b.im == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::lattice::{lattice_frequencies, LatticeBathSpec};

    #[test]
    fn parse_force_table() {
        let text = "# two coordinates\n1 0 0 0 2.0\n2 1 0 0 1.5\n2 -1 0 0 1.5\n\n";
        let t = ForceTable::parse(text).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.row_sums(), vec![2.0, 3.0]);
        assert_eq!(t.second_moments(), vec![0.0, 3.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match ForceTable::parse("1 0 0 0 1\n1 0 0 x 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ForceTable::parse("0 0 0 0 1\n").is_err());
    }

    #[test]
    fn single_site_transform_is_constant() {
        let spec = LatticeBathSpec::with_default_eta(4, 1.0, 1.0).unwrap();
        let s = lattice_frequencies(&spec).unwrap();
        let t = ForceTable::parse("1 0 0 0 0.7\n").unwrap();
        let b = t.transform(&s);
        for k in 0..s.len() {
            assert!((b.get(k, 0) - Complex64::new(0.7, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn example_beta_at_origin() {
        let e = ExampleBeta::default();
        let mut out = [0.0; 3];
        e.eval([0.0; 3], 1.0, &mut out);
        let expected = (8.0 * PI.powi(3)).sqrt();
        assert!(out.iter().all(|v| (v - expected).abs() < 1e-12));
        e.eval([0.8, 0.8, 0.0], 1.0, &mut out);
        assert_eq!(out, [0.0; 3]);
    }

    #[test]
    fn grid_interpolation_is_exact_for_trilinear_data() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    let w = [-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64, -1.0 + 0.5 * k as f64];
                    pts.push((w, vec![1.0 + w[0] + 2.0 * w[1] * w[2]]));
                }
            }
        }
        let g = BetaGrid::from_points(1, pts).unwrap();
        let mut out = [0.0];
        g.interpolate([0.3, -0.2, 0.7], &mut out);
        assert!((out[0] - (1.0 + 0.3 - 0.28)).abs() < 1e-14);
        g.interpolate([1.2, 0.0, 0.0], &mut out);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn grid_csv_round_trip() {
        let mut csv = String::from("w1,w2,w3,beta_1,beta_2\n");
        for i in [-1.0, 0.0, 1.0] {
            for j in [-1.0, 0.0, 1.0] {
                for k in [-1.0, 0.0, 1.0] {
                    csv.push_str(&format!("{i},{j},{k},{},{}\n", 1.0 - i * i, 2.0));
                }
            }
        }
        let g = BetaGrid::parse_csv(&csv).unwrap();
        assert_eq!(g.dim(), 2);
        let mut out = [0.0; 2];
        g.interpolate([0.5, 0.0, 0.0], &mut out);
        assert!((out[0] - 0.5).abs() < 1e-15 && (out[1] - 2.0).abs() < 1e-15);
        assert!(BetaGrid::parse_csv("w1,w2,w3,beta_1\n0,0,0,1\n").is_err());
    }
}
