//! Splitting integrator for the generalized Langevin equation
//! Ṗ = −∇λ(X) − ∫_0^t K((t − s)/√m) P(s) ds + ζ(t).

mod si;

use nalgebra::DMatrix;

pub use si::{si, SI_SWITCH};

use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;
use crate::noise::NoisePath;
use crate::potential::Potential;
use crate::trajectory::Trajectory;

/// Si(iδ) on the half-step grid, δ = Δt/(2√m).
#[derive(Debug, Clone, PartialEq)]
pub struct SineIntegralTable {
    dt: f64,
    m: f64,
    values: Vec<f64>,
}

impl SineIntegralTable {
    /// Covers `intervals` half-step intervals.
    pub fn new(dt: f64, m: f64, intervals: usize) -> Result<Self> {
        check_step(dt, m)?;
        let delta = dt / (2.0 * m.sqrt());
        let values = (0..=intervals).map(|i| si(i as f64 * delta)).collect::<Result<_>>()?;
        Ok(Self { dt, m, values })
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    /// Si at the half-grid point i.
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Si(t_{(i+1)/2}/√m) − Si(t_{i/2}/√m), the increment over half-step
    /// interval i.
    pub fn increment(&self, i: usize) -> f64 {
        self.values[i + 1] - self.values[i]
    }
}

/// Damping integral at half-grid point J, Σ_{j<J} prefactor·ΔSi_{J−1−j} q_j,
/// for scalar momenta q_j = P(t_{j/2}) held constant on [t_{j/2}, t_{(j+1)/2}).
pub fn damping_convolution(history: &[f64], target: usize, table: &SineIntegralTable, prefactor: f64) -> f64 {
    assert!(target <= history.len(), "target beyond the stored history");
    assert!(target <= table.intervals(), "target beyond the sine-integral table");
    let mut acc = 0.0;
    for (j, q) in history[..target].iter().enumerate() {
        acc += table.increment(target - 1 - j) * q;
    }
    prefactor * acc
}

/// How momenta between half-grid points enter the damping integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionRule {
    /// Momentum held at its left half-grid value; the first half kick uses
    /// the damping at t_{n+1/2}, the second at t_{n+1}.
    HalfStepLeft,
    /// Momentum interpolated linearly between half-grid values; both half
    /// kicks use the damping at their own full step, with the newest
    /// momentum treated implicitly.
    Trapezoid,
}

impl ConvolutionRule {
    pub fn name(&self) -> &'static str {
        match self {
            ConvolutionRule::HalfStepLeft => "half-step-left",
            ConvolutionRule::Trapezoid => "trapezoid",
        }
    }
}

fn check_step(dt: f64, m: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid("m", format!("must be positive, got {m}")));
    }
    Ok(())
}

/// Per-interval damping weights for a kernel on a fixed grid:
/// A_i = √m ∫_{iδ}^{(i+1)δ} K and B_i = √m ∫ K(u)(u − iδ)/δ du.
#[derive(Debug, Clone)]
pub struct DampingWeights {
    dim: usize,
    dt: f64,
    m: f64,
    rule: ConvolutionRule,
    // weight of q_{J−i} for i ≥ 1, N² row-major per index; index 0 holds
    // the implicit weight A_0 − B_0 for the trapezoid rule
    lag: Vec<f64>,
    // weight of q_0 at target J is first[J − 1]
    first: Vec<f64>,
    implicit_inverse: Option<Vec<f64>>,
}

impl DampingWeights {
    /// Weights for `steps` full steps (2·steps half-step intervals).
    pub fn new(kernel: &dyn MemoryKernel, dt: f64, m: f64, steps: usize, rule: ConvolutionRule) -> Result<Self> {
        check_step(dt, m)?;
        let dim = kernel.dim();
        let nn = dim * dim;
        let intervals = 2 * steps.max(1);
        let delta = dt / (2.0 * m.sqrt());
        let sqrt_m = m.sqrt();
        let mut a = Vec::with_capacity(intervals * nn);
        let mut b = Vec::with_capacity(intervals * nn);
        for i in 0..intervals {
            let lo = i as f64 * delta;
            let (whole, ramp) = kernel.interval_moments(lo, lo + delta)?;
            push_row_major(&mut a, &whole, sqrt_m);
            push_row_major(&mut b, &ramp, sqrt_m);
        }
        Ok(Self::from_moments(dim, dt, m, rule, &a, &b))
    }

    /// Weights from the sine-integral table for K(τ) = amplitude·sin τ/τ·pattern.
    pub fn from_si_table(
        table: &SineIntegralTable,
        amplitude: f64,
        pattern: &DMatrix<f64>,
        rule: ConvolutionRule,
    ) -> Result<Self> {
        if rule != ConvolutionRule::HalfStepLeft {
            return Err(Error::invalid(
                "rule",
                "the sine-integral table only provides left-rule weights",
            ));
        }
        let dim = pattern.nrows();
        let nn = dim * dim;
        let pre = amplitude * table.m.sqrt();
        let mut a = Vec::with_capacity(table.intervals() * nn);
        for i in 0..table.intervals() {
            push_row_major(&mut a, pattern, pre * table.increment(i));
        }
        let b = vec![0.0; a.len()];
        Ok(Self::from_moments(dim, table.dt, table.m, rule, &a, &b))
    }

    fn from_moments(dim: usize, dt: f64, m: f64, rule: ConvolutionRule, a: &[f64], b: &[f64]) -> Self {
        let nn = dim * dim;
        let intervals = a.len() / nn;
        let mut lag = vec![0.0; (intervals + 1) * nn];
        let first;
        let mut implicit_inverse = None;
        match rule {
            ConvolutionRule::HalfStepLeft => {
                // q_{J−i} carries A_{i−1}
                lag[nn..].copy_from_slice(a);
                first = a.to_vec();
            }
            ConvolutionRule::Trapezoid => {
                for e in 0..nn {
                    lag[e] = a[e] - b[e];
                }
                for i in 1..intervals {
                    for e in 0..nn {
                        lag[i * nn + e] = a[i * nn + e] - b[i * nn + e] + b[(i - 1) * nn + e];
                    }
                }
                first = b.to_vec();
                let h = dt;
                let mat = DMatrix::from_fn(dim, dim, |r, c| {
                    let id = if r == c { 1.0 } else { 0.0 };
                    id + 0.5 * h * lag[r * dim + c]
                });
                let inv = mat.try_inverse().unwrap_or_else(|| DMatrix::identity(dim, dim));
                implicit_inverse = Some((0..nn).map(|e| inv[(e / dim, e % dim)]).collect());
            }
        }
        Self {
            dim,
            dt,
            m,
            rule,
            lag,
            first,
            implicit_inverse,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn rule(&self) -> ConvolutionRule {
        self.rule
    }

    /// Number of full steps the weights cover.
    pub fn steps(&self) -> usize {
        self.first.len() / (self.dim * self.dim) / 2
    }
}

fn push_row_major(out: &mut Vec<f64>, m: &DMatrix<f64>, scale: f64) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(scale * m[(r, c)]);
        }
    }
}

#[derive(Debug)]
pub struct GleConfig<'a> {
    pub potential: &'a dyn Potential,
    pub weights: &'a DampingWeights,
    pub steps: usize,
    pub record_every: usize,
    /// Drops history terms with lag (t − s)/√m beyond this value.
    pub truncation: Option<f64>,
}

/// State of a batch of GLE paths advanced in lockstep. Arrays are laid out
/// component-major with the path index innermost.
#[derive(Debug, Clone)]
pub struct GleState {
    dim: usize,
    lanes: usize,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// q_j = P(t_{j/2}) for every half-grid point reached so far.
    pub history: Vec<f64>,
    pub step: usize,
    damping: Vec<f64>,
}

impl GleState {
    fn new(dim: usize, lanes: usize, x0: &[Vec<f64>], p0: &[Vec<f64>], capacity: usize) -> Self {
        let mut x = vec![0.0; dim * lanes];
        let mut p = vec![0.0; dim * lanes];
        for b in 0..lanes {
            for l in 0..dim {
                x[l * lanes + b] = x0[b][l];
                p[l * lanes + b] = p0[b][l];
            }
        }
        let mut history = Vec::with_capacity(capacity * dim * lanes);
        history.extend_from_slice(&p);
        Self {
            dim,
            lanes,
            x,
            p,
            history,
            step: 0,
            damping: vec![0.0; dim * lanes],
        }
    }

    fn half_points(&self) -> usize {
        self.history.len() / (self.dim * self.lanes)
    }

    /// Explicit part of the damping at half-grid point `target`, using
    /// history entries q_0..q_{target−1}.
    fn convolve(&self, w: &DampingWeights, target: usize, cut: Option<usize>, out: &mut [f64]) {
        let (n, lanes) = (self.dim, self.lanes);
        let nn = n * n;
        let stride = n * lanes;
        out.iter_mut().for_each(|o| *o = 0.0);
        let in_range = |i: usize| cut.is_none_or(|c| i <= c);
        if in_range(target) {
            let g = &w.first[(target - 1) * nn..target * nn];
            accumulate(g, &self.history[..stride], n, lanes, out);
        }
        let lo = match cut {
            Some(c) => target.saturating_sub(c).max(1),
            None => 1,
        };
        for j in lo..target {
            let g = &w.lag[(target - j) * nn..(target - j + 1) * nn];
            accumulate(g, &self.history[j * stride..(j + 1) * stride], n, lanes, out);
        }
    }
}

#[inline]
fn accumulate(g: &[f64], q: &[f64], n: usize, lanes: usize, out: &mut [f64]) {
    if n == 1 {
        let w = g[0];
        for (o, v) in out.iter_mut().zip(q) {
            *o += w * v;
        }
        return;
    }
    for l in 0..n {
        let orow = &mut out[l * lanes..(l + 1) * lanes];
        for l2 in 0..n {
            let w = g[l * n + l2];
            let qrow = &q[l2 * lanes..(l2 + 1) * lanes];
            for (o, v) in orow.iter_mut().zip(qrow) {
                *o += w * v;
            }
        }
    }
}

/// Integrates one GLE path.
pub fn gle_run(config: &GleConfig, noise: &NoisePath, x0: &[f64], p0: &[f64]) -> Result<Trajectory> {
    let mut out = gle_run_batch(config, std::slice::from_ref(noise), &[x0.to_vec()], &[p0.to_vec()])?;
    Ok(out.remove(0))
}

/// Integrates several GLE paths in lockstep. Each path's arithmetic is
/// independent of the batch it runs in.
pub fn gle_run_batch(
    config: &GleConfig,
    noises: &[NoisePath],
    x0: &[Vec<f64>],
    p0: &[Vec<f64>],
) -> Result<Vec<Trajectory>> {
    let w = config.weights;
    let n = w.dim();
    let lanes = noises.len();
    if x0.len() != lanes || p0.len() != lanes {
        return Err(Error::DimensionMismatch {
            expected: lanes,
            found: x0.len().min(p0.len()),
        });
    }
    if config.potential.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: config.potential.dim(),
        });
    }
    for (x, p) in x0.iter().zip(p0) {
        if x.len() != n || p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len().min(p.len()),
            });
        }
    }
    if config.steps > w.steps() {
        return Err(Error::GridMismatch(format!(
            "damping weights cover {} steps, {} requested",
            w.steps(),
            config.steps
        )));
    }
    for z in noises {
        if z.dim != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: z.dim,
            });
        }
        if (z.dt - w.dt()).abs() > 1e-12 * w.dt() {
            return Err(Error::GridMismatch(format!(
                "noise step {} differs from {}",
                z.dt,
                w.dt()
            )));
        }
        if z.steps() < config.steps {
            return Err(Error::GridMismatch(format!(
                "noise path has {} steps, {} requested",
                z.steps(),
                config.steps
            )));
        }
    }
    if config.record_every == 0 {
        return Err(Error::invalid("record_every", "must be positive"));
    }
    let h = w.dt();
    let cut = config.truncation.map(|tau| {
        let delta = h / (2.0 * w.m().sqrt());
        (tau / delta).floor() as usize
    });

    let mut st = GleState::new(n, lanes, x0, p0, 2 * config.steps + 1);
    let mut trajs: Vec<Trajectory> = (0..lanes)
        .map(|_| Trajectory::with_capacity(n, config.steps / config.record_every + 1))
        .collect();
    let record = |st: &GleState, t: f64, trajs: &mut Vec<Trajectory>| {
        let mut xb = vec![0.0; n];
        let mut pb = vec![0.0; n];
        for (b, tr) in trajs.iter_mut().enumerate() {
            for l in 0..n {
                xb[l] = st.x[l * lanes + b];
                pb[l] = st.p[l * lanes + b];
            }
            tr.push(t, &xb, &pb);
        }
    };
    record(&st, 0.0, &mut trajs);

    let mut grad = vec![0.0; n * lanes];
    let mut d = vec![0.0; n * lanes];
    let mut xb = vec![0.0; n];
    let mut gb = vec![0.0; n];
    let gradient = |x: &[f64], grad: &mut [f64], xb: &mut [f64], gb: &mut [f64]| {
        for b in 0..lanes {
            for l in 0..n {
                xb[l] = x[l * lanes + b];
            }
            config.potential.gradient(xb, gb);
            for l in 0..n {
                grad[l * lanes + b] = gb[l];
            }
        }
    };

    for step in 0..config.steps {
        // first half kick
        gradient(&st.x, &mut grad, &mut xb, &mut gb);
        let damping_now: &[f64] = match w.rule() {
            ConvolutionRule::HalfStepLeft => {
                st.convolve(w, 2 * step + 1, cut, &mut d);
                &d
            }
            ConvolutionRule::Trapezoid => &st.damping,
        };
        for l in 0..n {
            for b in 0..lanes {
                let i = l * lanes + b;
                let zeta = noises[b].values[step * n + l];
                st.p[i] -= 0.5 * h * (grad[i] - zeta + damping_now[i]);
            }
        }
        st.history.extend_from_slice(&st.p);
        for (x, p) in st.x.iter_mut().zip(&st.p) {
            *x += h * p;
        }

        // second half kick
        gradient(&st.x, &mut grad, &mut xb, &mut gb);
        let target = 2 * step + 2;
        st.convolve(w, target, cut, &mut d);
        let mut rhs = vec![0.0; n * lanes];
        for l in 0..n {
            for b in 0..lanes {
                let i = l * lanes + b;
                let zeta = noises[b].values[(step + 1) * n + l];
                rhs[i] = st.p[i] - 0.5 * h * (grad[i] - zeta + d[i]);
            }
        }
        match (&w.implicit_inverse, w.rule()) {
            (Some(inv), ConvolutionRule::Trapezoid) => {
                let implicit = &w.lag[..n * n];
                for b in 0..lanes {
                    for l in 0..n {
                        let mut v = 0.0;
                        for l2 in 0..n {
                            v += inv[l * n + l2] * rhs[l2 * lanes + b];
                        }
                        st.p[l * lanes + b] = v;
                    }
                    for l in 0..n {
                        let mut v = d[l * lanes + b];
                        for l2 in 0..n {
                            v += implicit[l * n + l2] * st.p[l2 * lanes + b];
                        }
                        st.damping[l * lanes + b] = v;
                    }
                }
            }
            _ => st.p.copy_from_slice(&rhs),
        }
        st.history.extend_from_slice(&st.p);
        st.step = step + 1;
        debug_assert_eq!(st.half_points(), 2 * st.step + 1);
        if st.step.is_multiple_of(config.record_every) {
            record(&st, st.step as f64 * h, &mut trajs);
        }
    }
    Ok(trajs)
}
