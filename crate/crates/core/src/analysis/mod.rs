//! Ensemble statistics: moments, histograms, goodness of fit,
//! autocorrelations and curve distances.

use std::io::Write;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::io::{write_table, Provenance};
use crate::trajectory::Trajectory;

/// Sample mean and its standard error, summed in index order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Sample variance (about the sample mean) and its standard error.
pub fn variance_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let (mean, _) = mean_stderr(values);
    let dev2: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let (m2, se) = mean_stderr(&dev2);
    (m2 * n / (n - 1.0), se * n / (n - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum BinSpec {
    Edges(Vec<f64>),
    Uniform { lo: f64, hi: f64, bins: usize },
    FreedmanDiaconis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Counts divided by total and bin width.
    pub fn density(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, c)| *c as f64 / (total * (self.edges[i + 1] - self.edges[i])))
            .collect()
    }

    /// CSV `bin_left,bin_right,count`.
    pub fn write_csv<W: Write>(&self, w: &mut W, provenance: &Provenance) -> Result<()> {
        let cols: Vec<String> = ["bin_left", "bin_right", "count"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows = (0..self.counts.len()).map(|i| vec![self.edges[i], self.edges[i + 1], self.counts[i] as f64]);
        write_table(w, provenance, &cols, rows)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn histogram(values: &[f64], spec: &BinSpec) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::invalid("values", "empty ensemble"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values", "non-finite sample"));
    }
    let edges = match spec {
        BinSpec::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid("edges", "need at least two strictly increasing edges"));
            }
            e.clone()
        }
        BinSpec::Uniform { lo, hi, bins } => {
            if *bins == 0 || !(hi > lo) {
                return Err(Error::invalid("bins", "need lo < hi and at least one bin"));
            }
            (0..=*bins).map(|i| lo + (hi - lo) * i as f64 / *bins as f64).collect()
        }
        BinSpec::FreedmanDiaconis => {
            let mut s = values.to_vec();
            s.sort_by(f64::total_cmp);
            let (lo, hi) = (s[0], s[s.len() - 1]);
            let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
            let width = 2.0 * iqr / (s.len() as f64).cbrt();
            let bins = if width > 0.0 && hi > lo {
                (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
            } else {
                1
            };
            let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
            (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
        }
    };
    let nb = edges.len() - 1;
    let mut counts = vec![0u64; nb];
    let (mut under, mut over) = (0, 0);
    for v in values {
        if *v < edges[0] {
            under += 1;
        } else if *v > edges[nb] {
            over += 1;
        } else {
            // right edge of the last bin is inclusive
            let i = edges.partition_point(|e| e <= v).saturating_sub(1).min(nb - 1);
            counts[i] += 1;
        }
    }
    Ok(Histogram {
        edges,
        counts,
        underflow: under,
        overflow: over,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Bin count for equiprobable-bin goodness-of-fit tests, 2·M^{2/5}.
pub fn default_gof_bins(samples: usize) -> usize {
    ((2.0 * (samples as f64).powf(0.4)).round() as usize).max(3)
}

/// Pearson χ² test against N(mean, sd²) with `bins` equiprobable bins.
pub fn chi_square_normal(values: &[f64], mean: f64, sd: f64, bins: usize) -> Result<ChiSquareTest> {
    if values.is_empty() || bins < 2 {
        return Err(Error::invalid("bins", "need samples and at least two bins"));
    }
    let normal = Normal::new(mean, sd).map_err(|e| Error::invalid("sd", e.to_string()))?;
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(f64::NEG_INFINITY);
    for i in 1..bins {
        edges.push(normal.inverse_cdf(i as f64 / bins as f64));
    }
    edges.push(f64::INFINITY);
    let mut counts = vec![0u64; bins];
    for v in values {
        let i = edges.partition_point(|e| e <= v).saturating_sub(1).min(bins - 1);
        counts[i] += 1;
    }
    let expected = values.len() as f64 / bins as f64;
    let statistic = counts
        .iter()
        .map(|c| (*c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dof = bins - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::invalid("dof", e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi.sf(statistic),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Position,
    Momentum,
}

/// t, value and standard error on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Curve {
    /// CSV `t,value,stderr`.
    pub fn write_csv<W: Write>(&self, w: &mut W, provenance: &Provenance) -> Result<()> {
        let cols: Vec<String> = ["t", "value", "stderr"].iter().map(|s| s.to_string()).collect();
        let rows = (0..self.t.len()).map(|i| vec![self.t[i], self.value[i], self.stderr[i]]);
        write_table(w, provenance, &cols, rows)
    }
}

/// Per-path products Y_b(t_i)·Y_b(t_ref), path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSamples {
    pub t: Vec<f64>,
    pub paths: usize,
    pub values: Vec<f64>,
}

impl ProductSamples {
    pub fn path(&self, b: usize) -> &[f64] {
        &self.values[b * self.t.len()..(b + 1) * self.t.len()]
    }

    pub fn curve(&self) -> Curve {
        let nt = self.t.len();
        let mut value = Vec::with_capacity(nt);
        let mut stderr = Vec::with_capacity(nt);
        let mut column = vec![0.0; self.paths];
        for i in 0..nt {
            for (b, c) in column.iter_mut().enumerate() {
                *c = self.values[b * nt + i];
            }
            let (m, se) = mean_stderr(&column);
            value.push(m);
            stderr.push(se);
        }
        Curve {
            t: self.t.clone(),
            value,
            stderr,
        }
    }
}

fn series(tr: &Trajectory, component: usize, var: Variable) -> Vec<f64> {
    match var {
        Variable::Position => tr.x_component(component),
        Variable::Momentum => tr.p_component(component),
    }
}

pub fn autocorr_samples(
    trajectories: &[Trajectory],
    component: usize,
    var: Variable,
    t_ref: f64,
) -> Result<ProductSamples> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::invalid("trajectories", "empty ensemble"))?;
    if component >= first.dim() {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            found: component + 1,
        });
    }
    let t = first.times().to_vec();
    for tr in trajectories {
        if tr.times() != t.as_slice() {
            return Err(Error::GridMismatch("trajectories do not share a time grid".into()));
        }
    }
    let iref = t
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t_ref).abs().total_cmp(&(b.1 - t_ref).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if t.is_empty() || (t[iref] - t_ref).abs() > 1e-9 * t_ref.abs().max(1.0) {
        return Err(Error::GridMismatch(format!("t_ref = {t_ref} is not a grid point")));
    }
    let mut values = Vec::with_capacity(t.len() * trajectories.len());
    for tr in trajectories {
        let y = series(tr, component, var);
        let yr = y[iref];
        values.extend(y.iter().map(|v| v * yr));
    }
    Ok(ProductSamples {
        t,
        paths: trajectories.len(),
        values,
    })
}

/// Ensemble autocorrelation A(t) = E[Y(t) Y(t_ref)] with standard errors.
pub fn autocorr_ensemble(trajectories: &[Trajectory], component: usize, var: Variable, t_ref: f64) -> Result<Curve> {
    Ok(autocorr_samples(trajectories, component, var, t_ref)?.curve())
}

/// Time-average estimate C(kΔ) = mean_s y(s) y(s + kΔ) from one long
/// stationary series, for lags 0..=max_lag.
pub fn autocorr_time_average(series: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag.min(series.len().saturating_sub(1)))
        .map(|k| {
            let n = series.len() - k;
            series[..n].iter().zip(&series[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn trapezoid_weights(t: &[f64], weight: Option<&[f64]>) -> Vec<f64> {
    let n = t.len();
    let mut c = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (t[i + 1] - t[i]);
        c[i] += h;
        c[i + 1] += h;
    }
    if let Some(w) = weight {
        for (ci, wi) in c.iter_mut().zip(w) {
            *ci *= wi;
        }
    }
    c
}

/// Weighted L² distance (Σ_i c_i (a_i − b_i)²)^{1/2} with trapezoid
/// weights c_i. The standard error propagates the pointwise standard errors
/// as if time points were independent.
pub fn curve_distance(a: &Curve, b: &Curve, weight: Option<&[f64]>) -> Result<Estimate> {
    if a.t != b.t {
        return Err(Error::GridMismatch("curves do not share a grid".into()));
    }
    if let Some(w) = weight {
        if w.len() != a.t.len() {
            return Err(Error::DimensionMismatch {
                expected: a.t.len(),
                found: w.len(),
            });
        }
    }
    let c = trapezoid_weights(&a.t, weight);
    let mut d2 = 0.0;
    let mut var = 0.0;
    for i in 0..c.len() {
        let diff = a.value[i] - b.value[i];
        d2 += c[i] * diff * diff;
        let se2 = a.stderr[i].powi(2) + b.stderr[i].powi(2);
        if se2.is_finite() {
            var += (2.0 * c[i] * diff).powi(2) * se2;
        }
    }
    let d = d2.sqrt();
    let stderr = if d > 0.0 { var.sqrt() / (2.0 * d) } else { 0.0 };
    Ok(Estimate { value: d, stderr })
}

/// Distance between the mean curves of two product-sample ensembles with a
/// delta-method standard error that keeps the correlation across time
/// points. `paired` treats path b of both ensembles as coupled draws.
pub fn ensemble_curve_distance(
    a: &ProductSamples,
    b: &ProductSamples,
    weight: Option<&[f64]>,
    paired: bool,
) -> Result<Estimate> {
    if a.t != b.t {
        return Err(Error::GridMismatch("ensembles do not share a grid".into()));
    }
    if paired && a.paths != b.paths {
        return Err(Error::DimensionMismatch {
            expected: a.paths,
            found: b.paths,
        });
    }
    let ca = a.curve();
    let cb = b.curve();
    let c = trapezoid_weights(&a.t, weight);
    let diff: Vec<f64> = ca.value.iter().zip(&cb.value).map(|(x, y)| x - y).collect();
    let d2: f64 = c.iter().zip(&diff).map(|(ci, di)| ci * di * di).sum();
    let d = d2.sqrt();
    if d == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            stderr: 0.0,
        });
    }
    let g: Vec<f64> = c.iter().zip(&diff).map(|(ci, di)| 2.0 * ci * di).collect();
    let project = |s: &ProductSamples, bidx: usize| -> f64 { s.path(bidx).iter().zip(&g).map(|(v, gi)| v * gi).sum() };
    let var_d2 = if paired {
        let z: Vec<f64> = (0..a.paths).map(|i| project(a, i) - project(b, i)).collect();
        mean_stderr(&z).1.powi(2)
    } else {
        let za: Vec<f64> = (0..a.paths).map(|i| project(a, i)).collect();
        let zb: Vec<f64> = (0..b.paths).map(|i| project(b, i)).collect();
        mean_stderr(&za).1.powi(2) + mean_stderr(&zb).1.powi(2)
    };
    Ok(Estimate {
        value: d,
        stderr: var_d2.sqrt() / (2.0 * d),
    })
}

/// E[g_A] − E[g_B] from independent ensembles with pooled standard error.
pub fn weak_error(a: &[f64], b: &[f64]) -> Result<Estimate> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("ensemble", "need at least two samples per ensemble"));
    }
    let (ma, sa) = mean_stderr(a);
    let (mb, sb) = mean_stderr(b);
    Ok(Estimate {
        value: ma - mb,
        stderr: (sa * sa + sb * sb).sqrt(),
    })
}

/// Like [`weak_error`] for coupled ensembles, using per-path differences.
pub fn weak_error_paired(a: &[f64], b: &[f64]) -> Result<Estimate> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid(
            "ensemble",
            "paired ensembles need equal sizes of at least two",
        ));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (m, se) = mean_stderr(&d);
    Ok(Estimate { value: m, stderr: se })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_histogram() {
        let h = histogram(&[0.3], &BinSpec::FreedmanDiaconis).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts.iter().filter(|c| **c == 1).count(), 1);
        assert!(histogram(&[], &BinSpec::FreedmanDiaconis).is_err());
    }

    #[test]
    fn fixed_edges_track_out_of_range() {
        let h = histogram(
            &[-2.0, 0.0, 0.5, 1.0, 3.0],
            &BinSpec::Uniform {
                lo: 0.0,
                hi: 1.0,
                bins: 2,
            },
        )
        .unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!((h.underflow, h.overflow), (1, 1));
        assert_eq!(h.total(), 5);
    }

    #[test]
    fn identical_curves_have_zero_distance() {
        let c = Curve {
            t: vec![0.0, 0.5, 1.0],
            value: vec![1.0, 2.0, 3.0],
            stderr: vec![0.1; 3],
        };
        assert_eq!(curve_distance(&c, &c, None).unwrap().value, 0.0);
        let mut d = c.clone();
        d.value.iter_mut().for_each(|v| *v += 0.25);
        assert!((curve_distance(&c, &d, None).unwrap().value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn weak_error_of_same_ensemble_is_zero() {
        let a = [1.0, 2.0, 4.0];
        assert_eq!(weak_error(&a, &a).unwrap().value, 0.0);
    }
}
