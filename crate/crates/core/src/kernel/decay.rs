use super::memory::MemoryKernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DecayDiagnostic {
    /// log‖K‖ ≈ intercept + exponent · log τ over the envelope of local maxima.
    Fitted {
        exponent: f64,
        intercept: f64,
        maxima: usize,
    },
    Degenerate(String),
}

impl DecayDiagnostic {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            DecayDiagnostic::Fitted { exponent, .. } => Some(*exponent),
            DecayDiagnostic::Degenerate(_) => None,
        }
    }
}

/// Fits the power-law decay of max-entry ‖K(τ)‖ on [1, τ_max], sampled with
/// step `step`, through its local maxima.
pub fn kernel_decay_diagnostic(kernel: &dyn MemoryKernel, tau_max: f64, step: f64) -> Result<DecayDiagnostic> {
    if !(tau_max > 1.0) || !(step > 0.0) {
        return Err(Error::invalid(
            "tau_max",
            format!("need tau_max > 1 and a positive step, got {tau_max} and {step}"),
        ));
    }
    let count = ((tau_max - 1.0) / step).floor() as usize + 1;
    let mut taus = Vec::with_capacity(count);
    let mut norms = Vec::with_capacity(count);
    for i in 0..count {
        let tau = 1.0 + i as f64 * step;
        taus.push(tau);
        norms.push(kernel.eval(tau)?.amax());
    }
    if norms.iter().all(|v| *v == 0.0) {
        return Ok(DecayDiagnostic::Degenerate("kernel vanishes on the whole range".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 1..count.saturating_sub(1) {
        let g = norms[i];
        if g > 0.0 && g > norms[i - 1] && g >= norms[i + 1] {
            xs.push(taus[i].ln());
            ys.push(g.ln());
        }
    }
    if xs.len() < 3 {
        return Ok(DecayDiagnostic::Degenerate(format!(
            "only {} local maxima in [1, {tau_max}]",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    Ok(DecayDiagnostic::Fitted {
        exponent,
        intercept: my - exponent * mx,
        maxima: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{SincKernel, ZeroKernel};

    #[test]
    fn example_decays_like_inverse_lag() {
        let d = kernel_decay_diagnostic(&SincKernel::example(3), 200.0, 0.01).unwrap();
        let e = d.exponent().unwrap();
        assert!((e + 1.0).abs() < 0.02, "{e}");
    }

    #[test]
    fn zero_kernel_is_degenerate() {
        let d = kernel_decay_diagnostic(&ZeroKernel { dim: 2 }, 50.0, 0.1).unwrap();
        assert!(matches!(d, DecayDiagnostic::Degenerate(_)));
    }
}
