use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this argument the Taylor series is summed; above it the
/// continued fraction for E₁(ix) converges quickly.
pub const SI_SWITCH: f64 = 4.0;

/// Sine integral Si(x) = ∫₀ˣ sin s / s ds for x ≥ 0.
pub fn si(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid("x", format!("sine integral needs x >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(FRAC_PI_2);
    }
    Ok(if x <= SI_SWITCH {
        si_series(x)
    } else {
        si_continued_fraction(x)
    })
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0_f64;
    loop {
        // term_k = (-1)^k x^{2k+1} / (2k+1)!
        term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
        let add = term / (2.0 * k + 1.0);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum
}

// Modified Lentz evaluation of E₁(ix) = −Ci(x) + i(Si(x) − π/2).
fn si_continued_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut i = 1.0_f64;
    loop {
        let a = -(i * i);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
        i += 1.0;
        if i > 1e5 {
            break;
        }
    }
    let (s, co) = x.sin_cos();
    h *= Complex64::new(co, -s);
    FRAC_PI_2 + h.im
}
