//! Growth of the bounds in the number of components C.

use crate::error::{Error, Result};
use crate::lp::PExponent;

/// α(C, p): linear in C for p = ∞, C^{1-1/p} for 1 < p < ∞, 1 + ln C at p = 1 and
/// constant for 0 < p < 1.
pub fn alpha(c: usize, p: PExponent) -> Result<f64> {
    if c < 2 {
        return Err(Error::domain(format!("alpha requires C >= 2, got {c}")));
    }
    p.validate()?;
    let cf = c as f64;
    Ok(match p {
        PExponent::Infinity => cf,
        PExponent::Finite(p) if p > 1.0 => p / (p - 1.0) * cf.powf(1.0 - 1.0 / p),
        PExponent::Finite(1.0) => 1.0 + cf.ln(),
        PExponent::Finite(p) => 1.0 / (1.0 - p),
    })
}

/// Σ_{k=1}^C k^{-1/p}; equals C for p = ∞. Always bounded above by [`alpha`] for C ≥ 2.
pub fn harmonic_p_sum(c: usize, p: PExponent) -> Result<f64> {
    if c < 1 {
        return Err(Error::domain("harmonic_p_sum requires C >= 1"));
    }
    p.validate()?;
    Ok(match p {
        PExponent::Infinity => c as f64,
        PExponent::Finite(p) => {
            let e = -1.0 / p;
            (1..=c).map(|k| (k as f64).powf(e)).sum()
        }
    })
}
