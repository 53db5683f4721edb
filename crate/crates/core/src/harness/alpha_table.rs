use serde::{Deserialize, Serialize};

use crate::alpha::{alpha, harmonic_p_sum};
use crate::error::Result;
use crate::lp::PExponent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub c: usize,
    pub p: PExponent,
    pub alpha: f64,
    pub harmonic_sum: f64,
    /// harmonic_sum / alpha, at most 1.
    pub ratio: f64,
}

/// α(C, p) next to Σ k^{-1/p} for every (C, p) in the grid, C-major.
pub fn alpha_table(cs: &[usize], ps: &[PExponent]) -> Result<Vec<AlphaRow>> {
    let mut rows = Vec::with_capacity(cs.len() * ps.len());
    for &c in cs {
        for &p in ps {
            let a = alpha(c, p)?;
            let h = harmonic_p_sum(c, p)?;
            rows.push(AlphaRow {
                c,
                p,
                alpha: a,
                harmonic_sum: h,
                ratio: h / a,
            });
        }
    }
    Ok(rows)
}

pub fn alpha_table_csv(rows: &[AlphaRow]) -> String {
    let mut out = String::from("C,p,alpha,harmonic_sum,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:?},{:?},{:?}\n",
            r.c, r.p, r.alpha, r.harmonic_sum, r.ratio
        ));
    }
    out
}
