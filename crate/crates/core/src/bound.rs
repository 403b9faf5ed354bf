//! High-probability upper bounds on the sup-norm xT estimation error.
//!
//! With probability at least `1 - alpha`, when every estimated quantity is an
//! average of `N` Bernoulli variables and both the true and estimated
//! transition matrices have `‖T‖_∞ < 1`:
//!
//! ```text
//! ‖x̂T − xT‖_∞ ≤ (t_term + g_term) / (1 − ‖T‖_∞) ≤ 2 t_term / (1 − ‖T‖_∞)
//! t_term = M √(ln(2M²/α) / 2N)      (error in T)
//! g_term =   √(ln(2M/α)  / 2N)      (error in g)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub m: u64,
    pub n: u64,
    /// `‖T‖_∞` of the true transition matrix.
    pub t_norm: f64,
    /// Failure probability.
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub tight: f64,
    pub loose: f64,
    pub t_term: f64,
    pub g_term: f64,
}

pub fn error_bound(input: BoundInputs) -> Result<BoundResult> {
    let BoundInputs { m, n, t_norm, alpha } = input;
    if m == 0 || n == 0 {
        return Err(invalid(format!("M and N must be at least 1, got M = {m}, N = {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(0.0..1.0).contains(&t_norm) {
        return Err(Error::Domain(format!(
            "the bound assumes ‖T‖_∞ < 1 (and ≥ 0), got {t_norm}"
        )));
    }
    let mf = m as f64;
    let two_n = 2.0 * n as f64;
    let t_term = mf * ((2.0 * mf * mf / alpha).ln() / two_n).sqrt();
    let g_term = ((2.0 * mf / alpha).ln() / two_n).sqrt();
    let gap = 1.0 - t_norm;
    Ok(BoundResult {
        tight: (t_term + g_term) / gap,
        loose: 2.0 * t_term / gap,
        t_term,
        g_term,
    })
}
