//! Lognormal law of the sup-norm error, fitted by ordinary least squares.
//!
//! The regression is `ln(err) = c + alpha ln M − beta ln √N + ε` with
//! `ε ~ N(0, σ²)`, so the error is lognormal with median
//! `e^c M^alpha / (√N)^beta`.

pub mod normal;

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::sim::SimRecord;

pub use normal::{norm_cdf, norm_quantile};

/// Per-coefficient statistic for `(c, alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefs<T> {
    pub c: T,
    pub alpha: T,
    pub beta: T,
}

impl<T: Copy> Coefs<T> {
    fn from_array(a: [T; 3]) -> Self {
        Coefs {
            c: a[0],
            alpha: a[1],
            beta: a[2],
        }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.c, self.alpha, self.beta]
    }
}

/// Fitted regression with inference statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsSummary {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Unbiased residual variance `SSR / (n − 3)`.
    pub sigma2: f64,
    pub se: Coefs<f64>,
    pub t: Coefs<f64>,
    pub p: Coefs<f64>,
    pub ci95: Coefs<[f64; 2]>,
    pub r2: f64,
    pub adj_r2: f64,
    /// Gaussian log-likelihood at the ML variance `SSR / n`.
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

const N_PARAMS: usize = 3;
const REGRESSORS: [&str; 3] = ["intercept", "ln M", "-ln sqrt(N)"];

/// Least squares `y ≈ X b` for an `n × 3` design via Householder QR.
///
/// Returns the coefficients and the upper-triangular factor `R`.
fn qr_least_squares(x: &[[f64; 3]], y: &[f64]) -> Result<([f64; 3], [[f64; 3]; 3])> {
    let n = y.len();
    let mut a: Vec<[f64; 3]> = x.to_vec();
    let mut b = y.to_vec();
    let col_norm0: Vec<f64> = (0..N_PARAMS)
        .map(|j| a.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();
    for k in 0..N_PARAMS {
        let norm = (k..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm <= 1e-10 * col_norm0[k].max(1.0) {
            return Err(Error::RankDeficient(REGRESSORS[k]));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        // v = a[k.., k] - alpha e_k, stored in place
        let mut v: Vec<f64> = (k..n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        for j in k..N_PARAMS {
            let dot: f64 = v.iter().zip(k..n).map(|(vi, i)| vi * a[i][j]).sum();
            let f = 2.0 * dot / vtv;
            for (vi, i) in v.iter().zip(k..n) {
                a[i][j] -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(k..n).map(|(vi, i)| vi * b[i]).sum();
        let f = 2.0 * dot / vtv;
        for (vi, i) in v.iter().zip(k..n) {
            b[i] -= f * vi;
        }
    }
    let mut r = [[0.0; 3]; 3];
    for i in 0..N_PARAMS {
        r[i][i..N_PARAMS].copy_from_slice(&a[i][i..N_PARAMS]);
    }
    let mut coef = [0.0; 3];
    for i in (0..N_PARAMS).rev() {
        let s: f64 = (i + 1..N_PARAMS).map(|j| r[i][j] * coef[j]).sum();
        coef[i] = (b[i] - s) / r[i][i];
    }
    Ok((coef, r))
}

/// `(RᵀR)⁻¹ = R⁻¹ R⁻ᵀ` for upper-triangular `R`.
fn xtx_inverse(r: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut rinv = [[0.0; 3]; 3];
    for i in (0..N_PARAMS).rev() {
        rinv[i][i] = 1.0 / r[i][i];
        for j in i + 1..N_PARAMS {
            let s: f64 = (i + 1..=j).map(|k| r[i][k] * rinv[k][j]).sum();
            rinv[i][j] = -s / r[i][i];
        }
    }
    let mut out = [[0.0; 3]; 3];
    for i in 0..N_PARAMS {
        for j in 0..N_PARAMS {
            out[i][j] = (0..N_PARAMS).map(|k| rinv[i][k] * rinv[j][k]).sum();
        }
    }
    out
}

/// Regressors `[1, ln M, −ln √N]` and response `ln(err)` of a record.
pub fn design_row(m: u64, n: u64) -> [f64; 3] {
    [1.0, (m as f64).ln(), -(n as f64).sqrt().ln()]
}

pub fn fit_ols(records: &[SimRecord]) -> Result<OlsSummary> {
    let n = records.len();
    if n < 4 {
        return Err(invalid(format!("need at least 4 records to fit, got {n}")));
    }
    if let Some(r) = records.iter().find(|r| !(r.max_error > 0.0)) {
        return Err(invalid(format!(
            "max_error must be positive for a log fit (m={}, n={}, rep={}: {})",
            r.m, r.n, r.rep, r.max_error
        )));
    }
    let x: Vec<[f64; 3]> = records.iter().map(|r| design_row(r.m, r.n)).collect();
    let y: Vec<f64> = records.iter().map(|r| r.max_error.ln()).collect();
    fit_design(&x, &y)
}

/// OLS on an explicit three-column design.
pub fn fit_design(x: &[[f64; 3]], y: &[f64]) -> Result<OlsSummary> {
    let n = y.len();
    if n != x.len() || n < 4 {
        return Err(invalid("design and response must have the same length of at least 4"));
    }
    for (j, &name) in REGRESSORS.iter().enumerate().skip(1) {
        let first = x[0][j];
        if x.iter().all(|row| row[j] == first) {
            return Err(Error::RankDeficient(name));
        }
    }
    let (coef, r) = qr_least_squares(x, y)?;
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(row, yi)| yi - (0..N_PARAMS).map(|j| row[j] * coef[j]).sum::<f64>())
        .collect();
    let nf = n as f64;
    let df = nf - N_PARAMS as f64;
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let ybar = y.iter().sum::<f64>() / nf;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r2 = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let adj_r2 = 1.0 - (1.0 - r2) * (nf - 1.0) / df;
    let sigma2 = ssr / df;
    let loglik = -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (ssr / nf).ln() + 1.0);
    let k = N_PARAMS as f64;
    let aic = 2.0 * k - 2.0 * loglik;
    let bic = k * nf.ln() - 2.0 * loglik;

    let cov = xtx_inverse(&r);
    let se: [f64; 3] = std::array::from_fn(|j| (sigma2 * cov[j][j]).sqrt());
    let tdist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Domain(e.to_string()))?;
    let tcrit = tdist.inverse_cdf(0.975);
    let tstat: [f64; 3] = std::array::from_fn(|j| coef[j] / se[j]);
    let pval: [f64; 3] = std::array::from_fn(|j| {
        if tstat[j].is_finite() {
            2.0 * tdist.sf(tstat[j].abs())
        } else {
            0.0
        }
    });
    let ci: [[f64; 2]; 3] = std::array::from_fn(|j| [coef[j] - tcrit * se[j], coef[j] + tcrit * se[j]]);

    Ok(OlsSummary {
        c: coef[0],
        alpha: coef[1],
        beta: coef[2],
        sigma2,
        se: Coefs::from_array(se),
        t: Coefs::from_array(tstat),
        p: Coefs::from_array(pval),
        ci95: Coefs::from_array(ci),
        r2,
        adj_r2,
        loglik,
        aic,
        bic,
        n_obs: n,
        residuals,
    })
}

/// Normal QQ data: `(Φ⁻¹((i − 0.5)/n), sorted standardized residual)`.
pub fn qq_points(summary: &OlsSummary) -> Vec<(f64, f64)> {
    let n = summary.residuals.len();
    if n == 0 {
        return Vec::new();
    }
    let scale = summary.sigma2.sqrt();
    let mut z: Vec<f64> = summary
        .residuals
        .iter()
        .map(|e| if scale > 0.0 { e / scale } else { 0.0 })
        .collect();
    z.sort_by(f64::total_cmp);
    z.into_iter()
        .enumerate()
        .map(|(i, s)| (norm_quantile((i as f64 + 0.5) / n as f64), s))
        .collect()
}

pub fn write_qq_csv<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theoretical", "sample"])?;
    for (t, s) in points {
        w.write_record([format!("{t:.16e}"), format!("{s:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Lognormal distribution of the sup-norm error as a function of `(M, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalErrorLaw {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma2: f64,
}

impl LognormalErrorLaw {
    /// Law fitted on 23,000 replications over the five-league open dataset.
    pub const REFERENCE: LognormalErrorLaw = LognormalErrorLaw {
        c: -1.8758,
        alpha: 0.9898,
        beta: 1.0416,
        sigma2: 0.1314,
    };

    pub fn new(c: f64, alpha: f64, beta: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || ![c, alpha, beta, sigma2].iter().all(|v| v.is_finite()) {
            return Err(invalid(format!(
                "law needs finite parameters and sigma2 > 0 (c={c}, alpha={alpha}, beta={beta}, sigma2={sigma2})"
            )));
        }
        Ok(LognormalErrorLaw { c, alpha, beta, sigma2 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Mean of `ln(err)`.
    pub fn mu(&self, m: u64, n: u64) -> f64 {
        self.c + self.alpha * (m as f64).ln() - self.beta * (n as f64).sqrt().ln()
    }

    /// `P(err < t)`.
    pub fn prob_below(&self, m: u64, n: u64, t: f64) -> Result<f64> {
        check_mn(m, n)?;
        if !(t > 0.0) {
            return Err(invalid(format!("error threshold must be positive, got {t}")));
        }
        Ok(norm_cdf((t.ln() - self.mu(m, n)) / self.sigma()))
    }

    /// `q`-quantile of the error.
    pub fn quantile(&self, m: u64, n: u64, q: f64) -> Result<f64> {
        check_mn(m, n)?;
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid(format!("quantile level must lie in (0, 1), got {q}")));
        }
        Ok((self.mu(m, n) + self.sigma() * norm_quantile(q)).exp())
    }
}

fn check_mn(m: u64, n: u64) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(invalid(format!("M and N must be at least 1, got M = {m}, N = {n}")));
    }
    Ok(())
}

pub fn error_law(summary: &OlsSummary) -> Result<LognormalErrorLaw> {
    LognormalErrorLaw::new(summary.c, summary.alpha, summary.beta, summary.sigma2)
}

pub fn prob_below(law: &LognormalErrorLaw, m: u64, n: u64, t: f64) -> Result<f64> {
    law.prob_below(m, n, t)
}

pub fn error_quantile(law: &LognormalErrorLaw, m: u64, n: u64, q: f64) -> Result<f64> {
    law.quantile(m, n, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rec(m: u64, n: u64, err: f64) -> SimRecord {
        SimRecord {
            m,
            n,
            rep: 0,
            seed: 0,
            max_error: err,
            converged: true,
            iterations: 1,
        }
    }

    #[test]
    fn exact_recovery_on_noiseless_power_law() {
        let mut rs = Vec::new();
        for m in [192u64, 768, 1200] {
            for n in [100_000u64, 400_000, 1_300_000] {
                rs.push(rec(m, n, (-2.0f64).exp() * m as f64 / (n as f64).sqrt()));
            }
        }
        let s = fit_ols(&rs).unwrap();
        assert_abs_diff_eq!(s.c, -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.alpha, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.beta, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let same_m: Vec<_> = [1e5, 2e5, 3e5, 4e5].iter().map(|&n| rec(192, n as u64, 0.01)).collect();
        assert!(matches!(fit_ols(&same_m), Err(Error::RankDeficient("ln M"))));
        let same_n: Vec<_> = [10, 20, 30, 40].iter().map(|&m| rec(m, 1000, 0.01)).collect();
        assert!(matches!(fit_ols(&same_n), Err(Error::RankDeficient("-ln sqrt(N)"))));
        let mut ok: Vec<_> = (0..4).map(|i| rec(10 + i, 1000 + 7 * i * i, 0.01)).collect();
        assert!(fit_ols(&ok[..3]).is_err());
        ok[2].max_error = 0.0;
        assert!(fit_ols(&ok).is_err());
    }

    #[test]
    fn information_criteria_identity() {
        let rs: Vec<_> = (0..40)
            .map(|i| {
                rec(
                    100 + 37 * (i % 5),
                    10_000 + 999 * (i / 5),
                    0.01 + 0.003 * ((i * 7) % 11) as f64,
                )
            })
            .collect();
        let s = fit_ols(&rs).unwrap();
        let n = s.n_obs as f64;
        assert_abs_diff_eq!(s.bic - s.aic, 3.0 * (n.ln() - 2.0), epsilon = 1e-9);
        assert!(s.adj_r2 <= s.r2 && (0.0..=1.0).contains(&s.r2));
        assert!(s.ci95.alpha[0] < s.alpha && s.alpha < s.ci95.alpha[1]);
    }

    #[test]
    fn qq_middle_point_is_zero() {
        let s = OlsSummary {
            residuals: vec![1.0, -1.0, 0.0],
            sigma2: 1.0,
            ..fit_ols(&[rec(1, 2, 0.1), rec(2, 3, 0.2), rec(3, 5, 0.15), rec(5, 2, 0.3)]).unwrap()
        };
        let q = qq_points(&s);
        assert_eq!(q.len(), 3);
        assert_eq!(q[1], (0.0, 0.0));
        assert!(q.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
    }

    #[test]
    fn reference_law_values() {
        let law = LognormalErrorLaw::REFERENCE;
        let p = law.prob_below(192, 620_000, 0.03).unwrap();
        assert!((p - 0.6209).abs() <= 0.0005, "{p}");
        assert_abs_diff_eq!(law.quantile(192, 620_000, 0.5).unwrap(), 0.02683, epsilon = 1e-4);
        assert_abs_diff_eq!(law.quantile(192, 620_000, 0.9).unwrap(), 0.0427, epsilon = 2e-4);
        let median = law.mu(192, 620_000).exp();
        assert!((law.prob_below(192, 620_000, median).unwrap() - 0.5).abs() < 1e-15);
        assert!(law.prob_below(192, 620_000, 1e300).unwrap() > 1.0 - 1e-15);
        assert!(law.prob_below(192, 620_000, 1e-300).unwrap() < 1e-15);
        assert!(law.prob_below(192, 620_000, 0.0).is_err());
        assert!(law.quantile(192, 620_000, 1.0).is_err());
        assert!(law.quantile(192, 620_000, 0.0).is_err());
    }

    #[test]
    fn law_projection() {
        let rs: Vec<_> = (0..12)
            .map(|i| rec(50 + 10 * (i % 3), 1000 + 500 * (i / 3), 0.02 + 0.001 * i as f64))
            .collect();
        let s = fit_ols(&rs).unwrap();
        let law = error_law(&s).unwrap();
        assert_eq!(
            (law.c, law.alpha, law.beta, law.sigma2),
            (s.c, s.alpha, s.beta, s.sigma2)
        );
        assert!(LognormalErrorLaw::new(0.0, 1.0, 1.0, 0.0).is_err());
    }
}
