//! Grid-size guidance from a fitted error law.
//!
//! The recommended flexibility is the largest `M` whose `quantile`-level
//! error stays strictly below `threshold` for the available `N`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{norm_quantile, LognormalErrorLaw};

pub const DEFAULT_THRESHOLD: f64 = 0.03;
pub const DEFAULT_QUANTILE: f64 = 0.9;

/// Events in one league season.
pub const EVENTS_PER_SEASON: f64 = 620_000.0;

/// Aspect ratio of the reference grid family (16×12, 32×24, ...).
const FAMILY_RATIO: f64 = 4.0 / 3.0;
/// Admissible `nx / ny` range for suggested shapes.
const MAX_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub m_max: u64,
    pub suggested_shape: (usize, usize),
    pub threshold: f64,
    pub quantile: f64,
    pub quantile_at_m_max: f64,
    pub n: u64,
    pub law: LognormalErrorLaw,
}

fn check_args(n: u64, threshold: f64, quantile: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(invalid(format!("threshold must be positive, got {threshold}")));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(invalid(format!("quantile must lie in (0, 1), got {quantile}")));
    }
    Ok(())
}

/// Largest `M` with `law.quantile(M, n, quantile) < threshold`.
pub fn max_flexibility(law: &LognormalErrorLaw, n: u64, threshold: f64, quantile: f64) -> Result<Recommendation> {
    check_args(n, threshold, quantile)?;
    if law.alpha.is_nan() || law.alpha <= 0.0 {
        return Err(Error::Domain(format!(
            "error law with alpha = {} does not grow with M; no largest grid exists",
            law.alpha
        )));
    }
    let z = norm_quantile(quantile);
    let log_m = (threshold.ln() - law.sigma() * z - law.c + law.beta * (n as f64).sqrt().ln()) / law.alpha;
    let below = |m: u64| -> Result<bool> { Ok(law.quantile(m, n, quantile)? < threshold) };

    if log_m < 0.0 && !below(1)? {
        // smallest N with q(1, N) < threshold
        let log_sqrt_n = (law.c + law.sigma() * z - threshold.ln()) / law.beta;
        let mut needed = (2.0 * log_sqrt_n).exp().floor().max(1.0) as u64;
        while law.quantile(1, needed, quantile)? >= threshold {
            needed += 1;
        }
        while needed > 1 && law.quantile(1, needed - 1, quantile)? < threshold {
            needed -= 1;
        }
        return Err(Error::InsufficientData { needed });
    }
    if log_m >= 62.0 * std::f64::consts::LN_2 {
        return Err(Error::Domain(format!("M bound e^{log_m:.1} overflows")));
    }
    let mut m_max = log_m.exp().floor().max(1.0) as u64;
    // settle floating-point ties at the boundary
    while m_max > 1 && !below(m_max)? {
        m_max -= 1;
    }
    while below(m_max + 1)? {
        m_max += 1;
    }
    if !below(m_max)? {
        return Err(Error::Domain("boundary search failed at M = 1".into()));
    }
    Ok(Recommendation {
        m_max,
        suggested_shape: suggest_shape(m_max),
        threshold,
        quantile,
        quantile_at_m_max: law.quantile(m_max, n, quantile)?,
        n,
        law: *law,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProb {
    pub threshold: f64,
    pub prob_below: f64,
}

/// Error distribution summary for an existing `(M, N)` model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub m: u64,
    pub n: u64,
    pub median: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub thresholds: Vec<ThresholdProb>,
    pub law: LognormalErrorLaw,
}

pub fn describe_model(law: &LognormalErrorLaw, m: u64, n: u64, thresholds: &[f64]) -> Result<ModelReport> {
    let q50 = law.quantile(m, n, 0.5)?;
    Ok(ModelReport {
        m,
        n,
        median: q50,
        q10: law.quantile(m, n, 0.1)?,
        q50,
        q90: law.quantile(m, n, 0.9)?,
        thresholds: thresholds
            .iter()
            .map(|&t| {
                Ok(ThresholdProb {
                    threshold: t,
                    prob_below: law.prob_below(m, n, t)?,
                })
            })
            .collect::<Result<_>>()?,
        law: *law,
    })
}

/// Grid shape for at most `m_max` cells.
///
/// Among shapes with `1 <= nx / ny <= 2` the largest cell count wins; ties go
/// to the ratio closest to 4/3.
pub fn suggest_shape(m_max: u64) -> (usize, usize) {
    let m_max = m_max.max(1) as usize;
    let mut best = (1usize, 1usize);
    let score = |(nx, ny): (usize, usize)| (nx as f64 / ny as f64 - FAMILY_RATIO).abs();
    let mut ny = 1;
    // for fixed ny only the widest admissible nx can attain the best product
    while ny * ny <= m_max {
        let nx = (m_max / ny).min((MAX_RATIO * ny as f64) as usize);
        if nx >= ny {
            let (p, bp) = (nx * ny, best.0 * best.1);
            if p > bp || (p == bp && score((nx, ny)) < score(best)) {
                best = (nx, ny);
            }
        }
        ny += 1;
    }
    best
}

pub fn seasons_to_events(seasons: f64) -> Result<u64> {
    if !(seasons > 0.0 && seasons.is_finite()) {
        return Err(invalid(format!("seasons must be positive, got {seasons}")));
    }
    Ok((seasons * EVENTS_PER_SEASON).round() as u64)
}

/// `m,q10,q50,q90` for `M = 1..=m_hi`.
pub fn write_curve_csv<W: Write>(out: W, law: &LognormalErrorLaw, n: u64, m_hi: u64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "q10", "q50", "q90"])?;
    for m in 1..=m_hi {
        w.write_record([
            m.to_string(),
            format!("{:.16e}", law.quantile(m, n, 0.1)?),
            format!("{:.16e}", law.quantile(m, n, 0.5)?),
            format!("{:.16e}", law.quantile(m, n, 0.9)?),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAW: LognormalErrorLaw = LognormalErrorLaw::REFERENCE;

    fn scan(law: &LognormalErrorLaw, n: u64, t: f64, q: f64) -> u64 {
        (1..100_000u64)
            .take_while(|&m| law.quantile(m, n, q).unwrap() < t)
            .last()
            .unwrap_or(0)
    }

    #[test]
    fn four_seasons() {
        let n = seasons_to_events(4.0).unwrap();
        assert_eq!(n, 2_480_000);
        let r = max_flexibility(&LAW, n, 0.03, 0.9).unwrap();
        assert_eq!(r.m_max, 278);
        assert_eq!(scan(&LAW, n, 0.03, 0.9), 278);
        assert!(r.quantile_at_m_max < 0.03);
        assert!(LAW.quantile(279, n, 0.9).unwrap() >= 0.03);
        let q130 = LAW.quantile(130, n, 0.9).unwrap();
        assert!((q130 - 0.0141).abs() < 1e-4, "{q130}");
    }

    #[test]
    fn threshold_monotone() {
        let n = 620_000;
        let mut prev = 0;
        for t in [0.03, 0.05, 0.1, 0.3, 1.0] {
            let m = max_flexibility(&LAW, n, t, 0.9).unwrap().m_max;
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn insufficient_data_reports_needed_n() {
        let err = max_flexibility(&LAW, 10, 0.03, 0.9).unwrap_err();
        let Error::InsufficientData { needed } = err else {
            panic!("{err}")
        };
        assert!(LAW.quantile(1, needed, 0.9).unwrap() < 0.03);
        assert!(LAW.quantile(1, needed - 1, 0.9).unwrap() >= 0.03);
        assert_eq!(max_flexibility(&LAW, needed, 0.03, 0.9).unwrap().m_max, 1);
    }

    #[test]
    fn bad_arguments() {
        assert!(max_flexibility(&LAW, 0, 0.03, 0.9).is_err());
        assert!(max_flexibility(&LAW, 10, 0.0, 0.9).is_err());
        assert!(max_flexibility(&LAW, 10, 0.03, 1.0).is_err());
        let flat = LognormalErrorLaw { alpha: 0.0, ..LAW };
        assert!(max_flexibility(&flat, 10_000, 0.03, 0.9).is_err());
        assert!(seasons_to_events(0.0).is_err());
        assert!(seasons_to_events(-1.0).is_err());
    }

    #[test]
    fn season_conversion() {
        assert_eq!(seasons_to_events(1.0).unwrap(), 620_000);
        assert_eq!(seasons_to_events(6.5).unwrap(), 4_030_000);
    }

    #[test]
    fn shapes() {
        assert_eq!(suggest_shape(192), (16, 12));
        assert_eq!(suggest_shape(1), (1, 1));
        assert_eq!(suggest_shape(131), (13, 10));
        assert_eq!(suggest_shape(130), (13, 10));
        assert_eq!(suggest_shape(768), (32, 24));
        for m in 1..500u64 {
            let (nx, ny) = suggest_shape(m);
            assert!(
                nx * ny <= m as usize && nx >= ny && nx as f64 <= 2.0 * ny as f64,
                "m={m}"
            );
        }
    }

    #[test]
    fn describe_one_season_model() {
        let r = describe_model(&LAW, 192, 620_000, &[0.03, 0.05]).unwrap();
        assert!((r.thresholds[0].prob_below - 0.6209).abs() <= 5e-4);
        assert_eq!(r.median, LAW.quantile(192, 620_000, 0.5).unwrap());
        assert!(r.q10 < r.q50 && r.q50 < r.q90);
        assert!(r.thresholds[1].prob_below > r.thresholds[0].prob_below);
    }
}
