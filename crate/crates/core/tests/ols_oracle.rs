use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use xtlab::fit::{design_row, fit_design};
use xtlab::sim::SimRecord;
use xtlab::{fit_ols, qq_points};

/// `(XᵀX)⁻¹ Xᵀy` with the 3 × 3 system solved by Cramer's rule.
fn normal_equations(x: &[[f64; 3]], y: &[f64]) -> [f64; 3] {
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..3 {
            b[i] += row[i] * yi;
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut ak = a;
        for i in 0..3 {
            ak[i][k] = b[i];
        }
        *o = det(ak) / d;
    }
    out
}

fn record(m: u64, n: u64, err: f64) -> SimRecord {
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
fn five_points_match_normal_equations() {
    let pts = [
        (192u64, 100_000u64, 0.041),
        (192, 630_000, 0.019),
        (768, 240_000, 0.083),
        (1200, 1_300_000, 0.051),
        (3072, 4_000_000, 0.072),
    ];
    let recs: Vec<_> = pts.iter().map(|&(m, n, e)| record(m, n, e)).collect();
    let s = fit_ols(&recs).unwrap();
    let x: Vec<_> = pts.iter().map(|&(m, n, _)| design_row(m, n)).collect();
    let y: Vec<_> = pts.iter().map(|p| p.2.ln()).collect();
    let want = normal_equations(&x, &y);
    for (got, w) in [s.c, s.alpha, s.beta].iter().zip(want) {
        assert!((got - w).abs() <= 1e-10, "{got} vs {w}");
    }
    assert!((s.bic - s.aic - 3.0 * (5f64.ln() - 2.0)).abs() < 1e-9);
}

#[test]
fn rescaling_errors_only_shifts_intercept() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let recs: Vec<_> = (0..200)
        .map(|i| {
            let m = [192u64, 768, 1200][i % 3];
            let n = [100_000u64, 370_000, 1_300_000, 4_000_000][i % 4];
            let e = (-2.0 + (m as f64).ln() - (n as f64).sqrt().ln() + noise.sample(&mut rng)).exp();
            record(m, n, e)
        })
        .collect();
    let a = fit_ols(&recs).unwrap();
    let k = 7.5f64;
    let scaled: Vec<_> = recs.iter().map(|r| record(r.m, r.n, r.max_error * k)).collect();
    let b = fit_ols(&scaled).unwrap();
    assert!((b.c - a.c - k.ln()).abs() < 1e-9);
    assert!((b.alpha - a.alpha).abs() < 1e-9 && (b.beta - a.beta).abs() < 1e-9);
    assert!((b.sigma2 - a.sigma2).abs() < 1e-12 && (b.r2 - a.r2).abs() < 1e-12);
}

#[test]
fn qq_of_gaussian_residuals_is_near_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let z = Normal::new(0.0, 1.0).unwrap();
    let (x, y): (Vec<_>, Vec<_>) = (0..10_000)
        .map(|i| {
            let row = [1.0, (i % 17) as f64 * 0.3, (i % 11) as f64 * 0.2];
            (row, 0.5 + row[1] - 2.0 * row[2] + 0.4 * z.sample(&mut rng))
        })
        .unzip();
    let s = fit_design(&x, &y).unwrap();
    let pts = qq_points(&s);
    assert_eq!(pts.len(), 10_000);
    for &(theory, sample) in &pts[100..9_900] {
        assert!((theory - sample).abs() < 0.1, "{theory} vs {sample}");
    }
}
