use statrs::distribution::{ChiSquared, ContinuousCDF};
use xtlab::sim::synth_ground_truth_sized;
use xtlab::xt::MoveCount;
use xtlab::{build_sampler, resample_counts, CountsTable, Grid};

fn small_table() -> CountsTable {
    let mut t = CountsTable::zeros(Grid::new(2, 2).unwrap());
    t.events_in = vec![100, 40, 7, 53];
    t.shots = vec![10, 5, 0, 20];
    t.goals = vec![2, 0, 0, 7];
    t.losses = vec![30, 5, 3, 13];
    t.moves = vec![
        MoveCount {
            from: 0,
            to: 1,
            count: 45,
        },
        MoveCount {
            from: 0,
            to: 3,
            count: 15,
        },
        MoveCount {
            from: 1,
            to: 0,
            count: 30,
        },
        MoveCount {
            from: 2,
            to: 2,
            count: 4,
        },
        MoveCount {
            from: 3,
            to: 2,
            count: 20,
        },
    ];
    t.validate().unwrap();
    t
}

const N: u64 = 1_000_000;

#[test]
fn frequencies_within_five_sd() {
    let sampler = build_sampler(&small_table()).unwrap();
    let hits = sampler.draw_category_counts(N, 99);
    assert_eq!(hits.iter().sum::<u64>(), N);
    for (p, &h) in sampler.probabilities().iter().zip(&hits) {
        let sd = (N as f64 * p * (1.0 - p)).sqrt();
        assert!((h as f64 - N as f64 * p).abs() <= 5.0 * sd, "p={p} hits={h}");
    }
}

#[test]
fn chi_square_goodness_of_fit() {
    let gt = synth_ground_truth_sized(Grid::new(4, 3).unwrap(), 2, 200_000);
    let sampler = build_sampler(&gt).unwrap();
    let hits = sampler.draw_category_counts(N, 100);
    let probs = sampler.probabilities();
    let stat: f64 = probs
        .iter()
        .zip(&hits)
        .map(|(p, &h)| {
            let e = N as f64 * p;
            (h as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (probs.len() - 1) as f64;
    let pval = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
    assert!(pval > 1e-4, "chi2 = {stat} on {dof} dof, p = {pval}");
}

#[test]
fn resampled_table_is_consistent() {
    let sampler = build_sampler(&small_table()).unwrap();
    let t = resample_counts(&sampler, N, 5).unwrap();
    t.validate().unwrap();
    assert_eq!(t.total_events(), N);
    assert!(t.moves.iter().all(|mv| (mv.from, mv.to) != (1, 3)));
}
