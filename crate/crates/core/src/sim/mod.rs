//! Parametric-bootstrap simulation of the xT estimation error.
//!
//! A ground-truth counts table defines a joint `(state, outcome)`
//! distribution. Each replication draws `N` i.i.d. events from it,
//! re-estimates and re-solves the model, and records the sup-norm distance
//! to the ground-truth xT vector.

mod sampler;
pub mod seed;
pub mod synth;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::xt::{estimate_model, solve_xt, sup_distance, CountsTable, SolverOptions, XtModel, XtSolution};

pub use sampler::{build_sampler, resample_counts, Category, JointSampler, Outcome};
pub use seed::mix64;
pub use synth::{synth_events, synth_ground_truth, synth_ground_truth_sized};

/// Grids of the reference design.
pub const REFERENCE_GRIDS: [(usize, usize); 6] = [(16, 12), (32, 24), (40, 30), (48, 36), (56, 42), (64, 48)];

/// Resample sizes of the reference design.
pub const REFERENCE_SIZES: [u64; 8] = [
    100_000, 130_000, 170_000, 240_000, 370_000, 630_000, 1_300_000, 4_000_000,
];

pub const REFERENCE_REPS: u64 = 1000;

/// Cells with `M ln M / √N` at or above this are excluded from fitting.
pub const DEFAULT_REGIME_THRESHOLD: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub m: u64,
    pub n: u64,
    pub rep: u64,
    pub seed: u64,
    pub max_error: f64,
    pub converged: bool,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub grids: Vec<Grid>,
    pub sample_sizes: Vec<u64>,
    pub reps: u64,
    pub master_seed: u64,
}

impl ExperimentPlan {
    /// The full 6 × 8 × 1000 reference design.
    pub fn reference_design(master_seed: u64) -> Self {
        ExperimentPlan {
            grids: REFERENCE_GRIDS
                .iter()
                .map(|&(nx, ny)| Grid::new(nx, ny).expect("positive"))
                .collect(),
            sample_sizes: REFERENCE_SIZES.to_vec(),
            reps: REFERENCE_REPS,
            master_seed,
        }
    }

    /// First two grids, sizes up to 630k, 30 reps.
    pub fn desk_scale(master_seed: u64) -> Self {
        let full = Self::reference_design(master_seed);
        ExperimentPlan {
            grids: full.grids[..2].to_vec(),
            sample_sizes: REFERENCE_SIZES.iter().copied().filter(|&n| n <= 630_000).collect(),
            reps: 30,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grids.is_empty() || self.sample_sizes.is_empty() {
            return Err(invalid("experiment plan needs at least one grid and one sample size"));
        }
        if self.sample_sizes.contains(&0) {
            return Err(invalid("sample sizes must be at least 1"));
        }
        if self.reps == 0 {
            return Err(invalid("reps must be at least 1"));
        }
        Ok(())
    }

    pub fn n_records(&self) -> usize {
        self.grids.len() * self.sample_sizes.len() * self.reps as usize
    }
}

/// A solved ground-truth model ready for resampling.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub model: XtModel,
    pub solution: XtSolution,
    pub sampler: JointSampler,
}

impl GroundTruth {
    pub fn from_counts(counts: &CountsTable, opts: SolverOptions) -> Result<Self> {
        let model = estimate_model(counts);
        let solution = solve_xt(&model, opts)?;
        Self::new(model, solution, counts)
    }

    pub fn new(model: XtModel, solution: XtSolution, counts: &CountsTable) -> Result<Self> {
        if !solution.converged {
            return Err(Error::Domain(format!(
                "ground truth on grid {} did not converge (residual {:e})",
                model.grid, solution.residual
            )));
        }
        let sampler = build_sampler(counts)?;
        Ok(GroundTruth {
            model,
            solution,
            sampler,
        })
    }
}

/// One bootstrap replication.
pub fn run_replication(gt: &GroundTruth, n: u64, rep: u64, master_seed: u64, opts: SolverOptions) -> Result<SimRecord> {
    let m = gt.model.m() as u64;
    let seed = mix64(master_seed, m, n, rep);
    let counts = resample_counts(&gt.sampler, n, seed)?;
    let model = estimate_model(&counts);
    let sol = solve_xt(&model, opts)?;
    let max_error = sup_distance(&sol.xt, &gt.solution.xt)?;
    Ok(SimRecord {
        m,
        n,
        rep,
        seed,
        max_error,
        converged: sol.converged,
        iterations: sol.iterations as u64,
    })
}

/// Runs every `(grid, N, rep)` cell of the plan on `workers` threads.
///
/// Output is sorted by `(m, n, rep)` independent of scheduling.
pub fn run_experiment(
    plan: &ExperimentPlan,
    ground_truths: &[(Grid, CountsTable)],
    opts: SolverOptions,
    workers: usize,
) -> Result<Vec<SimRecord>> {
    plan.validate()?;
    opts.validate()?;
    let gts = plan
        .grids
        .iter()
        .map(|grid| {
            let (_, counts) = ground_truths
                .iter()
                .find(|(g, _)| g == grid)
                .ok_or_else(|| Error::Config(format!("no ground truth supplied for grid {grid}")))?;
            GroundTruth::from_counts(counts, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    run_experiment_with(plan, &gts, opts, workers)
}

/// Like [`run_experiment`] with ground truths already solved, one per plan grid in order.
pub fn run_experiment_with(
    plan: &ExperimentPlan,
    gts: &[GroundTruth],
    opts: SolverOptions,
    workers: usize,
) -> Result<Vec<SimRecord>> {
    plan.validate()?;
    if gts.len() != plan.grids.len() {
        return Err(Error::Config(format!(
            "{} ground truths for {} grids",
            gts.len(),
            plan.grids.len()
        )));
    }
    let tasks: Vec<(usize, u64, u64)> = (0..gts.len())
        .flat_map(|g| {
            plan.sample_sizes
                .iter()
                .flat_map(move |&n| (0..plan.reps).map(move |rep| (g, n, rep)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut records = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(g, n, rep)| run_replication(&gts[g], n, rep, plan.master_seed, opts))
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by_key(|r| (r.m, r.n, r.rep));
    Ok(records)
}

/// `M ln M / √N`.
pub fn regime_statistic(m: u64, n: u64) -> f64 {
    let mf = m as f64;
    mf * mf.ln() / (n as f64).sqrt()
}

/// Keeps converged records with `M ln M / √N < threshold`.
pub fn regime_filter(records: &[SimRecord], threshold: f64) -> Vec<SimRecord> {
    records
        .iter()
        .filter(|r| r.converged && regime_statistic(r.m, r.n) < threshold)
        .copied()
        .collect()
}

pub const SIM_CSV_HEADER: [&str; 7] = ["m", "n", "rep", "seed", "max_error", "converged", "iterations"];

/// 17 significant digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_sim_csv<W: Write>(out: W, records: &[SimRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SIM_CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.m.to_string(),
            r.n.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            fmt_f64(r.max_error),
            r.converged.to_string(),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sim_csv<R: Read>(input: R) -> Result<Vec<SimRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(SIM_CSV_HEADER) {
        return Err(invalid(format!("unexpected simulation CSV header: {headers:?}")));
    }
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}
