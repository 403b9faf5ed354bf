//! Command-line front end: `xtlab <subcommand> [flags]`.
//!
//! Exit status is 0 on success, 1 when the computation itself fails and 2
//! for unusable arguments. Data goes to files or stdout; everything else to
//! stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use xtlab::advisor::{
    describe_model, max_flexibility, seasons_to_events, write_curve_csv, DEFAULT_QUANTILE, DEFAULT_THRESHOLD,
};
use xtlab::fit::{error_law, fit_ols, qq_points, write_qq_csv};
use xtlab::ingest::{normalize_all, parse_event_files, read_events_csv, write_events_csv};
use xtlab::sim::synth::DEFAULT_SYNTH_EVENTS;
use xtlab::sim::{
    read_sim_csv, regime_filter, run_experiment_with, synth_ground_truth_sized, write_sim_csv,
    DEFAULT_REGIME_THRESHOLD, REFERENCE_GRIDS, REFERENCE_REPS, REFERENCE_SIZES,
};
use xtlab::{
    accumulate_counts, error_bound, estimate_model, solve_xt, BoundInputs, Error, ExperimentPlan, Grid, GroundTruth,
    LognormalErrorLaw, ModelFile, OlsSummary, SolverOptions,
};

/// Master seed used when `--seed` is not given.
pub const DEFAULT_MASTER_SEED: u64 = 2024;
/// Seed of the synthetic ground truth when `--synthetic-seed` is not given.
pub const DEFAULT_SYNTH_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "xtlab", version, about = "Expected Threat models and their estimation error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize open event data into an events CSV.
    Ingest(IngestArgs),
    /// Estimate and solve an xT model on one grid.
    Train(TrainArgs),
    /// Parametric-bootstrap error simulation.
    Simulate(SimulateArgs),
    /// Fit the lognormal error law to simulation output.
    Fit(FitArgs),
    /// Evaluate the high-probability error bound.
    Bound(BoundArgs),
    /// Largest grid meeting an error tolerance.
    Recommend(RecommendArgs),
    /// Error distribution of a given (M, N) model.
    Describe(DescribeArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct SolverArgs {
    /// Convergence tolerance of the fixed-point iteration.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap of the fixed-point iteration.
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

impl SolverArgs {
    fn options(self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Root of the open-data checkout (competitions.json, matches/, events/).
    #[arg(long, env = "XTLAB_DATA_DIR")]
    data_dir: PathBuf,
    /// Competitions to keep, by id, `id/season` or name.
    #[arg(long, value_delimiter = ',')]
    competitions: Option<Vec<String>>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SyntheticArgs {
    /// Seed of the synthetic ground truth.
    #[arg(long, default_value_t = DEFAULT_SYNTH_SEED)]
    synthetic_seed: u64,
    /// Number of synthetic events behind the ground truth.
    #[arg(long, default_value_t = DEFAULT_SYNTH_EVENTS)]
    synthetic_events: u64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Events CSV produced by `ingest`.
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    events: Option<PathBuf>,
    /// Train on synthetic events instead.
    #[arg(long)]
    synthetic: bool,
    #[command(flatten)]
    synth: SyntheticArgs,
    /// Grid as `NXxNY`.
    #[arg(long, default_value = "16x12")]
    grid: Grid,
    /// Output model JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Ground-truth model JSON files from `train`, one per grid.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["events", "grids"])]
    models: Option<Vec<PathBuf>>,
    /// Events CSV; one ground truth per grid is estimated from it.
    #[arg(long)]
    events: Option<PathBuf>,
    #[command(flatten)]
    synth: SyntheticArgs,
    /// Comma-separated `NXxNY` grids.
    #[arg(long, value_delimiter = ',', conflicts_with = "desk_scale")]
    grids: Option<Vec<Grid>>,
    /// Comma-separated resample sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "desk_scale")]
    sizes: Option<Vec<u64>>,
    /// Replications per (grid, size) cell.
    #[arg(long, conflicts_with = "desk_scale")]
    reps: Option<u64>,
    /// First two grids, sizes up to 630000, 30 replications.
    #[arg(long)]
    desk_scale: bool,
    /// Master seed.
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Simulation CSV from `simulate`.
    #[arg(long)]
    sim: PathBuf,
    /// Regime filter cut-off on `M ln M / √N`.
    #[arg(long, default_value_t = DEFAULT_REGIME_THRESHOLD)]
    threshold: f64,
    /// Output fit JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write QQ plot data of the standardized residuals.
    #[arg(long)]
    qq: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Number of states.
    #[arg(long, required_unless_present = "model", conflicts_with = "model")]
    m: Option<u64>,
    /// Number of events.
    #[arg(long, required_unless_present = "model", conflicts_with = "model")]
    n: Option<u64>,
    /// `‖T‖_∞` of the true transition matrix.
    #[arg(long, required_unless_present = "model", conflicts_with = "model")]
    t_norm: Option<f64>,
    /// Take M, N and `‖T‖_∞` from a model JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Failure probability.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct LawArgs {
    /// Fit JSON from `fit`.
    #[arg(long, required_unless_present = "reference_law", conflicts_with = "reference_law")]
    fit: Option<PathBuf>,
    /// Use the published reference law instead of a fit.
    #[arg(long)]
    reference_law: bool,
}

impl LawArgs {
    fn load(&self) -> Result<LognormalErrorLaw> {
        match &self.fit {
            None => Ok(LognormalErrorLaw::REFERENCE),
            Some(path) => {
                let summary: OlsSummary = serde_json::from_reader(BufReader::new(open(path)?))
                    .with_context(|| format!("reading fit {}", path.display()))?;
                Ok(error_law(&summary)?)
            }
        }
    }
}

#[derive(Args, Debug)]
struct SizeArgs {
    /// Number of events.
    #[arg(long, required_unless_present = "seasons", conflicts_with = "seasons")]
    n: Option<u64>,
    /// Number of league seasons of data.
    #[arg(long)]
    seasons: Option<f64>,
}

impl SizeArgs {
    fn events(&self) -> xtlab::Result<u64> {
        match (self.n, self.seasons) {
            (Some(0), _) => Err(Error::InvalidArgument("--n must be at least 1".into())),
            (Some(n), _) => Ok(n),
            (None, Some(s)) => seasons_to_events(s),
            (None, None) => Err(Error::InvalidArgument("one of --n or --seasons is required".into())),
        }
    }
}

#[derive(Args, Debug)]
struct RecommendArgs {
    #[command(flatten)]
    law: LawArgs,
    #[command(flatten)]
    size: SizeArgs,
    /// Error tolerance.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Quantile that must stay below the tolerance.
    #[arg(long, default_value_t = DEFAULT_QUANTILE)]
    quantile: f64,
    /// Also write `m,q10,q50,q90` for M = 1..2·m_max.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Output JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DescribeArgs {
    #[command(flatten)]
    law: LawArgs,
    /// Number of states.
    #[arg(long)]
    m: u64,
    #[command(flatten)]
    size: SizeArgs,
    /// Error tolerances to report `P(error < t)` for.
    #[arg(long, value_delimiter = ',', default_value = "0.03")]
    thresholds: Vec<f64>,
    /// Output JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> xtlab::Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

fn open_unit(name: &str, v: f64) -> xtlab::Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl Command {
    /// Checks every numeric flag before any work starts.
    fn validate(&self) -> xtlab::Result<()> {
        match self {
            Command::Ingest(_) => Ok(()),
            Command::Train(a) => {
                a.solver.options().validate()?;
                if a.synthetic && a.synth.synthetic_events == 0 {
                    return Err(Error::InvalidArgument("--synthetic-events must be at least 1".into()));
                }
                Ok(())
            }
            Command::Simulate(a) => {
                a.solver.options().validate()?;
                if a.models.is_none() && a.events.is_none() && a.synth.synthetic_events == 0 {
                    return Err(Error::InvalidArgument("--synthetic-events must be at least 1".into()));
                }
                if a.workers == Some(0) {
                    return Err(Error::InvalidArgument("--workers must be at least 1".into()));
                }
                let mut plan = a.plan(Vec::new());
                if a.models.is_some() {
                    plan.grids = vec![Grid::new(1, 1)?];
                }
                plan.validate()
            }
            Command::Fit(a) => positive("--threshold", a.threshold),
            Command::Bound(a) => {
                open_unit("--alpha", a.alpha)?;
                if a.m == Some(0) || a.n == Some(0) {
                    return Err(Error::InvalidArgument("--m and --n must be at least 1".into()));
                }
                match a.t_norm {
                    Some(t) if !(0.0..1.0).contains(&t) => {
                        Err(Error::Domain(format!("the bound assumes 0 <= ‖T‖_∞ < 1, got {t}")))
                    }
                    _ => Ok(()),
                }
            }
            Command::Recommend(a) => {
                a.size.events()?;
                positive("--threshold", a.threshold)?;
                open_unit("--quantile", a.quantile)
            }
            Command::Describe(a) => {
                a.size.events()?;
                if a.m == 0 {
                    return Err(Error::InvalidArgument("--m must be at least 1".into()));
                }
                a.thresholds.iter().try_for_each(|&t| positive("--thresholds", t))
            }
        }
    }

    fn run(self) -> Result<()> {
        match self {
            Command::Ingest(a) => ingest(a),
            Command::Train(a) => train(a),
            Command::Simulate(a) => simulate(a),
            Command::Fit(a) => fit(a),
            Command::Bound(a) => bound(a),
            Command::Recommend(a) => recommend(a),
            Command::Describe(a) => describe(a),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let raw = parse_event_files(&a.data_dir, a.competitions.as_deref())?;
    let (events, stats) = normalize_all(&raw);
    info!("kept {} of {} events", stats.kept(), stats.total());
    let out = output(a.out.as_deref())?;
    write_events_csv(out, &events)?;
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let counts = match &a.events {
        Some(path) => {
            let events = read_events_csv(BufReader::new(open(path)?))?;
            accumulate_counts(events.iter().map(|e| &e.event), a.grid)
        }
        None => synth_ground_truth_sized(a.grid, a.synth.synthetic_seed, a.synth.synthetic_events),
    };
    let model = estimate_model(&counts);
    let sol = solve_xt(&model, a.solver.options())?;
    if !sol.converged {
        warn!(
            "solver stopped after {} iterations with residual {:e}",
            sol.iterations, sol.residual
        );
    }
    info!(
        "grid {}: {} events, ‖T‖∞ = {:.4}, {} iterations",
        a.grid,
        model.n_events,
        model.transition_norm(),
        sol.iterations
    );
    write_json(a.out.as_deref(), &ModelFile::new(&model, &sol))
}

impl SimulateArgs {
    fn plan(&self, grids: Vec<Grid>) -> ExperimentPlan {
        if self.desk_scale {
            let mut plan = ExperimentPlan::desk_scale(self.seed);
            if self.models.is_some() {
                plan.grids = grids;
            }
            return plan;
        }
        let default_grids = || {
            REFERENCE_GRIDS
                .iter()
                .map(|&(nx, ny)| Grid::new(nx, ny).expect("positive"))
                .collect()
        };
        ExperimentPlan {
            grids: if self.models.is_some() {
                grids
            } else {
                self.grids.clone().unwrap_or_else(default_grids)
            },
            sample_sizes: self.sizes.clone().unwrap_or_else(|| REFERENCE_SIZES.to_vec()),
            reps: self.reps.unwrap_or(REFERENCE_REPS),
            master_seed: self.seed,
        }
    }

    fn ground_truths(&self) -> Result<(ExperimentPlan, Vec<GroundTruth>)> {
        let opts = self.solver.options();
        if let Some(paths) = &self.models {
            let mut gts = Vec::with_capacity(paths.len());
            for path in paths {
                let file: ModelFile = serde_json::from_reader(BufReader::new(open(path)?))
                    .with_context(|| format!("reading model {}", path.display()))?;
                let (model, sol) = file.into_parts()?;
                let counts = model.to_counts()?;
                gts.push(GroundTruth::new(model, sol, &counts)?);
            }
            let plan = self.plan(gts.iter().map(|g| g.model.grid).collect());
            return Ok((plan, gts));
        }
        let plan = self.plan(Vec::new());
        let events = match &self.events {
            Some(path) => Some(read_events_csv(BufReader::new(open(path)?))?),
            None => None,
        };
        let gts = plan
            .grids
            .iter()
            .map(|&grid| {
                let counts = match &events {
                    Some(ev) => accumulate_counts(ev.iter().map(|e| &e.event), grid),
                    None => synth_ground_truth_sized(grid, self.synth.synthetic_seed, self.synth.synthetic_events),
                };
                GroundTruth::from_counts(&counts, opts)
            })
            .collect::<xtlab::Result<Vec<_>>>()?;
        Ok((plan, gts))
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let (plan, gts) = a.ground_truths()?;
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    info!(
        "{} replications on {} grids with {} workers",
        plan.n_records(),
        plan.grids.len(),
        workers
    );
    let records = run_experiment_with(&plan, &gts, a.solver.options(), workers)?;
    let failed = records.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        warn!("{failed} replications did not converge");
    }
    write_sim_csv(output(a.out.as_deref())?, &records)?;
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let records = read_sim_csv(BufReader::new(open(&a.sim)?))?;
    let kept = regime_filter(&records, a.threshold);
    info!("{} of {} records pass the regime filter", kept.len(), records.len());
    let summary = fit_ols(&kept)?;
    if let Some(qq) = &a.qq {
        write_qq_csv(output(Some(qq))?, &qq_points(&summary))?;
    }
    write_json(a.out.as_deref(), &summary)
}

fn bound(a: BoundArgs) -> Result<()> {
    let input = match &a.model {
        Some(path) => {
            let file: ModelFile = serde_json::from_reader(BufReader::new(open(path)?))
                .with_context(|| format!("reading model {}", path.display()))?;
            let (model, _) = file.into_parts()?;
            BoundInputs {
                m: model.m() as u64,
                n: model.n_events,
                t_norm: model.transition_norm(),
                alpha: a.alpha,
            }
        }
        None => BoundInputs {
            m: a.m.expect("required by clap"),
            n: a.n.expect("required by clap"),
            t_norm: a.t_norm.expect("required by clap"),
            alpha: a.alpha,
        },
    };
    write_json(None, &error_bound(input)?)
}

fn recommend(a: RecommendArgs) -> Result<()> {
    let law = a.law.load()?;
    let n = a.size.events()?;
    let rec = max_flexibility(&law, n, a.threshold, a.quantile)?;
    if let Some(curve) = &a.curve {
        write_curve_csv(output(Some(curve))?, &law, n, 2 * rec.m_max)?;
    }
    write_json(a.out.as_deref(), &rec)
}

fn describe(a: DescribeArgs) -> Result<()> {
    let law = a.law.load()?;
    let report = describe_model(&law, a.m, a.size.events()?, &a.thresholds)?;
    write_json(a.out.as_deref(), &report)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = cli.command.validate() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match cli.command.run() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
