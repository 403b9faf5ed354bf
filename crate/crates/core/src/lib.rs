//! Grid-based Expected Threat (xT) models and their estimation error.
//!
//! The crate covers the whole pipeline: reading open event data
//! ([`ingest`]), discretizing the pitch ([`grid`]), estimating and solving
//! the Markov model ([`xt`]), a closed-form high-probability error bound
//! ([`bound`]), parametric-bootstrap error simulation ([`sim`]), a lognormal
//! law fitted to the simulated errors ([`fit`]) and grid-size guidance
//! derived from that law ([`advisor`]).

pub mod advisor;
pub mod bound;
mod error;
pub mod fit;
pub mod grid;
pub mod ingest;
pub mod sim;
pub mod xt;

pub use advisor::{describe_model, max_flexibility, seasons_to_events, suggest_shape, ModelReport, Recommendation};
pub use bound::{error_bound, BoundInputs, BoundResult};
pub use error::{Error, Result};
pub use fit::{error_law, error_quantile, fit_ols, prob_below, qq_points, LognormalErrorLaw, OlsSummary};
pub use grid::{make_grid, Grid, StateId};
pub use ingest::{normalize, parse_event_files, MatchEvent, NormalizedEvent, Point, RawEventRecord};
pub use sim::{
    build_sampler, regime_filter, resample_counts, run_experiment, run_replication, synth_ground_truth, ExperimentPlan,
    GroundTruth, JointSampler, SimRecord,
};
pub use xt::{
    accumulate_counts, delta_xt, estimate_model, solve_xt, sup_distance, CountsTable, ModelFile, SolverOptions,
    XtModel, XtSolution,
};
