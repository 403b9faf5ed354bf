//! Synthetic football-like event data for desk-scale experiments.
//!
//! Events are drawn in continuous pitch coordinates, so ground truths for
//! different grids built from the same seed describe the same underlying
//! game. Possession density is concentrated in midfield with a secondary
//! mode in the attacking third; shot rates and per-shot scoring rates decay
//! with distance to the goal centre `(120, 40)`.
//!
//! Play thins out to nothing on a ring around goal. Cells crossing the ring
//! hold a share of events of order `1/M²`, so the sup-norm estimation error
//! grows like `M / √N` across grid refinements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{Grid, PITCH_LENGTH, PITCH_WIDTH};
use crate::ingest::{NormalizedEvent, Point};
use crate::xt::{accumulate_counts, CountsTable};

/// Default size of a synthetic dataset, on par with five top leagues of open data.
pub const DEFAULT_SYNTH_EVENTS: u64 = 4_000_000;

/// Minimum share of losses in every state of a synthetic ground truth.
pub const MIN_LOSS_SHARE: f64 = 0.05;

/// Event density is scaled by `((d - RING_RADIUS) / RING_HALF_WIDTH)²` within
/// `RING_HALF_WIDTH` of this distance `d` from goal.
const RING_RADIUS: f64 = 16.0;
const RING_HALF_WIDTH: f64 = 6.0;

const GOAL: Point = Point {
    x: PITCH_LENGTH,
    y: PITCH_WIDTH / 2.0,
};

fn goal_distance(p: Point) -> f64 {
    (p.x - GOAL.x).hypot(p.y - GOAL.y)
}

pub fn shot_rate(p: Point) -> f64 {
    (0.55 * (-goal_distance(p) / 8.0).exp()).min(0.6)
}

pub fn scoring_rate(p: Point) -> f64 {
    (0.75 * (-goal_distance(p) / 6.5).exp()).clamp(0.01, 0.9)
}

pub fn loss_rate(p: Point) -> f64 {
    0.08 + 0.12 * p.x / PITCH_LENGTH
}

struct World {
    mid_x: Normal<f64>,
    mid_y: Normal<f64>,
    att_x: Normal<f64>,
    att_y: Normal<f64>,
    step_x: Normal<f64>,
    step_y: Normal<f64>,
}

impl World {
    fn new() -> Self {
        let n = |m, s| Normal::new(m, s).expect("positive spread");
        World {
            mid_x: n(55.0, 26.0),
            mid_y: n(40.0, 22.0),
            att_x: n(103.0, 10.0),
            att_y: n(40.0, 14.0),
            step_x: n(6.0, 14.0),
            step_y: n(0.0, 12.0),
        }
    }

    fn location<R: Rng>(&self, rng: &mut R) -> Point {
        loop {
            let u: f64 = rng.random();
            let p = if u < 0.10 {
                Point::new(rng.random::<f64>() * PITCH_LENGTH, rng.random::<f64>() * PITCH_WIDTH)
            } else if u < 0.22 {
                Point::new(self.att_x.sample(rng), self.att_y.sample(rng))
            } else {
                Point::new(self.mid_x.sample(rng), self.mid_y.sample(rng))
            }
            .clamped();
            // density vanishes quadratically on the ring
            let thin = ((goal_distance(p) - RING_RADIUS).abs() / RING_HALF_WIDTH).powi(2);
            if thin >= 1.0 || rng.random::<f64>() < thin {
                return p;
            }
        }
    }

    fn event<R: Rng>(&self, rng: &mut R) -> NormalizedEvent {
        let start = self.location(rng);
        let shot = shot_rate(start);
        let loss = loss_rate(start);
        let u: f64 = rng.random();
        if u < shot {
            NormalizedEvent::Shot {
                start,
                is_goal: rng.random::<f64>() < scoring_rate(start),
            }
        } else if u < shot + loss {
            NormalizedEvent::Loss { start }
        } else {
            let end = Point::new(start.x + self.step_x.sample(rng), start.y + self.step_y.sample(rng)).clamped();
            NormalizedEvent::Move { start, end }
        }
    }
}

/// `n` synthetic events, deterministic in `seed`.
pub fn synth_events(n: u64, seed: u64) -> Vec<NormalizedEvent> {
    let world = World::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| world.event(&mut rng)).collect()
}

/// Ground-truth counts on `grid` from [`DEFAULT_SYNTH_EVENTS`] synthetic events.
pub fn synth_ground_truth(grid: Grid, seed: u64) -> CountsTable {
    synth_ground_truth_sized(grid, seed, DEFAULT_SYNTH_EVENTS)
}

/// Counts `n_events` synthetic events on `grid`, then tops up losses so every
/// state is visited and carries at least [`MIN_LOSS_SHARE`] loss mass.
pub fn synth_ground_truth_sized(grid: Grid, seed: u64, n_events: u64) -> CountsTable {
    let events = synth_events(n_events, seed);
    let mut table = accumulate_counts(&events, grid);
    for s in 0..grid.m() {
        let e = table.events_in[s] as f64;
        let l = table.losses[s] as f64;
        // smallest k with (l + k) / (e + k) >= MIN_LOSS_SHARE
        let mut k = ((MIN_LOSS_SHARE * e - l) / (1.0 - MIN_LOSS_SHARE)).ceil().max(0.0) as u64;
        if table.events_in[s] + k == 0 {
            k = 1;
        }
        while ((table.losses[s] + k) as f64) < MIN_LOSS_SHARE * (table.events_in[s] + k) as f64 {
            k += 1;
        }
        table.losses[s] += k;
        table.events_in[s] += k;
    }
    table
}
