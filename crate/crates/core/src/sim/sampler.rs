use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, StateId};
use crate::xt::{CountsTable, MoveCount};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    ShotGoal,
    ShotNoGoal,
    MoveTo(StateId),
    Loss,
}

/// One cell of the joint `(state, outcome)` distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Category {
    pub state: StateId,
    pub outcome: Outcome,
}

/// Categorical distribution over every `(state, outcome)` pair seen in a
/// ground-truth table, weighted by its count.
///
/// Categories are ordered by state, then goal, no-goal, moves by target, loss.
#[derive(Debug, Clone)]
pub struct JointSampler {
    grid: Grid,
    categories: Vec<Category>,
    weights: Vec<u64>,
    total: u64,
    alias: WeightedAliasIndex<u64>,
}

impl JointSampler {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.total as f64;
        self.weights.iter().map(|&w| w as f64 / t).collect()
    }

    /// Ground-truth event count.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Draws `n` category indices and returns how often each was hit.
    pub fn draw_category_counts(&self, n: u64, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = vec![0u64; self.categories.len()];
        for _ in 0..n {
            hits[self.alias.sample(&mut rng)] += 1;
        }
        hits
    }

    /// Folds per-category hits back into a counts table.
    pub fn counts_from_hits(&self, hits: &[u64]) -> CountsTable {
        let mut table = CountsTable::zeros(self.grid);
        for (cat, &h) in self.categories.iter().zip(hits) {
            if h == 0 {
                continue;
            }
            let s = cat.state;
            table.events_in[s] += h;
            match cat.outcome {
                Outcome::ShotGoal => {
                    table.shots[s] += h;
                    table.goals[s] += h;
                }
                Outcome::ShotNoGoal => table.shots[s] += h,
                // categories are sorted, so moves arrive in (from, to) order
                Outcome::MoveTo(to) => table.moves.push(MoveCount { from: s, to, count: h }),
                Outcome::Loss => table.losses[s] += h,
            }
        }
        table
    }
}

pub fn build_sampler(counts: &CountsTable) -> Result<JointSampler> {
    counts.validate()?;
    let mut categories = Vec::new();
    let mut weights = Vec::new();
    let mut push = |state, outcome, w: u64| {
        if w > 0 {
            categories.push(Category { state, outcome });
            weights.push(w);
        }
    };
    let mut moves = counts.moves.iter().peekable();
    for s in 0..counts.grid.m() {
        push(s, Outcome::ShotGoal, counts.goals[s]);
        push(s, Outcome::ShotNoGoal, counts.shots[s] - counts.goals[s]);
        while let Some(mc) = moves.next_if(|mc| mc.from == s) {
            push(s, Outcome::MoveTo(mc.to), mc.count);
        }
        push(s, Outcome::Loss, counts.losses[s]);
    }
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return Err(invalid("cannot resample from an empty counts table"));
    }
    let alias = WeightedAliasIndex::new(weights.clone())
        .map_err(|e| Error::Domain(format!("alias table construction failed: {e}")))?;
    Ok(JointSampler {
        grid: counts.grid,
        categories,
        weights,
        total,
        alias,
    })
}

/// `n` independent draws from the sampler accumulated into a counts table.
pub fn resample_counts(sampler: &JointSampler, n: u64, seed: u64) -> Result<CountsTable> {
    if n == 0 {
        return Err(invalid("resample size N must be at least 1"));
    }
    Ok(sampler.counts_from_hits(&sampler.draw_category_counts(n, seed)))
}
