//! Counting estimator of the Expected Threat Markov model and its fixed-point solver.
//!
//! For each state `s` the model holds the shot probability, the per-cell
//! goal rate of shots (xG), the substochastic move matrix `T` and the
//! absorbing loss probability. The xT vector solves `x = g + T x` with
//! `g[s] = P(shot|s) * xG(s)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, StateId};
use crate::ingest::NormalizedEvent;

/// Number of successful moves observed from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MoveCount {
    pub from: StateId,
    pub to: StateId,
    pub count: u64,
}

/// Per-state event counts on a grid.
///
/// `moves` is kept sorted by `(from, to)` with no duplicate pairs and no
/// zero counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsTable {
    pub grid: Grid,
    pub events_in: Vec<u64>,
    pub shots: Vec<u64>,
    pub goals: Vec<u64>,
    pub losses: Vec<u64>,
    pub moves: Vec<MoveCount>,
}

impl CountsTable {
    pub fn zeros(grid: Grid) -> Self {
        let m = grid.m();
        CountsTable {
            grid,
            events_in: vec![0; m],
            shots: vec![0; m],
            goals: vec![0; m],
            losses: vec![0; m],
            moves: Vec::new(),
        }
    }

    pub fn total_events(&self) -> u64 {
        self.events_in.iter().sum()
    }

    /// Sorts and merges `moves`, dropping zero entries.
    pub(crate) fn canonicalize_moves(&mut self) {
        self.moves.sort_unstable_by_key(|mc| (mc.from, mc.to));
        let mut merged: Vec<MoveCount> = Vec::with_capacity(self.moves.len());
        for mc in self.moves.drain(..) {
            match merged.last_mut() {
                Some(last) if last.from == mc.from && last.to == mc.to => last.count += mc.count,
                _ => merged.push(mc),
            }
        }
        merged.retain(|mc| mc.count > 0);
        self.moves = merged;
    }

    /// Checks the per-state balance `shots + losses + moves = events_in` and `goals <= shots`.
    pub fn validate(&self) -> Result<()> {
        let m = self.grid.m();
        for v in [&self.events_in, &self.shots, &self.goals, &self.losses] {
            if v.len() != m {
                return Err(invalid(format!("count vector of length {} on M = {m}", v.len())));
            }
        }
        let mut moved = vec![0u64; m];
        for mc in &self.moves {
            if mc.from >= m || mc.to >= m {
                return Err(invalid(format!("move {} -> {} outside M = {m}", mc.from, mc.to)));
            }
            moved[mc.from] += mc.count;
        }
        for s in 0..m {
            if self.goals[s] > self.shots[s] {
                return Err(invalid(format!("state {s}: more goals than shots")));
            }
            if self.shots[s] + self.losses[s] + moved[s] != self.events_in[s] {
                return Err(invalid(format!("state {s}: outcome counts do not sum to events_in")));
            }
        }
        Ok(())
    }
}

/// Counts events per state.
pub fn accumulate_counts<'a, I>(events: I, grid: Grid) -> CountsTable
where
    I: IntoIterator<Item = &'a NormalizedEvent>,
{
    let mut table = CountsTable::zeros(grid);
    let mut moves: HashMap<(StateId, StateId), u64> = HashMap::new();
    let cell = |p: crate::ingest::Point| {
        // normalized events are clamped onto the pitch
        grid.cell_of(p.x, p.y).expect("normalized coordinates lie on the pitch")
    };
    for e in events {
        let s = cell(e.start());
        table.events_in[s] += 1;
        match *e {
            NormalizedEvent::Move { end, .. } => *moves.entry((s, cell(end))).or_default() += 1,
            NormalizedEvent::Shot { is_goal, .. } => {
                table.shots[s] += 1;
                if is_goal {
                    table.goals[s] += 1;
                }
            }
            NormalizedEvent::Loss { .. } => table.losses[s] += 1,
        }
    }
    table.moves = moves
        .into_iter()
        .map(|((from, to), count)| MoveCount { from, to, count })
        .collect();
    table.canonicalize_moves();
    table
}

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets sorted by row.
    pub fn from_sorted_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut row_ptr = vec![0usize; n + 1];
        let mut prev_row = 0;
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(invalid(format!("entry ({r}, {c}) outside {n}x{n}")));
            }
            if r < prev_row {
                return Err(invalid("triplets are not sorted by row"));
            }
            prev_row = r;
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            cols: triplets.iter().map(|t| t.1).collect(),
            vals: triplets.iter().map(|t| t.2).collect(),
        })
    }

    pub fn zeros(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Dot product of row `r` with `x`.
    #[inline]
    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| v * x[c])
            .sum()
    }
}

/// Estimated Markov model on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct XtModel {
    pub grid: Grid,
    pub shot_prob: Vec<f64>,
    pub xg: Vec<f64>,
    pub g: Vec<f64>,
    pub transitions: SparseMatrix,
    pub loss_prob: Vec<f64>,
    /// Events observed per state; the ratios above are conditional on these.
    pub events_in: Vec<u64>,
    pub n_events: u64,
}

impl XtModel {
    pub fn m(&self) -> usize {
        self.grid.m()
    }

    /// `‖T‖_∞`, the largest total move probability of any state.
    pub fn transition_norm(&self) -> f64 {
        self.transitions.norm_inf()
    }

    /// Recovers the integer counts the model was estimated from.
    pub fn to_counts(&self) -> Result<CountsTable> {
        let mut t = CountsTable::zeros(self.grid);
        for s in 0..self.m() {
            let e = self.events_in[s];
            let ef = e as f64;
            t.events_in[s] = e;
            t.shots[s] = (self.shot_prob[s] * ef).round() as u64;
            t.goals[s] = (self.xg[s] * t.shots[s] as f64).round() as u64;
            t.losses[s] = if e == 0 {
                0
            } else {
                (self.loss_prob[s] * ef).round() as u64
            };
            for (to, p) in self.transitions.row(s) {
                t.moves.push(MoveCount {
                    from: s,
                    to,
                    count: (p * ef).round() as u64,
                });
            }
        }
        t.canonicalize_moves();
        t.validate()
            .map_err(|e| Error::Domain(format!("model probabilities do not match its event counts: {e}")))?;
        Ok(t)
    }
}

/// Turns counts into conditional probabilities.
///
/// Unvisited states become absorbing losses; states without shots get `xg = 0`.
pub fn estimate_model(counts: &CountsTable) -> XtModel {
    let m = counts.grid.m();
    let mut shot_prob = vec![0.0; m];
    let mut xg = vec![0.0; m];
    let mut loss_prob = vec![1.0; m];
    for s in 0..m {
        let e = counts.events_in[s];
        if e == 0 {
            continue;
        }
        let ef = e as f64;
        shot_prob[s] = counts.shots[s] as f64 / ef;
        loss_prob[s] = counts.losses[s] as f64 / ef;
        if counts.shots[s] > 0 {
            xg[s] = counts.goals[s] as f64 / counts.shots[s] as f64;
        }
    }
    let triplets: Vec<(usize, usize, f64)> = counts
        .moves
        .iter()
        .filter(|mc| mc.count > 0)
        .map(|mc| (mc.from, mc.to, mc.count as f64 / counts.events_in[mc.from] as f64))
        .collect();
    let transitions =
        SparseMatrix::from_sorted_triplets(m, &triplets).expect("canonical move counts are sorted and in range");
    let g = shot_prob.iter().zip(&xg).map(|(p, x)| p * x).collect();
    XtModel {
        grid: counts.grid,
        shot_prob,
        xg,
        g,
        transitions,
        loss_prob,
        events_in: counts.events_in.clone(),
        n_events: counts.total_events(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XtSolution {
    pub xt: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm of the last update.
    pub residual: f64,
    pub converged: bool,
}

/// Fixed-point iteration `x ← g + T x` from `x = 0`.
///
/// Stops once an update moves no entry by `tol` or more. A run that hits
/// `max_iter` returns the last iterate with `converged = false`.
pub fn solve_xt(model: &XtModel, opts: SolverOptions) -> Result<XtSolution> {
    opts.validate()?;
    let m = model.m();
    let t = &model.transitions;
    let mut x = vec![0.0; m];
    let mut next = vec![0.0; m];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        residual = 0.0;
        for s in 0..m {
            let v = (model.g[s] + t.row_dot(s, &x)).min(1.0);
            residual = residual.max((v - x[s]).abs());
            next[s] = v;
        }
        std::mem::swap(&mut x, &mut next);
        if residual < opts.tol {
            return Ok(XtSolution {
                xt: x,
                iterations: it,
                residual,
                converged: true,
            });
        }
    }
    Ok(XtSolution {
        xt: x,
        iterations: opts.max_iter,
        residual,
        converged: false,
    })
}

/// Value of moving the ball from `before` to `after`.
pub fn delta_xt(solution: &XtSolution, before: StateId, after: StateId) -> Result<f64> {
    let m = solution.xt.len();
    if before >= m || after >= m {
        return Err(invalid(format!("state out of range for M = {m}: {before} -> {after}")));
    }
    Ok(solution.xt[after] - solution.xt[before])
}

/// `max_s |a[s] - b[s]|`.
pub fn sup_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SolverInfo {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

/// On-disk form of a trained model together with its solution.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub grid: GridSpec,
    pub n_events: u64,
    pub shot_prob: Vec<f64>,
    pub xg: Vec<f64>,
    pub loss_prob: Vec<f64>,
    pub transitions: Vec<(usize, usize, f64)>,
    pub xt: Vec<f64>,
    pub solver: SolverInfo,
    pub events_in: Vec<u64>,
}

impl ModelFile {
    pub fn new(model: &XtModel, solution: &XtSolution) -> Self {
        ModelFile {
            grid: GridSpec {
                nx: model.grid.nx(),
                ny: model.grid.ny(),
            },
            n_events: model.n_events,
            shot_prob: model.shot_prob.clone(),
            xg: model.xg.clone(),
            loss_prob: model.loss_prob.clone(),
            transitions: model.transitions.triplets().collect(),
            xt: solution.xt.clone(),
            solver: SolverInfo {
                iterations: solution.iterations,
                residual: solution.residual,
                converged: solution.converged,
            },
            events_in: model.events_in.clone(),
        }
    }

    pub fn into_parts(self) -> Result<(XtModel, XtSolution)> {
        let grid = Grid::new(self.grid.nx, self.grid.ny)?;
        let m = grid.m();
        let lens = [
            self.shot_prob.len(),
            self.xg.len(),
            self.loss_prob.len(),
            self.xt.len(),
            self.events_in.len(),
        ];
        if lens.iter().any(|&l| l != m) {
            return Err(invalid(format!("model vectors do not match M = {m}")));
        }
        let transitions = SparseMatrix::from_sorted_triplets(m, &self.transitions)?;
        let g = self.shot_prob.iter().zip(&self.xg).map(|(p, x)| p * x).collect();
        let model = XtModel {
            grid,
            shot_prob: self.shot_prob,
            xg: self.xg,
            g,
            transitions,
            loss_prob: self.loss_prob,
            events_in: self.events_in,
            n_events: self.n_events,
        };
        let solution = XtSolution {
            xt: self.xt,
            iterations: self.solver.iterations,
            residual: self.solver.residual,
            converged: self.solver.converged,
        };
        Ok((model, solution))
    }
}
