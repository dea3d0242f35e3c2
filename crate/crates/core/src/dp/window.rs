//! Deterministic lookahead DP over a window of exactly known incomes and
//! returns, closed off by the stochastic value table.
//!
//! An agent with lookahead `tau` at step `r` knows `(y_t, R_t)` for
//! `t in r..r+tau` (truncated at the horizon). With `e = r + tau` the first
//! unknown step, the decision maximizes
//!
//! ```text
//! sum_{t=r}^{e-1} beta^(t-r) u(c_t) + beta^(e-r) V(x_e, e)
//! ```
//!
//! `tau = 0` is the one-step stochastic Bellman choice read off `V`.

use crate::dp::table::{best_choice, Cursor, ValueTable};
use crate::error::{Error, Result};
use crate::model::{AgentState, AssetGrid, UtilityFn};

#[derive(Debug, Clone, PartialEq)]
pub struct LookaheadWindow {
    pub start: usize,
    pub incomes: Vec<f64>,
    pub returns: Vec<f64>,
}

impl LookaheadWindow {
    /// Window of `depth` known steps starting at `start`, cut at the end of
    /// the given sequences.
    pub fn from_sequences(incomes: &[f64], returns: &[f64], start: usize, depth: usize) -> Self {
        let end = (start + depth).min(incomes.len()).max(start);
        Self {
            start,
            incomes: incomes[start.min(end)..end].to_vec(),
            returns: returns[start.min(end)..end].to_vec(),
        }
    }

    pub fn depth(&self) -> usize {
        self.incomes.len()
    }

    fn validate(&self, horizon: usize) -> Result<()> {
        if self.incomes.len() != self.returns.len() {
            return Err(Error::param("window", "income and return lengths differ"));
        }
        if self.start + self.depth() > horizon {
            return Err(Error::param("window", "extends past the horizon"));
        }
        if self.incomes.iter().any(|y| !(*y >= 0.0) || !y.is_finite())
            || self.returns.iter().any(|r| !(*r > 0.0) || !r.is_finite())
        {
            return Err(Error::param(
                "window",
                "incomes must be >= 0 and returns > 0",
            ));
        }
        Ok(())
    }
}

/// Shared pieces of the deterministic recursion.
#[derive(Clone, Copy)]
pub(crate) struct Stage<'a> {
    pub grid: &'a AssetGrid,
    pub fractions: &'a [f64],
    pub utility: UtilityFn,
    pub beta: f64,
}

impl<'a> Stage<'a> {
    pub(crate) fn of(table: &'a ValueTable) -> Self {
        Self {
            grid: table.grid(),
            fractions: table.fractions(),
            utility: table.params().utility,
            beta: table.discount(),
        }
    }

    #[inline]
    pub(crate) fn choice(&self, next: &[f64], y: f64, r: f64, a: f64) -> (f64, f64) {
        let mut cursor = Cursor::default();
        best_choice(a, self.fractions, |c| {
            self.utility.eval_unchecked(c)
                + self.beta * cursor.interp(self.grid, next, r * (a - c) + y).0
        })
    }

    /// Deterministic Bellman slice for one known step.
    pub(crate) fn slice(&self, next: &[f64], y: f64, r: f64) -> Vec<f64> {
        self.grid
            .points()
            .iter()
            .map(|&x| self.choice(next, y, r, x).1)
            .collect()
    }
}

/// First consumption of the window-optimal plan from `state`.
pub fn solve_lookahead_dp(
    state: &AgentState,
    window: &LookaheadWindow,
    table: &ValueTable,
) -> Result<f64> {
    let horizon = table.horizon();
    window.validate(horizon)?;
    if window.start != state.t {
        return Err(Error::param("window", "start must equal the agent's time"));
    }
    if state.t >= horizon {
        return Err(Error::TimeOutOfRange {
            t: state.t,
            horizon,
        });
    }
    if !(state.assets >= 0.0) {
        return Err(Error::NegativeAssets(state.assets));
    }
    let r = state.t;
    let known = window.depth();
    if known == 0 {
        return Ok(table.stochastic_choice(state.assets, r)?.0);
    }

    let stage = Stage::of(table);
    let e = r + known;
    let mut next: Vec<f64> = table.slice(e).to_vec();
    for t in (r + 1..e).rev() {
        let k = t - r;
        next = stage.slice(&next, window.incomes[k], window.returns[k]);
    }
    let (y, ret) = (window.incomes[0], window.returns[0]);
    note_decision_clamp(table, state.assets, y, ret);
    Ok(stage.choice(&next, y, ret, state.assets).0)
}

fn note_decision_clamp(table: &ValueTable, a: f64, y: f64, r: f64) {
    let reach = r * a + y;
    if reach > table.grid().max() * (1.0 + 1e-12) {
        table.note_clamp(reach);
    }
}

/// Memoized window recursions for one realization.
///
/// The slice `W^e_t` depends only on the first unknown step `e` and on the
/// realized `(y, R)` in `t..e`, so agents that share a realization but differ
/// in lookahead reuse each other's work. Results are bit-identical to
/// [`solve_lookahead_dp`].
pub struct WindowPlanner<'a> {
    table: &'a ValueTable,
    incomes: &'a [f64],
    returns: &'a [f64],
    /// `by_end[e][j]` holds `W^e_{e-1-j}`.
    by_end: Vec<Vec<Vec<f64>>>,
}

impl<'a> WindowPlanner<'a> {
    pub fn new(table: &'a ValueTable, incomes: &'a [f64], returns: &'a [f64]) -> Result<Self> {
        if incomes.len() != table.horizon() || returns.len() != table.horizon() {
            return Err(Error::HorizonMismatch {
                expected: table.horizon(),
                got: incomes.len().min(returns.len()),
            });
        }
        Ok(Self {
            table,
            incomes,
            returns,
            by_end: vec![Vec::new(); table.horizon() + 1],
        })
    }

    fn ensure(&mut self, e: usize, t: usize) {
        let stage = Stage::of(self.table);
        let slices = &mut self.by_end[e];
        // computed down to e - slices.len()
        while e - slices.len() > t {
            let s = e - 1 - slices.len();
            let next: &[f64] = slices
                .last()
                .map(|v| v.as_slice())
                .unwrap_or(self.table.slice(e));
            let fresh = stage.slice(next, self.incomes[s], self.returns[s]);
            slices.push(fresh);
        }
    }

    fn continuation(&self, e: usize, t: usize) -> &[f64] {
        if t == e {
            self.table.slice(e)
        } else {
            &self.by_end[e][e - 1 - t]
        }
    }

    /// Consumption at step `r` with assets `a` for an agent knowing `known`
    /// steps ahead.
    pub fn choose(&mut self, a: f64, r: usize, known: usize) -> Result<f64> {
        let horizon = self.table.horizon();
        if r >= horizon {
            return Err(Error::TimeOutOfRange { t: r, horizon });
        }
        if !(a >= 0.0) {
            return Err(Error::NegativeAssets(a));
        }
        let known = known.min(horizon - r);
        if known == 0 {
            return Ok(self.table.stochastic_choice(a, r)?.0);
        }
        let e = r + known;
        self.ensure(e, r + 1);
        let (y, ret) = (self.incomes[r], self.returns[r]);
        note_decision_clamp(self.table, a, y, ret);
        let stage = Stage::of(self.table);
        Ok(stage.choice(self.continuation(e, r + 1), y, ret, a).0)
    }
}
