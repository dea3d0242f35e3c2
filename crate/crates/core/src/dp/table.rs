//! Backward induction for the stochastic value table `V[x][t]`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::dp::distribution::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::model::{AssetGrid, ModelParams, UtilityFn};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One atom of the joint (income, return) law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub income: f64,
    pub ret: f64,
    pub prob: f64,
}

/// Income and return laws, either stationary or one per time step.
/// Income and returns are independent; the joint law is the product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionLaw {
    income: Vec<DiscreteDistribution>,
    returns: Vec<DiscreteDistribution>,
    joint: Vec<Vec<Node>>,
}

impl TransitionLaw {
    pub fn stationary(income: DiscreteDistribution, returns: DiscreteDistribution) -> Result<Self> {
        Self::per_step(vec![income], vec![returns])
    }

    /// Per-step laws; a single-element vector is reused for every step.
    pub fn per_step(
        income: Vec<DiscreteDistribution>,
        returns: Vec<DiscreteDistribution>,
    ) -> Result<Self> {
        if income.is_empty() || returns.is_empty() {
            return Err(Error::InvalidDistribution("empty transition law".into()));
        }
        if income.len() > 1 && returns.len() > 1 && income.len() != returns.len() {
            return Err(Error::InvalidDistribution(
                "per-step income and return laws differ in length".into(),
            ));
        }
        if let Some(d) = income.iter().find(|d| d.min() < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "income support reaches {} < 0",
                d.min()
            )));
        }
        if let Some(d) = returns.iter().find(|d| !(d.min() > 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "return support reaches {} <= 0",
                d.min()
            )));
        }
        let steps = income.len().max(returns.len());
        let joint = (0..steps)
            .map(|t| {
                let dy = &income[t.min(income.len() - 1)];
                let dr = &returns[t.min(returns.len() - 1)];
                let mut nodes = Vec::with_capacity(dy.len() * dr.len());
                for (y, py) in dy.iter() {
                    for (r, pr) in dr.iter() {
                        nodes.push(Node {
                            income: y,
                            ret: r,
                            prob: py * pr,
                        });
                    }
                }
                nodes
            })
            .collect();
        Ok(Self {
            income,
            returns,
            joint,
        })
    }

    pub fn nodes(&self, t: usize) -> &[Node] {
        &self.joint[t.min(self.joint.len() - 1)]
    }

    pub fn income(&self, t: usize) -> &DiscreteDistribution {
        &self.income[t.min(self.income.len() - 1)]
    }

    pub fn returns(&self, t: usize) -> &DiscreteDistribution {
        &self.returns[t.min(self.returns.len() - 1)]
    }

    pub fn income_laws(&self) -> &[DiscreteDistribution] {
        &self.income
    }

    pub fn return_laws(&self) -> &[DiscreteDistribution] {
        &self.returns
    }
}

/// Maximum expected discounted utility from asset level `x` at time `t`,
/// measured in time-`t` utility units. `V[.][T] = 0`.
#[derive(Debug)]
pub struct ValueTable {
    params: ModelParams,
    law: TransitionLaw,
    fractions: Vec<f64>,
    /// `values[t][i]`, `t` in `0..=T`.
    values: Vec<Vec<f64>>,
    clamps: AtomicU64,
}

impl Clone for ValueTable {
    fn clone(&self) -> Self {
        Self {
            params: self.params.clone(),
            law: self.law.clone(),
            fractions: self.fractions.clone(),
            values: self.values.clone(),
            clamps: AtomicU64::new(self.clamps.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for ValueTable {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.law == other.law && self.values == other.values
    }
}

/// Piecewise-linear lookup in one time slice; clamps above the grid max.
/// Returns the value and whether the lookup clamped.
#[inline]
pub(crate) fn interp_slice(grid: &AssetGrid, slice: &[f64], a: f64) -> (f64, bool) {
    let max = grid.max();
    if a >= max {
        return (slice[slice.len() - 1], a > max * (1.0 + 1e-12));
    }
    let (i, w) = grid.locate(a);
    (slice[i] + w * (slice[i + 1] - slice[i]), false)
}

/// Lookup state for a run of positions that mostly decrease, as the
/// successors of one asset level do when consumption rises. Each lookup
/// walks from the previous cell, returning exactly what [`interp_slice`] does.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Cursor(Option<usize>);

impl Cursor {
    #[inline]
    pub(crate) fn interp(&mut self, grid: &AssetGrid, slice: &[f64], a: f64) -> (f64, bool) {
        let max = grid.max();
        if a >= max {
            return (slice[slice.len() - 1], a > max * (1.0 + 1e-12));
        }
        let (i, w) = match self.0 {
            Some(hint) => grid.locate_from(a, hint),
            None => grid.locate(a),
        };
        self.0 = Some(i);
        (slice[i] + w * (slice[i + 1] - slice[i]), false)
    }
}

/// Scans the candidate consumptions `f * a` in increasing order and keeps the
/// first strict maximizer, so ties go to the smallest consumption.
#[inline]
pub(crate) fn best_choice(
    a: f64,
    fractions: &[f64],
    mut objective: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let mut best_c = 0.0;
    let mut best_v = f64::NEG_INFINITY;
    for &f in fractions {
        let c = f * a;
        let v = objective(c);
        if v > best_v {
            best_v = v;
            best_c = c;
        }
    }
    (best_c, best_v)
}

/// Stochastic Bellman choice at assets `a` given the next slice.
#[inline]
pub(crate) fn stochastic_choice_on(
    grid: &AssetGrid,
    fractions: &[f64],
    utility: UtilityFn,
    beta: f64,
    next: &[f64],
    nodes: &[Node],
    a: f64,
) -> (f64, f64) {
    let mut cursors = vec![Cursor::default(); nodes.len()];
    best_choice(a, fractions, |c| {
        let saved = a - c;
        let mut expected = 0.0;
        for (n, cur) in nodes.iter().zip(cursors.iter_mut()) {
            expected += n.prob * cur.interp(grid, next, n.ret * saved + n.income).0;
        }
        utility.eval_unchecked(c) + beta * expected
    })
}

/// Builds `V` by backward induction over a stationary income/return law.
pub fn build_value_table(
    params: &ModelParams,
    income: &DiscreteDistribution,
    returns: &DiscreteDistribution,
) -> Result<ValueTable> {
    let law = TransitionLaw::stationary(income.clone(), returns.clone())?;
    build_value_table_with_law(params, law)
}

pub fn build_value_table_with_law(params: &ModelParams, law: TransitionLaw) -> Result<ValueTable> {
    params.validate()?;
    let grid = &params.grid;
    let horizon = params.horizon;
    check_grid_covers(params, &law)?;

    let fractions = params.consumption_fractions();
    let n = grid.len();
    let mut values = vec![vec![0.0; n]; horizon + 1];
    for t in (0..horizon).rev() {
        let nodes = law.nodes(t);
        let next = &values[t + 1];
        let solve = |&x: &f64| {
            stochastic_choice_on(
                grid,
                &fractions,
                params.utility,
                params.discount,
                next,
                nodes,
                x,
            )
            .1
        };
        #[cfg(feature = "parallel")]
        let slice: Vec<f64> = grid.points().par_iter().map(solve).collect();
        #[cfg(not(feature = "parallel"))]
        let slice: Vec<f64> = grid.points().iter().map(solve).collect();
        values[t] = slice;
    }

    Ok(ValueTable {
        params: params.clone(),
        law,
        fractions,
        values,
        clamps: AtomicU64::new(0),
    })
}

/// Rejects grids whose max lies below some successor of a reachable grid
/// point. Grid points above the reachable envelope clamp silently.
fn check_grid_covers(params: &ModelParams, law: &TransitionLaw) -> Result<()> {
    let grid = &params.grid;
    let max = grid.max();
    let mut reach = params.initial_assets;
    for t in 0..params.horizon {
        let y_max = law.income(t).max();
        let r_max = law.returns(t).max();
        // worst successor comes from saving everything at the top reachable point
        let top = grid
            .points()
            .iter()
            .copied()
            .rfind(|&x| x <= reach * (1.0 + 1e-12))
            .unwrap_or(0.0);
        let next = r_max * top + y_max;
        if next > max * (1.0 + 1e-9) {
            return Err(Error::GridTooSmall {
                t,
                x: top,
                c: 0.0,
                y: y_max,
                r: r_max,
                next,
                grid_max: max,
            });
        }
        reach = r_max * reach + y_max;
    }
    Ok(())
}

impl ValueTable {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &AssetGrid {
        &self.params.grid
    }

    pub fn horizon(&self) -> usize {
        self.params.horizon
    }

    pub fn discount(&self) -> f64 {
        self.params.discount
    }

    pub fn law(&self) -> &TransitionLaw {
        &self.law
    }

    pub(crate) fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn value(&self, grid_index: usize, t: usize) -> f64 {
        self.values[t][grid_index]
    }

    pub fn slice(&self, t: usize) -> &[f64] {
        &self.values[t]
    }

    /// Number of lookups that clamped above the grid max.
    pub fn clamp_count(&self) -> u64 {
        self.clamps.load(Ordering::Relaxed)
    }

    pub(crate) fn note_clamp(&self, a: f64) {
        let prev = self.clamps.fetch_add(1, Ordering::Relaxed);
        if prev == 0 {
            log::warn!(
                "assets {a} exceed value-table grid max {}; clamping to the top cell",
                self.grid().max()
            );
        }
    }

    /// Piecewise-linear value at assets `a`, time `t`.
    pub fn interpolate(&self, a: f64, t: usize) -> Result<f64> {
        interpolate_value(self, a, t)
    }

    /// One-step stochastic Bellman choice at `(a, t)`: `(consumption, value)`.
    pub fn stochastic_choice(&self, a: f64, t: usize) -> Result<(f64, f64)> {
        if t >= self.horizon() {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon(),
            });
        }
        if !(a >= 0.0) {
            return Err(Error::NegativeAssets(a));
        }
        let next = &self.values[t + 1];
        let nodes = self.law.nodes(t);
        let saved_max = nodes
            .iter()
            .map(|n| n.ret * a + n.income)
            .fold(0.0, f64::max);
        if saved_max > self.grid().max() * (1.0 + 1e-12) {
            self.note_clamp(saved_max);
        }
        Ok(stochastic_choice_on(
            self.grid(),
            &self.fractions,
            self.params.utility,
            self.params.discount,
            next,
            nodes,
            a,
        ))
    }
}

/// Piecewise-linear interpolation of `V[.][t]` in the asset axis.
pub fn interpolate_value(table: &ValueTable, a: f64, t: usize) -> Result<f64> {
    if t > table.horizon() {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: table.horizon(),
        });
    }
    if !(a >= 0.0) {
        return Err(Error::NegativeAssets(a));
    }
    let (v, clamped) = interp_slice(table.grid(), &table.values[t], a);
    if clamped {
        table.note_clamp(a);
    }
    Ok(v)
}
