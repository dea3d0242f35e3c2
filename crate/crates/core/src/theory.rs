//! Executable checks of the lookahead-gap bounds.
//!
//! Everything here uses the simplified setting of the lower-bound instance:
//! no discounting, unit returns, zero starting assets, and income `y_t`
//! available before consuming at step `t`. A sequence is feasible when
//! cumulative consumption never exceeds cumulative income.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dp::{
    build_value_table_with_law, discretize_uniform, DiscreteDistribution, TransitionLaw, ValueTable,
};
use crate::error::{Error, Result};
use crate::model::{AssetGrid, ModelParams, Spacing};
use crate::stats;

const FEAS_TOL: f64 = 1e-9;

/// Income `Y` for the first `k/2` steps, then `x Y` for the last `k/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapInstance {
    pub k: usize,
    pub y_scale: f64,
    pub x: f64,
}

impl GapInstance {
    pub fn new(k: usize, y_scale: f64, x: f64) -> Result<Self> {
        if k < 2 || !k.is_multiple_of(2) {
            return Err(Error::param("k", format!("must be even and >= 2, got {k}")));
        }
        if !(y_scale > 0.0) || !y_scale.is_finite() {
            return Err(Error::param("Y", "must be positive"));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::param("x", "must lie in [0, 1]"));
        }
        Ok(Self { k, y_scale, x })
    }

    pub fn horizon(&self) -> usize {
        self.k
    }

    pub fn incomes(&self) -> Vec<f64> {
        (0..self.k)
            .map(|t| {
                if t < self.k / 2 {
                    self.y_scale
                } else {
                    self.x * self.y_scale
                }
            })
            .collect()
    }

    /// Per-step rate of the optimal plan when `x` is known.
    pub fn uniform_rate(&self) -> f64 {
        (1.0 + self.x) / 2.0 * self.y_scale
    }
}

/// Largest shortfall of cumulative income below cumulative consumption,
/// starting from `initial` assets. Zero (or negative) means feasible.
pub fn budget_shortfall(consumption: &[f64], incomes: &[f64], initial: f64) -> f64 {
    let mut assets = initial;
    let mut worst = f64::NEG_INFINITY;
    for (c, y) in consumption.iter().zip(incomes) {
        assets += y - c;
        worst = worst.max(-assets);
    }
    worst.max(consumption.iter().fold(f64::NEG_INFINITY, |m, c| m.max(-c)))
}

fn sqrt_total(consumption: &[f64]) -> f64 {
    consumption.iter().map(|c| c.sqrt()).sum()
}

/// Total utility of consuming `(1+x)/2 Y` every step, after checking the
/// plan stays within budget.
pub fn full_lookahead_utility(inst: &GapInstance) -> Result<f64> {
    let plan = vec![inst.uniform_rate(); inst.k];
    let short = budget_shortfall(&plan, &inst.incomes(), 0.0);
    if short > FEAS_TOL * inst.y_scale {
        return Err(Error::PolicyInfeasible {
            trial: 0,
            consumption: inst.uniform_rate(),
            available: inst.uniform_rate() - short,
        });
    }
    Ok(sqrt_total(&plan))
}

/// What a policy sees before choosing consumption at step `t`.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub t: usize,
    pub k: usize,
    pub y_scale: f64,
    pub available: f64,
    /// Incomes `y_0..=y_t` received so far.
    pub incomes_seen: &'a [f64],
    /// The hidden draw; only handed to policies that declare clairvoyance.
    pub hidden_x: Option<f64>,
}

pub trait GapPolicy: Sync {
    fn name(&self) -> &str;

    fn clairvoyant(&self) -> bool {
        false
    }

    fn consume(&self, view: &StepView<'_>) -> Result<f64>;
}

/// Knows `x` and consumes the uniform optimum.
pub struct Clairvoyant;

impl GapPolicy for Clairvoyant {
    fn name(&self) -> &str {
        "clairvoyant"
    }

    fn clairvoyant(&self) -> bool {
        true
    }

    fn consume(&self, view: &StepView<'_>) -> Result<f64> {
        let x = view
            .hidden_x
            .ok_or_else(|| Error::param("policy", "clairvoyant policy needs x"))?;
        Ok((1.0 + x) / 2.0 * view.y_scale)
    }
}

/// Consumes a fixed fraction of `Y` each step, capped by what is available.
/// With `rate = (1 + E[x]) / 2 = 0.75` this is the best constant rate
/// under the known distribution.
pub struct FixedRate {
    pub rate: f64,
}

impl Default for FixedRate {
    fn default() -> Self {
        Self { rate: 0.75 }
    }
}

impl GapPolicy for FixedRate {
    fn name(&self) -> &str {
        "fixed_rate"
    }

    fn consume(&self, view: &StepView<'_>) -> Result<f64> {
        Ok((self.rate * view.y_scale).min(view.available))
    }
}

/// The online agent with zero lookahead, planning against a value table
/// that treats each late-half income as an independent uniform draw.
pub struct ZeroLookaheadAgent {
    table: ValueTable,
}

impl ZeroLookaheadAgent {
    pub fn new(
        k: usize,
        y_scale: f64,
        grid_points: usize,
        choices: usize,
        income_nodes: usize,
    ) -> Result<Self> {
        // model time t carries the income that arrives for step t + 1
        let late = discretize_uniform(0.0, y_scale, income_nodes)?;
        let early = DiscreteDistribution::point(y_scale)?;
        let incomes: Vec<DiscreteDistribution> = (0..k)
            .map(|t| {
                let next = t + 1;
                if next >= k {
                    DiscreteDistribution::point(0.0)
                } else if next < k / 2 {
                    Ok(early.clone())
                } else {
                    Ok(late.clone())
                }
            })
            .collect::<Result<_>>()?;
        let law = TransitionLaw::per_step(incomes, vec![DiscreteDistribution::point(1.0)?])?;
        let grid = AssetGrid::new(k as f64 * y_scale, grid_points, Spacing::Linear)?;
        let params = ModelParams::new(k, 1.0, grid)?
            .with_consumption_choices(choices)?
            .with_initial_assets(y_scale)?;
        Ok(Self {
            table: build_value_table_with_law(&params, law)?,
        })
    }

    pub fn table(&self) -> &ValueTable {
        &self.table
    }
}

impl GapPolicy for ZeroLookaheadAgent {
    fn name(&self) -> &str {
        "alg_zero_lookahead"
    }

    fn consume(&self, view: &StepView<'_>) -> Result<f64> {
        Ok(self.table.stochastic_choice(view.available, view.t)?.0)
    }
}

/// Runs `policy` on one instance; returns its consumption sequence.
pub fn run_gap_policy(
    inst: &GapInstance,
    policy: &dyn GapPolicy,
    trial: usize,
) -> Result<Vec<f64>> {
    let incomes = inst.incomes();
    let mut carried = 0.0;
    let mut plan = Vec::with_capacity(inst.k);
    for t in 0..inst.k {
        let available = carried + incomes[t];
        let view = StepView {
            t,
            k: inst.k,
            y_scale: inst.y_scale,
            available,
            incomes_seen: &incomes[..=t],
            hidden_x: policy.clairvoyant().then_some(inst.x),
        };
        let c = policy.consume(&view)?;
        if !(c >= 0.0) || c > available * (1.0 + FEAS_TOL) + FEAS_TOL {
            return Err(Error::PolicyInfeasible {
                trial,
                consumption: c,
                available,
            });
        }
        plan.push(c);
        carried = available - c;
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub k: usize,
    pub y_scale: f64,
    pub policy: String,
    pub n_trials: usize,
    pub mean: f64,
    pub std: f64,
    /// Standard error from antithetic pair means.
    pub std_error: f64,
    pub min_gap: f64,
    pub clairvoyant_mean: f64,
}

/// Full-lookahead utility minus policy utility over `n_trials` draws of `x`,
/// sampled as antithetic pairs `(x, 1 - x)` from a seeded stream.
pub fn measure_gap(
    k: usize,
    y_scale: f64,
    n_trials: usize,
    policy: &dyn GapPolicy,
    seed: u64,
) -> Result<GapStats> {
    if n_trials == 0 {
        return Err(Error::param("n_trials", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaps = Vec::with_capacity(n_trials);
    let mut best = Vec::with_capacity(n_trials);
    let mut xs = Vec::with_capacity(n_trials);
    while xs.len() < n_trials {
        let x: f64 = rng.gen();
        xs.push(x);
        if xs.len() < n_trials {
            xs.push(1.0 - x);
        }
    }
    for (trial, &x) in xs.iter().enumerate() {
        let inst = GapInstance::new(k, y_scale, x)?;
        let upper = full_lookahead_utility(&inst)?;
        let plan = run_gap_policy(&inst, policy, trial)?;
        gaps.push(upper - sqrt_total(&plan));
        best.push(upper);
    }
    let pair_means: Vec<f64> = gaps.chunks(2).map(stats::mean).collect();
    Ok(GapStats {
        k,
        y_scale,
        policy: policy.name().to_string(),
        n_trials,
        mean: stats::mean(&gaps),
        std: stats::std_dev(&gaps),
        std_error: stats::std_error(&pair_means),
        min_gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
        clairvoyant_mean: stats::mean(&best),
    })
}

/// Checks `sqrt(w) <= sqrt(a) + (w - a) / (2 sqrt(a)) - (w - a)^2 / 8`
/// for `a in (1/2, 1)`, `w in (0, 1)`. A few ulps of slack absorb rounding
/// where the two sides touch (`w = a`).
pub fn concavity_helper_check(a: f64, w: f64) -> Result<bool> {
    if !(a > 0.5 && a < 1.0) {
        return Err(Error::param("a", format!("must lie in (1/2, 1), got {a}")));
    }
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::param("w", format!("must lie in (0, 1), got {w}")));
    }
    let sa = a.sqrt();
    let d = w - a;
    let rhs = sa + d / (2.0 * sa) - d * d / 8.0;
    Ok(w.sqrt() <= rhs + 4.0 * f64::EPSILON)
}

/// Replays a lookahead policy's consumption `k` steps late: zero for the
/// first `k` steps, then `c_{t-k}`.
pub fn k_delay_policy(consumption: &[f64], k: usize) -> Vec<f64> {
    let n = consumption.len();
    (0..n)
        .map(|t| if t < k { 0.0 } else { consumption[t - k] })
        .collect()
}

/// `sum_t sqrt(c_t)` for the delayed sequence.
pub fn delayed_utility(consumption: &[f64], k: usize) -> f64 {
    sqrt_total(&k_delay_policy(consumption, k))
}
