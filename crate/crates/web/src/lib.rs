//! Browser bindings: each operation takes and returns a JSON string.

#![allow(clippy::field_reassign_with_default)]

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use schedsim_core::model::Spacing;
use schedsim_core::policy::{run_agent, AgentSpec, PolicyOptions, TrajectoryRecord};
use schedsim_core::report::{run_theory_gap, scenario_table, TheoryPolicy};
use schedsim_core::scenario::{
    derive_seed, generate_realization, CohortName, Intervention, RegimeKind, ScenarioConfig,
    SUBSISTENCE_SHARE,
};
use schedsim_core::stats::{self, LineFit};

const MAX_HORIZON: usize = 52;
const MAX_SEEDS: usize = 200;
const MAX_TRIALS: usize = 5000;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkerParams {
    pub cohort: CohortName,
    /// Overrides the cohort's bracket midpoint.
    pub weekly_income: Option<f64>,
    pub initial_assets: f64,
    pub shock_probability: f64,
    pub regime: RegimeKind,
    pub horizon: usize,
    pub grid_points: usize,
    pub consumption_choices: usize,
    pub seed: u64,
    pub n_seeds: usize,
    pub lookahead: usize,
}

impl Default for WorkerParams {
    fn default() -> Self {
        Self {
            cohort: CohortName::Low,
            weekly_income: None,
            initial_assets: 5000.0,
            shock_probability: 0.5,
            regime: RegimeKind::Baseline,
            horizon: 26,
            grid_points: 128,
            consumption_choices: 33,
            seed: 1,
            n_seeds: 20,
            lookahead: 4,
        }
    }
}

struct World {
    cfg: ScenarioConfig,
    base: f64,
    subsistence: f64,
}

impl WorkerParams {
    fn world(&self) -> Result<World, String> {
        if self.horizon == 0 || self.horizon > MAX_HORIZON {
            return Err(format!("horizon must be in 1..={MAX_HORIZON}"));
        }
        if self.n_seeds == 0 || self.n_seeds > MAX_SEEDS {
            return Err(format!("n_seeds must be in 1..={MAX_SEEDS}"));
        }
        let mut cfg = ScenarioConfig::default();
        cfg.seed = self.seed;
        cfg.model.horizon = self.horizon;
        cfg.model.consumption_choices = self.consumption_choices;
        cfg.grid.points = self.grid_points;
        cfg.grid.spacing = Spacing::Geometric { ratio: 1e4 };
        cfg.population.initial_assets = self.initial_assets;
        cfg.shocks.probability = self.shock_probability;
        cfg.returns.regime = self.regime;
        cfg.experiments
            .min_lookahead_weeks
            .retain(|&w| w <= self.horizon);
        cfg.validate().map_err(|e| e.to_string())?;
        let cohort = cfg.cohorts().map_err(|e| e.to_string())?[self.cohort.index()].clone();
        let (base, subsistence) = match self.weekly_income {
            Some(y) if y > 0.0 && y.is_finite() => (y, SUBSISTENCE_SHARE * y),
            Some(y) => return Err(format!("weekly_income {y} must be positive")),
            None => (cohort.midpoint(), cohort.subsistence),
        };
        Ok(World {
            cfg,
            base,
            subsistence,
        })
    }
}

impl World {
    /// Runs every lookahead in `taus` on each realization in `seeds`.
    fn run(
        &self,
        taus: &[usize],
        seeds: std::ops::Range<usize>,
    ) -> Result<Vec<Vec<TrajectoryRecord>>, String> {
        let cfg = &self.cfg;
        let regime = cfg.returns.regime(cfg.returns.regime);
        let table = scenario_table(cfg, self.base, &regime, &Intervention::None)
            .map_err(|e| e.to_string())?;
        let options = PolicyOptions {
            subsistence_floor: cfg.model.subsistence_floor,
        };
        seeds
            .map(|s| {
                let seed = derive_seed(cfg.seed, &[s as u64]);
                let realization = generate_realization(
                    self.base,
                    &cfg.shocks.process(),
                    &regime,
                    cfg.model.horizon,
                    seed,
                )
                .map_err(|e| e.to_string())?;
                taus.iter()
                    .map(|&tau| {
                        let spec = AgentSpec {
                            realization: realization.clone(),
                            lookahead: tau,
                            subsistence: self.subsistence,
                            initial_assets: cfg.population.initial_assets,
                        };
                        run_agent(&table, &spec, options).map_err(|e| e.to_string())
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LookaheadCurve {
    pub weekly_income: f64,
    pub lookaheads: Vec<usize>,
    pub mean_utility: Vec<f64>,
    pub std_error: Vec<f64>,
}

/// Mean total utility against lookahead over `n_seeds` realizations.
pub fn lookahead_curve(p: &WorkerParams) -> Result<LookaheadCurve, String> {
    let world = p.world()?;
    let taus: Vec<usize> = (0..=p.horizon).collect();
    let runs = world.run(&taus, 0..p.n_seeds)?;
    let column = |i: usize| -> Vec<f64> { runs.iter().map(|r| r[i].total_utility).collect() };
    Ok(LookaheadCurve {
        weekly_income: world.base,
        mean_utility: (0..taus.len()).map(|i| stats::mean(&column(i))).collect(),
        std_error: (0..taus.len())
            .map(|i| stats::std_error(&column(i)))
            .collect(),
        lookaheads: taus,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryPair {
    pub income: Vec<f64>,
    pub returns: Vec<f64>,
    /// Zero lookahead.
    pub blind: TrajectoryRecord,
    /// The requested lookahead.
    pub sighted: TrajectoryRecord,
}

/// One realization lived with zero lookahead and with `p.lookahead`.
pub fn trajectory(p: &WorkerParams) -> Result<TrajectoryPair, String> {
    if p.lookahead > p.horizon {
        return Err(format!(
            "lookahead {} exceeds horizon {}",
            p.lookahead, p.horizon
        ));
    }
    let world = p.world()?;
    let mut runs = world
        .run(&[0, p.lookahead], 0..1)?
        .pop()
        .expect("one realization");
    let sighted = runs.pop().expect("two lookaheads");
    let blind = runs.pop().expect("two lookaheads");
    Ok(TrajectoryPair {
        income: blind.income.clone(),
        returns: blind.returns.clone(),
        blind,
        sighted,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapParams {
    pub ks: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub policy: TheoryPolicy,
}

impl Default for GapParams {
    fn default() -> Self {
        Self {
            ks: vec![8, 16, 32],
            trials: 200,
            seed: 1,
            policy: TheoryPolicy::Online,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapCurve {
    pub ks: Vec<usize>,
    pub gap_mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub fit: LineFit,
}

/// Lookahead gap on the adversarial instance for each `k`.
pub fn gap_growth(p: &GapParams) -> Result<GapCurve, String> {
    if p.trials == 0 || p.trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    let mut cfg = ScenarioConfig::default();
    cfg.seed = p.seed;
    cfg.experiments.theory_ks = p.ks.clone();
    cfg.experiments.theory_trials = p.trials;
    let result = run_theory_gap(&cfg, p.policy).map_err(|e| e.to_string())?;
    Ok(GapCurve {
        ks: result.rows.iter().map(|r| r.k).collect(),
        gap_mean: result.rows.iter().map(|r| r.mean).collect(),
        std_error: result.rows.iter().map(|r| r.std_error).collect(),
        fit: result.fit,
    })
}

/// Parses `json` as `P`, applies `f` and serializes the result.
pub fn call_json<P, T>(
    json: &str,
    f: impl FnOnce(&P) -> Result<T, String>,
) -> Result<String, String>
where
    P: for<'de> Deserialize<'de>,
    T: Serialize,
{
    let params: P = serde_json::from_str(json).map_err(|e| e.to_string())?;
    serde_json::to_string(&f(&params)?).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = lookaheadCurve)]
pub fn lookahead_curve_js(params: &str) -> Result<String, JsError> {
    call_json(params, lookahead_curve).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trajectory)]
pub fn trajectory_js(params: &str) -> Result<String, JsError> {
    call_json(params, trajectory).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gapGrowth)]
pub fn gap_growth_js(params: &str) -> Result<String, JsError> {
    call_json(params, gap_growth).map_err(|e| JsError::new(&e))
}
