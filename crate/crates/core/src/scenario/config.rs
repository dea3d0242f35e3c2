use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AssetGrid, ModelParams, Spacing};
use crate::scenario::cohort::{
    build_cohorts, parse_incomes, BaseIncome, Cohort, MEDIAN_ASSETS, SUBSISTENCE_SHARE,
    SYNTHETIC_INCOMES_CSV,
};
use crate::scenario::intervention::CompensationRule;
use crate::scenario::process::{RegimeKind, ReturnRegime, ShockProcess};

pub const SCHEMA_VERSION: u32 = 1;

/// A complete experiment description, usually loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub shocks: ShockSection,
    #[serde(default)]
    pub returns: ReturnSection,
    #[serde(default)]
    pub experiments: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub horizon: usize,
    pub discount: f64,
    pub consumption_choices: usize,
    /// Raise consumption to the subsistence level when assets allow.
    pub subsistence_floor: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            horizon: 26,
            discount: 0.95,
            consumption_choices: 65,
            subsistence_floor: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub points: usize,
    pub spacing: Spacing,
    /// Upper grid edge; defaults to the reachability bound of the scenario.
    pub max: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            points: 512,
            spacing: Spacing::Linear,
            max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationSection {
    /// CSV with a `weekly_income` column; the bundled synthetic sample when absent.
    pub income_file: Option<PathBuf>,
    pub agents_per_cohort: usize,
    pub base_income: BaseIncome,
    pub initial_assets: f64,
    pub subsistence_share: f64,
    /// Per-cohort subsistence, low to high; overrides `subsistence_share`.
    pub subsistence: Option<Vec<f64>>,
}

impl Default for PopulationSection {
    fn default() -> Self {
        Self {
            income_file: None,
            agents_per_cohort: 27,
            base_income: BaseIncome::Midpoint,
            initial_assets: MEDIAN_ASSETS,
            subsistence_share: SUBSISTENCE_SHARE,
            subsistence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShockSection {
    pub probability: f64,
    pub size_range: (f64, f64),
    /// Quadrature nodes for the shock size in the value table.
    pub nodes: usize,
}

impl Default for ShockSection {
    fn default() -> Self {
        let s = ShockProcess::default();
        Self {
            probability: s.probability,
            size_range: s.size_range,
            nodes: 7,
        }
    }
}

impl ShockSection {
    pub fn process(&self) -> ShockProcess {
        ShockProcess {
            probability: self.probability,
            size_range: self.size_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReturnSection {
    pub regime: RegimeKind,
    pub baseline_range: (f64, f64),
    pub baseline_jitter: f64,
    pub negative_range: (f64, f64),
    pub positive_range: (f64, f64),
    pub nodes: usize,
    pub jitter_nodes: usize,
}

impl Default for ReturnSection {
    fn default() -> Self {
        let b = ReturnRegime::of(RegimeKind::Baseline);
        Self {
            regime: RegimeKind::Baseline,
            baseline_range: b.range,
            baseline_jitter: b.jitter,
            negative_range: ReturnRegime::of(RegimeKind::Negative).range,
            positive_range: ReturnRegime::of(RegimeKind::Positive).range,
            nodes: 5,
            jitter_nodes: 3,
        }
    }
}

impl ReturnSection {
    pub fn regime(&self, kind: RegimeKind) -> ReturnRegime {
        let (range, jitter) = match kind {
            RegimeKind::Baseline => (self.baseline_range, self.baseline_jitter),
            RegimeKind::Negative => (self.negative_range, 0.0),
            RegimeKind::Positive => (self.positive_range, 0.0),
        };
        ReturnRegime {
            kind,
            range,
            jitter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Lookahead values to sweep; `0..=horizon` when absent.
    pub lookaheads: Option<Vec<usize>>,
    pub n_seeds: usize,
    pub near_max_threshold: f64,
    pub regimes: Vec<RegimeKind>,
    pub intervention_agents: usize,
    pub min_lookahead_weeks: Vec<usize>,
    pub compensation_multiplier: f64,
    pub compensation_rule: CompensationRule,
    pub theory_ks: Vec<usize>,
    pub theory_trials: usize,
    pub theory_y_scale: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            lookaheads: None,
            n_seeds: 100,
            near_max_threshold: 0.05,
            regimes: vec![RegimeKind::Negative, RegimeKind::Positive],
            intervention_agents: 50,
            min_lookahead_weeks: vec![2, 5],
            compensation_multiplier: 2.0,
            compensation_rule: CompensationRule::Shortfall,
            theory_ks: vec![8, 16, 32, 64],
            theory_trials: 2000,
            theory_y_scale: 1.0,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            model: ModelSection::default(),
            grid: GridSection::default(),
            population: PopulationSection::default(),
            shocks: ShockSection::default(),
            returns: ReturnSection::default(),
            experiments: ExperimentSection::default(),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    /// Parses TOML text. Errors carry the line of the offending key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| cfg_err(describe_toml_error(text, &e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a scenario file. A relative `income_file` resolves against the
    /// scenario's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => cfg_err(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let (Some(f), Some(dir)) = (&cfg.population.income_file, path.parent()) {
            if f.is_relative() {
                cfg.population.income_file = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let m = &self.model;
        if m.horizon == 0 {
            return Err(cfg_err("model.horizon must be >= 1"));
        }
        if !(m.discount > 0.0 && m.discount <= 1.0) {
            return Err(cfg_err(format!(
                "model.discount {} not in (0, 1]",
                m.discount
            )));
        }
        if m.consumption_choices < 2 {
            return Err(cfg_err("model.consumption_choices must be >= 2"));
        }
        if self.grid.points < 2 {
            return Err(cfg_err("grid.points must be >= 2"));
        }
        if let Some(max) = self.grid.max {
            if !(max > 0.0 && max.is_finite()) {
                return Err(cfg_err(format!("grid.max {max} must be positive")));
            }
        }
        if let Spacing::Geometric { ratio } = self.grid.spacing {
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(cfg_err(format!(
                    "grid.spacing.ratio {ratio} must be positive"
                )));
            }
        }
        let p = &self.population;
        if !(p.initial_assets >= 0.0 && p.initial_assets.is_finite()) {
            return Err(cfg_err(format!(
                "population.initial_assets {} must be nonnegative",
                p.initial_assets
            )));
        }
        if !(p.subsistence_share >= 0.0 && p.subsistence_share.is_finite()) {
            return Err(cfg_err("population.subsistence_share must be nonnegative"));
        }
        if let Some(s) = &p.subsistence {
            if s.len() != 4 {
                return Err(cfg_err(format!(
                    "population.subsistence needs 4 values, got {}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(cfg_err("population.subsistence values must be nonnegative"));
            }
            if s.windows(2).any(|w| w[1] < w[0]) {
                return Err(cfg_err(
                    "population.subsistence must be non-decreasing in cohort income",
                ));
            }
        }
        self.shocks
            .process()
            .validate()
            .map_err(|e| cfg_err(format!("shocks: {e}")))?;
        if self.shocks.nodes == 0 || self.returns.nodes == 0 || self.returns.jitter_nodes == 0 {
            return Err(cfg_err("quadrature node counts must be >= 1"));
        }
        for kind in RegimeKind::ALL {
            self.returns
                .regime(kind)
                .validate()
                .map_err(|e| cfg_err(format!("returns ({kind}): {e}")))?;
        }
        let e = &self.experiments;
        if let Some(taus) = &e.lookaheads {
            if taus.is_empty() {
                return Err(cfg_err("experiments.lookaheads is empty"));
            }
            if let Some(t) = taus.iter().find(|t| **t > m.horizon) {
                return Err(cfg_err(format!(
                    "lookahead {t} exceeds the horizon {}",
                    m.horizon
                )));
            }
        }
        if e.n_seeds == 0 {
            return Err(cfg_err("experiments.n_seeds must be >= 1"));
        }
        if !(e.near_max_threshold >= 0.0 && e.near_max_threshold < 1.0) {
            return Err(cfg_err("experiments.near_max_threshold must be in [0, 1)"));
        }
        if let Some(w) = e.min_lookahead_weeks.iter().find(|w| **w > m.horizon) {
            return Err(cfg_err(format!(
                "minimum lookahead {w} exceeds the horizon"
            )));
        }
        if !(e.compensation_multiplier >= 0.0 && e.compensation_multiplier.is_finite()) {
            return Err(cfg_err(
                "experiments.compensation_multiplier must be nonnegative",
            ));
        }
        if let Some(k) = e.theory_ks.iter().find(|k| **k < 2 || **k % 2 == 1) {
            return Err(cfg_err(format!("theory k = {k} must be even and >= 2")));
        }
        if !(e.theory_y_scale > 0.0 && e.theory_y_scale.is_finite()) {
            return Err(cfg_err("experiments.theory_y_scale must be positive"));
        }
        Ok(())
    }

    pub fn lookaheads(&self) -> Vec<usize> {
        self.experiments
            .lookaheads
            .clone()
            .unwrap_or_else(|| (0..=self.model.horizon).collect())
    }

    /// Cohorts from the configured (or bundled) income sample, with the
    /// configured subsistence levels.
    pub fn cohorts(&self) -> Result<Vec<Cohort>> {
        let text = match &self.population.income_file {
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| cfg_err(format!("{}: {e}", path.display())))?,
            None => SYNTHETIC_INCOMES_CSV.to_string(),
        };
        let raw = parse_incomes(&text)?;
        let mut cohorts = build_cohorts(&raw, 4 * self.population.agents_per_cohort)?;
        for (i, c) in cohorts.iter_mut().enumerate() {
            c.subsistence = match &self.population.subsistence {
                Some(s) => s[i],
                None => self.population.subsistence_share * c.midpoint(),
            };
        }
        Ok(cohorts)
    }

    /// Model parameters with a grid covering everything reachable from the
    /// initial assets under the given return and income maxima.
    pub fn model_params(&self, r_max: f64, y_max: f64) -> Result<ModelParams> {
        let m = &self.model;
        let a0 = self.population.initial_assets;
        let grid = match self.grid.max {
            Some(max) => AssetGrid::new(max, self.grid.points, self.grid.spacing)?,
            None => AssetGrid::covering(
                a0,
                r_max,
                y_max,
                m.horizon,
                self.grid.points,
                self.grid.spacing,
            )?,
        };
        ModelParams::new(m.horizon, m.discount, grid)?
            .with_consumption_choices(m.consumption_choices)?
            .with_initial_assets(a0)
    }
}

fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}
