//! Interventions against a zero-lookahead baseline on paired realizations.
//!
//! `interventions_runs.csv`: `agent,cohort,arm,lookahead,utility,baseline_utility,additional_utility`,
//! one row per (agent, arm), baseline arm included.
//!
//! `interventions_summary.csv`: `arm,n,mean,median,std,q1,q3,ci95_low,ci95_high`,
//! statistics of `additional_utility` per non-baseline arm.
//!
//! `interventions_pairs.csv`: `arm_a,arm_b,mean_difference,paired_std_error`,
//! for every ordered pair of non-baseline arms, of `additional(a) - additional(b)`.

use std::path::{Path, PathBuf};

use crate::dp::ValueTable;
use crate::error::Result;
use crate::model::ScheduleRealization;
use crate::policy::{run_cohort, AgentSpec, PolicyOptions};
use crate::report::{create_csv, fmt, scenario_table, Feasibility};
use crate::scenario::seeds::stream;
use crate::scenario::{
    apply_intervention, derive_seed, generate_realization, CohortName, Intervention, ScenarioConfig,
};
use crate::stats::{self, SummaryStats};

pub const BASELINE_ARM: &str = "L0";
pub const MONEY_ARM: &str = "L0+Money";

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionRow {
    pub agent: usize,
    pub cohort: CohortName,
    pub arm: String,
    pub lookahead: usize,
    pub utility: f64,
    pub baseline_utility: f64,
    pub additional: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub arm: String,
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedGap {
    pub arm_a: String,
    pub arm_b: String,
    pub mean_difference: f64,
    pub paired_std_error: f64,
}

#[derive(Debug, Clone)]
pub struct InterventionResult {
    pub rows: Vec<InterventionRow>,
    pub summary: Vec<ArmSummary>,
    pub pairs: Vec<PairedGap>,
    pub feasibility: Feasibility,
}

struct Arm {
    label: String,
    intervention: Intervention,
}

fn arms(cfg: &ScenarioConfig) -> Vec<Arm> {
    let e = &cfg.experiments;
    let mut out = vec![
        Arm {
            label: BASELINE_ARM.into(),
            intervention: Intervention::None,
        },
        Arm {
            label: MONEY_ARM.into(),
            intervention: Intervention::Compensation {
                multiplier: e.compensation_multiplier,
                rule: e.compensation_rule,
            },
        },
    ];
    for &weeks in &e.min_lookahead_weeks {
        out.push(Arm {
            label: format!("L{weeks}"),
            intervention: Intervention::MinLookahead { weeks },
        });
    }
    out
}

/// Runs the baseline and every intervention arm on the same agents.
///
/// Agent `i` belongs to cohort `i mod 4`. Under compensation the agent also
/// plans with the compensated income law.
pub fn run_interventions(cfg: &ScenarioConfig) -> Result<InterventionResult> {
    cfg.validate()?;
    let cohorts = cfg.cohorts()?;
    let arms = arms(cfg);
    let n = cfg.experiments.intervention_agents;
    let regime = cfg.returns.regime(cfg.returns.regime);
    let shocks = cfg.shocks.process();
    let options = PolicyOptions {
        subsistence_floor: cfg.model.subsistence_floor,
    };

    struct Agent {
        cohort: usize,
        base: f64,
        realization: ScheduleRealization,
    }
    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let cohort = i % cohorts.len();
        let base = cohorts[cohort].base_income(
            cfg.population.base_income,
            derive_seed(
                cfg.seed,
                &[stream::INTERVENTION, i as u64, stream::BASE_INCOME],
            ),
        );
        let seed = derive_seed(
            cfg.seed,
            &[stream::INTERVENTION, i as u64, stream::REALIZATION],
        );
        let realization = generate_realization(base, &shocks, &regime, cfg.model.horizon, seed)?;
        agents.push(Agent {
            cohort,
            base,
            realization,
        });
    }

    // tables keyed by (base income, whether the law is compensated)
    let mut tables: Vec<((u64, bool), ValueTable)> = Vec::new();
    let mut specs: Vec<Vec<(usize, usize, AgentSpec)>> = Vec::new();
    for (i, agent) in agents.iter().enumerate() {
        for (a, arm) in arms.iter().enumerate() {
            let compensated = matches!(arm.intervention, Intervention::Compensation { .. });
            let key = (agent.base.to_bits(), compensated);
            let slot = match tables.iter().position(|(k, _)| *k == key) {
                Some(p) => p,
                None => {
                    let law = if compensated {
                        arm.intervention
                    } else {
                        Intervention::None
                    };
                    tables.push((key, scenario_table(cfg, agent.base, &regime, &law)?));
                    specs.push(Vec::new());
                    tables.len() - 1
                }
            };
            let (realization, lookahead) =
                apply_intervention(&agent.realization, 0, &arm.intervention)?;
            specs[slot].push((
                i,
                a,
                AgentSpec {
                    realization,
                    lookahead,
                    subsistence: cohorts[agent.cohort].subsistence,
                    initial_assets: cfg.population.initial_assets,
                },
            ));
        }
    }

    let mut utility = vec![vec![f64::NAN; arms.len()]; n];
    let mut lookahead = vec![vec![0usize; arms.len()]; n];
    let mut feasibility = Feasibility::default();
    for ((_, table), group) in tables.iter().zip(&specs) {
        let batch: Vec<AgentSpec> = group.iter().map(|(_, _, s)| s.clone()).collect();
        let recs = run_cohort(table, &batch, options)?;
        for ((i, a, _), rec) in group.iter().zip(recs) {
            feasibility.record(&rec);
            utility[*i][*a] = rec.total_utility;
            lookahead[*i][*a] = rec.lookahead;
        }
    }

    let mut rows = Vec::with_capacity(n * arms.len());
    for i in 0..n {
        for (a, arm) in arms.iter().enumerate() {
            rows.push(InterventionRow {
                agent: i,
                cohort: cohorts[agents[i].cohort].name,
                arm: arm.label.clone(),
                lookahead: lookahead[i][a],
                utility: utility[i][a],
                baseline_utility: utility[i][0],
                additional: utility[i][a] - utility[i][0],
            });
        }
    }
    let additional =
        |a: usize| -> Vec<f64> { (0..n).map(|i| utility[i][a] - utility[i][0]).collect() };
    let summary = (1..arms.len())
        .map(|a| ArmSummary {
            arm: arms[a].label.clone(),
            stats: SummaryStats::from_values(&additional(a)),
        })
        .collect();
    let mut pairs = Vec::new();
    for a in 1..arms.len() {
        for b in 1..arms.len() {
            if a == b {
                continue;
            }
            let diffs: Vec<f64> = (0..n).map(|i| utility[i][a] - utility[i][b]).collect();
            pairs.push(PairedGap {
                arm_a: arms[a].label.clone(),
                arm_b: arms[b].label.clone(),
                mean_difference: stats::mean(&diffs),
                paired_std_error: stats::std_error(&diffs),
            });
        }
    }
    Ok(InterventionResult {
        rows,
        summary,
        pairs,
        feasibility,
    })
}

impl InterventionResult {
    pub const RUN_COLUMNS: [&'static str; 7] = [
        "agent",
        "cohort",
        "arm",
        "lookahead",
        "utility",
        "baseline_utility",
        "additional_utility",
    ];
    pub const PAIR_COLUMNS: [&'static str; 4] =
        ["arm_a", "arm_b", "mean_difference", "paired_std_error"];

    pub fn summary_columns() -> Vec<&'static str> {
        let mut cols = vec!["arm"];
        cols.extend(SummaryStats::COLUMNS);
        cols
    }

    pub fn arm(&self, label: &str) -> Option<&ArmSummary> {
        self.summary.iter().find(|s| s.arm == label)
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairedGap> {
        self.pairs.iter().find(|p| p.arm_a == a && p.arm_b == b)
    }

    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let (mut w, runs) = create_csv(dir, "interventions_runs.csv")?;
        w.write_record(Self::RUN_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.agent.to_string(),
                r.cohort.as_str().to_string(),
                r.arm.clone(),
                r.lookahead.to_string(),
                fmt(r.utility),
                fmt(r.baseline_utility),
                fmt(r.additional),
            ])?;
        }
        w.flush()?;

        let (mut w, summary) = create_csv(dir, "interventions_summary.csv")?;
        w.write_record(Self::summary_columns())?;
        for s in &self.summary {
            let mut rec = vec![s.arm.clone()];
            rec.extend(s.stats.fields());
            w.write_record(rec)?;
        }
        w.flush()?;

        let (mut w, pairs) = create_csv(dir, "interventions_pairs.csv")?;
        w.write_record(Self::PAIR_COLUMNS)?;
        for p in &self.pairs {
            w.write_record([
                p.arm_a.clone(),
                p.arm_b.clone(),
                fmt(p.mean_difference),
                fmt(p.paired_std_error),
            ])?;
        }
        w.flush()?;
        Ok(vec![runs, summary, pairs])
    }
}
