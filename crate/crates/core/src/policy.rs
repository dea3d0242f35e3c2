//! Online consumption with lookahead, run end to end for one agent.
//!
//! At each step the agent solves the window DP on what it can see, consumes,
//! then moves to `R_t (a_t - c_t) + y_t` using the realized values.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dp::{ValueTable, WindowPlanner};
use crate::error::{Error, Result};
use crate::model::{step_assets, ScheduleRealization};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOptions {
    /// Raise consumption to the subsistence level when assets allow it.
    pub subsistence_floor: bool,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        Self {
            subsistence_floor: true,
        }
    }
}

/// One agent's inputs: what it experiences and how far it sees.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub realization: ScheduleRealization,
    pub lookahead: usize,
    pub subsistence: f64,
    pub initial_assets: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub lookahead: usize,
    pub time: Vec<usize>,
    pub assets_before: Vec<f64>,
    pub consumption: Vec<f64>,
    pub income: Vec<f64>,
    pub returns: Vec<f64>,
    pub discounted_utility: Vec<f64>,
    pub hardship: Vec<bool>,
    pub final_assets: f64,
    pub total_utility: f64,
    pub hardship_count: usize,
}

impl TrajectoryRecord {
    fn with_capacity(lookahead: usize, n: usize) -> Self {
        Self {
            lookahead,
            time: Vec::with_capacity(n),
            assets_before: Vec::with_capacity(n),
            consumption: Vec::with_capacity(n),
            income: Vec::with_capacity(n),
            returns: Vec::with_capacity(n),
            discounted_utility: Vec::with_capacity(n),
            hardship: Vec::with_capacity(n),
            final_assets: 0.0,
            total_utility: 0.0,
            hardship_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Largest violation of the budget constraint and of the asset law.
    pub fn feasibility_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..self.len() {
            let a = self.assets_before[t];
            let c = self.consumption[t];
            worst = worst.max(-c).max(c - a).max(-a);
            let next = if t + 1 < self.len() {
                self.assets_before[t + 1]
            } else {
                self.final_assets
            };
            let expected = self.returns[t] * (a - c) + self.income[t];
            worst = worst.max((next - expected).abs());
        }
        worst
    }
}

fn simulate(
    table: &ValueTable,
    planner: &mut WindowPlanner<'_>,
    spec: &AgentSpec,
    options: PolicyOptions,
) -> Result<TrajectoryRecord> {
    let horizon = table.horizon();
    let real = &spec.realization;
    let beta = table.discount();
    let u = table.params().utility;
    let b = spec.subsistence;
    let mut rec = TrajectoryRecord::with_capacity(spec.lookahead, horizon);
    let mut a = spec.initial_assets;
    if !(a >= 0.0) {
        return Err(Error::NegativeAssets(a));
    }
    for t in 0..horizon {
        let mut c = planner.choose(a, t, spec.lookahead)?;
        let short = a < b;
        if options.subsistence_floor {
            if short {
                c = a;
            } else if c < b {
                c = b;
            }
        }
        if c > a {
            return Err(Error::InfeasibleConsumption {
                assets: a,
                consumption: c,
            });
        }
        let gain = beta.powi(t as i32) * u.evaluate(c)?;
        let next = step_assets(a, c, real.returns[t], real.incomes[t])?;
        rec.time.push(t);
        rec.assets_before.push(a);
        rec.consumption.push(c);
        rec.income.push(real.incomes[t]);
        rec.returns.push(real.returns[t]);
        rec.discounted_utility.push(gain);
        rec.hardship.push(short);
        rec.total_utility += gain;
        rec.hardship_count += short as usize;
        a = next;
    }
    rec.final_assets = a;
    Ok(rec)
}

fn check_spec(table: &ValueTable, spec: &AgentSpec) -> Result<()> {
    spec.realization.validate()?;
    if spec.realization.len() != table.horizon() {
        return Err(Error::HorizonMismatch {
            expected: table.horizon(),
            got: spec.realization.len(),
        });
    }
    Ok(())
}

/// Runs one agent through the whole horizon.
pub fn run_agent(
    table: &ValueTable,
    spec: &AgentSpec,
    options: PolicyOptions,
) -> Result<TrajectoryRecord> {
    check_spec(table, spec)?;
    let real = &spec.realization;
    let mut planner = WindowPlanner::new(table, &real.incomes, &real.returns)?;
    simulate(table, &mut planner, spec, options)
}

/// Runs many agents against one shared table. Agents with identical
/// realizations share a window planner. Output order follows input order.
pub fn run_cohort(
    table: &ValueTable,
    agents: &[AgentSpec],
    options: PolicyOptions,
) -> Result<Vec<TrajectoryRecord>> {
    for (index, spec) in agents.iter().enumerate() {
        check_spec(table, spec).map_err(|e| Error::Agent {
            index,
            source: Box::new(e),
        })?;
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, spec) in agents.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|g| agents[g[0]].realization == spec.realization)
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }

    let run_group = |group: &Vec<usize>| -> Vec<(usize, Result<TrajectoryRecord>)> {
        let real = &agents[group[0]].realization;
        let mut planner = match WindowPlanner::new(table, &real.incomes, &real.returns) {
            Ok(p) => p,
            Err(e) => return group.iter().map(|&i| (i, Err(e.clone()))).collect(),
        };
        group
            .iter()
            .map(|&i| (i, simulate(table, &mut planner, &agents[i], options)))
            .collect()
    };
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Vec<(usize, Result<TrajectoryRecord>)>> =
        groups.par_iter().map(run_group).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Vec<(usize, Result<TrajectoryRecord>)>> =
        groups.iter().map(run_group).collect();

    let mut slots: Vec<Option<Result<TrajectoryRecord>>> =
        (0..agents.len()).map(|_| None).collect();
    for (i, r) in outcomes.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.expect("every agent belongs to a group")
                .map_err(|e| Error::Agent {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Column order of the long-format trajectory CSV.
pub const TRAJECTORY_COLUMNS: [&str; 9] = [
    "agent",
    "lookahead",
    "t",
    "assets_before",
    "consumption",
    "income",
    "return",
    "discounted_utility",
    "hardship",
];

/// Writes trajectories in long format, one row per (agent, step).
pub fn write_trajectories<W: Write>(records: &[TrajectoryRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for (agent, rec) in records.iter().enumerate() {
        for t in 0..rec.len() {
            w.write_record([
                agent.to_string(),
                rec.lookahead.to_string(),
                rec.time[t].to_string(),
                rec.assets_before[t].to_string(),
                rec.consumption[t].to_string(),
                rec.income[t].to_string(),
                rec.returns[t].to_string(),
                rec.discounted_utility[t].to_string(),
                (rec.hardship[t] as u8).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
