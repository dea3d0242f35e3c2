//! Experiment recipes and their CSV outputs.
//!
//! Every recipe is a pure function of a [`ScenarioConfig`]: seeds fan out
//! from the master seed through [`derive_seed`](crate::scenario::derive_seed),
//! rows are assembled in cell-key order, and floats are written in Rust's
//! shortest round-trip form, so a rerun produces byte-identical files.

mod interventions;
mod sweep;
mod theory_gap;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use interventions::{
    run_interventions, ArmSummary, InterventionResult, InterventionRow, PairedGap, BASELINE_ARM,
    MONEY_ARM,
};
pub use sweep::{
    near_max_lookahead, run_lookahead_sweep, run_return_regimes, NearMax, SweepResult, SweepRow,
    SweepSummary,
};
pub use theory_gap::{run_theory_gap, TheoryGapResult, TheoryPolicy};

use crate::dp::{build_value_table, ValueTable};
use crate::error::Result;
use crate::policy::TrajectoryRecord;
use crate::scenario::{income_law_with, Intervention, ReturnRegime, ScenarioConfig};

/// Worst violation of `0 <= c <= a` and of the asset identity seen so far.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Feasibility {
    pub trajectories: usize,
    pub steps: usize,
    pub max_residual: f64,
    /// Trajectories whose worst residual exceeds [`FEASIBILITY_TOL`].
    pub violations: usize,
}

pub const FEASIBILITY_TOL: f64 = 1e-9;

impl Feasibility {
    pub fn record(&mut self, rec: &TrajectoryRecord) {
        self.trajectories += 1;
        self.steps += rec.len();
        let r = rec.feasibility_residual();
        self.max_residual = self.max_residual.max(r);
        if r > FEASIBILITY_TOL {
            self.violations += 1;
        }
    }

    pub fn merge(&mut self, other: &Feasibility) {
        self.trajectories += other.trajectories;
        self.steps += other.steps;
        self.max_residual = self.max_residual.max(other.max_residual);
        self.violations += other.violations;
    }
}

/// Value table for one base income under a return regime, planning with the
/// income law an intervention induces.
pub fn scenario_table(
    cfg: &ScenarioConfig,
    base_income: f64,
    regime: &ReturnRegime,
    intervention: &Intervention,
) -> Result<ValueTable> {
    let shocks = cfg.shocks.process();
    let income = income_law_with(base_income, &shocks, cfg.shocks.nodes, |b, s| {
        intervention.pay(b, s)
    })?;
    let returns = regime.law(cfg.returns.nodes, cfg.returns.jitter_nodes)?;
    // the grid must also cover the largest sampled (not just quadrature) values
    let y_max = (0..=1)
        .map(|i| {
            intervention.pay(
                base_income,
                if i == 0 {
                    shocks.size_range.0
                } else {
                    shocks.size_range.1
                },
            )
        })
        .fold(income.max(), f64::max);
    let params = cfg.model_params(regime.bounds().1, y_max)?;
    build_value_table(&params, &income, &returns)
}

pub(crate) fn create_csv(
    dir: &Path,
    name: &str,
) -> Result<(csv::Writer<BufWriter<File>>, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((csv::Writer::from_writer(BufWriter::new(file)), path))
}

pub(crate) fn fmt(x: f64) -> String {
    x.to_string()
}
