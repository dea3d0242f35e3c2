//! Growth of the lookahead gap with the horizon of the hard instance.
//!
//! `theory_gap.csv`: `k,y_scale,policy,n_trials,gap_mean,gap_std,gap_std_error,min_gap,full_lookahead_mean`,
//! one row per `k`, followed by `#` footer lines carrying the least-squares
//! fit of `gap_mean` against `k`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::report::fmt;
use crate::scenario::{derive_seed, ScenarioConfig};
use crate::stats::{fit_line, LineFit};
use crate::theory::{measure_gap, Clairvoyant, FixedRate, GapPolicy, GapStats, ZeroLookaheadAgent};

/// Grid points per unit of income for the online agent's table.
pub const ONLINE_GRID_DENSITY: usize = 16;
pub const ONLINE_INCOME_NODES: usize = 9;
const THEORY_STREAM: u64 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryPolicy {
    /// The zero-lookahead agent planning with its value table.
    #[default]
    Online,
    FixedRate,
    Clairvoyant,
}

#[derive(Debug, Clone)]
pub struct TheoryGapResult {
    pub rows: Vec<GapStats>,
    pub fit: LineFit,
}

fn policy_for(
    kind: TheoryPolicy,
    k: usize,
    y_scale: f64,
    choices: usize,
) -> Result<Box<dyn GapPolicy>> {
    Ok(match kind {
        TheoryPolicy::Online => Box::new(ZeroLookaheadAgent::new(
            k,
            y_scale,
            ONLINE_GRID_DENSITY * k + 1,
            choices,
            ONLINE_INCOME_NODES,
        )?),
        TheoryPolicy::FixedRate => Box::new(FixedRate::default()),
        TheoryPolicy::Clairvoyant => Box::new(Clairvoyant),
    })
}

pub fn run_theory_gap(cfg: &ScenarioConfig, policy: TheoryPolicy) -> Result<TheoryGapResult> {
    cfg.validate()?;
    let e = &cfg.experiments;
    let mut rows = Vec::with_capacity(e.theory_ks.len());
    for &k in &e.theory_ks {
        log::info!("theory gap: k = {k}");
        let p = policy_for(policy, k, e.theory_y_scale, cfg.model.consumption_choices)?;
        let seed = derive_seed(cfg.seed, &[THEORY_STREAM, k as u64]);
        rows.push(measure_gap(
            k,
            e.theory_y_scale,
            e.theory_trials,
            p.as_ref(),
            seed,
        )?);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    Ok(TheoryGapResult {
        fit: fit_line(&xs, &ys),
        rows,
    })
}

impl TheoryGapResult {
    pub const COLUMNS: [&'static str; 9] = [
        "k",
        "y_scale",
        "policy",
        "n_trials",
        "gap_mean",
        "gap_std",
        "gap_std_error",
        "min_gap",
        "full_lookahead_mean",
    ];

    pub fn write_csv(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("theory_gap.csv");
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(Self::COLUMNS)?;
            for r in &self.rows {
                w.write_record([
                    r.k.to_string(),
                    fmt(r.y_scale),
                    r.policy.clone(),
                    r.n_trials.to_string(),
                    fmt(r.mean),
                    fmt(r.std),
                    fmt(r.std_error),
                    fmt(r.min_gap),
                    fmt(r.clairvoyant_mean),
                ])?;
            }
            w.flush()?;
        }
        writeln!(buf, "# fit_slope,{}", fmt(self.fit.slope))?;
        writeln!(buf, "# fit_intercept,{}", fmt(self.fit.intercept))?;
        writeln!(buf, "# fit_r_squared,{}", fmt(self.fit.r_squared))?;
        std::fs::write(&path, buf)?;
        Ok(path)
    }
}
