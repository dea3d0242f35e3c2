//! Lookahead sweeps, optionally across return regimes.
//!
//! `<prefix>_runs.csv`: `regime,cohort,lookahead,seed,total_utility,hardship_count,final_assets`,
//! one row per (regime, cohort, lookahead, seed index).
//!
//! `<prefix>_summary.csv`: `regime,cohort,lookahead,n,mean,median,std,q1,q3,ci95_low,ci95_high`,
//! statistics of `total_utility` per (regime, cohort, lookahead).
//!
//! `<prefix>_near_max.csv`: `regime,cohort,threshold,reference_lookahead,reference_mean,near_max_lookahead`,
//! the smallest lookahead whose mean utility is within `threshold` of the
//! mean at the largest swept lookahead.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::policy::{run_cohort, write_trajectories, AgentSpec, PolicyOptions};
use crate::report::{create_csv, fmt, scenario_table, Feasibility};
use crate::scenario::seeds::stream;
use crate::scenario::{
    derive_seed, generate_realization, CohortName, Intervention, RegimeKind, ScenarioConfig,
};
use crate::stats::SummaryStats;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub regime: RegimeKind,
    pub cohort: CohortName,
    pub lookahead: usize,
    pub seed: usize,
    pub total_utility: f64,
    pub hardship_count: usize,
    pub final_assets: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub regime: RegimeKind,
    pub cohort: CohortName,
    pub lookahead: usize,
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearMax {
    pub regime: RegimeKind,
    pub cohort: CohortName,
    pub threshold: f64,
    pub reference_lookahead: usize,
    pub reference_mean: f64,
    pub lookahead: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
    pub near_max: Vec<NearMax>,
    pub feasibility: Feasibility,
    /// Long-format trajectories of seed 0, in row order.
    pub first_seed_trajectories: Vec<crate::policy::TrajectoryRecord>,
}

/// Smallest lookahead whose mean is at least `(1 - threshold)` times the mean
/// at the largest lookahead. `means` must be sorted by lookahead.
pub fn near_max_lookahead(means: &[(usize, f64)], threshold: f64) -> Option<(usize, f64, usize)> {
    let &(ref_tau, ref_mean) = means.last()?;
    let target = ref_mean - threshold * ref_mean.abs();
    means
        .iter()
        .find(|(_, m)| *m >= target)
        .map(|&(tau, _)| (ref_tau, ref_mean, tau))
}

/// The lookahead sweep under the scenario's configured return regime.
pub fn run_lookahead_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    sweep(cfg, &[cfg.returns.regime])
}

/// The lookahead sweep repeated for every regime in `experiments.regimes`.
pub fn run_return_regimes(cfg: &ScenarioConfig) -> Result<SweepResult> {
    sweep(cfg, &cfg.experiments.regimes)
}

fn sweep(cfg: &ScenarioConfig, regimes: &[RegimeKind]) -> Result<SweepResult> {
    cfg.validate()?;
    let cohorts = cfg.cohorts()?;
    let mut taus = cfg.lookaheads();
    taus.sort_unstable();
    taus.dedup();
    let n_seeds = cfg.experiments.n_seeds;
    let horizon = cfg.model.horizon;
    let options = PolicyOptions {
        subsistence_floor: cfg.model.subsistence_floor,
    };
    let shocks = cfg.shocks.process();

    let mut out = SweepResult {
        rows: Vec::new(),
        summary: Vec::new(),
        near_max: Vec::new(),
        feasibility: Feasibility::default(),
        first_seed_trajectories: Vec::new(),
    };
    for &kind in regimes {
        let regime = cfg.returns.regime(kind);
        for cohort in &cohorts {
            log::info!("sweep: regime {kind}, cohort {}", cohort.name);
            let mut bases = Vec::with_capacity(n_seeds);
            for s in 0..n_seeds {
                let seed = derive_seed(
                    cfg.seed,
                    &[stream::BASE_INCOME, cohort.name.index() as u64, s as u64],
                );
                bases.push(cohort.base_income(cfg.population.base_income, seed));
            }
            // one table per distinct base income (a single one with midpoints)
            let mut tables: Vec<(f64, crate::dp::ValueTable)> = Vec::new();
            let mut records = Vec::with_capacity(n_seeds * taus.len());
            for &base in &bases {
                if !tables.iter().any(|(b, _)| b.to_bits() == base.to_bits()) {
                    tables.push((
                        base,
                        scenario_table(cfg, base, &regime, &Intervention::None)?,
                    ));
                }
            }
            for (base, table) in &tables {
                let mut agents = Vec::new();
                let mut keys = Vec::new();
                for s in (0..n_seeds).filter(|&s| bases[s].to_bits() == base.to_bits()) {
                    // common random numbers across cohorts: the path omits the cohort
                    let seed = derive_seed(cfg.seed, &[stream::REALIZATION, kind as u64, s as u64]);
                    let realization = generate_realization(*base, &shocks, &regime, horizon, seed)?;
                    for &tau in &taus {
                        agents.push(AgentSpec {
                            realization: realization.clone(),
                            lookahead: tau,
                            subsistence: cohort.subsistence,
                            initial_assets: cfg.population.initial_assets,
                        });
                        keys.push((s, tau));
                    }
                }
                let recs = run_cohort(table, &agents, options)?;
                records.extend(keys.into_iter().zip(recs));
                if table.clamp_count() > 0 {
                    log::warn!(
                        "cohort {}: {} interpolations above the grid",
                        cohort.name,
                        table.clamp_count()
                    );
                }
            }
            records.sort_by_key(|((s, tau), _)| (*s, *tau));

            let mut means = Vec::with_capacity(taus.len());
            for &tau in &taus {
                let us: Vec<f64> = records
                    .iter()
                    .filter(|((_, t), _)| *t == tau)
                    .map(|(_, r)| r.total_utility)
                    .collect();
                let stats = SummaryStats::from_values(&us);
                means.push((tau, stats.mean));
                out.summary.push(SweepSummary {
                    regime: kind,
                    cohort: cohort.name,
                    lookahead: tau,
                    stats,
                });
            }
            if let Some((reference_lookahead, reference_mean, lookahead)) =
                near_max_lookahead(&means, cfg.experiments.near_max_threshold)
            {
                out.near_max.push(NearMax {
                    regime: kind,
                    cohort: cohort.name,
                    threshold: cfg.experiments.near_max_threshold,
                    reference_lookahead,
                    reference_mean,
                    lookahead,
                });
            }
            for ((s, tau), rec) in records {
                out.feasibility.record(&rec);
                out.rows.push(SweepRow {
                    regime: kind,
                    cohort: cohort.name,
                    lookahead: tau,
                    seed: s,
                    total_utility: rec.total_utility,
                    hardship_count: rec.hardship_count,
                    final_assets: rec.final_assets,
                });
                if s == 0 {
                    out.first_seed_trajectories.push(rec);
                }
            }
        }
    }
    Ok(out)
}

impl SweepResult {
    pub const RUN_COLUMNS: [&'static str; 7] = [
        "regime",
        "cohort",
        "lookahead",
        "seed",
        "total_utility",
        "hardship_count",
        "final_assets",
    ];
    pub const NEAR_MAX_COLUMNS: [&'static str; 6] = [
        "regime",
        "cohort",
        "threshold",
        "reference_lookahead",
        "reference_mean",
        "near_max_lookahead",
    ];

    pub fn summary_columns() -> Vec<&'static str> {
        let mut cols = vec!["regime", "cohort", "lookahead"];
        cols.extend(SummaryStats::COLUMNS);
        cols
    }

    /// Mean utility for one cell.
    pub fn mean(&self, regime: RegimeKind, cohort: CohortName, lookahead: usize) -> Option<f64> {
        self.cell(regime, cohort, lookahead).map(|s| s.stats.mean)
    }

    pub fn cell(
        &self,
        regime: RegimeKind,
        cohort: CohortName,
        lookahead: usize,
    ) -> Option<&SweepSummary> {
        self.summary
            .iter()
            .find(|s| s.regime == regime && s.cohort == cohort && s.lookahead == lookahead)
    }

    pub fn near_max_for(&self, regime: RegimeKind, cohort: CohortName) -> Option<&NearMax> {
        self.near_max
            .iter()
            .find(|n| n.regime == regime && n.cohort == cohort)
    }

    /// Writes `<prefix>_runs.csv`, `<prefix>_summary.csv`,
    /// `<prefix>_near_max.csv` and, when `trajectories` is set,
    /// `<prefix>_trajectories_seed0.csv`.
    pub fn write_csv(&self, dir: &Path, prefix: &str, trajectories: bool) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();

        let (mut w, path) = create_csv(dir, &format!("{prefix}_runs.csv"))?;
        w.write_record(Self::RUN_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.regime.as_str().to_string(),
                r.cohort.as_str().to_string(),
                r.lookahead.to_string(),
                r.seed.to_string(),
                fmt(r.total_utility),
                r.hardship_count.to_string(),
                fmt(r.final_assets),
            ])?;
        }
        w.flush()?;
        paths.push(path);

        let (mut w, path) = create_csv(dir, &format!("{prefix}_summary.csv"))?;
        w.write_record(Self::summary_columns())?;
        for s in &self.summary {
            let mut rec = vec![
                s.regime.as_str().to_string(),
                s.cohort.as_str().to_string(),
                s.lookahead.to_string(),
            ];
            rec.extend(s.stats.fields());
            w.write_record(rec)?;
        }
        w.flush()?;
        paths.push(path);

        let (mut w, path) = create_csv(dir, &format!("{prefix}_near_max.csv"))?;
        w.write_record(Self::NEAR_MAX_COLUMNS)?;
        for n in &self.near_max {
            w.write_record([
                n.regime.as_str().to_string(),
                n.cohort.as_str().to_string(),
                fmt(n.threshold),
                n.reference_lookahead.to_string(),
                fmt(n.reference_mean),
                n.lookahead.to_string(),
            ])?;
        }
        w.flush()?;
        paths.push(path);

        if trajectories {
            let path = dir.join(format!("{prefix}_trajectories_seed0.csv"));
            let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write_trajectories(&self.first_seed_trajectories, file)?;
            paths.push(path);
        }
        Ok(paths)
    }
}
