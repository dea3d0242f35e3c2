//! Acceptance run at desk scale on `scenarios/baseline.toml`.
//!
//! Prints one `PASS` or `FAIL` line per criterion and exits non-zero when
//! any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schedsim_core::report::{
    run_interventions, run_lookahead_sweep, run_return_regimes, run_theory_gap, Feasibility,
    InterventionResult, SweepResult, TheoryGapResult, TheoryPolicy, MONEY_ARM,
};
use schedsim_core::scenario::{CohortName, RegimeKind, ScenarioConfig};
use schedsim_core::theory::{
    budget_shortfall, concavity_helper_check, delayed_utility, k_delay_policy, measure_gap,
    run_gap_policy, Clairvoyant, GapInstance,
};

const ORACLE_INSTANCES: u64 = 60;
const TIGHTNESS_SEQUENCES: usize = 1000;
const CONCAVITY_GRID: usize = 200;
const CONCAVITY_PAIRS: usize = 100_000;
const MID_LOOKAHEAD: usize = 13;
const P_SWEEP: [f64; 3] = [0.25, 0.5, 0.75];

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: impl AsRef<str>) {
        println!(
            "{} {name}: {}",
            if ok { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
        if !ok {
            self.failed += 1;
        }
    }
}

struct Recipe {
    sweep: SweepResult,
    regimes: SweepResult,
    interventions: InterventionResult,
    theory: TheoryGapResult,
}

impl Recipe {
    fn run(cfg: &ScenarioConfig, out: &Path) -> Recipe {
        let recipe = Recipe {
            sweep: run_lookahead_sweep(cfg).expect("lookahead sweep"),
            regimes: run_return_regimes(cfg).expect("return regimes"),
            interventions: run_interventions(cfg).expect("interventions"),
            theory: run_theory_gap(cfg, TheoryPolicy::Online).expect("theory gap"),
        };
        recipe.sweep.write_csv(out, "sweep", true).unwrap();
        recipe.regimes.write_csv(out, "regimes", false).unwrap();
        recipe.interventions.write_csv(out).unwrap();
        recipe.theory.write_csv(out).unwrap();
        recipe
    }

    fn feasibility(&self) -> Feasibility {
        let mut f = self.sweep.feasibility;
        f.merge(&self.regimes.feasibility);
        f.merge(&self.interventions.feasibility);
        f
    }
}

fn dp_oracle(report: &mut Report) {
    let mut worst_v: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    let mut windows = 0;
    let mut error = None;
    for seed in 0..ORACLE_INSTANCES {
        worst_v = worst_v.max(common::value_table_error(seed));
        match common::window_errors(seed) {
            Ok(errs) => {
                windows += errs.len();
                worst_w = errs.into_iter().fold(worst_w, f64::max);
            }
            Err(e) => error = Some(e),
        }
    }
    report.check(
        "dp-oracle",
        error.is_none() && worst_v <= 1e-9 && worst_w <= 1e-9,
        format!(
            "{ORACLE_INSTANCES} instances, {windows} windows; max |V - oracle| {worst_v:.1e}, max window shortfall {worst_w:.1e} (tol 1e-9){}",
            error.map(|e| format!("; {e}")).unwrap_or_default()
        ),
    );
}

/// Worst drop of a cell mean below the running maximum over smaller
/// lookaheads, in units of the cell's standard error.
fn worst_drop(
    result: &SweepResult,
    regime: RegimeKind,
    cohort: CohortName,
    taus: &[usize],
) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    let mut strict = 0;
    for &tau in taus {
        let cell = result.cell(regime, cohort, tau).expect("sweep cell");
        let m = cell.stats.mean;
        if m < best {
            strict += 1;
            worst = worst.max((best - m) / cell.stats.std_error());
        }
        best = best.max(m);
    }
    (worst, strict)
}

fn monotonicity(report: &mut Report, sweep: &SweepResult, cfg: &ScenarioConfig) {
    let taus = cfg.lookaheads();
    let horizon = cfg.model.horizon;
    let regime = cfg.returns.regime;
    let mut ok = true;
    let mut parts = Vec::new();
    for cohort in CohortName::ALL {
        let (drop, strict) = worst_drop(sweep, regime, cohort, &taus);
        let mid = sweep.mean(regime, cohort, MID_LOOKAHEAD).unwrap();
        let full = sweep.mean(regime, cohort, horizon).unwrap();
        let rel = (full - mid) / full.abs();
        ok &= drop <= 1.0 && rel <= 0.05;
        parts.push(format!(
            "{cohort}: {strict} drops (worst {drop:.2} SE), U({MID_LOOKAHEAD}) {mid:.3} vs U({horizon}) {full:.3} ({:.3}% below)",
            100.0 * rel
        ));
    }
    report.check(
        "lookahead-monotonicity",
        ok,
        format!("{} seeds; {}", cfg.experiments.n_seeds, parts.join("; ")),
    );
}

fn cohort_ordering(result: &SweepResult, regime: RegimeKind, taus: &[usize]) -> (usize, f64) {
    let mut bad = 0;
    let mut min_gap = f64::INFINITY;
    for &tau in taus {
        for pair in CohortName::ALL.windows(2) {
            let lo = result.mean(regime, pair[0], tau).unwrap();
            let hi = result.mean(regime, pair[1], tau).unwrap();
            min_gap = min_gap.min(hi - lo);
            if !(hi > lo) {
                bad += 1;
            }
        }
    }
    (bad, min_gap)
}

fn income_ordering(report: &mut Report, sweep: &SweepResult, cfg: &ScenarioConfig) {
    let taus = cfg.lookaheads();
    let (bad, min_gap) = cohort_ordering(sweep, cfg.returns.regime, &taus);
    report.check(
        "income-ordering",
        bad == 0,
        format!(
            "{} lookaheads x 3 adjacent pairs, {bad} out of order, smallest gap {min_gap:.3}",
            taus.len()
        ),
    );
}

fn return_regimes(report: &mut Report, regimes: &SweepResult, cfg: &ScenarioConfig) {
    let taus = cfg.lookaheads();
    let mut below = 0;
    let mut min_gap = f64::INFINITY;
    for cohort in CohortName::ALL {
        for &tau in &taus {
            let neg = regimes.mean(RegimeKind::Negative, cohort, tau).unwrap();
            let pos = regimes.mean(RegimeKind::Positive, cohort, tau).unwrap();
            min_gap = min_gap.min(pos - neg);
            if !(pos > neg) {
                below += 1;
            }
        }
    }
    let stars: Vec<usize> = CohortName::ALL
        .iter()
        .map(|&c| {
            regimes
                .near_max_for(RegimeKind::Negative, c)
                .unwrap()
                .lookahead
        })
        .collect();
    let within = stars.iter().all(|&s| s <= 10);
    let non_increasing = stars.windows(2).all(|w| w[1] <= w[0]);
    report.check(
        "return-regimes",
        below == 0 && within && non_increasing,
        format!(
            "positive > negative in {}/{} cells (smallest gap {min_gap:.3}); negative-regime tau* by cohort {stars:?} at {}% threshold",
            CohortName::ALL.len() * taus.len() - below,
            CohortName::ALL.len() * taus.len(),
            100.0 * cfg.experiments.near_max_threshold
        ),
    );
}

fn interventions(report: &mut Report, result: &InterventionResult, cfg: &ScenarioConfig) {
    // required order, best first: L{max}, ..., L{min}, money
    let mut order: Vec<String> = cfg
        .experiments
        .min_lookahead_weeks
        .iter()
        .map(|w| format!("L{w}"))
        .collect();
    order.sort_by_key(|s| std::cmp::Reverse(s[1..].parse::<usize>().unwrap()));
    order.push(MONEY_ARM.to_string());

    let mut ok = true;
    let mut parts = Vec::new();
    for arm in &order {
        let s = &result.arm(arm).unwrap().stats;
        ok &= s.mean > 2.0 * s.std_error();
        parts.push(format!("{arm} {:.3} (SE {:.3})", s.mean, s.std_error()));
    }
    for w in order.windows(2) {
        let p = result.pair(&w[0], &w[1]).unwrap();
        let pass = p.mean_difference > 2.0 * p.paired_std_error;
        ok &= pass;
        parts.push(format!(
            "{} - {} = {:.3} (paired SE {:.3}){}",
            w[0],
            w[1],
            p.mean_difference,
            p.paired_std_error,
            if pass { "" } else { " NOT > 2 SE" }
        ));
    }
    report.check(
        "interventions",
        ok,
        format!(
            "{} agents; {}",
            cfg.experiments.intervention_agents,
            parts.join("; ")
        ),
    );
}

fn theory(report: &mut Report, theory: &TheoryGapResult, cfg: &ScenarioConfig) {
    let e = &cfg.experiments;
    let means: Vec<String> = theory
        .rows
        .iter()
        .map(|r| format!("k={} {:.4}", r.k, r.mean))
        .collect();
    let fit_ok = theory.fit.slope > 0.0 && theory.fit.r_squared > 0.9;

    let k = e.theory_ks[0];
    let self_gap =
        measure_gap(k, e.theory_y_scale, e.theory_trials, &Clairvoyant, cfg.seed).unwrap();
    let self_ok = self_gap.mean.abs() <= 2.0 * self_gap.std_error;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut inexact = 0;
    let mut cases = 0;
    for &k in &e.theory_ks {
        for _ in 0..100 {
            let x: f64 = rng.gen();
            let utility = |y: f64| -> f64 {
                let inst = GapInstance::new(k, y, x).unwrap();
                run_gap_policy(&inst, &Clairvoyant, 0)
                    .unwrap()
                    .iter()
                    .map(|c| c.sqrt())
                    .sum()
            };
            cases += 1;
            if utility(4.0) != 2.0 * utility(1.0) {
                inexact += 1;
            }
        }
    }
    report.check(
        "gap-growth-law",
        fit_ok && self_ok && inexact == 0,
        format!(
            "{} antithetic trials, online gap means [{}], slope {:.5}, R^2 {:.4}; clairvoyant self-gap {:.2e} (SE {:.2e}); sqrt(Y) scaling exact in {}/{cases}",
            e.theory_trials,
            means.join(", "),
            theory.fit.slope,
            theory.fit.r_squared,
            self_gap.mean,
            self_gap.std_error,
            cases - inexact
        ),
    );
}

fn tightness(report: &mut Report, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut infeasible = 0;
    for _ in 0..TIGHTNESS_SEQUENCES {
        let n = rng.gen_range(1..=64);
        let k = rng.gen_range(0..=n);
        let incomes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        // feasible: consume a random share of what is on hand
        let mut carried = 0.0;
        let consumption: Vec<f64> = incomes
            .iter()
            .map(|y| {
                let on_hand = carried + y;
                let c = on_hand * rng.gen::<f64>();
                carried = on_hand - c;
                c
            })
            .collect();
        let want: f64 = consumption[..n - k].iter().map(|c| c.sqrt()).sum();
        worst = worst.max((delayed_utility(&consumption, k) - want).abs());
        if budget_shortfall(&k_delay_policy(&consumption, k), &incomes, 0.0) > 1e-9 {
            infeasible += 1;
        }
    }
    report.check(
        "tightness-lemma",
        worst <= 1e-12 && infeasible == 0,
        format!("{TIGHTNESS_SEQUENCES} sequences, max |delayed - truncated sum| {worst:.1e}, {infeasible} infeasible delays"),
    );
}

fn concavity(report: &mut Report, seed: u64) {
    let mut failures = 0;
    for i in 0..CONCAVITY_GRID {
        for j in 0..CONCAVITY_GRID {
            let a = 0.5 + 0.5 * (i as f64 + 0.5) / CONCAVITY_GRID as f64;
            let w = (j as f64 + 0.5) / CONCAVITY_GRID as f64;
            if !concavity_helper_check(a, w).unwrap() {
                failures += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled = 0;
    while sampled < CONCAVITY_PAIRS {
        let a = 0.5 + 0.5 * rng.gen::<f64>();
        let w: f64 = rng.gen();
        if a <= 0.5 || w <= 0.0 {
            continue;
        }
        sampled += 1;
        if !concavity_helper_check(a, w).unwrap() {
            failures += 1;
        }
    }
    report.check(
        "concavity-lemma",
        failures == 0,
        format!("{CONCAVITY_GRID}x{CONCAVITY_GRID} grid and {CONCAVITY_PAIRS} random pairs, {failures} failures"),
    );
}

fn compare_dirs(a: &Path, b: &Path) -> (usize, Vec<String>) {
    let mut names: Vec<PathBuf> = std::fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    let mut differing = Vec::new();
    for path in &names {
        let name = path.file_name().unwrap();
        if std::fs::read(path).ok() != std::fs::read(b.join(name)).ok() {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    (names.len(), differing)
}

/// The headline conclusions at reduced scale for each shock probability.
fn p_robustness(report: &mut Report, cfg: &ScenarioConfig) {
    let mut parts = Vec::new();
    let mut ok = true;
    for p in P_SWEEP {
        let mut c = cfg.clone();
        c.shocks.probability = p;
        c.experiments.n_seeds = 30;
        c.experiments.lookaheads = Some(vec![0, 2, 5, MID_LOOKAHEAD, cfg.model.horizon]);
        c.experiments.intervention_agents = 30;
        let taus = c.lookaheads();
        let sweep = run_lookahead_sweep(&c).expect("sweep");
        let iv = run_interventions(&c).expect("interventions");

        let drops = CohortName::ALL
            .iter()
            .map(|&co| worst_drop(&sweep, c.returns.regime, co, &taus).0)
            .fold(0.0, f64::max);
        let (unordered, _) = cohort_ordering(&sweep, c.returns.regime, &taus);
        let positive = iv.summary.iter().all(|s| s.stats.mean > 0.0);
        let lookahead_order = c.experiments.min_lookahead_weeks.windows(2).all(|w| {
            iv.pair(&format!("L{}", w[1]), &format!("L{}", w[0]))
                .unwrap()
                .mean_difference
                > 0.0
        });
        let feasible = sweep.feasibility.violations + iv.feasibility.violations == 0;
        ok &= drops <= 1.0 && unordered == 0 && positive && lookahead_order && feasible;
        parts.push(format!(
            "p={p}: worst drop {drops:.2} SE, {unordered} unordered, interventions positive {positive}, longer lookahead better {lookahead_order}"
        ));
    }
    report.check(
        "p-robustness",
        ok,
        format!("30 seeds, 30 intervention agents; {}", parts.join("; ")),
    );
}

fn main() {
    let started = Instant::now();
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/baseline.toml");
    let cfg = ScenarioConfig::load(&path).expect("baseline scenario");
    let mut report = Report { failed: 0 };

    dp_oracle(&mut report);
    tightness(&mut report, cfg.seed);
    concavity(&mut report, cfg.seed);

    let first = tempfile::tempdir().unwrap();
    let recipe = Recipe::run(&cfg, first.path());
    let f = recipe.feasibility();
    report.check(
        "feasibility",
        f.violations == 0,
        format!(
            "{} trajectories, {} steps, max residual {:.1e}, {} violations",
            f.trajectories, f.steps, f.max_residual, f.violations
        ),
    );
    monotonicity(&mut report, &recipe.sweep, &cfg);
    income_ordering(&mut report, &recipe.sweep, &cfg);
    return_regimes(&mut report, &recipe.regimes, &cfg);
    interventions(&mut report, &recipe.interventions, &cfg);
    theory(&mut report, &recipe.theory, &cfg);

    let second = tempfile::tempdir().unwrap();
    Recipe::run(&cfg, second.path());
    let (files, differing) = compare_dirs(first.path(), second.path());
    report.check(
        "reproducibility",
        files > 0 && differing.is_empty(),
        format!("{files} CSV files, differing: {differing:?}"),
    );

    p_robustness(&mut report, &cfg);

    println!(
        "acceptance: {} failed, {:.0} s",
        report.failed,
        started.elapsed().as_secs_f64()
    );
    if report.failed > 0 {
        std::process::exit(1);
    }
}
