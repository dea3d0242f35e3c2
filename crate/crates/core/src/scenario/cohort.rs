use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Weekly incomes shipped with the crate: a synthetic sample whose
/// outlier-filtered range reproduces the published bracket edges.
pub const SYNTHETIC_INCOMES_CSV: &str = include_str!("../../data/synthetic_weekly_incomes.csv");

/// Published weekly-income bracket edges.
pub const BRACKET_EDGES: [f64; 5] = [1.22, 1125.49, 2249.75, 3374.02, 4498.29];

/// Median population asset value.
pub const MEDIAN_ASSETS: f64 = 123_840.0;

/// Default subsistence as a share of the cohort's midpoint income.
pub const SUBSISTENCE_SHARE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CohortName {
    Low,
    LowMiddle,
    HighMiddle,
    High,
}

impl CohortName {
    pub const ALL: [CohortName; 4] = [
        CohortName::Low,
        CohortName::LowMiddle,
        CohortName::HighMiddle,
        CohortName::High,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CohortName::Low => "low",
            CohortName::LowMiddle => "low-middle",
            CohortName::HighMiddle => "high-middle",
            CohortName::High => "high",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for CohortName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an agent's base weekly income is picked inside its cohort.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseIncome {
    #[default]
    Midpoint,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub name: CohortName,
    pub income_range: (f64, f64),
    pub subsistence: f64,
    pub n_agents: usize,
    /// Members of the income sample falling in this bracket.
    pub population: usize,
}

impl Cohort {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.income_range.0 + self.income_range.1)
    }

    pub fn base_income(&self, rule: BaseIncome, seed: u64) -> f64 {
        match rule {
            BaseIncome::Midpoint => self.midpoint(),
            BaseIncome::Sampled => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.gen_range(self.income_range.0..=self.income_range.1)
            }
        }
    }

    /// Cohorts at the published bracket edges with default subsistence.
    pub fn defaults(agents_per_cohort: usize) -> Vec<Cohort> {
        CohortName::ALL
            .iter()
            .map(|&name| {
                let lo = BRACKET_EDGES[name.index()];
                let hi = BRACKET_EDGES[name.index() + 1];
                Cohort {
                    name,
                    income_range: (lo, hi),
                    subsistence: SUBSISTENCE_SHARE * 0.5 * (lo + hi),
                    n_agents: agents_per_cohort,
                    population: 0,
                }
            })
            .collect()
    }
}

/// Parses the one-column income CSV (header `weekly_income`).
pub fn parse_incomes(csv_text: &str) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("");
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("income row {}: cannot parse {field:?}", i + 2)))?;
        out.push(v);
    }
    Ok(out)
}

/// Drops values outside `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]`.
pub fn remove_outliers(raw: &[f64]) -> Vec<f64> {
    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    raw.iter()
        .copied()
        .filter(|&v| v >= lo && v <= hi)
        .collect()
}

/// Filters outliers, splits the remaining range into four equal-width
/// brackets and spreads `n_total` agents across them as evenly as possible.
pub fn build_cohorts(raw: &[f64], n_total: usize) -> Result<Vec<Cohort>> {
    if let Some(v) = raw.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!(
            "income {v} is not a nonnegative number"
        )));
    }
    let kept = remove_outliers(raw);
    let mut distinct = kept.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::TooFewIncomes(distinct.len()));
    }
    let lo = distinct[0];
    let hi = distinct[distinct.len() - 1];
    let width = (hi - lo) / 4.0;
    let edges = [lo, lo + width, lo + 2.0 * width, lo + 3.0 * width, hi];
    let mut population = [0usize; 4];
    for v in &kept {
        let i = (((v - lo) / width) as usize).min(3);
        population[i] += 1;
    }
    Ok(CohortName::ALL
        .iter()
        .map(|&name| {
            let i = name.index();
            let (a, b) = (edges[i], edges[i + 1]);
            Cohort {
                name,
                income_range: (a, b),
                subsistence: SUBSISTENCE_SHARE * 0.5 * (a + b),
                n_agents: n_total / 4 + usize::from(i < n_total % 4),
                population: population[i],
            }
        })
        .collect())
}

/// Starting assets for every agent across the cohorts, in cohort order.
pub fn assign_assets(cohorts: &[Cohort], override_assets: Option<f64>) -> Result<Vec<f64>> {
    let a0 = override_assets.unwrap_or(MEDIAN_ASSETS);
    if !(a0 >= 0.0) || !a0.is_finite() {
        return Err(Error::param(
            "initial assets",
            format!("must be nonnegative, got {a0}"),
        ));
    }
    let n: usize = cohorts.iter().map(|c| c.n_agents).sum();
    Ok(vec![a0; n])
}
