//! Domain types shared by every other module: the utility function, the
//! asset-evolution law, the asset grid and per-agent state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-period utility of consumption.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityFn {
    #[default]
    SquareRoot,
}

impl UtilityFn {
    pub fn evaluate(&self, c: f64) -> Result<f64> {
        if c < 0.0 || c.is_nan() {
            return Err(Error::NegativeConsumption(c));
        }
        Ok(self.eval_unchecked(c))
    }

    /// Callers guarantee `c >= 0`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, c: f64) -> f64 {
        match self {
            UtilityFn::SquareRoot => c.sqrt(),
        }
    }
}

/// Square-root utility, `u(c) = sqrt(c)`.
pub fn utility(c: f64) -> Result<f64> {
    UtilityFn::SquareRoot.evaluate(c)
}

/// Next-period assets `R (a - c) + y`.
pub fn step_assets(a: f64, c: f64, r: f64, y: f64) -> Result<f64> {
    if c < 0.0 || c.is_nan() {
        return Err(Error::NegativeConsumption(c));
    }
    if c > a {
        return Err(Error::InfeasibleConsumption {
            assets: a,
            consumption: c,
        });
    }
    if !(r > 0.0) {
        return Err(Error::param("return", format!("must be positive, got {r}")));
    }
    if !(y >= 0.0) {
        return Err(Error::param(
            "income",
            format!("must be nonnegative, got {y}"),
        ));
    }
    Ok(r * (a - c) + y)
}

/// `sum_t beta^t u(c_t)` over a logged consumption sequence.
pub fn discounted_total(consumption: &[f64], beta: f64, u: UtilityFn) -> Result<f64> {
    let mut weight = 1.0;
    let mut total = 0.0;
    for &c in consumption {
        total += weight * u.evaluate(c)?;
        weight *= beta;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    /// Gaps grow geometrically; `ratio` is last gap / first gap.
    Geometric { ratio: f64 },
}

/// Sorted asset levels `0 = x_0 < x_1 < ... < x_{n-1} = max`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetGrid {
    points: Vec<f64>,
    spacing: Option<Spacing>,
    locator: Locator,
}

/// Fast inverse of the point map, exact after a local fix-up.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Locator {
    Linear {
        inv_step: f64,
    },
    /// `x_i = max (g^i - 1) / (g^(n-1) - 1)`, so `i = ln(1 + a k) / ln g`.
    Geometric {
        k: f64,
        inv_ln_g: f64,
    },
    Search,
}

impl AssetGrid {
    pub fn new(max: f64, n_points: usize, spacing: Spacing) -> Result<Self> {
        if !(max > 0.0) || !max.is_finite() {
            return Err(Error::param(
                "grid max",
                format!("must be positive, got {max}"),
            ));
        }
        if n_points < 2 {
            return Err(Error::param("grid points", "need at least 2"));
        }
        let last = (n_points - 1) as f64;
        let mut points: Vec<f64> = match spacing {
            Spacing::Linear => (0..n_points).map(|i| max * i as f64 / last).collect(),
            Spacing::Geometric { ratio } => {
                if !(ratio > 1.0) || !ratio.is_finite() {
                    return Err(Error::param(
                        "grid ratio",
                        format!("geometric ratio must exceed 1, got {ratio}"),
                    ));
                }
                // gap_i proportional to g^i with g^(n-2) = ratio
                let g = ratio.powf(1.0 / (n_points as f64 - 2.0).max(1.0));
                let total: f64 = (0..n_points - 1).map(|i| g.powi(i as i32)).sum();
                let mut acc = 0.0;
                let mut pts = Vec::with_capacity(n_points);
                pts.push(0.0);
                for i in 0..n_points - 1 {
                    acc += g.powi(i as i32);
                    pts.push(max * acc / total);
                }
                pts
            }
        };
        points[n_points - 1] = max;
        let locator = match spacing {
            Spacing::Linear => Locator::Linear {
                inv_step: last / max,
            },
            Spacing::Geometric { ratio } => {
                let g = ratio.powf(1.0 / (n_points as f64 - 2.0).max(1.0));
                Locator::Geometric {
                    k: (g.powf(last) - 1.0) / max,
                    inv_ln_g: 1.0 / g.ln(),
                }
            }
        };
        Ok(Self {
            points,
            spacing: Some(spacing),
            locator,
        })
    }

    /// Grid from explicit points; must start at 0 and be strictly increasing.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("grid points", "need at least 2"));
        }
        if points[0] != 0.0 {
            return Err(Error::param("grid points", "first point must be 0"));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || !points.iter().all(|p| p.is_finite()) {
            return Err(Error::param(
                "grid points",
                "must be finite and strictly increasing",
            ));
        }
        Ok(Self {
            points,
            spacing: None,
            locator: Locator::Search,
        })
    }

    /// Grid whose max is the analytic reachability bound
    /// `a0 R_max^T + y_max sum_{i<T} R_max^i`.
    pub fn covering(
        a0: f64,
        r_max: f64,
        y_max: f64,
        horizon: usize,
        n_points: usize,
        spacing: Spacing,
    ) -> Result<Self> {
        let max = reachability_bound(a0, r_max, y_max, horizon);
        // all-zero worlds still need a non-degenerate grid
        AssetGrid::new(if max > 0.0 { max } else { 1.0 }, n_points, spacing)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn spacing(&self) -> Option<Spacing> {
        self.spacing
    }

    /// Index `i` and weight `w` so that `a = (1-w) x_i + w x_{i+1}`, with
    /// `i` the last index in `0..n-1` such that `x_i <= a`.
    /// Requires `0 <= a <= max`.
    #[inline]
    pub(crate) fn locate(&self, a: f64) -> (usize, f64) {
        let n = self.points.len();
        let guess = match self.locator {
            Locator::Linear { inv_step } => (a * inv_step) as usize,
            Locator::Geometric { k, inv_ln_g } => ((a * k).ln_1p() * inv_ln_g) as usize,
            Locator::Search => self.points.partition_point(|&p| p <= a).max(1) - 1,
        };
        self.locate_from(a, guess.min(n - 2))
    }

    /// [`locate`](Self::locate) starting the search at index `hint`.
    #[inline]
    pub(crate) fn locate_from(&self, a: f64, hint: usize) -> (usize, f64) {
        let n = self.points.len();
        let mut i = hint.min(n - 2);
        while i > 0 && self.points[i] > a {
            i -= 1;
        }
        while i + 2 < n && self.points[i + 1] <= a {
            i += 1;
        }
        let lo = self.points[i];
        let hi = self.points[i + 1];
        let w = ((a - lo) / (hi - lo)).clamp(0.0, 1.0);
        (i, w)
    }
}

/// Upper bound on assets reachable within `horizon` steps from `a0`.
pub fn reachability_bound(a0: f64, r_max: f64, y_max: f64, horizon: usize) -> f64 {
    let mut bound = a0;
    for _ in 0..horizon {
        bound = r_max * bound + y_max;
    }
    bound
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub horizon: usize,
    pub discount: f64,
    pub grid: AssetGrid,
    pub consumption_choices: usize,
    /// Largest starting endowment the value table must serve; grid points
    /// above the reachable envelope from here may clamp silently.
    pub initial_assets: f64,
    pub utility: UtilityFn,
}

impl ModelParams {
    pub const DEFAULT_CONSUMPTION_CHOICES: usize = 65;

    pub fn new(horizon: usize, discount: f64, grid: AssetGrid) -> Result<Self> {
        let p = Self {
            horizon,
            discount,
            grid,
            consumption_choices: Self::DEFAULT_CONSUMPTION_CHOICES,
            initial_assets: 0.0,
            utility: UtilityFn::SquareRoot,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_consumption_choices(mut self, m: usize) -> Result<Self> {
        self.consumption_choices = m;
        self.validate()?;
        Ok(self)
    }

    pub fn with_initial_assets(mut self, a0: f64) -> Result<Self> {
        self.initial_assets = a0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::param(
                "discount",
                format!("must lie in (0, 1], got {}", self.discount),
            ));
        }
        if self.consumption_choices < 2 {
            return Err(Error::param("consumption choices", "need at least 2"));
        }
        if !(self.initial_assets >= 0.0) {
            return Err(Error::param("initial assets", "must be nonnegative"));
        }
        Ok(())
    }

    /// Consumption fractions `{0, 1/(m-1), ..., 1}` of current assets.
    pub fn consumption_fractions(&self) -> Vec<f64> {
        consumption_fractions(self.consumption_choices)
    }
}

pub(crate) fn consumption_fractions(m: usize) -> Vec<f64> {
    let last = (m - 1) as f64;
    (0..m).map(|k| k as f64 / last).collect()
}

/// A sampled path of incomes and returns over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRealization {
    pub base_income: f64,
    pub incomes: Vec<f64>,
    pub returns: Vec<f64>,
    pub shock_flags: Vec<bool>,
    pub shock_sizes: Vec<f64>,
}

impl ScheduleRealization {
    /// Unshocked realization with the given incomes and returns.
    pub fn deterministic(incomes: Vec<f64>, returns: Vec<f64>) -> Result<Self> {
        let n = incomes.len();
        let base = incomes.first().copied().unwrap_or(0.0);
        let r = Self {
            base_income: base,
            incomes,
            returns,
            shock_flags: vec![false; n],
            shock_sizes: vec![0.0; n],
        };
        r.validate()?;
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.incomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.incomes.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.incomes.len();
        if self.returns.len() != n || self.shock_flags.len() != n || self.shock_sizes.len() != n {
            return Err(Error::param("realization", "sequence lengths differ"));
        }
        if let Some(y) = self
            .incomes
            .iter()
            .find(|y| !(**y >= 0.0) || !y.is_finite())
        {
            return Err(Error::param(
                "realization",
                format!("income {y} is not >= 0"),
            ));
        }
        if let Some(r) = self.returns.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::param(
                "realization",
                format!("return {r} is not > 0"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub assets: f64,
    pub t: usize,
    pub lookahead: usize,
    pub subsistence: f64,
    pub total_utility: f64,
    pub hardship_count: usize,
}

impl AgentState {
    pub fn new(assets: f64, lookahead: usize, subsistence: f64) -> Result<Self> {
        if !(assets >= 0.0) {
            return Err(Error::NegativeAssets(assets));
        }
        if !(subsistence >= 0.0) {
            return Err(Error::param("subsistence", "must be nonnegative"));
        }
        Ok(Self {
            assets,
            t: 0,
            lookahead,
            subsistence,
            total_utility: 0.0,
            hardship_count: 0,
        })
    }
}
