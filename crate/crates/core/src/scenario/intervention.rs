use serde::{Deserialize, Serialize};

use crate::dp::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::model::ScheduleRealization;
use crate::scenario::process::{income_law_with, ShockProcess};

/// What a compensation payment is proportional to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompensationRule {
    /// Multiplier times the earnings lost to the shock, `base * |r|`.
    #[default]
    Shortfall,
    /// Multiplier times the shocked week's earnings, `base * (1 + r)`.
    ShockedEarnings,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Intervention {
    #[default]
    None,
    Compensation {
        #[serde(default = "default_multiplier")]
        multiplier: f64,
        #[serde(default)]
        rule: CompensationRule,
    },
    MinLookahead {
        weeks: usize,
    },
}

fn default_multiplier() -> f64 {
    2.0
}

impl Intervention {
    pub fn compensation() -> Self {
        Intervention::Compensation {
            multiplier: default_multiplier(),
            rule: CompensationRule::Shortfall,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Intervention::Compensation { multiplier, .. } = self {
            if !(*multiplier >= 0.0 && multiplier.is_finite()) {
                return Err(Error::param(
                    "compensation multiplier",
                    format!("{multiplier} is not >= 0"),
                ));
            }
        }
        Ok(())
    }

    /// Income received in a week with base `base` and shock size `size`.
    pub fn pay(&self, base: f64, size: f64) -> f64 {
        let earned = base * (1.0 + size);
        match *self {
            Intervention::Compensation { multiplier, rule } if size < 0.0 => match rule {
                CompensationRule::Shortfall => earned + multiplier * base * -size,
                CompensationRule::ShockedEarnings => earned + multiplier * earned,
            },
            _ => earned,
        }
    }

    /// Income law an agent under this intervention plans with.
    pub fn income_law(
        &self,
        base: f64,
        shocks: &ShockProcess,
        nodes: usize,
    ) -> Result<DiscreteDistribution> {
        income_law_with(base, shocks, nodes, |b, s| self.pay(b, s))
    }
}

/// Applies an intervention to one agent's realization and lookahead.
pub fn apply_intervention(
    realization: &ScheduleRealization,
    lookahead: usize,
    intervention: &Intervention,
) -> Result<(ScheduleRealization, usize)> {
    intervention.validate()?;
    let mut out = realization.clone();
    let tau = match *intervention {
        Intervention::None => lookahead,
        Intervention::MinLookahead { weeks } => lookahead.max(weeks),
        Intervention::Compensation { .. } => {
            for t in 0..out.len() {
                if out.shock_flags[t] && out.shock_sizes[t] < 0.0 {
                    out.incomes[t] = intervention.pay(out.base_income, out.shock_sizes[t]);
                }
            }
            lookahead
        }
    };
    Ok((out, tau))
}
