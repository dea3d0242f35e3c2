use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dp::{discretize_uniform, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::model::ScheduleRealization;

/// Bernoulli shock arrivals with uniform multiplicative sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockProcess {
    #[serde(default = "default_probability")]
    pub probability: f64,
    #[serde(default = "default_size_range")]
    pub size_range: (f64, f64),
}

fn default_probability() -> f64 {
    0.5
}

fn default_size_range() -> (f64, f64) {
    (-0.4, 0.4)
}

impl Default for ShockProcess {
    fn default() -> Self {
        Self {
            probability: default_probability(),
            size_range: default_size_range(),
        }
    }
}

impl ShockProcess {
    pub fn new(probability: f64, size_range: (f64, f64)) -> Result<Self> {
        let s = Self {
            probability,
            size_range,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::param(
                "shock probability",
                format!("{} not in [0, 1]", self.probability),
            ));
        }
        let (lo, hi) = self.size_range;
        if !(lo <= hi) || lo < -1.0 || !hi.is_finite() {
            return Err(Error::param(
                "shock sizes",
                format!("bad range [{lo}, {hi}]"),
            ));
        }
        Ok(())
    }

    fn size(&self, u: f64) -> f64 {
        let (lo, hi) = self.size_range;
        lo + u * (hi - lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Baseline,
    Negative,
    Positive,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 3] = [
        RegimeKind::Baseline,
        RegimeKind::Negative,
        RegimeKind::Positive,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeKind::Baseline => "baseline",
            RegimeKind::Negative => "negative",
            RegimeKind::Positive => "positive",
        }
    }
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Return rates: a uniform draw from `range`, then an additive uniform
/// perturbation in `[-jitter, jitter]`, kept strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnRegime {
    pub kind: RegimeKind,
    pub range: (f64, f64),
    pub jitter: f64,
}

/// Smallest return a jittered draw may take.
pub const MIN_RETURN: f64 = 1e-6;

impl ReturnRegime {
    pub fn of(kind: RegimeKind) -> Self {
        match kind {
            RegimeKind::Baseline => Self {
                kind,
                range: (0.9, 1.1),
                jitter: 0.05,
            },
            RegimeKind::Negative => Self {
                kind,
                range: (0.75, 0.95),
                jitter: 0.0,
            },
            RegimeKind::Positive => Self {
                kind,
                range: (1.05, 1.25),
                jitter: 0.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::param(
                "return range",
                format!("bad range [{lo}, {hi}]"),
            ));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::param(
                "return jitter",
                format!("{} is not >= 0", self.jitter),
            ));
        }
        Ok(())
    }

    /// Closed interval every sampled return lies in.
    pub fn bounds(&self) -> (f64, f64) {
        (
            (self.range.0 - self.jitter).max(MIN_RETURN),
            self.range.1 + self.jitter,
        )
    }

    fn sample(&self, u: f64, v: f64) -> f64 {
        let (lo, hi) = self.range;
        let r = lo + u * (hi - lo) + self.jitter * (2.0 * v - 1.0);
        r.max(MIN_RETURN)
    }

    /// Discrete law of one return draw used when building the value table.
    pub fn law(&self, nodes: usize, jitter_nodes: usize) -> Result<DiscreteDistribution> {
        let base = discretize_uniform(self.range.0, self.range.1, nodes)?;
        let law = if self.jitter > 0.0 {
            base.convolve(&discretize_uniform(
                -self.jitter,
                self.jitter,
                jitter_nodes,
            )?)?
        } else {
            base
        };
        law.map(|r| r.max(MIN_RETURN))
    }
}

/// Samples one schedule realization.
///
/// Every step consumes four uniforms in a fixed order (shock arrival, shock
/// size, return, return perturbation), so the stream layout does not depend
/// on the parameters.
pub fn generate_realization(
    base_income: f64,
    shocks: &ShockProcess,
    regime: &ReturnRegime,
    horizon: usize,
    seed: u64,
) -> Result<ScheduleRealization> {
    shocks.validate()?;
    regime.validate()?;
    if !(base_income >= 0.0 && base_income.is_finite()) {
        return Err(Error::param(
            "base income",
            format!("{base_income} is not >= 0"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut real = ScheduleRealization {
        base_income,
        incomes: Vec::with_capacity(horizon),
        returns: Vec::with_capacity(horizon),
        shock_flags: Vec::with_capacity(horizon),
        shock_sizes: Vec::with_capacity(horizon),
    };
    for _ in 0..horizon {
        let [u_flag, u_size, u_ret, u_jit]: [f64; 4] = rng.gen();
        let flag = u_flag < shocks.probability;
        let size = if flag { shocks.size(u_size) } else { 0.0 };
        real.incomes.push(base_income * (1.0 + size));
        real.shock_flags.push(flag);
        real.shock_sizes.push(size);
        real.returns.push(regime.sample(u_ret, u_jit));
    }
    Ok(real)
}

/// Discrete law of one week's income: base with probability `1 - p`,
/// otherwise base scaled by a discretized uniform shock. `pay` maps
/// `(base, size)` to the income actually received, which lets a
/// compensation rule reshape the law.
pub fn income_law_with(
    base_income: f64,
    shocks: &ShockProcess,
    nodes: usize,
    pay: impl Fn(f64, f64) -> f64,
) -> Result<DiscreteDistribution> {
    shocks.validate()?;
    let (lo, hi) = shocks.size_range;
    let sizes = discretize_uniform(lo, hi, nodes)?;
    let mut atoms = vec![(pay(base_income, 0.0), 1.0 - shocks.probability)];
    atoms.extend(
        sizes
            .iter()
            .map(|(s, w)| (pay(base_income, s), shocks.probability * w)),
    );
    DiscreteDistribution::from_atoms(atoms.into_iter().filter(|a| a.1 > 0.0).collect())
}

pub fn income_law(
    base_income: f64,
    shocks: &ShockProcess,
    nodes: usize,
) -> Result<DiscreteDistribution> {
    income_law_with(base_income, shocks, nodes, |b, s| b * (1.0 + s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_shocks_means_constant_income() {
        let shocks = ShockProcess::new(0.0, (-0.4, 0.4)).unwrap();
        let r = generate_realization(
            500.0,
            &shocks,
            &ReturnRegime::of(RegimeKind::Baseline),
            26,
            3,
        )
        .unwrap();
        assert!(r.incomes.iter().all(|&y| y == 500.0));
        assert!(r.shock_flags.iter().all(|f| !f));
    }

    #[test]
    fn negative_regime_stays_in_range() {
        let r = generate_realization(
            500.0,
            &ShockProcess::default(),
            &ReturnRegime::of(RegimeKind::Negative),
            26,
            11,
        )
        .unwrap();
        assert!(r.returns.iter().all(|&x| (0.75..=0.95).contains(&x)));
    }

    #[test]
    fn same_seed_same_sequence() {
        let go = |seed| {
            generate_realization(
                900.0,
                &ShockProcess::default(),
                &ReturnRegime::of(RegimeKind::Baseline),
                26,
                seed,
            )
            .unwrap()
        };
        assert_eq!(go(42), go(42));
        assert_ne!(go(42), go(43));
    }

    #[test]
    fn income_is_base_times_one_plus_shock() {
        let r = generate_realization(
            1000.0,
            &ShockProcess::new(0.7, (-0.4, 0.4)).unwrap(),
            &ReturnRegime::of(RegimeKind::Positive),
            200,
            5,
        )
        .unwrap();
        for t in 0..200 {
            let s = r.shock_sizes[t];
            assert_eq!(r.incomes[t], 1000.0 * (1.0 + s));
            assert_eq!(s != 0.0, r.shock_flags[t]);
        }
        assert!(r.shock_flags.iter().any(|f| *f));
    }

    #[test]
    fn laws_have_expected_means() {
        let shocks = ShockProcess::default();
        let law = income_law(1000.0, &shocks, 7).unwrap();
        assert!((law.mean() - 1000.0).abs() < 1e-9);
        assert!((law.min() - 1000.0 * (1.0 - 0.4 + 0.8 / 14.0)).abs() < 1e-9);
        let ret = ReturnRegime::of(RegimeKind::Baseline).law(5, 3).unwrap();
        assert!((ret.mean() - 1.0).abs() < 1e-12);
        let (lo, hi) = ReturnRegime::of(RegimeKind::Baseline).bounds();
        assert!(ret.min() >= lo && ret.max() <= hi);
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(ShockProcess::new(1.5, (-0.4, 0.4)).is_err());
        assert!(ShockProcess::new(0.5, (0.4, -0.4)).is_err());
        let mut r = ReturnRegime::of(RegimeKind::Baseline);
        r.range = (-1.0, 1.0);
        assert!(r.validate().is_err());
    }

    proptest! {
        #[test]
        fn samples_stay_in_declared_intervals(
            seed in any::<u64>(),
            p in 0.0f64..=1.0,
            kind in prop_oneof![
                Just(RegimeKind::Baseline),
                Just(RegimeKind::Negative),
                Just(RegimeKind::Positive)
            ],
        ) {
            let shocks = ShockProcess::new(p, (-0.4, 0.4)).unwrap();
            let regime = ReturnRegime::of(kind);
            let (lo, hi) = regime.bounds();
            let r = generate_realization(2000.0, &shocks, &regime, 26, seed).unwrap();
            for t in 0..26 {
                prop_assert!(r.returns[t] >= lo && r.returns[t] <= hi);
                prop_assert!(r.shock_sizes[t] >= -0.4 && r.shock_sizes[t] <= 0.4);
                prop_assert!(r.incomes[t] >= 2000.0 * 0.6 - 1e-9 && r.incomes[t] <= 2000.0 * 1.4 + 1e-9);
            }
        }
    }
}
