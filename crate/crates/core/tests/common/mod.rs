//! Independent enumeration oracle for the dynamic programs.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schedsim_core::dp::{
    build_value_table, solve_lookahead_dp, DiscreteDistribution, LookaheadWindow, ValueTable,
};
use schedsim_core::model::{AgentState, AssetGrid, ModelParams, Spacing};

/// Top-down memoized Bellman recursion with its own interpolation.
pub struct Oracle {
    pub xs: Vec<f64>,
    pub fractions: Vec<f64>,
    pub beta: f64,
    pub horizon: usize,
    /// `(income, return, probability)`
    pub nodes: Vec<(f64, f64, f64)>,
    /// Known `(y, R)` per step for window recursions, with the first
    /// stochastic step `end`.
    pub known: Vec<(f64, f64)>,
    pub end: usize,
    pub memo_v: HashMap<(usize, usize), f64>,
    pub memo_w: HashMap<(usize, usize), f64>,
}

impl Oracle {
    pub fn new(
        xs: Vec<f64>,
        m: usize,
        beta: f64,
        horizon: usize,
        nodes: Vec<(f64, f64, f64)>,
    ) -> Self {
        let fractions = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
        Self {
            xs,
            fractions,
            beta,
            horizon,
            nodes,
            known: Vec::new(),
            end: 0,
            memo_v: HashMap::new(),
            memo_w: HashMap::new(),
        }
    }

    fn lerp(&mut self, a: f64, t: usize, f: fn(&mut Self, usize, usize) -> f64) -> f64 {
        let n = self.xs.len();
        if a >= self.xs[n - 1] {
            return f(self, n - 1, t);
        }
        let mut i = 0;
        while i + 2 < n && self.xs[i + 1] <= a {
            i += 1;
        }
        let w = (a - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        (1.0 - w) * f(self, i, t) + w * f(self, i + 1, t)
    }

    pub fn v(&mut self, i: usize, t: usize) -> f64 {
        if t == self.horizon {
            return 0.0;
        }
        if let Some(&v) = self.memo_v.get(&(i, t)) {
            return v;
        }
        let x = self.xs[i];
        let best = self
            .stochastic_objectives(x, t)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        self.memo_v.insert((i, t), best);
        best
    }

    pub fn stochastic_objectives(&mut self, x: f64, t: usize) -> Vec<f64> {
        let nodes = self.nodes.clone();
        self.fractions
            .clone()
            .iter()
            .map(|f| {
                let c = f * x;
                let mut ev = 0.0;
                for &(y, r, p) in &nodes {
                    ev += p * self.lerp(r * (x - c) + y, t + 1, Self::v);
                }
                c.sqrt() + self.beta * ev
            })
            .collect()
    }

    pub fn w(&mut self, i: usize, t: usize) -> f64 {
        if t == self.end {
            return self.v(i, t);
        }
        if let Some(&v) = self.memo_w.get(&(i, t)) {
            return v;
        }
        let x = self.xs[i];
        let best = self
            .window_objectives(x, t)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        self.memo_w.insert((i, t), best);
        best
    }

    pub fn window_objectives(&mut self, x: f64, t: usize) -> Vec<f64> {
        let (y, r) = self.known[t];
        self.fractions
            .clone()
            .iter()
            .map(|f| {
                let c = f * x;
                c.sqrt() + self.beta * self.lerp(r * (x - c) + y, t + 1, Self::w)
            })
            .collect()
    }
}

pub struct Instance {
    pub table: ValueTable,
    pub oracle: Oracle,
    pub incomes: DiscreteDistribution,
    pub returns: DiscreteDistribution,
}

fn atoms(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DiscreteDistribution {
    let raw: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(lo..hi), rng.gen_range(0.1..1.0)))
        .collect();
    let total: f64 = raw.iter().map(|a| a.1).sum();
    DiscreteDistribution::from_atoms(raw.into_iter().map(|(v, w)| (v, w / total)).collect())
        .unwrap()
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.gen_range(1..=4);
    let points = rng.gen_range(3..=16);
    let m = rng.gen_range(2..=8);
    let beta = rng.gen_range(0.5..=1.0);
    let n_y = rng.gen_range(1..=3);
    let incomes = atoms(&mut rng, n_y, 0.0, 2.0);
    let n_r = rng.gen_range(1..=2);
    let returns = atoms(&mut rng, n_r, 0.8, 1.2);
    let a0 = rng.gen_range(0.0..3.0);
    let spacing = if rng.gen_bool(0.5) {
        Spacing::Linear
    } else {
        Spacing::Geometric {
            ratio: rng.gen_range(1.5..20.0),
        }
    };
    let grid =
        AssetGrid::covering(a0, returns.max(), incomes.max(), horizon, points, spacing).unwrap();
    let params = ModelParams::new(horizon, beta, grid.clone())
        .unwrap()
        .with_consumption_choices(m)
        .unwrap()
        .with_initial_assets(a0)
        .unwrap();
    let table = build_value_table(&params, &incomes, &returns).unwrap();
    let mut nodes = Vec::new();
    for (y, p) in incomes.iter() {
        for (r, q) in returns.iter() {
            nodes.push((y, r, p * q));
        }
    }
    let oracle = Oracle::new(grid.points().to_vec(), m, beta, horizon, nodes);
    Instance {
        table,
        oracle,
        incomes,
        returns,
    }
}

/// Largest `|V - oracle|` over every grid point and step of instance `seed`.
pub fn value_table_error(seed: u64) -> f64 {
    let mut inst = random_instance(seed);
    let n = inst.table.grid().len();
    let mut worst: f64 = 0.0;
    for t in 0..=inst.table.horizon() {
        for i in 0..n {
            worst = worst.max((inst.table.value(i, t) - inst.oracle.v(i, t)).abs());
        }
    }
    worst
}

/// For every `(r, tau)` of instance `seed` on a sampled path, the shortfall
/// of the solver's chosen objective below the enumerated optimum.
pub fn window_errors(seed: u64) -> Result<Vec<f64>, String> {
    let mut inst = random_instance(seed);
    let horizon = inst.table.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let ys: Vec<f64> = (0..horizon)
        .map(|_| inst.incomes.support()[rng.gen_range(0..inst.incomes.len())])
        .collect();
    let rs: Vec<f64> = (0..horizon)
        .map(|_| inst.returns.support()[rng.gen_range(0..inst.returns.len())])
        .collect();
    inst.oracle.known = ys.iter().copied().zip(rs.iter().copied()).collect();
    let mut out = Vec::new();
    for r in 0..horizon {
        for tau in 0..=horizon - r {
            let a = rng.gen_range(0.0..inst.table.grid().max() / 2.0);
            let mut state = AgentState::new(a, tau, 0.0).map_err(|e| e.to_string())?;
            state.t = r;
            let window = LookaheadWindow::from_sequences(&ys, &rs, r, tau);
            let c = solve_lookahead_dp(&state, &window, &inst.table).map_err(|e| e.to_string())?;
            let objectives = if tau == 0 {
                inst.oracle.stochastic_objectives(a, r)
            } else {
                inst.oracle.end = r + tau;
                inst.oracle.memo_w.clear();
                inst.oracle.window_objectives(a, r)
            };
            let best = objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let k = inst
                .oracle
                .fractions
                .iter()
                .position(|f| f * a == c)
                .ok_or_else(|| format!("seed {seed}: {c} is not a candidate at {a}"))?;
            out.push((objectives[k] - best).abs());
        }
    }
    Ok(out)
}
