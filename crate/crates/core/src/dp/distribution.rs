use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Finite-support probability law with sorted, distinct support points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

const WEIGHT_TOL: f64 = 1e-12;

impl DiscreteDistribution {
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::InvalidDistribution(
                "support and weights must be non-empty and equally long".into(),
            ));
        }
        if !support.iter().all(|s| s.is_finite()) {
            return Err(Error::InvalidDistribution(
                "non-finite support point".into(),
            ));
        }
        if support.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidDistribution(
                "support must be strictly increasing".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidDistribution("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Ok(Self { support, weights })
    }

    /// Builds from unsorted atoms, merging duplicates and renormalizing.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        atoms.retain(|&(_, w)| w > 0.0);
        if atoms.iter().any(|(v, w)| !v.is_finite() || !w.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite atom".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, w) in atoms {
            match support.last() {
                Some(&last) if (v - last).abs() <= 1e-12 * last.abs().max(1.0) => {
                    *weights.last_mut().unwrap() += w;
                }
                _ => {
                    support.push(v);
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("no positive weight".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::new(support, weights)
    }

    pub fn point(value: f64) -> Result<Self> {
        Self::new(vec![value], vec![1.0])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.support[0]
    }

    pub fn max(&self) -> f64 {
        self.support[self.support.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, p)| v * p).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_atoms(self.iter().map(|(v, p)| (f(v), p)).collect())
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let mut atoms = Vec::with_capacity(self.len() * other.len());
        for (a, p) in self.iter() {
            for (b, q) in other.iter() {
                atoms.push((a + b, p * q));
            }
        }
        Self::from_atoms(atoms)
    }

    /// `w * self + (1 - w) * other`.
    pub fn mixture(&self, w: f64, other: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidDistribution(format!("mixture weight {w}")));
        }
        let mut atoms: Vec<(f64, f64)> = self.iter().map(|(v, p)| (v, w * p)).collect();
        atoms.extend(other.iter().map(|(v, p)| (v, (1.0 - w) * p)));
        Self::from_atoms(atoms)
    }

    /// Stable hex digest of the support and weights (first 16 hex chars).
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (v, p) in self.iter() {
            h.update(v.to_le_bytes());
            h.update(p.to_le_bytes());
        }
        h.finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Equal-weight midpoints of `n_nodes` equal subintervals of `[lo, hi]`.
pub fn discretize_uniform(lo: f64, hi: f64, n_nodes: usize) -> Result<DiscreteDistribution> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidDistribution(format!(
            "degenerate interval [{lo}, {hi}]"
        )));
    }
    if n_nodes == 0 {
        return Err(Error::InvalidDistribution("need at least one node".into()));
    }
    let width = (hi - lo) / n_nodes as f64;
    let mut support: Vec<f64> = (0..n_nodes)
        .map(|i| lo + width * (i as f64 + 0.5))
        .collect();
    // symmetric pairs so the node mean is exactly the interval midpoint
    let mid = 0.5 * (lo + hi);
    for i in 0..n_nodes / 2 {
        let j = n_nodes - 1 - i;
        let half = 0.5 * (support[j] - support[i]);
        support[i] = mid - half;
        support[j] = mid + half;
    }
    if n_nodes % 2 == 1 {
        support[n_nodes / 2] = mid;
    }
    let mut weights = vec![1.0 / n_nodes as f64; n_nodes];
    // equal weights may not sum to exactly 1 in floating point
    let drift: f64 = 1.0 - weights.iter().sum::<f64>();
    weights[n_nodes - 1] += drift;
    DiscreteDistribution::new(support, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn uniform_midpoints() {
        let d = discretize_uniform(-0.4, 0.4, 2).unwrap();
        assert!(close(d.support(), &[-0.2, 0.2]));
        assert!(close(d.weights(), &[0.5, 0.5]));

        let d = discretize_uniform(0.9, 1.1, 1).unwrap();
        assert!(close(d.support(), &[1.0]));

        let d = discretize_uniform(0.0, 1.0, 5).unwrap();
        assert!(close(d.support(), &[0.1, 0.3, 0.5, 0.7, 0.9]));
        assert!(close(d.weights(), &[0.2; 5]));
    }

    #[test]
    fn uniform_mean_is_midpoint() {
        for n in 1..20 {
            let d = discretize_uniform(0.75, 0.95, n).unwrap();
            assert!((d.mean() - 0.85).abs() < 1e-15, "n={n} mean={}", d.mean());
        }
    }

    #[test]
    fn uniform_rejects_degenerate() {
        assert!(discretize_uniform(1.0, 1.0, 3).is_err());
        assert!(discretize_uniform(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn validation() {
        assert!(DiscreteDistribution::new(vec![1.0, 0.5], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![0.0, 1.0], vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn mixture_merges_shared_atoms() {
        let shocks = discretize_uniform(-0.4, 0.4, 7).unwrap();
        let shocked = shocks.map(|r| 100.0 * (1.0 + r)).unwrap();
        let base = DiscreteDistribution::point(100.0).unwrap();
        let m = shocked.mixture(0.5, &base).unwrap();
        // the zero shock node coincides with the base atom
        assert_eq!(m.len(), 7);
        assert!((m.mean() - 100.0).abs() < 1e-9);
        let at_base = m.iter().find(|(v, _)| (*v - 100.0).abs() < 1e-9).unwrap().1;
        assert!((at_base - (0.5 + 0.5 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn convolution_mean_adds() {
        let a = discretize_uniform(0.9, 1.1, 5).unwrap();
        let b = discretize_uniform(-0.05, 0.05, 3).unwrap();
        let c = a.convolve(&b).unwrap();
        assert!((c.mean() - 1.0).abs() < 1e-12);
        assert!((c.max() - (a.max() + b.max())).abs() < 1e-12);
    }

    #[test]
    fn digest_is_stable_and_discriminating() {
        let a = discretize_uniform(0.0, 1.0, 5).unwrap();
        let b = discretize_uniform(0.0, 1.0, 6).unwrap();
        assert_eq!(a.digest(), a.clone().digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }
}
