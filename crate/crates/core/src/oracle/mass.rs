use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::vec::Vec;

use crate::envs::DyadicTree;
use crate::error::{invalid_param, Result};
use crate::mdp::FiniteMultiGoalMdp;

type Measure = BTreeMap<usize, f64>;

/// Sparse evaluation of `Q_t = T^t · 0` on goal measures, memoized on
/// `V_t(s) = sup_a Q_t(s, a)` (goal-wise maximum).
struct Propagator<'a> {
    mdp: &'a FiniteMultiGoalMdp,
    memo: BTreeMap<(usize, usize), Rc<Measure>>,
}

impl Propagator<'_> {
    fn q(&mut self, s: usize, a: usize, t: usize) -> Measure {
        let mut out = Measure::new();
        if t == 0 {
            return out;
        }
        out.insert(self.mdp.phi(s), 1.0);
        let gamma = self.mdp.discount();
        for (next, &p) in self.mdp.transition_row(s, a).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let v = self.v(next, t - 1);
            for (&g, &mass) in v.iter() {
                *out.entry(g).or_insert(0.0) += gamma * p * mass;
            }
        }
        out
    }

    fn v(&mut self, s: usize, t: usize) -> Rc<Measure> {
        if let Some(m) = self.memo.get(&(s, t)) {
            return m.clone();
        }
        let mut sup = Measure::new();
        for a in 0..self.mdp.n_actions() {
            for (g, mass) in self.q(s, a, t) {
                let e = sup.entry(g).or_insert(mass);
                *e = e.max(mass);
            }
        }
        let sup = Rc::new(sup);
        self.memo.insert((s, t), sup.clone());
        sup
    }
}

/// Total goal mass of `Q_t(s, a, ·)` for `t = 1..=horizon`.
pub fn finite_horizon_masses(mdp: &FiniteMultiGoalMdp, s: usize, a: usize, horizon: usize) -> Vec<f64> {
    let mut prop = Propagator {
        mdp,
        memo: BTreeMap::new(),
    };
    (1..=horizon).map(|t| prop.q(s, a, t).values().sum()).collect()
}

/// Total goal mass of `Q_t(s, a, ·)`.
pub fn finite_horizon_mass(mdp: &FiniteMultiGoalMdp, s: usize, a: usize, t: usize) -> f64 {
    let mut prop = Propagator {
        mdp,
        memo: BTreeMap::new(),
    };
    prop.q(s, a, t).values().sum()
}

/// Mass of `Q_t(root, 0, ·)` on a dyadic tree for `t = 1..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct MassProfile {
    pub discount: f64,
    pub masses: Vec<f64>,
    /// Every step gained at least as much mass as it lost, up to rounding.
    pub monotone: bool,
    /// Limit `1 + γ/(1 − 2γ)`, present when `2γ < 1`.
    pub limit: Option<f64>,
    /// Geometric bound `½ (2γ)^t / (1 − 2γ)` on the mass still missing at the last horizon.
    pub tail_bound: Option<f64>,
    /// Last observed increment ratio; it equals `2γ` on the tree.
    pub increment_ratio: f64,
    /// Raised when increments stop shrinking, i.e. the mass grows without bound.
    pub diverges: bool,
}

pub fn mass_profile(tree: &DyadicTree, discount: f64, horizon: usize) -> Result<MassProfile> {
    if horizon < 3 || horizon > tree.depth {
        return Err(invalid_param("horizon", "must lie in 3..=depth"));
    }
    let mdp = tree.mdp.with_discount(discount)?;
    let masses = finite_horizon_masses(&mdp, tree.root(), 0, horizon);
    let monotone = masses.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0]);
    let n = masses.len();
    let increment_ratio = (masses[n - 1] - masses[n - 2]) / (masses[n - 2] - masses[n - 3]);
    let r = 2.0 * discount;
    let (limit, tail_bound) = if r < 1.0 {
        (
            Some(1.0 + discount / (1.0 - r)),
            Some(0.5 * libm::pow(r, horizon as f64) / (1.0 - r)),
        )
    } else {
        (None, None)
    };
    Ok(MassProfile {
        discount,
        masses,
        monotone,
        limit,
        tail_bound,
        increment_ratio,
        diverges: increment_ratio >= 1.0 - 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::dyadic_tree_mdp;

    #[test]
    fn first_horizon_is_the_dirac() {
        let tree = dyadic_tree_mdp(4, 0.4).unwrap();
        assert_eq!(finite_horizon_mass(&tree.mdp, 0, 0, 1), 1.0);
        assert!((finite_horizon_mass(&tree.mdp, 0, 1, 2) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn matches_the_closed_form_partial_sums() {
        let tree = dyadic_tree_mdp(8, 0.4).unwrap();
        let masses = finite_horizon_masses(&tree.mdp, 0, 0, 8);
        for (i, m) in masses.iter().enumerate() {
            let t = i + 1;
            let expect: f64 = 1.0
                + (1..t)
                    .map(|k| libm::pow(0.4, k as f64) * libm::pow(2.0, (k - 1) as f64))
                    .sum::<f64>();
            assert!((m - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn profiles() {
        let tree = dyadic_tree_mdp(10, 0.5).unwrap();
        let low = mass_profile(&tree, 0.4, 10).unwrap();
        assert!(low.monotone && !low.diverges);
        let gap = low.limit.unwrap() - low.masses[9];
        assert!(gap > 0.0 && (gap - low.tail_bound.unwrap()).abs() < 1e-12);
        let high = mass_profile(&tree, 0.6, 10).unwrap();
        assert!(high.monotone && high.diverges && high.limit.is_none());
        assert!(mass_profile(&tree, 0.4, 11).is_err());
    }
}
