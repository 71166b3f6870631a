//! Goal-conditioned tabular policies.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::mdp::PROB_TOL;
use crate::rng::Pcg32;
use crate::tables::TabularQ;

/// `π[s][g][a]`, optionally carrying the softmax logits it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularPolicy {
    n_states: usize,
    n_goals: usize,
    n_actions: usize,
    probs: Vec<f64>,
    logits: Option<Vec<f64>>,
}

impl TabularPolicy {
    pub fn from_probs(n_states: usize, n_goals: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        check_dim("policy table", n_states * n_goals * n_actions, probs.len())?;
        for (i, row) in probs.chunks(n_actions.max(1)).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidModel(format!(
                    "policy row (s {}, g {}) is not a distribution",
                    i / n_goals,
                    i % n_goals
                )));
            }
        }
        Ok(TabularPolicy {
            n_states,
            n_goals,
            n_actions,
            probs,
            logits: None,
        })
    }

    pub fn uniform(n_states: usize, n_goals: usize, n_actions: usize) -> Self {
        TabularPolicy {
            n_states,
            n_goals,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_goals * n_actions],
            logits: None,
        }
    }

    pub fn deterministic(
        n_states: usize,
        n_goals: usize,
        n_actions: usize,
        mut choose: impl FnMut(usize, usize) -> usize,
    ) -> Self {
        let mut probs = vec![0.0; n_states * n_goals * n_actions];
        for s in 0..n_states {
            for g in 0..n_goals {
                probs[(s * n_goals + g) * n_actions + choose(s, g)] = 1.0;
            }
        }
        TabularPolicy {
            n_states,
            n_goals,
            n_actions,
            probs,
            logits: None,
        }
    }

    /// Full-support policy with Dirichlet-uniform rows.
    pub fn random(n_states: usize, n_goals: usize, n_actions: usize, rng: &mut Pcg32) -> Self {
        let mut probs = Vec::with_capacity(n_states * n_goals * n_actions);
        for _ in 0..n_states * n_goals {
            probs.extend(rng.dirichlet_uniform(n_actions));
        }
        TabularPolicy {
            n_states,
            n_goals,
            n_actions,
            probs,
            logits: None,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_goals(&self) -> usize {
        self.n_goals
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize, g: usize) -> &[f64] {
        let start = (s * self.n_goals + g) * self.n_actions;
        &self.probs[start..start + self.n_actions]
    }

    pub fn prob(&self, s: usize, g: usize, a: usize) -> f64 {
        self.row(s, g)[a]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn logits(&self) -> Option<&[f64]> {
        self.logits.as_deref()
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }
}

/// Mass `1 - epsilon` on the greedy action (lowest index on ties) plus
/// `epsilon` spread uniformly.
pub fn epsilon_greedy(q: &TabularQ, epsilon: f64) -> TabularPolicy {
    let (ns, na, ng) = (q.n_states(), q.n_actions(), q.n_goals());
    let base = epsilon / na as f64;
    let mut probs = vec![base; ns * ng * na];
    for s in 0..ns {
        for g in 0..ng {
            probs[(s * ng + g) * na + q.greedy_action(s, g)] += 1.0 - epsilon;
        }
    }
    TabularPolicy {
        n_states: ns,
        n_goals: ng,
        n_actions: na,
        probs,
        logits: None,
    }
}

/// Row-wise softmax of logits laid out as `θ[s][g][a]`. The row maximum is
/// subtracted before exponentiation.
pub fn softmax_policy(n_states: usize, n_goals: usize, n_actions: usize, logits: &[f64]) -> Result<TabularPolicy> {
    check_dim("logit table", n_states * n_goals * n_actions, logits.len())?;
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidModel("non-finite logit".into()));
    }
    let mut probs = Vec::with_capacity(logits.len());
    for row in logits.chunks(n_actions) {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let exps: Vec<f64> = row.iter().map(|&x| libm::exp(x - max)).collect();
        let total: f64 = exps.iter().sum();
        probs.extend(exps.iter().map(|e| e / total));
    }
    Ok(TabularPolicy {
        n_states,
        n_goals,
        n_actions,
        probs,
        logits: Some(logits.to_vec()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_one_is_uniform() {
        let q = TabularQ::from_fn(2, 3, 2, |s, a, g| (s + a * g) as f64);
        let pi = epsilon_greedy(&q, 1.0);
        assert!(pi.probs().iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn epsilon_zero_is_greedy() {
        let q = TabularQ::from_fn(2, 3, 2, |s, a, g| ((a + s + g) % 3) as f64);
        let pi = epsilon_greedy(&q, 0.0);
        for s in 0..2 {
            for g in 0..2 {
                let greedy = q.greedy_action(s, g);
                for a in 0..3 {
                    assert_eq!(pi.prob(s, g, a), if a == greedy { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn epsilon_point_two_two_actions() {
        let q = TabularQ::from_fn(1, 2, 1, |_, a, _| a as f64);
        let pi = epsilon_greedy(&q, 0.2);
        assert!((pi.prob(0, 0, 0) - 0.1).abs() < 1e-15);
        assert!((pi.prob(0, 0, 1) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn softmax_examples() {
        let pi = softmax_policy(1, 1, 3, &[0.0; 3]).unwrap();
        assert!(pi.probs().iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        let pi = softmax_policy(1, 1, 2, &[800.0, 800.0]).unwrap();
        assert_eq!(pi.probs(), &[0.5, 0.5]);
        let pi = softmax_policy(1, 1, 2, &[0.0, libm::log(3.0)]).unwrap();
        assert!((pi.prob(0, 0, 0) - 0.25).abs() < 1e-15);
        assert!((pi.prob(0, 0, 1) - 0.75).abs() < 1e-15);
        assert!(pi.has_full_support());
    }

    #[test]
    fn from_probs_validates_rows() {
        assert!(TabularPolicy::from_probs(1, 1, 2, vec![0.4, 0.4]).is_err());
        assert!(TabularPolicy::from_probs(1, 1, 2, vec![0.4, 0.6]).is_ok());
    }
}
