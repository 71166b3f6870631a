//! Value tables shared by the oracles and the learners.
//!
//! Tables used by the Dirac-reward methods hold densities with respect to the
//! goal distribution `ρ_G`; for uniform `ρ_G` over `G` goals a density is
//! `G` times the raw value. [`TabularQ::to_raw`] and [`TabularQ::from_raw`]
//! convert explicitly.

use alloc::vec;
use alloc::vec::Vec;

use crate::mdp::FiniteMultiGoalMdp;

/// `q[s][a][g]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularQ {
    n_states: usize,
    n_actions: usize,
    n_goals: usize,
    values: Vec<f64>,
}

impl TabularQ {
    pub fn zeros(n_states: usize, n_actions: usize, n_goals: usize) -> Self {
        TabularQ {
            n_states,
            n_actions,
            n_goals,
            values: vec![0.0; n_states * n_actions * n_goals],
        }
    }

    pub fn for_mdp(mdp: &FiniteMultiGoalMdp) -> Self {
        Self::zeros(mdp.n_states(), mdp.n_actions(), mdp.n_goals())
    }

    pub fn from_fn(
        n_states: usize,
        n_actions: usize,
        n_goals: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut q = Self::zeros(n_states, n_actions, n_goals);
        for s in 0..n_states {
            for a in 0..n_actions {
                for g in 0..n_goals {
                    *q.get_mut(s, a, g) = f(s, a, g);
                }
            }
        }
        q
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_goals(&self) -> usize {
        self.n_goals
    }

    fn index(&self, s: usize, a: usize, g: usize) -> usize {
        (s * self.n_actions + a) * self.n_goals + g
    }

    pub fn get(&self, s: usize, a: usize, g: usize) -> f64 {
        self.values[self.index(s, a, g)]
    }

    pub fn get_mut(&mut self, s: usize, a: usize, g: usize) -> &mut f64 {
        let i = self.index(s, a, g);
        &mut self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `max_a q(s, a, g)`.
    pub fn max_value(&self, s: usize, g: usize) -> f64 {
        (0..self.n_actions)
            .map(|a| self.get(s, a, g))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `argmax_a q(s, a, g)`, lowest index on ties.
    pub fn greedy_action(&self, s: usize, g: usize) -> usize {
        let mut best = 0;
        for a in 1..self.n_actions {
            if self.get(s, a, g) > self.get(s, best, g) {
                best = a;
            }
        }
        best
    }

    /// Density to raw scale: `Q = q · ρ_G(g)`.
    pub fn to_raw(&self, mdp: &FiniteMultiGoalMdp) -> TabularQ {
        TabularQ::from_fn(self.n_states, self.n_actions, self.n_goals, |s, a, g| {
            self.get(s, a, g) * mdp.goal_prob(g)
        })
    }

    /// Raw scale to density: `q = Q / ρ_G(g)`.
    pub fn from_raw(raw: &TabularQ, mdp: &FiniteMultiGoalMdp) -> TabularQ {
        TabularQ::from_fn(raw.n_states, raw.n_actions, raw.n_goals, |s, a, g| {
            raw.get(s, a, g) / mdp.goal_prob(g)
        })
    }

    pub fn sup_distance(&self, other: &TabularQ) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `m[s][g][g']`, the density of a successor goal measure.
#[derive(Clone, Debug, PartialEq)]
pub struct GoalDensityTable {
    n_states: usize,
    n_goals: usize,
    values: Vec<f64>,
}

impl GoalDensityTable {
    pub fn zeros(n_states: usize, n_goals: usize) -> Self {
        GoalDensityTable {
            n_states,
            n_goals,
            values: vec![0.0; n_states * n_goals * n_goals],
        }
    }

    pub fn for_mdp(mdp: &FiniteMultiGoalMdp) -> Self {
        Self::zeros(mdp.n_states(), mdp.n_goals())
    }

    pub fn from_fn(n_states: usize, n_goals: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n_states, n_goals);
        for s in 0..n_states {
            for g in 0..n_goals {
                for x in 0..n_goals {
                    *m.get_mut(s, g, x) = f(s, g, x);
                }
            }
        }
        m
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_goals(&self) -> usize {
        self.n_goals
    }

    fn index(&self, s: usize, g: usize, x: usize) -> usize {
        (s * self.n_goals + g) * self.n_goals + x
    }

    pub fn get(&self, s: usize, g: usize, x: usize) -> f64 {
        self.values[self.index(s, g, x)]
    }

    pub fn get_mut(&mut self, s: usize, g: usize, x: usize) -> &mut f64 {
        let i = self.index(s, g, x);
        &mut self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value density `v(s, g) = m(s, g, g)`.
    pub fn value(&self, s: usize, g: usize) -> f64 {
        self.get(s, g, g)
    }

    pub fn sup_distance(&self, other: &GoalDensityTable) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}
