use alloc::vec;
use alloc::vec::Vec;

use super::steps::{delta_dqn_step, delta_td_n_step};
use crate::error::{check_dim, Result};
use crate::mdp::{FiniteMultiGoalMdp, TransitionSample};
use crate::policy::TabularPolicy;
use crate::rng::Pcg32;
use crate::tables::{GoalDensityTable, TabularQ};

/// Per-coordinate sample mean and (population) standard deviation of
/// single-sample update increments taken at `η = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateMoments {
    pub samples: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl UpdateMoments {
    fn from_sums(samples: usize, sum: Vec<f64>, sum_sq: Vec<f64>) -> Self {
        let n = samples as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| libm::sqrt((sq / n - m * m).max(0.0)))
            .collect();
        UpdateMoments { samples, mean, std }
    }

    /// Largest `|mean| − k·std/√N` over coordinates; non-positive when every
    /// coordinate lies in its `k`-sigma band around zero.
    pub fn band_excess(&self, k: f64) -> f64 {
        let root = libm::sqrt(self.samples as f64);
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| m.abs() - k * s / root)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn accumulate(sum: &mut [f64], sum_sq: &mut [f64], idx: usize, d: f64) {
    sum[idx] += d;
    sum_sq[idx] += d * d;
}

/// Moments of `n` δ-DQN increments with `(s,a) ∼ ρ_SA`, `s' ∼ P`, `g ∼ ρ_G`.
pub fn delta_dqn_update_moments(
    mdp: &FiniteMultiGoalMdp,
    q: &TabularQ,
    q_tar: &TabularQ,
    rho_sa: &[f64],
    n: usize,
    rng: &mut Pcg32,
) -> Result<UpdateMoments> {
    let (na, ng) = (mdp.n_actions(), mdp.n_goals());
    check_dim("rho_sa", mdp.n_states() * na, rho_sa.len())?;
    let len = q.values().len();
    let (mut sum, mut sum_sq) = (vec![0.0; len], vec![0.0; len]);
    let mut work = q.clone();
    let index = |s: usize, a: usize, g: usize| (s * na + a) * ng + g;
    for _ in 0..n {
        let sa = rng.categorical(rho_sa);
        let (s, a) = (sa / na, sa % na);
        let s_next = rng.categorical(mdp.transition_row(s, a));
        let g = rng.categorical(mdp.goal_dist());
        delta_dqn_step(mdp, &mut work, Some(q_tar), &TransitionSample { s, a, s_next, g }, 1.0)?;
        let base = index(s, a, 0);
        for i in base..base + ng {
            accumulate(&mut sum, &mut sum_sq, i, work.values()[i] - q.values()[i]);
            work.values_mut()[i] = q.values()[i];
        }
    }
    Ok(UpdateMoments::from_sums(n, sum, sum_sq))
}

/// Moments of `n` δ-TD(`horizon`) increments with `(s_0, g) ∼ ρ_SG`, on-policy
/// rollouts of `horizon` steps and `g' ∼ ρ_G`.
#[allow(clippy::too_many_arguments)]
pub fn delta_td_update_moments(
    mdp: &FiniteMultiGoalMdp,
    policy: &TabularPolicy,
    m: &GoalDensityTable,
    m_tar: &GoalDensityTable,
    rho_sg: &[f64],
    horizon: usize,
    n: usize,
    rng: &mut Pcg32,
) -> Result<UpdateMoments> {
    let ng = mdp.n_goals();
    check_dim("rho_sg", mdp.n_states() * ng, rho_sg.len())?;
    let len = m.values().len();
    let (mut sum, mut sum_sq) = (vec![0.0; len], vec![0.0; len]);
    let mut work = m.clone();
    let mut states = Vec::with_capacity(horizon + 1);
    for _ in 0..n {
        let sg = rng.categorical(rho_sg);
        let (s0, g) = (sg / ng, sg % ng);
        states.clear();
        states.push(s0);
        for l in 0..horizon {
            let s = states[l];
            let a = rng.categorical(policy.row(s, g));
            states.push(rng.categorical(mdp.transition_row(s, a)));
        }
        let g_prime = rng.categorical(mdp.goal_dist());
        delta_td_n_step(mdp, &mut work, Some(m_tar), &states, g, g_prime, 1.0)?;
        let base = (s0 * ng + g) * ng;
        for x in 0..ng {
            let i = base + x;
            let d = work.values()[i] - m.values()[i];
            accumulate(&mut sum, &mut sum_sq, i, d);
            work.values_mut()[i] = m.values()[i];
        }
    }
    Ok(UpdateMoments::from_sums(n, sum, sum_sq))
}
