use alloc::vec;
use alloc::vec::Vec;

use super::linalg::solve_resolvent;
use super::solvers::visitation_from_kernel;
use crate::error::{check_dim, invalid_param, Result};
use crate::mdp::{policy_transition_kernel, FiniteMultiGoalMdp};
use crate::policy::{softmax_policy, TabularPolicy};
use crate::tables::GoalDensityTable;

/// `J(π) = Σ_g ρ_G(g) Σ_{s0} ρ_0(s0|g) v^π(s0, g)` on the density scale, where
/// `v^π(·, g)` solves `(I − γ P^π_g) v = 1{φ(·)=g}/ρ_G(g)`.
pub fn exact_expected_return(mdp: &FiniteMultiGoalMdp, policy: &TabularPolicy) -> Result<f64> {
    let kernel = policy_transition_kernel(mdp, policy)?;
    let ns = mdp.n_states();
    let mut total = 0.0;
    for g in 0..mdp.n_goals() {
        let r: Vec<f64> = (0..ns).map(|s| mdp.dirac_density(s, g)).collect();
        let v = solve_resolvent(kernel.matrix(g), ns, mdp.discount(), &r, 1, g)?;
        let start: f64 = mdp.init_row(g).iter().zip(&v).map(|(p, v)| p * v).sum();
        total += mdp.goal_prob(g) * start;
    }
    Ok(total)
}

/// Mean δ-AC actor direction for a softmax policy, on its logits `[s][g][b]`.
///
/// Coordinate `(s, g, b)` is `w(s,g) π(b|s,g) (A(b) − Σ_a π(a|s,g) A(a))` with
/// `A(a) = Σ_{s'} P(s'|s,a) (γ m(s',g,g) − m(s,g,g))` and the discounted
/// occupancy `w(s,g) = ρ_G(g) Σ_t γ^t Pr(s_t = s)`.
pub fn expected_update_delta_ac(
    mdp: &FiniteMultiGoalMdp,
    policy: &TabularPolicy,
    m: &GoalDensityTable,
) -> Result<Vec<f64>> {
    let zero = vec![0.0; mdp.n_states() * mdp.n_goals()];
    expected_update_delta_ac_with_baseline(mdp, policy, m, &zero)
}

/// As [`expected_update_delta_ac`] with `b(s, g)` (layout `[s][g]`) subtracted
/// from every advantage.
pub fn expected_update_delta_ac_with_baseline(
    mdp: &FiniteMultiGoalMdp,
    policy: &TabularPolicy,
    m: &GoalDensityTable,
    baseline: &[f64],
) -> Result<Vec<f64>> {
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    check_dim("baseline", ns * ng, baseline.len())?;
    check_dim("critic states", ns, m.n_states())?;
    let gamma = mdp.discount();
    let kernel = policy_transition_kernel(mdp, policy)?;
    let nu = visitation_from_kernel(&kernel, gamma)?;
    let mut out = vec![0.0; ns * ng * na];
    let mut adv = vec![0.0; na];
    for g in 0..ng {
        let occupancy = nu.from_init(mdp, g);
        for s in 0..ns {
            let w = mdp.goal_prob(g) * occupancy[s] / (1.0 - gamma);
            if w == 0.0 {
                continue;
            }
            for (a, slot) in adv.iter_mut().enumerate() {
                let next: f64 = mdp
                    .transition_row(s, a)
                    .iter()
                    .enumerate()
                    .map(|(sn, &p)| p * m.value(sn, g))
                    .sum();
                *slot = gamma * next - m.value(s, g) - baseline[s * ng + g];
            }
            let probs = policy.row(s, g);
            let mean: f64 = probs.iter().zip(&adv).map(|(p, a)| p * a).sum();
            for b in 0..na {
                out[(s * ng + g) * na + b] = w * probs[b] * (adv[b] - mean);
            }
        }
    }
    Ok(out)
}

/// Central differences of [`exact_expected_return`] over every softmax logit.
pub fn finite_difference_grad_j(mdp: &FiniteMultiGoalMdp, logits: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(invalid_param("h", "step must be positive"));
    }
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    let mut theta = logits.to_vec();
    let mut grad = Vec::with_capacity(logits.len());
    for i in 0..logits.len() {
        let orig = theta[i];
        theta[i] = orig + h;
        let up = exact_expected_return(mdp, &softmax_policy(ns, ng, na, &theta)?)?;
        theta[i] = orig - h;
        let down = exact_expected_return(mdp, &softmax_policy(ns, ng, na, &theta)?)?;
        theta[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}
