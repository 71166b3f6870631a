use crate::error::{Error, Result};
use crate::mdp::{FiniteMultiGoalMdp, TransitionSample};
use crate::tables::{GoalDensityTable, TabularQ};

fn finite(v: f64, table: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { table, steps: 1 })
    }
}

/// `Q(s,a,g) += η (1{φ(s)=g} + γ max_{a'} Q_tar(s',a',g) − Q(s,a,g))`.
///
/// `q_tar = None` bootstraps on `q` itself. Touches one entry.
pub fn uvfa_step(
    mdp: &FiniteMultiGoalMdp,
    q: &mut TabularQ,
    q_tar: Option<&TabularQ>,
    sample: &TransitionSample,
    eta: f64,
) -> Result<()> {
    let TransitionSample { s, a, s_next, g } = *sample;
    let boot = q_tar.unwrap_or(q).max_value(s_next, g);
    let entry = q.get_mut(s, a, g);
    *entry += eta * (mdp.reward(s, g) + mdp.discount() * boot - *entry);
    finite(*entry, "q")
}

/// HER applies the UVFA rule to a relabelled transition.
pub fn her_step(
    mdp: &FiniteMultiGoalMdp,
    q: &mut TabularQ,
    q_tar: Option<&TabularQ>,
    relabelled: &TransitionSample,
    eta: f64,
) -> Result<()> {
    uvfa_step(mdp, q, q_tar, relabelled, eta)
}

/// δ-DQN on densities, `sample.g` drawn from `ρ_G` independently of the transition.
///
/// First `q(s,a,φ(s)) += η`, then `q(s,a,g) += η (γ max q_tar(s',·,g) − q(s,a,g))`
/// with both the bootstrap and `q(s,a,g)` read before either increment.
pub fn delta_dqn_step(
    mdp: &FiniteMultiGoalMdp,
    q: &mut TabularQ,
    q_tar: Option<&TabularQ>,
    sample: &TransitionSample,
    eta: f64,
) -> Result<()> {
    let TransitionSample { s, a, s_next, g } = *sample;
    let boot = q_tar.unwrap_or(q).max_value(s_next, g);
    let old = q.get(s, a, g);
    *q.get_mut(s, a, mdp.phi(s)) += eta;
    *q.get_mut(s, a, g) += eta * (mdp.discount() * boot - old);
    finite(q.get(s, a, mdp.phi(s)), "q")?;
    finite(q.get(s, a, g), "q")
}

/// δ-TD(n) on `states = [s_k, …, s_{k+n}]` under goal `g`, with `g_prime ∼ ρ_G`:
/// `m(s_k,g,φ(s_{k+l})) += η γ^l` for `l < n`, then
/// `m(s_k,g,g') += η (γ^n m_tar(s_{k+n},g,g') − m(s_k,g,g'))` on pre-update values.
pub fn delta_td_n_step(
    mdp: &FiniteMultiGoalMdp,
    m: &mut GoalDensityTable,
    m_tar: Option<&GoalDensityTable>,
    states: &[usize],
    g: usize,
    g_prime: usize,
    eta: f64,
) -> Result<()> {
    assert!(states.len() >= 2, "segment needs at least one transition");
    let n = states.len() - 1;
    let s0 = states[0];
    let gamma = mdp.discount();
    let boot = m_tar.unwrap_or(m).get(states[n], g, g_prime);
    let old = m.get(s0, g, g_prime);
    let mut disc = 1.0;
    for &s in &states[..n] {
        *m.get_mut(s0, g, mdp.phi(s)) += eta * disc;
        disc *= gamma;
    }
    *m.get_mut(s0, g, g_prime) += eta * (disc * boot - old);
    for &s in &states[..n] {
        finite(m.get(s0, g, mdp.phi(s)), "m")?;
    }
    finite(m.get(s0, g, g_prime), "m")
}

/// One δ-Actor-Critic step at time `t` of a trajectory.
///
/// Both updates read the critic before it moves. The critic takes a δ-TD
/// step at `(s_t, g, g')`; the softmax logits `θ[s][g][b]` move by
/// `η_π γ^t (1{b=a_t} − π(b|s_t,g)) (γ m(s_{t+1},g,g) − m(s_t,g,g))`.
#[allow(clippy::too_many_arguments)]
pub fn delta_ac_step(
    mdp: &FiniteMultiGoalMdp,
    critic: &mut GoalDensityTable,
    logits: &mut [f64],
    t: usize,
    transition: &TransitionSample,
    g_prime: usize,
    eta_m: f64,
    eta_pi: f64,
) -> Result<()> {
    let TransitionSample { s, a, s_next, g } = *transition;
    let gamma = mdp.discount();
    let na = mdp.n_actions();
    let advantage = gamma * critic.value(s_next, g) - critic.value(s, g);
    delta_td_n_step(mdp, critic, None, &[s, s_next], g, g_prime, eta_m)?;

    let row = &mut logits[(s * mdp.n_goals() + g) * na..(s * mdp.n_goals() + g + 1) * na];
    let max = row.iter().fold(f64::NEG_INFINITY, |acc, &x| acc.max(x));
    let mut probs = [0.0f64; 64];
    assert!(na <= probs.len(), "at most 64 actions");
    let mut total = 0.0;
    for (p, &x) in probs.iter_mut().zip(row.iter()) {
        *p = libm::exp(x - max);
        total += *p;
    }
    let scale = eta_pi * libm::pow(gamma, t as f64) * advantage;
    for (b, x) in row.iter_mut().enumerate() {
        let score = if b == a { 1.0 } else { 0.0 } - probs[b] / total;
        *x += scale * score;
        finite(*x, "logits")?;
    }
    Ok(())
}
