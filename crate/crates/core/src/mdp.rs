//! Finite multi-goal MDPs, trajectories, and the policy-averaged transition kernel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid_param, Error, Result};
use crate::policy::TabularPolicy;
use crate::rng::Pcg32;

/// Tolerance for every stochasticity check on probability vectors.
pub const PROB_TOL: f64 = 1e-12;

/// Raw components of a finite multi-goal MDP, validated by
/// [`FiniteMultiGoalMdp::from_parts`].
#[derive(Clone, Debug, PartialEq)]
pub struct MdpParts {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_goals: usize,
    /// Row-major `P[s][a][s']`.
    pub transition: Vec<f64>,
    /// `φ[s]`, the goal achieved by each state.
    pub goal_map: Vec<usize>,
    /// `ρ_G[g]`.
    pub goal_dist: Vec<f64>,
    /// Row-major `ρ_0[g][s0]`.
    pub init_dist: Vec<f64>,
    pub discount: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMultiGoalMdp {
    parts: MdpParts,
    surjective: bool,
}

fn check_distribution(what: &str, row: &[f64]) -> Result<()> {
    if let Some((i, p)) = row.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidModel(format!("{what}: entry {i} is {p}")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidModel(format!("{what}: sums to {total}")));
    }
    Ok(())
}

impl FiniteMultiGoalMdp {
    pub fn from_parts(parts: MdpParts) -> Result<Self> {
        let MdpParts {
            n_states: s,
            n_actions: a,
            n_goals: g,
            ..
        } = parts;
        if s == 0 || a == 0 || g == 0 {
            return Err(Error::InvalidModel(format!(
                "counts must be positive (states {s}, actions {a}, goals {g})"
            )));
        }
        check_dim("transition tensor", s * a * s, parts.transition.len())?;
        check_dim("goal map", s, parts.goal_map.len())?;
        check_dim("goal distribution", g, parts.goal_dist.len())?;
        check_dim("initial distribution", g * s, parts.init_dist.len())?;
        if !(0.0..1.0).contains(&parts.discount) {
            return Err(invalid_param("discount", format!("{} not in [0, 1)", parts.discount)));
        }
        for state in 0..s {
            for action in 0..a {
                let row = &parts.transition[(state * a + action) * s..(state * a + action + 1) * s];
                check_distribution(&format!("P[{state}][{action}]"), row)?;
            }
        }
        if let Some((state, goal)) = parts.goal_map.iter().enumerate().find(|(_, &x)| x >= g) {
            return Err(Error::InvalidModel(format!("φ[{state}] = {goal} is not a goal index")));
        }
        check_distribution("ρ_G", &parts.goal_dist)?;
        for goal in 0..g {
            check_distribution(&format!("ρ_0[{goal}]"), &parts.init_dist[goal * s..(goal + 1) * s])?;
        }
        let mut hit = vec![false; g];
        parts.goal_map.iter().for_each(|&x| hit[x] = true);
        let surjective = hit.iter().all(|&h| h);
        Ok(FiniteMultiGoalMdp { parts, surjective })
    }

    /// MDP with `G = S`, `φ = id`, and uniform goal and start distributions.
    pub fn with_identity_goals(n_states: usize, n_actions: usize, transition: Vec<f64>, discount: f64) -> Result<Self> {
        let uniform = 1.0 / n_states.max(1) as f64;
        Self::from_parts(MdpParts {
            n_states,
            n_actions,
            n_goals: n_states,
            transition,
            goal_map: (0..n_states).collect(),
            goal_dist: vec![uniform; n_states],
            init_dist: vec![uniform; n_states * n_states],
            discount,
        })
    }

    pub fn parts(&self) -> &MdpParts {
        &self.parts
    }

    pub fn into_parts(self) -> MdpParts {
        self.parts
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        let mut parts = self.parts.clone();
        parts.discount = discount;
        Self::from_parts(parts)
    }

    pub fn n_states(&self) -> usize {
        self.parts.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.parts.n_actions
    }

    pub fn n_goals(&self) -> usize {
        self.parts.n_goals
    }

    pub fn discount(&self) -> f64 {
        self.parts.discount
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let n = self.parts.n_states;
        let start = (s * self.parts.n_actions + a) * n;
        &self.parts.transition[start..start + n]
    }

    pub fn p(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition_row(s, a)[next]
    }

    pub fn phi(&self, s: usize) -> usize {
        self.parts.goal_map[s]
    }

    pub fn goal_map(&self) -> &[usize] {
        &self.parts.goal_map
    }

    pub fn goal_prob(&self, g: usize) -> f64 {
        self.parts.goal_dist[g]
    }

    pub fn goal_dist(&self) -> &[f64] {
        &self.parts.goal_dist
    }

    pub fn init_row(&self, g: usize) -> &[f64] {
        let n = self.parts.n_states;
        &self.parts.init_dist[g * n..(g + 1) * n]
    }

    /// Finite reward `R(s, g) = 1{φ(s) = g}`.
    pub fn reward(&self, s: usize, g: usize) -> f64 {
        if self.phi(s) == g {
            1.0
        } else {
            0.0
        }
    }

    /// Density of the Dirac reward `δ_{φ(s)}` with respect to `ρ_G`, at `g`.
    pub fn dirac_density(&self, s: usize, g: usize) -> f64 {
        if self.phi(s) == g {
            1.0 / self.goal_prob(g)
        } else {
            0.0
        }
    }

    /// Whether every goal is achieved by some state.
    pub fn is_goal_map_surjective(&self) -> bool {
        self.surjective
    }

    /// Successor of `(s, a)` when that row is a point mass.
    pub fn successor(&self, s: usize, a: usize) -> Option<usize> {
        let row = self.transition_row(s, a);
        row.iter()
            .position(|&p| p == 1.0)
            .filter(|_| row.iter().filter(|&&p| p != 0.0).count() == 1)
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.n_states()).all(|s| (0..self.n_actions()).all(|a| self.successor(s, a).is_some()))
    }

    /// Boolean reachability closure over all actions (Floyd–Warshall).
    pub fn reachability(&self) -> Vec<bool> {
        let n = self.n_states();
        let mut reach = vec![false; n * n];
        for s in 0..n {
            reach[s * n + s] = true;
            for a in 0..self.n_actions() {
                for (next, &p) in self.transition_row(s, a).iter().enumerate() {
                    if p > 0.0 {
                        reach[s * n + next] = true;
                    }
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i * n + k] {
                    for j in 0..n {
                        if reach[k * n + j] {
                            reach[i * n + j] = true;
                        }
                    }
                }
            }
        }
        reach
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.reachability().iter().all(|&r| r)
    }

    pub(crate) fn check_policy(&self, policy: &TabularPolicy) -> Result<()> {
        check_dim("policy states", self.n_states(), policy.n_states())?;
        check_dim("policy goals", self.n_goals(), policy.n_goals())?;
        check_dim("policy actions", self.n_actions(), policy.n_actions())
    }
}

/// `(s, a, s', g)` transition as consumed by single-sample updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionSample {
    pub s: usize,
    pub a: usize,
    pub s_next: usize,
    pub g: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub goal: usize,
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Trajectory {
    /// Number of transitions `T`.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn transition(&self, t: usize) -> TransitionSample {
        TransitionSample {
            s: self.states[t],
            a: self.actions[t],
            s_next: self.states[t + 1],
            g: self.goal,
        }
    }
}

/// Samples a trajectory of `horizon` transitions.
///
/// Draw order: goal, start state, then per step the action followed by the
/// next state; exactly `2 + 2 * horizon` uniform draws.
pub fn sample_trajectory(
    mdp: &FiniteMultiGoalMdp,
    policy: &TabularPolicy,
    horizon: usize,
    rng: &mut Pcg32,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(invalid_param("horizon", "must be at least 1"));
    }
    mdp.check_policy(policy)?;
    let goal = rng.categorical(mdp.goal_dist());
    let mut s = rng.categorical(mdp.init_row(goal));
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    states.push(s);
    for _ in 0..horizon {
        let a = rng.categorical(policy.row(s, goal));
        s = rng.categorical(mdp.transition_row(s, a));
        actions.push(a);
        states.push(s);
    }
    Ok(Trajectory { goal, states, actions })
}

/// Per-goal stochastic matrices `P^π[g][s][s'] = Σ_a π(a|s,g) P(s'|s,a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyKernel {
    n_goals: usize,
    n_states: usize,
    data: Vec<f64>,
}

impl PolicyKernel {
    pub fn n_goals(&self) -> usize {
        self.n_goals
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Row-major `S × S` matrix for goal `g`.
    pub fn matrix(&self, g: usize) -> &[f64] {
        let n = self.n_states;
        &self.data[g * n * n..(g + 1) * n * n]
    }

    pub fn row(&self, g: usize, s: usize) -> &[f64] {
        let n = self.n_states;
        &self.matrix(g)[s * n..(s + 1) * n]
    }

    /// `(P^π_g)^k` by repeated multiplication.
    pub fn power(&self, g: usize, k: usize) -> Vec<f64> {
        let n = self.n_states;
        let mut acc: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
        let m = self.matrix(g);
        for _ in 0..k {
            acc = matmul(&acc, m, n);
        }
        acc
    }
}

pub(crate) fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn policy_transition_kernel(mdp: &FiniteMultiGoalMdp, policy: &TabularPolicy) -> Result<PolicyKernel> {
    mdp.check_policy(policy)?;
    let (ns, ng) = (mdp.n_states(), mdp.n_goals());
    let mut data = vec![0.0; ng * ns * ns];
    for g in 0..ng {
        for s in 0..ns {
            let out = &mut data[(g * ns + s) * ns..(g * ns + s + 1) * ns];
            for (a, &pa) in policy.row(s, g).iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for (o, &p) in out.iter_mut().zip(mdp.transition_row(s, a)) {
                    *o += pa * p;
                }
            }
        }
    }
    Ok(PolicyKernel {
        n_goals: ng,
        n_states: ns,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make_random_mdp;

    fn chain3() -> FiniteMultiGoalMdp {
        // 0 -> 1 -> 2 -> 2 under both actions, with action 1 staying put.
        let t = vec![
            0.0, 1.0, 0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 0.0, 1.0,
        ];
        FiniteMultiGoalMdp::with_identity_goals(3, 2, t, 0.9).unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        let mut parts = chain3().into_parts();
        parts.transition[0] = 0.5;
        assert!(matches!(
            FiniteMultiGoalMdp::from_parts(parts),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_goal_and_discount() {
        let mut parts = chain3().into_parts();
        parts.goal_map[1] = 7;
        assert!(FiniteMultiGoalMdp::from_parts(parts).is_err());
        assert!(chain3().with_discount(1.0).is_err());
    }

    #[test]
    fn records_surjectivity() {
        let mut parts = chain3().into_parts();
        assert!(FiniteMultiGoalMdp::from_parts(parts.clone())
            .unwrap()
            .is_goal_map_surjective());
        parts.goal_map = vec![0, 0, 1];
        assert!(!FiniteMultiGoalMdp::from_parts(parts).unwrap().is_goal_map_surjective());
    }

    #[test]
    fn single_absorbing_state_trajectory() {
        let mdp = FiniteMultiGoalMdp::with_identity_goals(1, 2, vec![1.0, 1.0], 0.5).unwrap();
        let pi = TabularPolicy::uniform(1, 1, 2);
        let traj = sample_trajectory(&mdp, &pi, 20, &mut Pcg32::new(0)).unwrap();
        assert!(traj.states.iter().all(|&s| s == 0));
        assert_eq!(traj.actions.len(), traj.states.len() - 1);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let mdp = chain3();
        let pi = TabularPolicy::uniform(3, 3, 2);
        let a = sample_trajectory(&mdp, &pi, 50, &mut Pcg32::new(42)).unwrap();
        let b = sample_trajectory(&mdp, &pi, 50, &mut Pcg32::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectory_consumes_documented_draw_count() {
        let mdp = chain3();
        let pi = TabularPolicy::uniform(3, 3, 2);
        let horizon = 17;
        let mut used = Pcg32::new(8);
        sample_trajectory(&mdp, &pi, horizon, &mut used).unwrap();
        let mut manual = Pcg32::new(8);
        for _ in 0..2 + 2 * horizon {
            manual.next_u64();
        }
        assert_eq!(used, manual);
    }

    #[test]
    fn empirical_transition_frequency() {
        // State 0 moves to 1 w.p. 0.3 under action 0; state 1 is reset to 0.
        let t = vec![0.7, 0.3, 0.7, 0.3, 1.0, 0.0, 1.0, 0.0];
        let mut parts = FiniteMultiGoalMdp::with_identity_goals(2, 2, t, 0.9)
            .unwrap()
            .into_parts();
        parts.init_dist = vec![1.0, 0.0, 1.0, 0.0];
        let mdp = FiniteMultiGoalMdp::from_parts(parts).unwrap();
        let pi = TabularPolicy::uniform(2, 2, 2);
        let mut rng = Pcg32::new(1);
        let (mut from0, mut to1) = (0usize, 0usize);
        for _ in 0..100_000 {
            let traj = sample_trajectory(&mdp, &pi, 1, &mut rng).unwrap();
            from0 += 1;
            to1 += (traj.states[1] == 1) as usize;
        }
        let freq = to1 as f64 / from0 as f64;
        assert!((0.29..=0.31).contains(&freq), "{freq}");
    }

    #[test]
    fn kernel_is_the_policy_mixture() {
        let mdp = chain3();
        let greedy0 = TabularPolicy::deterministic(3, 3, 2, |_, _| 0);
        let k = policy_transition_kernel(&mdp, &greedy0).unwrap();
        for g in 0..3 {
            for s in 0..3 {
                assert_eq!(k.row(g, s), mdp.transition_row(s, 0));
            }
        }
        let uniform = TabularPolicy::uniform(3, 3, 2);
        let k = policy_transition_kernel(&mdp, &uniform).unwrap();
        for s in 0..3 {
            for next in 0..3 {
                let avg = 0.5 * (mdp.p(s, 0, next) + mdp.p(s, 1, next));
                assert!((k.row(0, s)[next] - avg).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kernel_rows_are_stochastic_on_random_instances() {
        let mut rng = Pcg32::new(4);
        for _ in 0..20 {
            let mdp = make_random_mdp(5, 3, 3, 0.9, &mut rng).unwrap();
            let pi = TabularPolicy::random(5, 5, 3, &mut rng);
            let k = policy_transition_kernel(&mdp, &pi).unwrap();
            for g in 0..5 {
                for s in 0..5 {
                    assert!((k.row(g, s).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kernel_power_matches_repeated_application() {
        let mut rng = Pcg32::new(12);
        let mdp = make_random_mdp(4, 2, 2, 0.9, &mut rng).unwrap();
        let pi = TabularPolicy::random(4, 4, 2, &mut rng);
        let k = policy_transition_kernel(&mdp, &pi).unwrap();
        let p3 = k.power(1, 3);
        // Propagate each unit vector three times, one step at a time.
        for s0 in 0..4 {
            let mut dist = vec![0.0; 4];
            dist[s0] = 1.0;
            for _ in 0..3 {
                let mut next = vec![0.0; 4];
                for (s, &w) in dist.iter().enumerate() {
                    for (n, &p) in k.row(1, s).iter().enumerate() {
                        next[n] += w * p;
                    }
                }
                dist = next;
            }
            for n in 0..4 {
                assert!((p3[s0 * 4 + n] - dist[n]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mdp = chain3();
        let pi = TabularPolicy::uniform(2, 3, 2);
        assert!(matches!(
            sample_trajectory(&mdp, &pi, 3, &mut Pcg32::new(0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::envs::make_random_mdp;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn random_models_validate_and_perturbations_fail(
            seed in 0u64..10_000, s in 1usize..6, a in 1usize..4, row in 0usize..100, bump in 1e-9f64..0.5,
        ) {
            let mut rng = Pcg32::new(seed);
            let branching = 1 + (seed as usize % s);
            let mdp = make_random_mdp(s, a, branching, 0.9, &mut rng).unwrap();
            let mut parts = mdp.into_parts();
            prop_assert!(FiniteMultiGoalMdp::from_parts(parts.clone()).is_ok());
            let r = row % (s * a);
            parts.transition[r * s] += bump;
            prop_assert!(FiniteMultiGoalMdp::from_parts(parts).is_err());
        }
    }
}
