use alloc::vec;
use alloc::vec::Vec;

use super::linalg::solve_resolvent;
use crate::error::{invalid_param, Error, Result};
use crate::mdp::{policy_transition_kernel, FiniteMultiGoalMdp, PolicyKernel};
use crate::policy::TabularPolicy;
use crate::tables::{GoalDensityTable, TabularQ};

/// One application of the optimal backup on densities:
/// `q(s,a,g) ← 1{φ(s)=g}/ρ_G(g) + γ Σ_{s'} P(s'|s,a) max_{a'} q(s',a',g)`.
pub fn bellman_optimal_density(mdp: &FiniteMultiGoalMdp, q: &TabularQ) -> TabularQ {
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    let gamma = mdp.discount();
    let vmax: Vec<f64> = (0..ns * ng).map(|i| q.max_value(i / ng, i % ng)).collect();
    TabularQ::from_fn(ns, na, ng, |s, a, g| {
        let boot: f64 = mdp
            .transition_row(s, a)
            .iter()
            .enumerate()
            .map(|(next, &p)| p * vmax[next * ng + g])
            .sum();
        mdp.dirac_density(s, g) + gamma * boot
    })
}

/// Density of the optimal goal measure by value iteration from zero.
///
/// The iterates increase monotonically to the smallest fixed point; a
/// decrease beyond rounding is reported as [`Error::NonMonotone`].
pub fn solve_q_star(mdp: &FiniteMultiGoalMdp, tol: f64, max_iter: usize) -> Result<TabularQ> {
    if !(tol > 0.0) {
        return Err(invalid_param("tol", "must be positive"));
    }
    let mut q = TabularQ::for_mdp(mdp);
    let mut residual = f64::INFINITY;
    for sweep in 0..max_iter {
        let next = bellman_optimal_density(mdp, &q);
        residual = 0.0;
        for (new, old) in next.values().iter().zip(q.values()) {
            if *new < *old - 1e-12 * (1.0 + old.abs()) {
                return Err(Error::NonMonotone {
                    method: "solve_q_star",
                    sweep,
                });
            }
            residual = residual.max((new - old).abs());
        }
        q = next;
        if residual < tol {
            return Ok(q);
        }
    }
    Err(Error::NoConvergence {
        method: "solve_q_star",
        iterations: max_iter,
        residual,
    })
}

/// `(T^π m)(s,g,x) = 1{φ(s)=x}/ρ_G(x) + γ Σ_{s'} P^π_g(s,s') m(s',g,x)`.
pub fn bellman_policy_density(
    mdp: &FiniteMultiGoalMdp,
    kernel: &PolicyKernel,
    m: &GoalDensityTable,
) -> GoalDensityTable {
    let (ns, ng) = (mdp.n_states(), mdp.n_goals());
    let gamma = mdp.discount();
    GoalDensityTable::from_fn(ns, ng, |s, g, x| {
        let boot: f64 = kernel
            .row(g, s)
            .iter()
            .enumerate()
            .map(|(next, &p)| p * m.get(next, g, x))
            .sum();
        mdp.dirac_density(s, x) + gamma * boot
    })
}

/// Successor goal density `m^π`, one linear solve `(I − γP^π_g) M = D` per goal.
pub fn solve_m_pi(mdp: &FiniteMultiGoalMdp, policy: &TabularPolicy) -> Result<GoalDensityTable> {
    let kernel = policy_transition_kernel(mdp, policy)?;
    let (ns, ng) = (mdp.n_states(), mdp.n_goals());
    let rhs: Vec<f64> = (0..ns * ng).map(|i| mdp.dirac_density(i / ng, i % ng)).collect();
    let mut m = GoalDensityTable::for_mdp(mdp);
    for g in 0..ng {
        let x = solve_resolvent(kernel.matrix(g), ns, mdp.discount(), &rhs, ng, g)?;
        for s in 0..ns {
            for gx in 0..ng {
                *m.get_mut(s, g, gx) = x[s * ng + gx];
            }
        }
    }
    Ok(m)
}

/// Discounted visitation `ν[g][s0][s] = (1−β) Σ_k β^k (P^π_g)^k(s0, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Visitation {
    n_goals: usize,
    n_states: usize,
    data: Vec<f64>,
}

impl Visitation {
    pub fn n_goals(&self) -> usize {
        self.n_goals
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn row(&self, g: usize, s0: usize) -> &[f64] {
        let n = self.n_states;
        &self.data[(g * n + s0) * n..(g * n + s0 + 1) * n]
    }

    pub fn get(&self, g: usize, s0: usize, s: usize) -> f64 {
        self.row(g, s0)[s]
    }

    /// Visitation from the goal's initial distribution, `Σ_{s0} ρ_0(s0|g) ν[g][s0][s]`.
    pub fn from_init(&self, mdp: &FiniteMultiGoalMdp, g: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states];
        for (s0, &p0) in mdp.init_row(g).iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(self.row(g, s0)) {
                *o += p0 * v;
            }
        }
        out
    }
}

pub fn solve_nu_pi(mdp: &FiniteMultiGoalMdp, policy: &TabularPolicy, beta: f64) -> Result<Visitation> {
    if !(0.0..1.0).contains(&beta) {
        return Err(invalid_param("pk_gamma", "must lie in [0, 1)"));
    }
    let kernel = policy_transition_kernel(mdp, policy)?;
    visitation_from_kernel(&kernel, beta)
}

pub(crate) fn visitation_from_kernel(kernel: &PolicyKernel, beta: f64) -> Result<Visitation> {
    let (ns, ng) = (kernel.n_states(), kernel.n_goals());
    let identity: Vec<f64> = (0..ns * ns)
        .map(|i| if i / ns == i % ns { 1.0 - beta } else { 0.0 })
        .collect();
    let mut data = Vec::with_capacity(ng * ns * ns);
    for g in 0..ng {
        data.extend(solve_resolvent(kernel.matrix(g), ns, beta, &identity, ns, g)?);
    }
    Ok(Visitation {
        n_goals: ng,
        n_states: ns,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{augment_with_freeze, make_random_mdp, FreezeSpec};
    use crate::rng::Pcg32;

    #[test]
    fn zero_discount_is_the_dirac_density() {
        let mdp = make_random_mdp(4, 2, 2, 0.0, &mut Pcg32::new(1)).unwrap();
        let q = solve_q_star(&mdp, 1e-12, 10).unwrap();
        for s in 0..4 {
            for a in 0..2 {
                for g in 0..4 {
                    assert_eq!(q.get(s, a, g), if s == g { 4.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn freeze_values() {
        let base = make_random_mdp(5, 2, 3, 0.9, &mut Pcg32::new(4)).unwrap();
        let spec = FreezeSpec::new(&base).unwrap();
        let q = solve_q_star(spec.mdp(), 1e-13, 10_000).unwrap().to_raw(spec.mdp());
        for s in 0..5 {
            for g in 0..5 {
                let frozen = spec.state(s, true);
                let expect = if s == g { 10.0 } else { 0.0 };
                assert!((q.get(frozen, 0, g) - expect).abs() < 1e-9);
                let r = if s == g { 1.0 } else { 0.0 };
                assert!((q.get(s, spec.freeze_action(), g) - r - 1.8).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn q_star_is_a_fixed_point() {
        let mdp = make_random_mdp(6, 3, 3, 0.9, &mut Pcg32::new(8)).unwrap();
        let q = solve_q_star(&mdp, 1e-13, 10_000).unwrap();
        assert!(bellman_optimal_density(&mdp, &q).sup_distance(&q) < 1e-12);
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let mdp = make_random_mdp(3, 2, 2, 0.9, &mut Pcg32::new(8)).unwrap();
        assert!(matches!(
            solve_q_star(&mdp, 1e-13, 3),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn m_pi_examples() {
        let mdp = make_random_mdp(4, 2, 2, 0.0, &mut Pcg32::new(2)).unwrap();
        let m = solve_m_pi(&mdp, &TabularPolicy::uniform(4, 4, 2)).unwrap();
        for s in 0..4 {
            for g in 0..4 {
                for x in 0..4 {
                    assert!((m.get(s, g, x) - if s == x { 4.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
        let single = FiniteMultiGoalMdp::with_identity_goals(1, 1, vec![1.0], 0.5).unwrap();
        let m = solve_m_pi(&single, &TabularPolicy::uniform(1, 1, 1)).unwrap();
        assert!((m.get(0, 0, 0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn m_pi_mass_and_fixed_point() {
        let mut rng = Pcg32::new(13);
        let mdp = make_random_mdp(5, 3, 3, 0.9, &mut rng).unwrap();
        let pi = TabularPolicy::random(5, 5, 3, &mut rng);
        let m = solve_m_pi(&mdp, &pi).unwrap();
        for s in 0..5 {
            for g in 0..5 {
                let mass: f64 = (0..5).map(|x| m.get(s, g, x)).sum::<f64>() / 5.0;
                assert!((mass - 10.0).abs() < 1e-9);
            }
        }
        let kernel = policy_transition_kernel(&mdp, &pi).unwrap();
        assert!(bellman_policy_density(&mdp, &kernel, &m).sup_distance(&m) < 1e-12);
    }

    #[test]
    fn visitation_examples() {
        let swap = FiniteMultiGoalMdp::with_identity_goals(2, 1, vec![0.0, 1.0, 1.0, 0.0], 0.9).unwrap();
        let nu = solve_nu_pi(&swap, &TabularPolicy::uniform(2, 2, 1), 0.5).unwrap();
        assert!((nu.get(0, 0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((nu.get(0, 0, 1) - 1.0 / 3.0).abs() < 1e-12);

        let mdp = make_random_mdp(4, 2, 3, 0.9, &mut Pcg32::new(5)).unwrap();
        let pi = TabularPolicy::uniform(4, 4, 2);
        let nu = solve_nu_pi(&mdp, &pi, 1e-12).unwrap();
        for s0 in 0..4 {
            assert!((nu.get(1, s0, s0) - 1.0).abs() < 1e-10);
        }
        let nu = solve_nu_pi(&mdp, &pi, 0.8).unwrap();
        for g in 0..4 {
            for s0 in 0..4 {
                assert!((nu.row(g, s0).iter().sum::<f64>() - 1.0).abs() < 1e-10);
                assert!(nu.row(g, s0).iter().all(|&p| p >= -1e-15));
            }
        }
    }

    #[test]
    fn visitation_at_a_self_loop() {
        let base = make_random_mdp(3, 2, 2, 0.9, &mut Pcg32::new(5)).unwrap();
        let mdp = augment_with_freeze(&base).unwrap();
        let nu = solve_nu_pi(&mdp, &TabularPolicy::uniform(6, 3, 3), 0.9).unwrap();
        assert!((nu.get(0, 4, 4) - 1.0).abs() < 1e-12);
    }
}
