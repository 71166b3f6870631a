use alloc::vec;
use alloc::vec::Vec;

use super::linalg::vec_mat;
use crate::error::{check_dim, Result};
use crate::mdp::{policy_transition_kernel, FiniteMultiGoalMdp};
use crate::policy::TabularPolicy;
use crate::tables::{GoalDensityTable, TabularQ};

/// Uniform `ρ_SA` laid out as `[s][a]`.
pub fn uniform_state_action(mdp: &FiniteMultiGoalMdp) -> Vec<f64> {
    let n = mdp.n_states() * mdp.n_actions();
    vec![1.0 / n as f64; n]
}

/// Uniform `ρ_SG` laid out as `[s][g]`.
pub fn uniform_state_goal(mdp: &FiniteMultiGoalMdp) -> Vec<f64> {
    let n = mdp.n_states() * mdp.n_goals();
    vec![1.0 / n as f64; n]
}

fn bootstrap(mdp: &FiniteMultiGoalMdp, q_tar: &TabularQ, s: usize, a: usize, g: usize) -> f64 {
    mdp.transition_row(s, a)
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(next, &p)| p * q_tar.max_value(next, g))
        .sum()
}

/// Mean δ-DQN direction with `(s,a) ∼ ρ_SA`, `s' ∼ P` and an independent `g ∼ ρ_G`:
/// `ρ_SA(s,a) [1{g=φ(s)} + ρ_G(g) (γ E max q_tar(s',·,g) − q_θ(s,a,g))]`.
pub fn expected_update_delta_dqn(
    mdp: &FiniteMultiGoalMdp,
    q_theta: &TabularQ,
    q_tar: &TabularQ,
    rho_sa: &[f64],
) -> Result<TabularQ> {
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    check_dim("rho_sa", ns * na, rho_sa.len())?;
    let gamma = mdp.discount();
    Ok(TabularQ::from_fn(ns, na, ng, |s, a, g| {
        let w = rho_sa[s * na + a];
        let dirac = if mdp.phi(s) == g { 1.0 } else { 0.0 };
        let td = gamma * bootstrap(mdp, q_tar, s, a, g) - q_theta.get(s, a, g);
        w * (dirac + mdp.goal_prob(g) * td)
    }))
}

/// Mean UVFA direction for a finite reward `reward(s, g)`:
/// `ρ_SA(s,a) ρ_G(g) (R(s,g) + γ E max Q_tar(s',·,g) − Q_θ(s,a,g))`.
pub fn expected_update_uvfa(
    mdp: &FiniteMultiGoalMdp,
    q_theta: &TabularQ,
    q_tar: &TabularQ,
    rho_sa: &[f64],
    reward: impl Fn(usize, usize) -> f64,
) -> Result<TabularQ> {
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    check_dim("rho_sa", ns * na, rho_sa.len())?;
    let gamma = mdp.discount();
    Ok(TabularQ::from_fn(ns, na, ng, |s, a, g| {
        let td = reward(s, g) + gamma * bootstrap(mdp, q_tar, s, a, g) - q_theta.get(s, a, g);
        rho_sa[s * na + a] * mdp.goal_prob(g) * td
    }))
}

/// Mean δ-TD(n) direction with `(s_0, g) ∼ ρ_SG`, `n` on-policy steps and an
/// independent `x ∼ ρ_G`. Coordinate `(s_0, g, x)` is
/// `ρ_SG(s_0,g) [Σ_{l<n} γ^l Pr(φ(s_l)=x) + ρ_G(x)(γ^n E m_tar(s_n,g,x) − m_θ(s_0,g,x))]`.
pub fn expected_update_delta_td(
    mdp: &FiniteMultiGoalMdp,
    policy: &TabularPolicy,
    m_theta: &GoalDensityTable,
    m_tar: &GoalDensityTable,
    rho_sg: &[f64],
    n: usize,
) -> Result<GoalDensityTable> {
    let (ns, ng) = (mdp.n_states(), mdp.n_goals());
    check_dim("rho_sg", ns * ng, rho_sg.len())?;
    if n == 0 {
        return Err(crate::error::invalid_param("n", "horizon must be at least 1"));
    }
    let kernel = policy_transition_kernel(mdp, policy)?;
    let gamma = mdp.discount();
    let mut out = GoalDensityTable::for_mdp(mdp);
    for g in 0..ng {
        let p = kernel.matrix(g);
        for s0 in 0..ns {
            let w = rho_sg[s0 * ng + g];
            let mut dist = vec![0.0; ns];
            dist[s0] = 1.0;
            let mut hits = vec![0.0; ng];
            let mut disc = 1.0;
            for _ in 0..n {
                for (s, &d) in dist.iter().enumerate() {
                    hits[mdp.phi(s)] += disc * d;
                }
                dist = vec_mat(&dist, p, ns);
                disc *= gamma;
            }
            for x in 0..ng {
                let boot: f64 = dist.iter().enumerate().map(|(s, &d)| d * m_tar.get(s, g, x)).sum();
                let td = disc * boot - m_theta.get(s0, g, x);
                *out.get_mut(s0, g, x) = w * (hits[x] + mdp.goal_prob(x) * td);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make_random_mdp;
    use crate::oracle::{bellman_policy_density, solve_m_pi, solve_q_star};
    use crate::rng::Pcg32;
    use crate::tables::sup_norm;

    /// `J'(q) = ½ Σ ρ_SA ρ_G q² − Σ ρ_SA [q(s,a,φ(s)) + Σ_g ρ_G q (γ E max q_tar)]`;
    /// the δ-DQN mean direction is `−∂J'`.
    fn objective(mdp: &FiniteMultiGoalMdp, q: &TabularQ, q_tar: &TabularQ, rho: &[f64]) -> f64 {
        let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
        let mut total = 0.0;
        for s in 0..ns {
            for a in 0..na {
                let w = rho[s * na + a];
                total -= w * q.get(s, a, mdp.phi(s));
                for g in 0..ng {
                    let target: f64 = (0..ns)
                        .map(|next| mdp.p(s, a, next) * q_tar.max_value(next, g))
                        .sum::<f64>()
                        * mdp.discount();
                    let v = q.get(s, a, g);
                    total += w * mdp.goal_prob(g) * (0.5 * v * v - v * target);
                }
            }
        }
        total
    }

    fn random_q(mdp: &FiniteMultiGoalMdp, rng: &mut Pcg32) -> TabularQ {
        TabularQ::from_fn(mdp.n_states(), mdp.n_actions(), mdp.n_goals(), |_, _, _| {
            4.0 * rng.next_f64()
        })
    }

    #[test]
    fn vanishes_at_the_density_fixed_point() {
        let mut rng = Pcg32::new(31);
        let mdp = make_random_mdp(5, 3, 2, 0.9, &mut rng).unwrap();
        let q = solve_q_star(&mdp, 1e-13, 10_000).unwrap();
        let rho = uniform_state_action(&mdp);
        let upd = expected_update_delta_dqn(&mdp, &q, &q, &rho).unwrap();
        assert!(sup_norm(upd.values()) < 1e-10);
    }

    #[test]
    fn only_the_dirac_term_at_zero() {
        let mdp = make_random_mdp(3, 2, 2, 0.7, &mut Pcg32::new(1)).unwrap();
        let zero = TabularQ::for_mdp(&mdp);
        let rho: Vec<f64> = (1..=6).map(|i| i as f64 / 21.0).collect();
        let upd = expected_update_delta_dqn(&mdp, &zero, &zero, &rho).unwrap();
        for s in 0..3 {
            for a in 0..2 {
                for g in 0..3 {
                    let expect = if g == s { rho[s * 2 + a] } else { 0.0 };
                    assert_eq!(upd.get(s, a, g), expect);
                }
            }
        }
    }

    #[test]
    fn is_minus_the_gradient_of_the_quadratic_objective() {
        let mut rng = Pcg32::new(2);
        let mdp = make_random_mdp(4, 2, 3, 0.9, &mut rng).unwrap();
        let (q, q_tar) = (random_q(&mdp, &mut rng), random_q(&mdp, &mut rng));
        let rho = uniform_state_action(&mdp);
        let upd = expected_update_delta_dqn(&mdp, &q, &q_tar, &rho).unwrap();
        let h = 1e-5;
        for i in 0..q.values().len() {
            let (mut up, mut down) = (q.clone(), q.clone());
            up.values_mut()[i] += h;
            down.values_mut()[i] -= h;
            let fd = -(objective(&mdp, &up, &q_tar, &rho) - objective(&mdp, &down, &q_tar, &rho)) / (2.0 * h);
            assert!((fd - upd.values()[i]).abs() < 1e-8, "coordinate {i}");
        }
    }

    #[test]
    fn uvfa_matches_delta_dqn_under_the_density_reward() {
        let mut rng = Pcg32::new(4);
        let mdp = make_random_mdp(4, 3, 2, 0.8, &mut rng).unwrap();
        let (q, q_tar) = (random_q(&mdp, &mut rng), random_q(&mdp, &mut rng));
        let rho = uniform_state_action(&mdp);
        let dqn = expected_update_delta_dqn(&mdp, &q, &q_tar, &rho).unwrap();
        let uvfa = expected_update_uvfa(&mdp, &q, &q_tar, &rho, |s, g| mdp.dirac_density(s, g)).unwrap();
        assert!(dqn.sup_distance(&uvfa) < 1e-12);

        let q_raw = solve_q_star(&mdp, 1e-13, 10_000).unwrap().to_raw(&mdp);
        let upd = expected_update_uvfa(&mdp, &q_raw, &q_raw, &rho, |s, g| mdp.reward(s, g)).unwrap();
        assert!(sup_norm(upd.values()) < 1e-10);
    }

    #[test]
    fn uvfa_without_discount_regresses_on_the_reward() {
        let mut rng = Pcg32::new(9);
        let mdp = make_random_mdp(3, 2, 2, 0.0, &mut rng).unwrap();
        let q = random_q(&mdp, &mut rng);
        let rho = uniform_state_action(&mdp);
        let upd = expected_update_uvfa(&mdp, &q, &q, &rho, |s, g| mdp.reward(s, g)).unwrap();
        for s in 0..3 {
            for a in 0..2 {
                for g in 0..3 {
                    let expect = rho[s * 2 + a] * mdp.goal_prob(g) * (mdp.reward(s, g) - q.get(s, a, g));
                    assert!((upd.get(s, a, g) - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn td_vanishes_at_m_pi() {
        let mut rng = Pcg32::new(12);
        let mdp = make_random_mdp(5, 2, 3, 0.9, &mut rng).unwrap();
        let pi = TabularPolicy::random(5, 5, 2, &mut rng);
        let m = solve_m_pi(&mdp, &pi).unwrap();
        let rho = uniform_state_goal(&mdp);
        for n in 1..=3 {
            let upd = expected_update_delta_td(&mdp, &pi, &m, &m, &rho, n).unwrap();
            assert!(sup_norm(upd.values()) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn td_without_discount() {
        let mdp = make_random_mdp(3, 2, 2, 0.0, &mut Pcg32::new(3)).unwrap();
        let pi = TabularPolicy::uniform(3, 3, 2);
        let zero = GoalDensityTable::for_mdp(&mdp);
        let rho = uniform_state_goal(&mdp);
        let upd = expected_update_delta_td(&mdp, &pi, &zero, &zero, &rho, 1).unwrap();
        for s in 0..3 {
            for g in 0..3 {
                for x in 0..3 {
                    assert_eq!(upd.get(s, g, x), if x == s { rho[s * 3 + g] } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn n_steps_compose_the_policy_operator() {
        let mut rng = Pcg32::new(27);
        let mdp = make_random_mdp(4, 2, 3, 0.85, &mut rng).unwrap();
        let pi = TabularPolicy::random(4, 4, 2, &mut rng);
        let kernel = policy_transition_kernel(&mdp, &pi).unwrap();
        let m_theta = GoalDensityTable::from_fn(4, 4, |_, _, _| 3.0 * rng.next_f64());
        let m_tar = GoalDensityTable::from_fn(4, 4, |_, _, _| 3.0 * rng.next_f64());
        let rho = uniform_state_goal(&mdp);
        let mut composed = m_tar.clone();
        for n in 1..=3 {
            let lhs = expected_update_delta_td(&mdp, &pi, &m_theta, &m_tar, &rho, n).unwrap();
            let rhs = expected_update_delta_td(&mdp, &pi, &m_theta, &composed, &rho, 1).unwrap();
            assert!(lhs.sup_distance(&rhs) < 1e-12, "n = {n}");
            composed = bellman_policy_density(&mdp, &kernel, &composed);
        }
    }
}
