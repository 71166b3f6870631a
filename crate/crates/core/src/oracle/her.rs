use alloc::vec;
use alloc::vec::Vec;

use super::linalg::vec_mat;
use crate::error::{invalid_param, Error, Result};
use crate::mdp::{matmul, policy_transition_kernel, FiniteMultiGoalMdp};
use crate::policy::TabularPolicy;
use crate::tables::TabularQ;

/// Largest geometric tail mass tolerated when truncating `p_K` and `p_L`.
pub const TRUNCATION_TAIL: f64 = 1e-10;

/// HER relabelling parameters.
///
/// With probability `alpha` the goal is replaced by `φ(s_{K+L})`.
/// `p_K(k) ∝ pk_gamma^k` and `p_L(l) ∝ pl_gamma^l` are truncated at
/// `truncation` (each index separately) and renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct HerConfig {
    pub alpha: f64,
    pub pk_gamma: f64,
    pub pl_gamma: f64,
    pub truncation: usize,
    pub exploration: TabularPolicy,
}

impl HerConfig {
    /// Truncation is set to the shortest one meeting [`TRUNCATION_TAIL`].
    pub fn new(exploration: TabularPolicy, alpha: f64, pk_gamma: f64, pl_gamma: f64) -> Self {
        HerConfig {
            alpha,
            pk_gamma,
            pl_gamma,
            truncation: required_truncation(pk_gamma.max(pl_gamma)),
            exploration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid_param("alpha", "must lie in [0, 1]"));
        }
        for (name, r) in [("pk_gamma", self.pk_gamma), ("pl_gamma", self.pl_gamma)] {
            if !(0.0..1.0).contains(&r) {
                return Err(invalid_param(name, "must lie in [0, 1)"));
            }
            let tail = libm::pow(r, (self.truncation + 1) as f64);
            if tail >= TRUNCATION_TAIL {
                return Err(Error::TruncationTooShort {
                    given: self.truncation,
                    required: required_truncation(r),
                    tail,
                });
            }
        }
        Ok(())
    }

    pub fn p_k(&self) -> Vec<f64> {
        truncated_geometric(self.pk_gamma, self.truncation)
    }

    pub fn p_l(&self) -> Vec<f64> {
        truncated_geometric(self.pl_gamma, self.truncation)
    }
}

/// Smallest `n` with `ratio^(n+1) < TRUNCATION_TAIL`.
pub fn required_truncation(ratio: f64) -> usize {
    if ratio <= 0.0 {
        return 0;
    }
    let mut n = (libm::log(TRUNCATION_TAIL) / libm::log(ratio)) as usize;
    while n > 0 && libm::pow(ratio, n as f64) < TRUNCATION_TAIL {
        n -= 1;
    }
    while libm::pow(ratio, (n + 1) as f64) >= TRUNCATION_TAIL {
        n += 1;
    }
    n
}

/// `(1−r) r^k` for `k = 0..=n`, renormalized to sum to one.
pub fn truncated_geometric(ratio: f64, n: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(n + 1);
    let mut w = 1.0 - ratio;
    for _ in 0..=n {
        pmf.push(w);
        w *= ratio;
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    pmf
}

/// Exact law of the relabelled transition `(s, a, s', g)` drawn by HER.
#[derive(Clone, Debug, PartialEq)]
pub struct HerDistribution {
    n_states: usize,
    n_actions: usize,
    n_goals: usize,
    mu: Vec<f64>,
    mu_tilde: Option<Vec<f64>>,
    nu: Vec<f64>,
}

impl HerDistribution {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_goals(&self) -> usize {
        self.n_goals
    }

    /// `μ_HER(s, a, s', g)`.
    pub fn mu(&self, s: usize, a: usize, next: usize, g: usize) -> f64 {
        self.mu[((s * self.n_actions + a) * self.n_states + next) * self.n_goals + g]
    }

    pub fn mu_table(&self) -> &[f64] {
        &self.mu
    }

    /// `μ_HER(s, a, g) = Σ_{s'} μ_HER(s, a, s', g)`.
    pub fn marginal(&self, s: usize, a: usize, g: usize) -> f64 {
        (0..self.n_states).map(|next| self.mu(s, a, next, g)).sum()
    }

    /// Factor `μ̃(s, a, g)` with `μ = μ̃ · P`, present when the model is deterministic.
    pub fn mu_tilde(&self, s: usize, a: usize, g: usize) -> Option<f64> {
        self.mu_tilde
            .as_ref()
            .map(|t| t[(s * self.n_actions + a) * self.n_goals + g])
    }

    /// Distribution of `s_K` given the original goal, as a probability over states.
    pub fn nu(&self, g: usize, s: usize) -> f64 {
        self.nu[g * self.n_states + s]
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }
}

/// Assembles `μ_HER` by summing the truncated geometric series for the
/// visitation of `s_K` and for the relabelled goal `φ(s_{K+L})`.
pub fn her_distribution(mdp: &FiniteMultiGoalMdp, cfg: &HerConfig) -> Result<HerDistribution> {
    cfg.validate()?;
    let kernel = policy_transition_kernel(mdp, &cfg.exploration)?;
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    let (p_k, p_l) = (cfg.p_k(), cfg.p_l());
    let pi = &cfg.exploration;

    let mut nu = vec![0.0; ng * ns];
    // future[g̃][s'][g] = Σ_{l≥1} p_L(l) Pr(φ(s_{K+l}) = g | s_{K+1} = s')
    let mut future = vec![0.0; ng * ns * ng];
    for gt in 0..ng {
        let p = kernel.matrix(gt);
        let mut dist = mdp.init_row(gt).to_vec();
        for &w in &p_k {
            for (acc, d) in nu[gt * ns..(gt + 1) * ns].iter_mut().zip(&dist) {
                *acc += w * d;
            }
            dist = vec_mat(&dist, p, ns);
        }
        let mut power: Vec<f64> = (0..ns * ns).map(|i| if i / ns == i % ns { 1.0 } else { 0.0 }).collect();
        for &w in &p_l[1..] {
            for from in 0..ns {
                for to in 0..ns {
                    future[(gt * ns + from) * ng + mdp.phi(to)] += w * power[from * ns + to];
                }
            }
            power = matmul(&power, p, ns);
        }
    }

    let alpha = cfg.alpha;
    let mut mu = vec![0.0; ns * na * ns * ng];
    for s in 0..ns {
        for a in 0..na {
            let row = mdp.transition_row(s, a);
            for (next, &p) in row.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let cell = &mut mu[((s * na + a) * ns + next) * ng..((s * na + a) * ns + next + 1) * ng];
                for gt in 0..ng {
                    let w = mdp.goal_prob(gt) * nu[gt * ns + s] * pi.prob(s, gt, a) * p;
                    if w == 0.0 {
                        continue;
                    }
                    cell[gt] += (1.0 - alpha) * w;
                    cell[mdp.phi(s)] += alpha * w * p_l[0];
                    let fut = &future[(gt * ns + next) * ng..(gt * ns + next + 1) * ng];
                    for (c, &f) in cell.iter_mut().zip(fut) {
                        *c += alpha * w * f;
                    }
                }
            }
        }
    }

    let mu_tilde = mdp.is_deterministic().then(|| {
        (0..ns * na * ng)
            .map(|i| {
                let (sa, g) = (i / ng, i % ng);
                (0..ns).map(|next| mu[(sa * ns + next) * ng + g]).sum()
            })
            .collect()
    });

    Ok(HerDistribution {
        n_states: ns,
        n_actions: na,
        n_goals: ng,
        mu,
        mu_tilde,
        nu,
    })
}

/// Expected HER target
/// `R(s,g) + γ Σ_{s'} μ(s'|s,a,g) max_{a'} Q(s',a',g)` on the raw reward scale.
fn her_backup(mdp: &FiniteMultiGoalMdp, dist: &HerDistribution, mass: &[f64], q: &TabularQ) -> TabularQ {
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    let gamma = mdp.discount();
    let vmax: Vec<f64> = (0..ns * ng).map(|i| q.max_value(i / ng, i % ng)).collect();
    TabularQ::from_fn(ns, na, ng, |s, a, g| {
        let boot: f64 = (0..ns).map(|next| dist.mu(s, a, next, g) * vmax[next * ng + g]).sum();
        mdp.reward(s, g) + gamma * boot / mass[(s * na + a) * ng + g]
    })
}

fn sampling_mass(mdp: &FiniteMultiGoalMdp, dist: &HerDistribution) -> Result<Vec<f64>> {
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    let mut mass = Vec::with_capacity(ns * na * ng);
    for s in 0..ns {
        for a in 0..na {
            for g in 0..ng {
                let m = dist.marginal(s, a, g);
                if !(m > 0.0) {
                    return Err(Error::ZeroSamplingMass {
                        state: s,
                        action: a,
                        goal: g,
                    });
                }
                mass.push(m);
            }
        }
    }
    Ok(mass)
}

/// Fixed point of HER's expected update, raw reward scale.
///
/// Iterates the HER backup from zero. If the sup-norm change grows between
/// sweeps the next step is damped by one half.
pub fn her_fixed_point(
    mdp: &FiniteMultiGoalMdp,
    dist: &HerDistribution,
    tol: f64,
    max_iter: usize,
) -> Result<TabularQ> {
    if !(tol > 0.0) {
        return Err(invalid_param("tol", "must be positive"));
    }
    let mass = sampling_mass(mdp, dist)?;
    let mut q = TabularQ::for_mdp(mdp);
    let mut last = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let target = her_backup(mdp, dist, &mass, &q);
        residual = target.sup_distance(&q);
        if residual < tol {
            return Ok(target);
        }
        if residual > last {
            for (v, t) in q.values_mut().iter_mut().zip(target.values()) {
                *v = 0.5 * *v + 0.5 * t;
            }
        } else {
            q = target;
        }
        last = residual;
    }
    Err(Error::NoConvergence {
        method: "her_fixed_point",
        iterations: max_iter,
        residual,
    })
}

/// `E_μ[(R(s,g) + γ max_{a'} Q_tar(s',a',g) − Q_θ(s,a,g)) e_{s,a,g}]`, the
/// mean ascent direction of HER on the raw reward scale.
pub fn expected_update_her(
    mdp: &FiniteMultiGoalMdp,
    dist: &HerDistribution,
    q_theta: &TabularQ,
    q_tar: &TabularQ,
) -> TabularQ {
    let (ns, na, ng) = (mdp.n_states(), mdp.n_actions(), mdp.n_goals());
    let gamma = mdp.discount();
    TabularQ::from_fn(ns, na, ng, |s, a, g| {
        let base = mdp.reward(s, g) - q_theta.get(s, a, g);
        (0..ns)
            .map(|next| {
                let w = dist.mu(s, a, next, g);
                if w == 0.0 {
                    0.0
                } else {
                    w * (base + gamma * q_tar.max_value(next, g))
                }
            })
            .sum()
    })
}
