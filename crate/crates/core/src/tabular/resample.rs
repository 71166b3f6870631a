use crate::error::{invalid_param, Error, Result};
use crate::mdp::{FiniteMultiGoalMdp, Trajectory, TransitionSample};
use crate::oracle::HerConfig;
use crate::policy::TabularPolicy;
use crate::rng::Pcg32;

/// Redraw budget for `K` and `L` before a trajectory is declared too short.
pub const MAX_REDRAWS: usize = 64;

/// Parameters of the "future" relabelling scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HerSampling {
    /// Probability of replacing the goal (`U = 1`).
    pub alpha: f64,
    /// Ratio of the geometric law of the transition index `K`.
    pub pk_gamma: f64,
    /// Ratio of the geometric law of the look-ahead `L`.
    pub pl_gamma: f64,
}

impl HerSampling {
    pub fn new(alpha: f64, pk_gamma: f64, pl_gamma: f64) -> Self {
        Self {
            alpha,
            pk_gamma,
            pl_gamma,
        }
    }

    /// Plain replay: original goal, `K` geometric.
    pub fn no_relabel(pk_gamma: f64) -> Self {
        Self::new(0.0, pk_gamma, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid_param("alpha", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.pk_gamma) {
            return Err(invalid_param("pk_gamma", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.pl_gamma) {
            return Err(invalid_param("pl_gamma", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// The exact-distribution counterpart, for comparison with the oracle.
    pub fn oracle_config(&self, exploration: TabularPolicy) -> HerConfig {
        HerConfig::new(exploration, self.alpha, self.pk_gamma, self.pl_gamma)
    }
}

/// Draws `U ∼ Bernoulli(α)`, `K ∼ p_K` and, when `U = 1`, `L ∼ p_L`.
///
/// `K ≥ T` and `K + L > T` are redrawn (at most [`MAX_REDRAWS`] times each), so
/// the sample follows the laws conditioned on fitting in the trajectory. The
/// relabelled goal is `φ(s_{K+L})`; `L = 0` gives `φ(s_K)`.
pub fn her_resample(
    mdp: &FiniteMultiGoalMdp,
    traj: &Trajectory,
    cfg: &HerSampling,
    rng: &mut Pcg32,
) -> Result<TransitionSample> {
    let horizon = traj.len();
    let too_short = || Error::TrajectoryTooShort {
        length: horizon,
        attempts: MAX_REDRAWS,
    };
    let relabel = rng.bernoulli(cfg.alpha);
    let k = (0..MAX_REDRAWS)
        .map(|_| rng.geometric(cfg.pk_gamma))
        .find(|&k| k < horizon)
        .ok_or_else(too_short)?;
    let mut sample = traj.transition(k);
    if relabel {
        let l = (0..MAX_REDRAWS)
            .map(|_| rng.geometric(cfg.pl_gamma))
            .find(|&l| l <= horizon - k)
            .ok_or_else(too_short)?;
        sample.g = mdp.phi(traj.states[k + l]);
    }
    Ok(sample)
}
