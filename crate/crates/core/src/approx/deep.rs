use alloc::vec;
use alloc::vec::Vec;

use super::adam::Adam;
use super::buffer::ReplayBuffer;
use super::goal_env::GoalEnv;
use super::mlp::{soft_target_update, Activations, Mlp};
use crate::envs::TorusState;
use crate::error::{Error, Result};
use crate::rng::Pcg32;

/// Online network, target network and optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct DeepQ {
    pub online: Mlp,
    pub target: Mlp,
    pub adam: Adam,
}

impl DeepQ {
    /// `input → hidden… → n_actions`, target initialised to the online weights.
    pub fn new(input_dim: usize, hidden: &[usize], n_actions: usize, rng: &mut Pcg32) -> Result<Self> {
        let mut widths = vec![input_dim];
        widths.extend_from_slice(hidden);
        widths.push(n_actions);
        let online = Mlp::new(&widths, rng)?;
        Ok(DeepQ {
            target: online.clone(),
            adam: Adam::new(online.n_params()),
            online,
        })
    }

    pub fn soft_update(&mut self, mix: f64) {
        soft_target_update(&mut self.target, &self.online, mix);
    }

    /// Greedy action, lowest index on ties.
    pub fn greedy(&self, input: &[f64]) -> usize {
        argmax(&self.online.forward(input))
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn max(values: &[f64]) -> f64 {
    values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
}

/// Summary of one minibatch update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub samples: usize,
    /// Samples whose update carried the Dirac term `c_δ ∂q(s,a,φ(s))`.
    pub dirac_terms: usize,
    /// Samples with a nonzero observed reward.
    pub rewarded: usize,
    pub mean_abs_td: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeepStepConfig {
    pub batch: usize,
    pub lr: f64,
    /// Dirac weight `c_δ` for δ-DQN.
    pub c_delta: f64,
    /// Reward factor for UVFA and HER.
    pub reward_scale: f64,
    /// HER: probability of relabelling with a future achieved goal.
    pub future_prob: f64,
}

/// Scratch space reused across samples.
struct Scratch {
    input: Vec<f64>,
    acts: Activations,
    seed: Vec<f64>,
    grad: Vec<f64>,
}

impl Scratch {
    fn new(agent: &DeepQ) -> Self {
        Scratch {
            input: Vec::new(),
            acts: Activations::default(),
            seed: vec![0.0; agent.online.output_dim()],
            grad: vec![0.0; agent.online.n_params()],
        }
    }

    fn forward<E: GoalEnv>(&mut self, env: &E, net: &Mlp, s: &TorusState, g: &TorusState) -> &[f64] {
        env.encode(s, g, &mut self.input);
        net.forward_into(&self.input, &mut self.acts);
        self.acts.output()
    }

    /// Adds `coef · ∂q_θ(s, a, g)` to the batch direction, at the last forward pass.
    fn backprop(&mut self, net: &Mlp, a: usize, coef: f64) {
        self.seed.iter_mut().for_each(|x| *x = 0.0);
        self.seed[a] = 1.0;
        net.accumulate_gradient(&self.acts, &self.seed, coef, &mut self.grad);
    }

    fn finish(mut self, batch: usize) -> Vec<f64> {
        let inv = 1.0 / batch as f64;
        self.grad.iter_mut().for_each(|g| *g *= inv);
        self.grad
    }
}

fn apply(agent: &mut DeepQ, dir: &[f64], lr: f64) -> Result<()> {
    agent.adam.step(agent.online.params_mut(), dir, lr);
    if agent.online.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            table: "network",
            steps: agent.adam.steps(),
        })
    }
}

fn check_batch(buffer: &ReplayBuffer, cfg: &DeepStepConfig) -> Result<()> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if cfg.batch == 0 {
        return Err(crate::error::invalid_param("batch", "must be positive"));
    }
    Ok(())
}

/// Batch-averaged δ-DQN direction.
///
/// Per sample `(s, a, s')` from the buffer and `g ∼ ρ_G`, the direction is
/// `c_δ ∂q_θ(s,a,φ(s)) + (γ max_{a'} q_tar(s',a',g) − q_θ(s,a,g)) ∂q_θ(s,a,g)`.
/// No reward is ever evaluated.
pub fn delta_dqn_direction<E: GoalEnv>(
    agent: &DeepQ,
    buffer: &ReplayBuffer,
    env: &E,
    cfg: &DeepStepConfig,
    rng: &mut Pcg32,
) -> Result<(Vec<f64>, StepStats)> {
    check_batch(buffer, cfg)?;
    let mut scratch = Scratch::new(agent);
    let gamma = env.discount();
    let mut stats = StepStats {
        samples: cfg.batch,
        ..StepStats::default()
    };
    for _ in 0..cfg.batch {
        let (i, t) = buffer.sample(rng)?;
        let traj = buffer.trajectory(i);
        let (s, a, s_next) = (&traj.states[t], traj.actions[t], &traj.states[t + 1]);
        let g = env.sample_goal(rng);
        let boot = max(scratch.forward(env, &agent.target, s_next, &g));
        let td = gamma * boot - scratch.forward(env, &agent.online, s, &g)[a];
        scratch.backprop(&agent.online, a, td);
        scratch.forward(env, &agent.online, s, s);
        scratch.backprop(&agent.online, a, cfg.c_delta);
        stats.dirac_terms += 1;
        stats.mean_abs_td += td.abs() / cfg.batch as f64;
    }
    Ok((scratch.finish(cfg.batch), stats))
}

/// Batch-averaged HER direction with the "future" strategy: with probability
/// `future_prob` the goal becomes the state at a uniform later index of the
/// same trajectory. The direction is the negated gradient of
/// `½ (R·r(s,g) + γ max q_tar(s',·,g) − q_θ(s,a,g))²` with a frozen target.
pub fn her_direction<E: GoalEnv>(
    agent: &DeepQ,
    buffer: &ReplayBuffer,
    env: &E,
    cfg: &DeepStepConfig,
    rng: &mut Pcg32,
) -> Result<(Vec<f64>, StepStats)> {
    check_batch(buffer, cfg)?;
    let mut scratch = Scratch::new(agent);
    let gamma = env.discount();
    let mut stats = StepStats {
        samples: cfg.batch,
        ..StepStats::default()
    };
    for _ in 0..cfg.batch {
        let (i, t) = buffer.sample(rng)?;
        let traj = buffer.trajectory(i);
        let (s, a, s_next) = (&traj.states[t], traj.actions[t], &traj.states[t + 1]);
        let g = if rng.bernoulli(cfg.future_prob) {
            &traj.states[t + 1 + rng.below(traj.len() - t)]
        } else {
            &traj.goal
        };
        let r = env.reward(s, g);
        if r != 0.0 {
            stats.rewarded += 1;
        }
        let y = cfg.reward_scale * r + gamma * max(scratch.forward(env, &agent.target, s_next, g));
        let td = y - scratch.forward(env, &agent.online, s, g)[a];
        scratch.backprop(&agent.online, a, td);
        stats.mean_abs_td += td.abs() / cfg.batch as f64;
    }
    Ok((scratch.finish(cfg.batch), stats))
}

/// Adam step along [`delta_dqn_direction`].
pub fn deep_delta_dqn_step<E: GoalEnv>(
    agent: &mut DeepQ,
    buffer: &ReplayBuffer,
    env: &E,
    cfg: &DeepStepConfig,
    rng: &mut Pcg32,
) -> Result<StepStats> {
    let (dir, stats) = delta_dqn_direction(agent, buffer, env, cfg, rng)?;
    apply(agent, &dir, cfg.lr)?;
    Ok(stats)
}

/// Adam step along [`her_direction`].
pub fn deep_her_step<E: GoalEnv>(
    agent: &mut DeepQ,
    buffer: &ReplayBuffer,
    env: &E,
    cfg: &DeepStepConfig,
    rng: &mut Pcg32,
) -> Result<StepStats> {
    let (dir, stats) = her_direction(agent, buffer, env, cfg, rng)?;
    apply(agent, &dir, cfg.lr)?;
    Ok(stats)
}

/// UVFA is HER that never relabels; it consumes the same random draws.
pub fn deep_uvfa_step<E: GoalEnv>(
    agent: &mut DeepQ,
    buffer: &ReplayBuffer,
    env: &E,
    cfg: &DeepStepConfig,
    rng: &mut Pcg32,
) -> Result<StepStats> {
    deep_her_step(
        agent,
        buffer,
        env,
        &DeepStepConfig {
            future_prob: 0.0,
            ..*cfg
        },
        rng,
    )
}
