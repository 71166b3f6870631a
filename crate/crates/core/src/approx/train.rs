use alloc::vec;
use alloc::vec::Vec;

use super::buffer::{ContinuousTrajectory, ReplayBuffer};
use super::deep::{deep_delta_dqn_step, deep_her_step, deep_uvfa_step, DeepQ, DeepStepConfig};
use super::goal_env::GoalEnv;
use crate::error::{invalid_param, Result};
use crate::metrics::MetricRow;
use crate::rng::Pcg32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeepAlgo {
    Uvfa,
    Her,
    DeltaDqn,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeepConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    /// Trajectories collected per epoch.
    pub episodes_per_epoch: usize,
    /// Minibatch updates per epoch.
    pub updates_per_epoch: usize,
    pub batch: usize,
    pub lr: f64,
    pub epsilon: f64,
    /// Soft target mix applied once per epoch.
    pub target_mix: f64,
    pub buffer_capacity: usize,
    pub c_delta: f64,
    pub reward_scale: f64,
    pub future_prob: f64,
    pub eval_episodes: usize,
    /// Evaluate every this many epochs, and after the last one.
    pub eval_every: usize,
}

impl DeepConfig {
    /// Desk-scale defaults for `algo`.
    pub fn for_algo(algo: DeepAlgo) -> Self {
        let base = DeepConfig {
            hidden: vec![64, 64],
            epochs: 200,
            episodes_per_epoch: 16,
            updates_per_epoch: 100,
            batch: 64,
            lr: 3e-4,
            epsilon: 0.2,
            target_mix: 0.05,
            buffer_capacity: 1_000_000,
            c_delta: 1e-2,
            reward_scale: 1.0,
            future_prob: 0.8,
            eval_episodes: 32,
            eval_every: 10,
        };
        match algo {
            DeepAlgo::Her => base,
            DeepAlgo::Uvfa => DeepConfig {
                lr: 1e-4,
                reward_scale: 10.0,
                future_prob: 0.0,
                ..base
            },
            DeepAlgo::DeltaDqn => DeepConfig { lr: 1e-5, ..base },
        }
    }

    pub fn step_config(&self) -> DeepStepConfig {
        DeepStepConfig {
            batch: self.batch,
            lr: self.lr,
            c_delta: self.c_delta,
            reward_scale: self.reward_scale,
            future_prob: self.future_prob,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(invalid_param("hidden", "widths must be positive"));
        }
        if self.episodes_per_epoch == 0 || self.batch == 0 || self.eval_episodes == 0 || self.eval_every == 0 {
            return Err(invalid_param(
                "episodes_per_epoch/batch/eval_episodes/eval_every",
                "must be positive",
            ));
        }
        if !(self.lr > 0.0) {
            return Err(invalid_param("lr", "must be positive"));
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("target_mix", self.target_mix),
            ("future_prob", self.future_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid_param(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// One episode under ε-greedy behavior on `agent` (uniform when `None`).
/// Goal and start come from the environment's distributions.
pub fn collect_trajectory<E: GoalEnv>(
    env: &E,
    agent: Option<&DeepQ>,
    epsilon: f64,
    rng: &mut Pcg32,
) -> ContinuousTrajectory {
    let goal = env.sample_goal(rng);
    let mut s = env.sample_start(rng);
    let horizon = env.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut input = Vec::new();
    states.push(s.clone());
    for _ in 0..horizon {
        let a = match agent {
            Some(q) if !rng.bernoulli(epsilon) => {
                env.encode(&s, &goal, &mut input);
                q.greedy(&input)
            }
            _ => rng.below(env.n_actions()),
        };
        s = env.step(&s, a, rng);
        actions.push(a);
        states.push(s.clone());
    }
    ContinuousTrajectory { goal, states, actions }
}

/// Mean goal distance at the end of `episodes` greedy episodes.
pub fn evaluate<E: GoalEnv>(env: &E, agent: &DeepQ, episodes: usize, rng: &mut Pcg32) -> f64 {
    let total: f64 = (0..episodes)
        .map(|_| {
            let traj = collect_trajectory(env, Some(agent), 0.0, rng);
            env.distance(traj.states.last().expect("non-empty"), &traj.goal)
        })
        .sum();
    total / episodes as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeepOutcome {
    pub rows: Vec<MetricRow>,
    pub agent: DeepQ,
    pub final_distance: f64,
}

/// Epoch loop: collect, store, take minibatch steps, mix the target.
///
/// Streams of `seed`: 1 initialises the network, 2 collects, 3 drives the
/// updates and every evaluation replays stream 4 from its start.
pub fn train_deep<E: GoalEnv>(algo: DeepAlgo, env: &E, cfg: &DeepConfig, seed: u64) -> Result<DeepOutcome> {
    cfg.validate()?;
    let mut agent = DeepQ::new(
        env.input_dim(),
        &cfg.hidden,
        env.n_actions(),
        &mut Pcg32::with_stream(seed, 1),
    )?;
    let mut collect_rng = Pcg32::with_stream(seed, 2);
    let mut update_rng = Pcg32::with_stream(seed, 3);
    let eval_rng = Pcg32::with_stream(seed, 4);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let step_cfg = cfg.step_config();
    let mut rows = Vec::new();
    let mut updates = 0u64;
    let mut final_distance = f64::NAN;
    for epoch in 1..=cfg.epochs {
        let mut train_distance = 0.0;
        for _ in 0..cfg.episodes_per_epoch {
            let traj = collect_trajectory(env, Some(&agent), cfg.epsilon, &mut collect_rng);
            train_distance += env.distance(traj.states.last().expect("non-empty"), &traj.goal);
            buffer.push(traj)?;
        }
        for _ in 0..cfg.updates_per_epoch {
            match algo {
                DeepAlgo::DeltaDqn => deep_delta_dqn_step(&mut agent, &buffer, env, &step_cfg, &mut update_rng)?,
                DeepAlgo::Her => deep_her_step(&mut agent, &buffer, env, &step_cfg, &mut update_rng)?,
                DeepAlgo::Uvfa => deep_uvfa_step(&mut agent, &buffer, env, &step_cfg, &mut update_rng)?,
            };
            updates += 1;
        }
        agent.soft_update(cfg.target_mix);
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let episode = (epoch * cfg.episodes_per_epoch) as u64;
            let mean = train_distance / cfg.episodes_per_epoch as f64;
            rows.push(MetricRow::new(updates, episode, "train_final_distance", mean, seed));
            final_distance = evaluate(env, &agent, cfg.eval_episodes, &mut eval_rng.clone());
            rows.push(MetricRow::new(
                updates,
                episode,
                "mean_final_distance",
                final_distance,
                seed,
            ));
        }
    }
    Ok(DeepOutcome {
        rows,
        agent,
        final_distance,
    })
}
