use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::resample::{her_resample, HerSampling, MAX_REDRAWS};
use super::steps::{delta_ac_step, delta_dqn_step, delta_td_n_step, her_step, uvfa_step};
use crate::error::{invalid_param, Error, Result};
use crate::mdp::{sample_trajectory, FiniteMultiGoalMdp, Trajectory};
use crate::metrics::{LearningRate, MetricRow};
use crate::oracle::{exact_expected_return, solve_m_pi, solve_q_star};
use crate::policy::{epsilon_greedy, softmax_policy, TabularPolicy};
use crate::rng::Pcg32;
use crate::tables::{GoalDensityTable, TabularQ};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TabularAlgo {
    Uvfa,
    Her,
    DeltaDqn,
    DeltaTd { n: usize },
    DeltaAc,
}

/// How trajectories are collected for the value learners.
#[derive(Clone, Debug, PartialEq)]
pub enum Behavior {
    Uniform,
    /// ε-greedy on the table being learned, refreshed every episode.
    EpsilonGreedy(f64),
    Fixed(TabularPolicy),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Number of single-sample updates.
    pub updates: u64,
    pub horizon: usize,
    /// Updates drawn from memory after each collected trajectory.
    pub updates_per_episode: usize,
    /// Trajectories kept in memory; sampling is uniform over them.
    pub memory: usize,
    pub lr: LearningRate,
    /// Actor rate for δ-AC.
    pub actor_lr: LearningRate,
    /// Hard target copy every `F` updates; `None` bootstraps on the live table.
    pub target_refresh: Option<u64>,
    /// Transition-index and relabelling laws. `alpha` is ignored by every
    /// algorithm except HER; δ-TD(n) uses only `pk_gamma`.
    pub sampling: HerSampling,
    pub behavior: Behavior,
    /// Metrics are logged every `eval_interval` updates and after the last one.
    pub eval_interval: u64,
}

impl TrainConfig {
    pub fn new(updates: u64, horizon: usize) -> Self {
        TrainConfig {
            updates,
            horizon,
            updates_per_episode: 10,
            memory: 1000,
            lr: LearningRate::constant(0.1),
            actor_lr: LearningRate::constant(0.1),
            target_refresh: None,
            sampling: HerSampling::new(0.8, 0.9, 0.9),
            behavior: Behavior::Uniform,
            eval_interval: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        if self.horizon == 0 {
            return Err(invalid_param("horizon", "must be at least 1"));
        }
        if self.updates_per_episode == 0 || self.memory == 0 || self.eval_interval == 0 {
            return Err(invalid_param(
                "updates_per_episode/memory/eval_interval",
                "must be positive",
            ));
        }
        if !(self.lr.base > 0.0) || !(self.actor_lr.base > 0.0) || self.lr.decay < 0.0 || self.actor_lr.decay < 0.0 {
            return Err(invalid_param("lr", "rates must be positive with non-negative decay"));
        }
        if self.target_refresh == Some(0) {
            return Err(invalid_param("target_refresh", "period must be positive"));
        }
        if let Behavior::EpsilonGreedy(eps) = self.behavior {
            if !(0.0..=1.0).contains(&eps) {
                return Err(invalid_param("epsilon", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Tables held by a learner. `Q` learners store raw values (UVFA, HER) or
/// densities (δ-DQN); the goal-measure learners store densities.
#[derive(Clone, Debug, PartialEq)]
pub enum LearnerState {
    Q {
        q: TabularQ,
        target: Option<TabularQ>,
    },
    M {
        m: GoalDensityTable,
        target: Option<GoalDensityTable>,
    },
    ActorCritic {
        critic: GoalDensityTable,
        logits: Vec<f64>,
    },
}

impl LearnerState {
    pub fn q(&self) -> Option<&TabularQ> {
        match self {
            LearnerState::Q { q, .. } => Some(q),
            _ => None,
        }
    }

    pub fn m(&self) -> Option<&GoalDensityTable> {
        match self {
            LearnerState::M { m, .. } => Some(m),
            LearnerState::ActorCritic { critic, .. } => Some(critic),
            _ => None,
        }
    }

    pub fn logits(&self) -> Option<&[f64]> {
        match self {
            LearnerState::ActorCritic { logits, .. } => Some(logits),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub rows: Vec<MetricRow>,
    pub state: LearnerState,
    pub updates: u64,
    pub episodes: u64,
}

/// Zero-initialised learner for `algo`.
pub fn initial_state(algo: TabularAlgo, mdp: &FiniteMultiGoalMdp) -> LearnerState {
    match algo {
        TabularAlgo::Uvfa | TabularAlgo::Her | TabularAlgo::DeltaDqn => LearnerState::Q {
            q: TabularQ::for_mdp(mdp),
            target: None,
        },
        TabularAlgo::DeltaTd { .. } => LearnerState::M {
            m: GoalDensityTable::for_mdp(mdp),
            target: None,
        },
        TabularAlgo::DeltaAc => LearnerState::ActorCritic {
            critic: GoalDensityTable::for_mdp(mdp),
            logits: vec![0.0; mdp.n_states() * mdp.n_goals() * mdp.n_actions()],
        },
    }
}

/// Exact reference a learner is measured against.
enum Reference {
    Q(TabularQ),
    M(GoalDensityTable),
    None,
}

struct Run<'a> {
    mdp: &'a FiniteMultiGoalMdp,
    cfg: &'a TrainConfig,
    seed: u64,
    rows: Vec<MetricRow>,
    reference: Reference,
}

impl Run<'_> {
    fn log(&mut self, step: u64, episode: u64, state: &LearnerState) -> Result<()> {
        let mdp = self.mdp;
        let push = |rows: &mut Vec<MetricRow>, name: &str, v: f64| {
            rows.push(MetricRow::new(step, episode, name, v, self.seed))
        };
        match (state, &self.reference) {
            (LearnerState::Q { q, .. }, Reference::Q(reference)) => {
                push(&mut self.rows, "sup_distance", q.sup_distance(reference));
                push(
                    &mut self.rows,
                    "greedy_return",
                    exact_expected_return(mdp, &epsilon_greedy(q, 0.0))?,
                );
            }
            (LearnerState::M { m, .. }, Reference::M(reference)) => {
                push(&mut self.rows, "sup_distance", m.sup_distance(reference));
            }
            (LearnerState::ActorCritic { logits, .. }, _) => {
                let pi = softmax_policy(mdp.n_states(), mdp.n_goals(), mdp.n_actions(), logits)?;
                push(&mut self.rows, "expected_return", exact_expected_return(mdp, &pi)?);
            }
            _ => {}
        }
        Ok(())
    }

    fn due(&self, step: u64) -> bool {
        step.is_multiple_of(self.cfg.eval_interval) || step == self.cfg.updates
    }
}

fn stamp(err: Error, steps: u64) -> Error {
    match err {
        Error::NonFinite { table, .. } => Error::NonFinite { table, steps },
        other => other,
    }
}

fn behavior_policy(mdp: &FiniteMultiGoalMdp, behavior: &Behavior, q: Option<&TabularQ>) -> TabularPolicy {
    match (behavior, q) {
        (Behavior::Fixed(pi), _) => pi.clone(),
        (Behavior::EpsilonGreedy(eps), Some(q)) => epsilon_greedy(q, *eps),
        _ => TabularPolicy::uniform(mdp.n_states(), mdp.n_goals(), mdp.n_actions()),
    }
}

/// Trains `algo` on `mdp` from `seed`.
///
/// Trajectories come from stream 1 of the seed and update-time draws from
/// stream 2, so algorithms with the same behavior see the same data.
/// UVFA and δ-DQN pick transitions with the HER index law at `α = 0`; HER
/// with `α = 0` is therefore bitwise UVFA. δ-AC is on-policy and updates
/// along each fresh trajectory in time order.
pub fn train(algo: TabularAlgo, mdp: &FiniteMultiGoalMdp, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut traj_rng = Pcg32::with_stream(seed, 1);
    let mut upd_rng = Pcg32::with_stream(seed, 2);
    let mut state = initial_state(algo, mdp);
    if cfg.updates == 0 {
        return Ok(TrainOutcome {
            rows: Vec::new(),
            state,
            updates: 0,
            episodes: 0,
        });
    }
    let reference = match algo {
        TabularAlgo::Uvfa | TabularAlgo::Her => Reference::Q(solve_q_star(mdp, 1e-12, 1_000_000)?.to_raw(mdp)),
        TabularAlgo::DeltaDqn => Reference::Q(solve_q_star(mdp, 1e-12, 1_000_000)?),
        TabularAlgo::DeltaTd { n } => {
            if n == 0 || n > cfg.horizon {
                return Err(invalid_param("n", "must lie in 1..=horizon"));
            }
            Reference::M(solve_m_pi(mdp, &behavior_policy(mdp, &cfg.behavior, None))?)
        }
        TabularAlgo::DeltaAc => Reference::None,
    };
    let mut run = Run {
        mdp,
        cfg,
        seed,
        rows: Vec::new(),
        reference,
    };
    match algo {
        TabularAlgo::DeltaAc => train_actor_critic(&mut run, &mut state, &mut traj_rng, &mut upd_rng)?,
        _ => train_from_memory(&mut run, algo, &mut state, &mut traj_rng, &mut upd_rng)?,
    }
    let (updates, episodes) = run.rows.last().map(|r| (r.step, r.episode)).unwrap_or((cfg.updates, 0));
    Ok(TrainOutcome {
        rows: run.rows,
        state,
        updates,
        episodes,
    })
}

fn refresh_target(state: &mut LearnerState) {
    match state {
        LearnerState::Q { q, target } => *target = Some(q.clone()),
        LearnerState::M { m, target } => *target = Some(m.clone()),
        LearnerState::ActorCritic { .. } => {}
    }
}

fn train_from_memory(
    run: &mut Run<'_>,
    algo: TabularAlgo,
    state: &mut LearnerState,
    traj_rng: &mut Pcg32,
    upd_rng: &mut Pcg32,
) -> Result<()> {
    let mdp = run.mdp;
    let cfg = run.cfg;
    let mut memory: VecDeque<Trajectory> = VecDeque::with_capacity(cfg.memory);
    let sampling = match algo {
        TabularAlgo::Her => cfg.sampling,
        _ => HerSampling::no_relabel(cfg.sampling.pk_gamma),
    };
    if cfg.target_refresh.is_some() {
        refresh_target(state);
    }
    let mut step = 0u64;
    let mut episode = 0u64;
    while step < cfg.updates {
        let behavior = behavior_policy(mdp, &cfg.behavior, state.q());
        if memory.len() == cfg.memory {
            memory.pop_front();
        }
        memory.push_back(sample_trajectory(mdp, &behavior, cfg.horizon, traj_rng)?);
        episode += 1;
        for _ in 0..cfg.updates_per_episode {
            if step == cfg.updates {
                break;
            }
            let eta = cfg.lr.at(step);
            let traj = &memory[upd_rng.below(memory.len())];
            match state {
                LearnerState::Q { q, target } => {
                    let sample = her_resample(mdp, traj, &sampling, upd_rng)?;
                    match algo {
                        TabularAlgo::Uvfa => uvfa_step(mdp, q, target.as_ref(), &sample, eta),
                        TabularAlgo::Her => her_step(mdp, q, target.as_ref(), &sample, eta),
                        _ => {
                            let mut sample = sample;
                            sample.g = upd_rng.categorical(mdp.goal_dist());
                            delta_dqn_step(mdp, q, target.as_ref(), &sample, eta)
                        }
                    }
                    .map_err(|e| stamp(e, step + 1))?;
                }
                LearnerState::M { m, target } => {
                    let TabularAlgo::DeltaTd { n } = algo else {
                        unreachable!("goal-measure state only for δ-TD")
                    };
                    let k = (0..MAX_REDRAWS)
                        .map(|_| upd_rng.geometric(sampling.pk_gamma))
                        .find(|&k| k + n <= traj.len())
                        .ok_or(Error::TrajectoryTooShort {
                            length: traj.len(),
                            attempts: MAX_REDRAWS,
                        })?;
                    let g_prime = upd_rng.categorical(mdp.goal_dist());
                    delta_td_n_step(
                        mdp,
                        m,
                        target.as_ref(),
                        &traj.states[k..=k + n],
                        traj.goal,
                        g_prime,
                        eta,
                    )
                    .map_err(|e| stamp(e, step + 1))?;
                }
                LearnerState::ActorCritic { .. } => unreachable!("actor-critic trains on-policy"),
            }
            step += 1;
            if let Some(period) = cfg.target_refresh {
                if step.is_multiple_of(period) {
                    refresh_target(state);
                }
            }
            if run.due(step) {
                run.log(step, episode, state)?;
            }
        }
    }
    Ok(())
}

fn train_actor_critic(
    run: &mut Run<'_>,
    state: &mut LearnerState,
    traj_rng: &mut Pcg32,
    upd_rng: &mut Pcg32,
) -> Result<()> {
    let mdp = run.mdp;
    let cfg = run.cfg;
    let (ns, ng, na) = (mdp.n_states(), mdp.n_goals(), mdp.n_actions());
    let mut step = 0u64;
    let mut episode = 0u64;
    while step < cfg.updates {
        let logits = state.logits().expect("actor-critic state");
        let pi = softmax_policy(ns, ng, na, logits).map_err(|_| Error::NonFinite {
            table: "logits",
            steps: step,
        })?;
        let traj = sample_trajectory(mdp, &pi, cfg.horizon, traj_rng)?;
        episode += 1;
        for t in 0..traj.len() {
            if step == cfg.updates {
                break;
            }
            let g_prime = upd_rng.categorical(mdp.goal_dist());
            let LearnerState::ActorCritic { critic, logits } = &mut *state else {
                unreachable!("actor-critic state")
            };
            delta_ac_step(
                mdp,
                critic,
                logits,
                t,
                &traj.transition(t),
                g_prime,
                cfg.lr.at(step),
                cfg.actor_lr.at(step),
            )
            .map_err(|e| stamp(e, step + 1))?;
            step += 1;
            if run.due(step) {
                run.log(step, episode, state)?;
            }
        }
    }
    Ok(())
}
