//! TOML experiment configs. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use mgrl_core::approx::{DeepAlgo, DeepConfig};
use mgrl_core::envs::{make_deterministic_reachable_mdp, make_random_mdp, shift_mdp, FreezeSpec, NoiseModel, TorusEnv};
use mgrl_core::mdp::FiniteMultiGoalMdp;
use mgrl_core::metrics::LearningRate;
use mgrl_core::rng::Pcg32;
use mgrl_core::tabular::{Behavior, HerSampling, TabularAlgo, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::mdp_file::load_mdp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoId {
    Uvfa,
    Her,
    DeltaDqn,
    DeltaTd,
    DeltaAc,
    DeepUvfa,
    DeepHer,
    DeepDeltaDqn,
}

impl AlgoId {
    pub fn is_deep(self) -> bool {
        matches!(self, AlgoId::DeepUvfa | AlgoId::DeepHer | AlgoId::DeepDeltaDqn)
    }

    pub fn deep(self) -> Option<DeepAlgo> {
        match self {
            AlgoId::DeepUvfa => Some(DeepAlgo::Uvfa),
            AlgoId::DeepHer => Some(DeepAlgo::Her),
            AlgoId::DeepDeltaDqn => Some(DeepAlgo::DeltaDqn),
            _ => None,
        }
    }

    pub fn tabular(self, n: usize) -> Option<TabularAlgo> {
        match self {
            AlgoId::Uvfa => Some(TabularAlgo::Uvfa),
            AlgoId::Her => Some(TabularAlgo::Her),
            AlgoId::DeltaDqn => Some(TabularAlgo::DeltaDqn),
            AlgoId::DeltaTd => Some(TabularAlgo::DeltaTd { n }),
            AlgoId::DeltaAc => Some(TabularAlgo::DeltaAc),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    /// Random stochastic MDP with identity goals.
    Random {
        n_states: usize,
        n_actions: usize,
        branching: usize,
        discount: f64,
        #[serde(default)]
        env_seed: u64,
        #[serde(default)]
        freeze: bool,
    },
    /// Deterministic MDP whose action 0 walks a cycle.
    Deterministic {
        n_states: usize,
        n_actions: usize,
        discount: f64,
        #[serde(default)]
        env_seed: u64,
        #[serde(default)]
        freeze: bool,
    },
    /// Cyclic shift MDP, action `k` moves by `k + 1`.
    Shift {
        n_states: usize,
        n_actions: usize,
        discount: f64,
        #[serde(default)]
        freeze: bool,
    },
    /// MDP text file, resolved relative to the config file.
    File {
        path: PathBuf,
        #[serde(default)]
        freeze: bool,
    },
    Torus {
        dim: usize,
        step_size: Option<f64>,
        noise_sigma: Option<f64>,
        reward_eps: Option<f64>,
        horizon: Option<usize>,
        discount: Option<f64>,
        #[serde(default)]
        axis_noise: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorId {
    #[default]
    Uniform,
    EpsilonGreedy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularParams {
    pub updates: u64,
    pub horizon: usize,
    pub updates_per_episode: usize,
    pub memory: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub actor_lr: f64,
    pub actor_lr_decay: f64,
    pub target_refresh: Option<u64>,
    pub alpha: f64,
    pub pk_gamma: f64,
    pub pl_gamma: f64,
    pub behavior: BehaviorId,
    pub epsilon: f64,
    /// δ-TD horizon.
    pub n: usize,
    pub eval_interval: u64,
}

impl Default for TabularParams {
    fn default() -> Self {
        let base = TrainConfig::new(10_000, 50);
        TabularParams {
            updates: base.updates,
            horizon: base.horizon,
            updates_per_episode: base.updates_per_episode,
            memory: base.memory,
            lr: base.lr.base,
            lr_decay: base.lr.decay,
            actor_lr: base.actor_lr.base,
            actor_lr_decay: base.actor_lr.decay,
            target_refresh: base.target_refresh,
            alpha: base.sampling.alpha,
            pk_gamma: base.sampling.pk_gamma,
            pl_gamma: base.sampling.pl_gamma,
            behavior: BehaviorId::Uniform,
            epsilon: 0.2,
            n: 1,
            eval_interval: base.eval_interval,
        }
    }
}

impl TabularParams {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            updates: self.updates,
            horizon: self.horizon,
            updates_per_episode: self.updates_per_episode,
            memory: self.memory,
            lr: LearningRate {
                base: self.lr,
                decay: self.lr_decay,
            },
            actor_lr: LearningRate {
                base: self.actor_lr,
                decay: self.actor_lr_decay,
            },
            target_refresh: self.target_refresh,
            sampling: HerSampling::new(self.alpha, self.pk_gamma, self.pl_gamma),
            behavior: match self.behavior {
                BehaviorId::Uniform => Behavior::Uniform,
                BehaviorId::EpsilonGreedy => Behavior::EpsilonGreedy(self.epsilon),
            },
            eval_interval: self.eval_interval,
        }
    }
}

/// Overrides of the per-algorithm deep defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DeepParams {
    pub hidden: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub episodes_per_epoch: Option<usize>,
    pub updates_per_epoch: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub epsilon: Option<f64>,
    pub target_mix: Option<f64>,
    pub buffer_capacity: Option<usize>,
    pub c_delta: Option<f64>,
    pub reward_scale: Option<f64>,
    pub future_prob: Option<f64>,
    pub eval_episodes: Option<usize>,
    pub eval_every: Option<usize>,
}

impl DeepParams {
    pub fn deep_config(&self, algo: DeepAlgo) -> DeepConfig {
        let d = DeepConfig::for_algo(algo);
        DeepConfig {
            hidden: self.hidden.clone().unwrap_or(d.hidden),
            epochs: self.epochs.unwrap_or(d.epochs),
            episodes_per_epoch: self.episodes_per_epoch.unwrap_or(d.episodes_per_epoch),
            updates_per_epoch: self.updates_per_epoch.unwrap_or(d.updates_per_epoch),
            batch: self.batch.unwrap_or(d.batch),
            lr: self.lr.unwrap_or(d.lr),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            target_mix: self.target_mix.unwrap_or(d.target_mix),
            buffer_capacity: self.buffer_capacity.unwrap_or(d.buffer_capacity),
            c_delta: self.c_delta.unwrap_or(d.c_delta),
            reward_scale: self.reward_scale.unwrap_or(d.reward_scale),
            future_prob: self.future_prob.unwrap_or(d.future_prob),
            eval_episodes: self.eval_episodes.unwrap_or(d.eval_episodes),
            eval_every: self.eval_every.unwrap_or(d.eval_every),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algo: AlgoId,
    #[serde(default)]
    pub seed: u64,
    pub env: EnvSpec,
    #[serde(default)]
    pub tabular: TabularParams,
    #[serde(default)]
    pub deep: DeepParams,
}

/// A built environment.
#[allow(clippy::large_enum_variant)]
pub enum Environment {
    Finite {
        mdp: FiniteMultiGoalMdp,
        freeze: Option<FreezeSpec>,
    },
    Torus(TorusEnv),
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        cfg.check(path)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        if let EnvSpec::File { path: file, .. } = &mut cfg.env {
            if file.is_relative() {
                *file = path.parent().unwrap_or(Path::new(".")).join(&*file);
            }
        }
        Ok(cfg)
    }

    /// `MGRL_SEED`, when set, replaces the configured seed.
    pub fn apply_env_seed(&mut self) -> CliResult<()> {
        if let Ok(raw) = std::env::var("MGRL_SEED") {
            self.seed = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("MGRL_SEED='{raw}' is not an unsigned integer")))?;
        }
        Ok(())
    }

    fn check(&self, path: &Path) -> CliResult<()> {
        let bad = |message: String| CliError::Config {
            path: path.to_path_buf(),
            message,
        };
        let torus = matches!(self.env, EnvSpec::Torus { .. });
        if self.algo.is_deep() != torus {
            return Err(bad(format!(
                "algo {:?} needs {} environment",
                self.algo,
                if torus { "a finite" } else { "a torus" }
            )));
        }
        let result = match self.algo.deep() {
            Some(algo) => self.deep.deep_config(algo).validate(),
            None => self.tabular.train_config().validate(),
        };
        result.map_err(|e| bad(e.to_string()))?;
        if self.algo == AlgoId::DeltaTd && (self.tabular.n == 0 || self.tabular.n > self.tabular.horizon) {
            return Err(bad("tabular.n must lie in 1..=tabular.horizon".into()));
        }
        Ok(())
    }

    pub fn build_env(&self) -> CliResult<Environment> {
        let finite = |mdp: FiniteMultiGoalMdp, freeze: bool| -> CliResult<Environment> {
            if freeze {
                let spec = FreezeSpec::new(&mdp)?;
                Ok(Environment::Finite {
                    mdp: spec.mdp().clone(),
                    freeze: Some(spec),
                })
            } else {
                Ok(Environment::Finite { mdp, freeze: None })
            }
        };
        match &self.env {
            EnvSpec::Random {
                n_states,
                n_actions,
                branching,
                discount,
                env_seed,
                freeze,
            } => finite(
                make_random_mdp(*n_states, *n_actions, *branching, *discount, &mut Pcg32::new(*env_seed))?,
                *freeze,
            ),
            EnvSpec::Deterministic {
                n_states,
                n_actions,
                discount,
                env_seed,
                freeze,
            } => finite(
                make_deterministic_reachable_mdp(*n_states, *n_actions, *discount, &mut Pcg32::new(*env_seed))?,
                *freeze,
            ),
            EnvSpec::Shift {
                n_states,
                n_actions,
                discount,
                freeze,
            } => finite(shift_mdp(*n_states, *n_actions, *discount)?, *freeze),
            EnvSpec::File { path, freeze } => finite(load_mdp(path)?, *freeze),
            EnvSpec::Torus {
                dim,
                step_size,
                noise_sigma,
                reward_eps,
                horizon,
                discount,
                axis_noise,
            } => {
                let d = TorusEnv::new(*dim);
                let env = TorusEnv {
                    step_size: step_size.unwrap_or(d.step_size),
                    noise_sigma: noise_sigma.unwrap_or(d.noise_sigma),
                    reward_eps: reward_eps.unwrap_or(d.reward_eps),
                    horizon: horizon.unwrap_or(d.horizon),
                    discount: discount.unwrap_or(d.discount),
                    noise: if *axis_noise {
                        NoiseModel::AxisOnly
                    } else {
                        NoiseModel::Isotropic
                    },
                    ..d
                };
                env.validate()?;
                Ok(Environment::Torus(env))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "algo = \"her\"\n[env]\nkind = \"shift\"\nn_states = 5\nn_actions = 2\ndiscount = 0.8\n";

    fn parse(text: &str) -> CliResult<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("t.toml"))
    }

    fn message(text: &str) -> String {
        match parse(text) {
            Err(CliError::Config { message, .. }) => message,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = parse(BASE).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.tabular, TabularParams::default());
        assert!(matches!(
            cfg.build_env().unwrap(),
            Environment::Finite { freeze: None, .. }
        ));
    }

    #[test]
    fn unknown_keys_are_named() {
        assert!(message(&format!("lr = 0.1\n{BASE}")).contains("lr"));
        assert!(message(&format!("{BASE}branch = 2\n")).contains("branch"));
        assert!(message(&format!("{BASE}[tabular]\nupdate = 5\n")).contains("update"));
        assert!(message(&format!("{BASE}[deep]\nlearning_rate = 1e-3\n")).contains("learning_rate"));
        assert!(message("algo = \"sarsa\"\n[env]\nkind = \"torus\"\ndim = 2\n").contains("sarsa"));
    }

    #[test]
    fn algo_must_match_the_env() {
        assert!(message(&BASE.replace("\"her\"", "\"deep_her\"")).contains("torus"));
        assert!(message("algo = \"uvfa\"\n[env]\nkind = \"torus\"\ndim = 2\n").contains("finite"));
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        assert!(parse(&format!("{BASE}[tabular]\nalpha = 1.5\n")).is_err());
        assert!(parse(&format!("{BASE}[tabular]\nupdates_per_episode = 0\n")).is_err());
        let td = BASE.replace("\"her\"", "\"delta_td\"");
        assert!(parse(&format!("{td}[tabular]\nn = 0\n")).is_err());
        assert!(parse(&format!("{td}[tabular]\nn = 3\nhorizon = 2\n")).is_err());
    }

    #[test]
    fn deep_overrides_apply_on_top_of_defaults() {
        let cfg = parse("algo = \"deep_uvfa\"\n[env]\nkind = \"torus\"\ndim = 3\n[deep]\nbatch = 8\n").unwrap();
        let deep = cfg.deep.deep_config(DeepAlgo::Uvfa);
        assert_eq!(deep.batch, 8);
        assert_eq!(deep.reward_scale, DeepConfig::for_algo(DeepAlgo::Uvfa).reward_scale);
        match cfg.build_env().unwrap() {
            Environment::Torus(env) => assert_eq!(env, TorusEnv::new(3)),
            _ => panic!("torus expected"),
        }
    }

    #[test]
    fn freeze_adds_an_action() {
        let cfg = parse(&format!("{BASE}freeze = true\n")).unwrap();
        match cfg.build_env().unwrap() {
            Environment::Finite {
                mdp,
                freeze: Some(spec),
            } => {
                assert_eq!(mdp.n_actions(), 3);
                assert_eq!(spec.freeze_action(), 2);
            }
            _ => panic!("freeze spec expected"),
        }
    }

    #[test]
    fn tabular_params_round_trip_through_train_config() {
        let p = TabularParams {
            behavior: BehaviorId::EpsilonGreedy,
            epsilon: 0.3,
            target_refresh: Some(7),
            ..TabularParams::default()
        };
        let cfg = p.train_config();
        assert_eq!(cfg.behavior, Behavior::EpsilonGreedy(0.3));
        assert_eq!(cfg.target_refresh, Some(7));
        assert_eq!(cfg.sampling, HerSampling::new(p.alpha, p.pk_gamma, p.pl_gamma));
    }
}
