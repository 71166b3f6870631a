//! Small function-approximation stack and the deep goal-conditioned learners.

mod adam;
mod buffer;
mod deep;
mod goal_env;
mod mlp;
mod train;

pub use adam::Adam;
pub use buffer::{ContinuousTrajectory, ReplayBuffer};
pub use deep::{
    deep_delta_dqn_step, deep_her_step, deep_uvfa_step, delta_dqn_direction, her_direction, DeepQ, DeepStepConfig,
    StepStats,
};
pub use goal_env::GoalEnv;
pub use mlp::{soft_target_update, Activations, Mlp};
pub use train::{collect_trajectory, evaluate, train_deep, DeepAlgo, DeepConfig, DeepOutcome};
