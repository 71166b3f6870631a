//! Single-sample tabular learners and their training loop.

mod moments;
mod resample;
mod steps;
mod train;

pub use moments::{delta_dqn_update_moments, delta_td_update_moments, UpdateMoments};
pub use resample::{her_resample, HerSampling, MAX_REDRAWS};
pub use steps::{delta_ac_step, delta_dqn_step, delta_td_n_step, her_step, uvfa_step};
pub use train::{initial_state, train, Behavior, LearnerState, TabularAlgo, TrainConfig, TrainOutcome};
