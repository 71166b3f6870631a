use alloc::vec::Vec;

use crate::envs::{torus_distance, torus_observe, TorusAction, TorusEnv, TorusState};
use crate::rng::Pcg32;

/// Continuous multi-goal environment driven by the deep learners.
///
/// States double as achieved goals (`φ` is the identity).
pub trait GoalEnv {
    fn n_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    fn discount(&self) -> f64;
    /// Width of `[observation, goal embedding]`.
    fn input_dim(&self) -> usize;
    /// Writes the network input for state `s` and goal `g` into `out`.
    fn encode(&self, s: &TorusState, g: &TorusState, out: &mut Vec<f64>);
    /// Draws from `ρ_G`.
    fn sample_goal(&self, rng: &mut Pcg32) -> TorusState;
    fn sample_start(&self, rng: &mut Pcg32) -> TorusState;
    fn step(&self, s: &TorusState, action: usize, rng: &mut Pcg32) -> TorusState;
    fn reward(&self, s: &TorusState, g: &TorusState) -> f64;
    fn distance(&self, s: &TorusState, g: &TorusState) -> f64;
}

impl GoalEnv for TorusEnv {
    fn n_actions(&self) -> usize {
        TorusEnv::n_actions(self)
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn input_dim(&self) -> usize {
        2 * self.obs_dim()
    }

    /// The goal is embedded like an observation, by its cosines and sines.
    fn encode(&self, s: &TorusState, g: &TorusState, out: &mut Vec<f64>) {
        out.clear();
        out.extend(torus_observe(s));
        out.extend(torus_observe(g));
    }

    fn sample_goal(&self, rng: &mut Pcg32) -> TorusState {
        self.sample_point(rng)
    }

    fn sample_start(&self, rng: &mut Pcg32) -> TorusState {
        self.sample_point(rng)
    }

    fn step(&self, s: &TorusState, action: usize, rng: &mut Pcg32) -> TorusState {
        TorusEnv::step(self, s, TorusAction::from_index(action), rng)
    }

    fn reward(&self, s: &TorusState, g: &TorusState) -> f64 {
        self.sparse_reward(s, g)
    }

    fn distance(&self, s: &TorusState, g: &TorusState) -> f64 {
        torus_distance(s, g)
    }
}
