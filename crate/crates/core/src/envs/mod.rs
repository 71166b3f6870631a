//! Concrete environments: random finite MDPs, the freeze-action augmentation,
//! the truncated dyadic tree, and the continuous torus.

mod finite;
mod torus;

pub use finite::{
    augment_with_freeze, dyadic_tree_mdp, make_deterministic_reachable_mdp, make_random_mdp, shift_mdp, DyadicTree,
    FreezeSpec,
};
pub use torus::{torus_distance, torus_observe, torus_step, NoiseModel, TorusAction, TorusEnv, TorusState};
