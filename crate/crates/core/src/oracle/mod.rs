//! Exact solvers and exact expectations of the stochastic updates.
//!
//! Everything here works on finite models by linear algebra or by iterating
//! operators to a fixed point, so the learners can be checked against
//! values that involve no sampling at all.

mod gradient;
mod her;
mod linalg;
mod mass;
mod solvers;
mod updates;

pub use gradient::{
    exact_expected_return, expected_update_delta_ac, expected_update_delta_ac_with_baseline, finite_difference_grad_j,
};
pub use her::{
    expected_update_her, her_distribution, her_fixed_point, required_truncation, truncated_geometric, HerConfig,
    HerDistribution, TRUNCATION_TAIL,
};
pub use mass::{finite_horizon_mass, finite_horizon_masses, mass_profile, MassProfile};
pub use solvers::{bellman_optimal_density, bellman_policy_density, solve_m_pi, solve_nu_pi, solve_q_star, Visitation};
pub use updates::{
    expected_update_delta_dqn, expected_update_delta_td, expected_update_uvfa, uniform_state_action, uniform_state_goal,
};
