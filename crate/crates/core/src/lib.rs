//! Multi-goal reinforcement learning with infinitely sparse (Dirac) rewards:
//! finite multi-goal MDPs, exact oracles, tabular learners and a small
//! function-approximation stack.

#![no_std]
// `!(x > 0.0)` also rejects NaN; index loops read better in the numerics.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod approx;
pub mod envs;
pub mod error;
pub mod mdp;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod tables;
pub mod tabular;

pub use error::{Error, Result};
