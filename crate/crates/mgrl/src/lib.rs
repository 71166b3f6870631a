//! Command-line front end for the multi-goal learners: verification suites,
//! config-driven runs and seed sweeps, plus the MDP text format and network
//! checkpoints.

// `!(x > 0.0)` also rejects NaN; index loops read better in the numerics.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod mdp_file;
pub mod run;
pub mod sweep;
pub mod verify;
