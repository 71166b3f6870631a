use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::envs::TorusState;
use crate::error::{Error, Result};
use crate::rng::Pcg32;

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousTrajectory {
    pub goal: TorusState,
    /// `T + 1` states.
    pub states: Vec<TorusState>,
    pub actions: Vec<usize>,
}

impl ContinuousTrajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Whole trajectories, oldest evicted first once the transition count would
/// exceed `capacity`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    trajectories: VecDeque<ContinuousTrajectory>,
    /// Running transition offset of each stored trajectory.
    starts: VecDeque<u64>,
    cursor: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            trajectories: VecDeque::new(),
            starts: VecDeque::new(),
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stored transitions.
    pub fn len(&self) -> usize {
        self.starts.front().map_or(0, |&s| (self.cursor - s) as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn n_trajectories(&self) -> usize {
        self.trajectories.len()
    }

    pub fn trajectory(&self, i: usize) -> &ContinuousTrajectory {
        &self.trajectories[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ContinuousTrajectory> {
        self.trajectories.iter()
    }

    /// Stores `traj`; trajectories longer than the capacity are rejected.
    pub fn push(&mut self, traj: ContinuousTrajectory) -> Result<()> {
        let n = traj.len();
        if n == 0 || n > self.capacity {
            return Err(crate::error::invalid_param(
                "trajectory",
                "empty or longer than the buffer",
            ));
        }
        while self.len() + n > self.capacity {
            self.trajectories.pop_front();
            self.starts.pop_front();
        }
        self.starts.push_back(self.cursor);
        self.cursor += n as u64;
        self.trajectories.push_back(traj);
        Ok(())
    }

    /// Uniform transition `(trajectory, t)` over everything stored.
    pub fn sample(&self, rng: &mut Pcg32) -> Result<(usize, usize)> {
        let first = *self.starts.front().ok_or(Error::EmptyBuffer)?;
        let u = first + rng.below(self.len()) as u64;
        let i = self.starts.partition_point(|&s| s <= u) - 1;
        Ok((i, (u - self.starts[i]) as usize))
    }
}
