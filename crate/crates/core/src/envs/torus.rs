use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{invalid_param, Result};
use crate::rng::Pcg32;

/// Which coordinates receive Gaussian noise after a move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// Independent noise on every coordinate.
    #[default]
    Isotropic,
    /// Noise only on the axis that was moved.
    AxisOnly,
}

/// Torus(n): the state space `[0, 1)^n` with wrap-around moves of size
/// `step_size` along one axis at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusEnv {
    pub dim: usize,
    pub step_size: f64,
    pub noise_sigma: f64,
    pub reward_eps: f64,
    pub horizon: usize,
    pub discount: f64,
    pub noise: NoiseModel,
}

impl TorusEnv {
    pub fn new(dim: usize) -> Self {
        TorusEnv {
            dim,
            step_size: 0.1,
            noise_sigma: 0.1 / dim as f64,
            reward_eps: 0.05,
            horizon: 200,
            discount: 0.995,
            noise: NoiseModel::Isotropic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid_param("dim", "must be positive"));
        }
        if !(self.step_size > 0.0 && self.step_size < 0.5) {
            return Err(invalid_param(
                "step_size",
                format!("{} not in (0, 0.5)", self.step_size),
            ));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(invalid_param(
                "noise_sigma",
                format!("{} is negative", self.noise_sigma),
            ));
        }
        if !(self.reward_eps > 0.0 && self.reward_eps < 0.5) {
            return Err(invalid_param(
                "reward_eps",
                format!("{} not in (0, 0.5)", self.reward_eps),
            ));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(invalid_param("discount", format!("{} not in [0, 1)", self.discount)));
        }
        if self.horizon == 0 {
            return Err(invalid_param("horizon", "must be positive"));
        }
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        2 * self.dim
    }

    /// Length of [`torus_observe`] output.
    pub fn obs_dim(&self) -> usize {
        2 * self.dim
    }

    /// Uniform point on the torus, `dim` draws.
    pub fn sample_point(&self, rng: &mut Pcg32) -> TorusState {
        TorusState {
            coords: (0..self.dim).map(|_| rng.next_f64()).collect(),
        }
    }

    pub fn step(&self, state: &TorusState, action: TorusAction, rng: &mut Pcg32) -> TorusState {
        torus_step(state, action, self, rng)
    }

    /// Sparse reward `1{‖s − g‖ ≤ ε}` under the rescaled L1 torus distance.
    pub fn sparse_reward(&self, state: &TorusState, goal: &TorusState) -> f64 {
        if torus_distance(state, goal) <= self.reward_eps {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusState {
    pub coords: Vec<f64>,
}

impl TorusState {
    /// Wraps every coordinate into `[0, 1)`.
    pub fn new(coords: Vec<f64>) -> Self {
        TorusState {
            coords: coords.into_iter().map(wrap).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Move along `axis` by `+α` when `positive`, else `−α`.
/// Flat index is `2 * axis + positive`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusAction {
    pub axis: usize,
    pub positive: bool,
}

impl TorusAction {
    pub fn from_index(index: usize) -> Self {
        TorusAction {
            axis: index / 2,
            positive: index % 2 == 1,
        }
    }

    pub fn index(self) -> usize {
        2 * self.axis + self.positive as usize
    }
}

fn wrap(x: f64) -> f64 {
    let y = x - libm::floor(x);
    // x slightly below an integer can round up to exactly 1.0
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// One transition. Draws `2 * dim` normals' worth of `u64`s for isotropic
/// noise (`2` for axis-only), none when `σ = 0`.
pub fn torus_step(state: &TorusState, action: TorusAction, env: &TorusEnv, rng: &mut Pcg32) -> TorusState {
    assert!(action.axis < state.dim(), "axis {} out of range", action.axis);
    let u = if action.positive { env.step_size } else { -env.step_size };
    let mut coords = state.coords.clone();
    coords[action.axis] += u;
    if env.noise_sigma > 0.0 {
        match env.noise {
            NoiseModel::Isotropic => coords.iter_mut().for_each(|c| *c += env.noise_sigma * rng.normal()),
            NoiseModel::AxisOnly => coords[action.axis] += env.noise_sigma * rng.normal(),
        }
    }
    TorusState::new(coords)
}

/// Rescaled L1 distance `(1/n) Σ min(d_i, 1 − d_i)` with `d_i = (s_i − g_i) mod 1`.
pub fn torus_distance(s: &TorusState, g: &TorusState) -> f64 {
    assert_eq!(s.dim(), g.dim(), "torus dimension mismatch");
    let total: f64 = s
        .coords
        .iter()
        .zip(&g.coords)
        .map(|(a, b)| {
            let d = wrap(a - b);
            d.min(1.0 - d)
        })
        .sum();
    total / s.dim() as f64
}

/// `(cos 2πs_1, …, cos 2πs_n, sin 2πs_1, …, sin 2πs_n)`.
pub fn torus_observe(state: &TorusState) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * state.dim());
    out.extend(state.coords.iter().map(|&c| libm::cos(TAU * c)));
    out.extend(state.coords.iter().map(|&c| libm::sin(TAU * c)));
    out
}
