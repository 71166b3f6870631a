use alloc::vec;
use alloc::vec::Vec;

/// Bias-corrected Adam moving parameters *along* the supplied direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// `θ ← θ + η m̂ / (√v̂ + ε)` for ascent direction `dir`.
    pub fn step(&mut self, params: &mut [f64], dir: &[f64], eta: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter count");
        assert_eq!(dir.len(), self.m.len(), "direction length");
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for (((p, &g), m), v) in params.iter_mut().zip(dir).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p += eta * (*m / c1) / (libm::sqrt(*v / c2) + self.epsilon);
        }
    }
}
