//! Learning-curve rows shared by the tabular and deep trainers.

use alloc::string::String;

/// One `step,episode,metric,value,seed` record.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub step: u64,
    pub episode: u64,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

impl MetricRow {
    pub fn new(step: u64, episode: u64, metric: &str, value: f64, seed: u64) -> Self {
        MetricRow {
            step,
            episode,
            metric: metric.into(),
            value,
            seed,
        }
    }
}

/// Constant rate or `η_0 / (1 + decay · t)` after `t` updates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningRate {
    pub base: f64,
    pub decay: f64,
}

impl LearningRate {
    pub fn constant(base: f64) -> Self {
        LearningRate { base, decay: 0.0 }
    }

    pub fn at(&self, t: u64) -> f64 {
        self.base / (1.0 + self.decay * t as f64)
    }
}
