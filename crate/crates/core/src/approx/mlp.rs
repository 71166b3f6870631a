use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid_param, Result};
use crate::rng::Pcg32;

/// Fully connected network with rectifier hidden layers and a linear output.
///
/// Parameters are one flat vector; layer `l` stores its `out × in` weights
/// row-major followed by its `out` biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer outputs of a forward pass; entry 0 is the input.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Activations {
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(invalid_param("widths", "need at least two positive layer widths"));
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            params: vec![0.0; param_count(widths)],
        })
    }

    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn new(widths: &[usize], rng: &mut Pcg32) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        let mut offset = 0;
        for w in widths.windows(2) {
            let bound = 1.0 / libm::sqrt(w[0] as f64);
            let n = w[0] * w[1] + w[1];
            for p in &mut net.params[offset..offset + n] {
                *p = bound * (2.0 * rng.next_f64() - 1.0);
            }
            offset += n;
        }
        Ok(net)
    }

    pub fn from_params(widths: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        check_dim("parameters", net.params.len(), params.len())?;
        net.params = params;
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("at least two layers")
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Forward pass keeping every layer's output for [`Mlp::accumulate_gradient`].
    pub fn forward_into(&self, input: &[f64], acts: &mut Activations) {
        assert_eq!(input.len(), self.input_dim(), "input width");
        let depth = self.widths.len();
        acts.layers.resize(depth, Vec::new());
        acts.layers[0].clear();
        acts.layers[0].extend_from_slice(input);
        let mut offset = 0;
        for l in 1..depth {
            let (n_in, n_out) = (self.widths[l - 1], self.widths[l]);
            let (done, rest) = acts.layers.split_at_mut(l);
            let x = &done[l - 1];
            let y = &mut rest[0];
            y.clear();
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            for (row, &b) in weights.chunks_exact(n_in).zip(biases) {
                let z = b + row.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>();
                y.push(if l + 1 < depth { z.max(0.0) } else { z });
            }
            offset += n_in * n_out + n_out;
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut acts = Activations::default();
        self.forward_into(input, &mut acts);
        acts.layers.pop().unwrap_or_default()
    }

    /// Adds `scale · ∂⟨seed, f(x)⟩/∂θ` to `grad`, reusing a forward pass at `x`.
    pub fn accumulate_gradient(&self, acts: &Activations, seed: &[f64], scale: f64, grad: &mut [f64]) {
        let depth = self.widths.len();
        assert_eq!(seed.len(), self.output_dim(), "seed width");
        assert_eq!(grad.len(), self.params.len(), "gradient length");
        let mut delta: Vec<f64> = seed.iter().map(|s| s * scale).collect();
        let mut end = self.params.len();
        for l in (1..depth).rev() {
            let (n_in, n_out) = (self.widths[l - 1], self.widths[l]);
            let start = end - n_in * n_out - n_out;
            let x = &acts.layers[l - 1];
            let (gw, gb) = grad[start..end].split_at_mut(n_in * n_out);
            for ((row, b), &d) in gw.chunks_exact_mut(n_in).zip(gb.iter_mut()).zip(&delta) {
                if d == 0.0 {
                    continue;
                }
                *b += d;
                for (g, &v) in row.iter_mut().zip(x.iter()) {
                    *g += d * v;
                }
            }
            if l > 1 {
                let weights = &self.params[start..start + n_in * n_out];
                let mut back = vec![0.0; n_in];
                for (row, &d) in weights.chunks_exact(n_in).zip(&delta) {
                    if d == 0.0 {
                        continue;
                    }
                    for (o, &w) in back.iter_mut().zip(row) {
                        *o += d * w;
                    }
                }
                for (o, &v) in back.iter_mut().zip(x.iter()) {
                    if v <= 0.0 {
                        *o = 0.0;
                    }
                }
                delta = back;
            }
            end = start;
        }
    }

    /// Gradient of `⟨seed, f(input)⟩` with respect to every parameter.
    pub fn param_gradient(&self, input: &[f64], seed: &[f64]) -> Result<Vec<f64>> {
        check_dim("input", self.input_dim(), input.len())?;
        check_dim("seed", self.output_dim(), seed.len())?;
        let mut acts = Activations::default();
        self.forward_into(input, &mut acts);
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_gradient(&acts, seed, 1.0, &mut grad);
        Ok(grad)
    }
}

/// `θ_tar ← (1 − α) θ_tar + α θ`.
pub fn soft_target_update(target: &mut Mlp, online: &Mlp, mix: f64) {
    assert_eq!(target.widths, online.widths, "architectures differ");
    for (t, &p) in target.params.iter_mut().zip(&online.params) {
        *t = (1.0 - mix) * *t + mix * p;
    }
}
