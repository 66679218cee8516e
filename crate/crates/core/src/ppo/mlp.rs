//! Fully connected tanh networks over a flat parameter slice.

use rand::Rng;
use rand_distr::StandardNormal;

/// Layer sizes `[in, hidden.., out]`. Hidden layers use tanh, the output is
/// linear. Each layer stores its weights row-major (`out × in`) followed by
/// its biases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpShape {
    pub sizes: Vec<usize>,
}

/// Per-layer activations saved by [`MlpShape::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct MlpCache {
    acts: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl MlpShape {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        Self { sizes }
    }

    pub fn input(&self) -> usize {
        self.sizes[0]
    }

    pub fn output(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Gaussian init with standard deviation `1/√fan_in`, scaled by
    /// `output_gain` on the last layer; biases start at zero.
    pub fn init<R: Rng>(&self, rng: &mut R, output_gain: f64) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_count());
        let layers = self.sizes.len() - 1;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let gain = if l + 1 == layers { output_gain } else { 1.0 };
            let std = gain / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] {
                let z: f64 = rng.sample(StandardNormal);
                params.push(z * std);
            }
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        params
    }

    pub fn forward(&self, params: &[f64], input: &[f64], cache: &mut MlpCache) {
        debug_assert_eq!(params.len(), self.param_count());
        debug_assert_eq!(input.len(), self.input());
        let layers = self.sizes.len() - 1;
        cache.acts.resize(self.sizes.len(), Vec::new());
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(input);
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &params[offset..offset + n_in * n_out];
            let b = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let (prev, rest) = cache.acts.split_at_mut(l + 1);
            let x = &prev[l];
            let y = &mut rest[0];
            y.clear();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let s: f64 = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                y.push(if l + 1 < layers { s.tanh() } else { s });
            }
        }
    }

    /// Accumulates `∂L/∂params` into `grad` given `∂L/∂output` for the input
    /// whose activations are in `cache`.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, grad_out: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        let mut delta = grad_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < layers {
                for (d, a) in delta.iter_mut().zip(&cache.acts[l + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let x = &cache.acts[l];
            let o0 = offsets[l];
            for o in 0..n_out {
                let g = &mut grad[o0 + o * n_in..o0 + (o + 1) * n_in];
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += delta[o] * xi;
                }
                grad[o0 + n_in * n_out + o] += delta[o];
            }
            if l > 0 {
                let w = &params[o0..o0 + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    for (p, wi) in prev.iter_mut().zip(row) {
                        *p += delta[o] * wi;
                    }
                }
                delta = prev;
            }
        }
    }
}
