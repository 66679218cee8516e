use serde::{Deserialize, Serialize};

/// Running mean/variance observation normalizer. Inputs are first multiplied
/// by a fixed per-dimension `scale`, then standardized and clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub scale: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
    pub clip: f64,
}

const EPS: f64 = 1e-8;

impl ObsNormalizer {
    pub fn new(scale: Vec<f64>) -> Self {
        let n = scale.len();
        Self {
            scale,
            mean: vec![0.0; n],
            var: vec![1.0; n],
            count: 1e-4,
            clip: 10.0,
        }
    }

    /// Identity scaling for `dim` inputs.
    pub fn unscaled(dim: usize) -> Self {
        Self::new(vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// Merges the statistics of `batch` (parallel-variance update).
    pub fn update(&mut self, batch: &[Vec<f64>]) {
        if batch.is_empty() {
            return;
        }
        let n = batch.len() as f64;
        for d in 0..self.dim() {
            let xs = batch.iter().map(|o| o[d] * self.scale[d]);
            let mean_b = xs.clone().sum::<f64>() / n;
            let var_b = xs.map(|x| (x - mean_b) * (x - mean_b)).sum::<f64>() / n;
            let delta = mean_b - self.mean[d];
            let total = self.count + n;
            let m2 = self.var[d] * self.count + var_b * n + delta * delta * self.count * n / total;
            self.mean[d] += delta * n / total;
            self.var[d] = m2 / total;
        }
        self.count += n;
    }

    pub fn normalize(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter()
            .enumerate()
            .map(|(d, &x)| ((x * self.scale[d] - self.mean[d]) / (self.var[d] + EPS).sqrt()).clamp(-self.clip, self.clip))
            .collect()
    }
}
