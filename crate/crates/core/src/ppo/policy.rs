//! Tanh-squashed diagonal Gaussian policy with a separate value network.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{MlpCache, MlpShape};
use crate::error::PpoError;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_7;

/// `ln(1 − tanh(u)²)` without cancellation for large `|u|`.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    let x = -2.0 * u.abs();
    2.0 * (std::f64::consts::LN_2 - u.abs() - x.exp().ln_1p())
}

/// Policy mean network, state-independent log-std and value network, all in
/// one flat parameter vector laid out as `[policy | log_std | value]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: Vec<usize>,
    pub params: Vec<f64>,
}

/// One sampled action. `pre_tanh` is kept so the log-density can be
/// re-evaluated without inverting the squashing.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    pub action: Vec<f64>,
    pub pre_tanh: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

impl ActorCritic {
    pub fn shapes(obs_dim: usize, act_dim: usize, hidden: &[usize]) -> (MlpShape, MlpShape) {
        (MlpShape::new(obs_dim, hidden, act_dim), MlpShape::new(obs_dim, hidden, 1))
    }

    pub fn new<R: Rng>(obs_dim: usize, act_dim: usize, hidden: &[usize], init_log_std: f64, mean_gain: f64, rng: &mut R) -> Self {
        let (pi, v) = Self::shapes(obs_dim, act_dim, hidden);
        let mut params = pi.init(rng, mean_gain);
        params.extend(std::iter::repeat_n(init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX), act_dim));
        params.extend(v.init(rng, 1.0));
        Self {
            obs_dim,
            act_dim,
            hidden: hidden.to_vec(),
            params,
        }
    }

    pub fn policy_shape(&self) -> MlpShape {
        MlpShape::new(self.obs_dim, &self.hidden, self.act_dim)
    }

    pub fn value_shape(&self) -> MlpShape {
        MlpShape::new(self.obs_dim, &self.hidden, 1)
    }

    /// Index ranges of the three parameter groups.
    pub fn layout(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>, std::ops::Range<usize>) {
        let p = self.policy_shape().param_count();
        let v = self.value_shape().param_count();
        (0..p, p..p + self.act_dim, p + self.act_dim..p + self.act_dim + v)
    }

    pub fn check(&self) -> Result<(), PpoError> {
        let (_, _, v) = self.layout();
        if self.params.len() != v.end {
            return Err(PpoError::Config(format!(
                "parameter vector has {} entries, layout needs {}",
                self.params.len(),
                v.end
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(PpoError::NonFinite("parameters"));
        }
        Ok(())
    }

    pub fn log_std(&self) -> &[f64] {
        let (_, s, _) = self.layout();
        &self.params[s]
    }

    pub fn clamp_log_std(&mut self) {
        let (_, s, _) = self.layout();
        for x in &mut self.params[s] {
            *x = x.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    /// Pre-squash Gaussian mean.
    pub fn mean(&self, obs: &[f64]) -> Vec<f64> {
        let (p, _, _) = self.layout();
        let mut c = MlpCache::default();
        self.policy_shape().forward(&self.params[p], obs, &mut c);
        c.output().to_vec()
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        let (_, _, v) = self.layout();
        let mut c = MlpCache::default();
        self.value_shape().forward(&self.params[v], obs, &mut c);
        c.output()[0]
    }

    /// The deterministic action `tanh(mean)`.
    pub fn mean_action(&self, obs: &[f64]) -> Vec<f64> {
        self.mean(obs).into_iter().map(f64::tanh).collect()
    }

    /// Log-density of the squashed action whose pre-squash value is `u`.
    pub fn log_prob_pre_tanh(&self, mean: &[f64], u: &[f64]) -> f64 {
        self.log_std()
            .iter()
            .zip(mean.iter().zip(u))
            .map(|(ls, (m, u))| {
                let z = (u - m) / ls.exp();
                -0.5 * z * z - ls - HALF_LOG_TWO_PI - log_one_minus_tanh_sq(*u)
            })
            .sum()
    }

    /// Log-density of a squashed action in `(−1, 1)`.
    pub fn evaluate_log_prob(&self, obs: &[f64], action: &[f64]) -> f64 {
        let u: Vec<f64> = action.iter().map(|a| a.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()).collect();
        self.log_prob_pre_tanh(&self.mean(obs), &u)
    }

    pub fn sample<R: Rng>(&self, obs: &[f64], rng: &mut R) -> Result<ActionSample, PpoError> {
        let mean = self.mean(obs);
        let value = self.value(obs);
        if mean.iter().any(|m| !m.is_finite()) || !value.is_finite() {
            return Err(PpoError::NonFinite("network output"));
        }
        let pre_tanh: Vec<f64> = mean
            .iter()
            .zip(self.log_std())
            .map(|(m, ls)| {
                let z: f64 = rng.sample(StandardNormal);
                m + ls.exp() * z
            })
            .collect();
        let log_prob = self.log_prob_pre_tanh(&mean, &pre_tanh);
        Ok(ActionSample {
            action: pre_tanh.iter().map(|u| u.tanh()).collect(),
            pre_tanh,
            log_prob,
            value,
        })
    }

    /// Entropy of the pre-squash Gaussian.
    pub fn entropy(&self) -> f64 {
        self.log_std().iter().map(|ls| ls + 0.5 + HALF_LOG_TWO_PI).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policy(act_dim: usize, log_std: f64) -> ActorCritic {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        ActorCritic::new(4, act_dim, &[8, 8], log_std, 1.0, &mut rng)
    }

    #[test]
    fn stable_log_one_minus_tanh_sq_matches_direct_form() {
        for u in [-3.0, -0.5, 0.0, 0.2, 2.5] {
            let direct = (1.0 - f64::tanh(u).powi(2)).ln();
            assert!((log_one_minus_tanh_sq(u) - direct).abs() < 1e-12);
        }
        assert!(log_one_minus_tanh_sq(40.0).is_finite());
    }

    #[test]
    fn tiny_std_samples_the_mean() {
        let p = policy(3, LOG_STD_MIN);
        let obs = [0.1, -0.2, 0.3, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = p.sample(&obs, &mut rng).unwrap();
        for (a, m) in s.action.iter().zip(p.mean_action(&obs)) {
            assert!((a - m).abs() < 1e-2);
        }
    }

    #[test]
    fn same_rng_state_same_action() {
        let p = policy(3, 0.0);
        let obs = [0.5, 0.5, -0.5, 1.0];
        let a = p.sample(&obs, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = p.sample(&obs, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluated_log_prob_matches_sampling_time_value() {
        let p = policy(3, -0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..200 {
            let obs = [k as f64 * 0.01, -0.3, 0.7, 0.2];
            let s = p.sample(&obs, &mut rng).unwrap();
            let lp = p.evaluate_log_prob(&obs, &s.action);
            assert!((lp - s.log_prob).abs() < 1e-10, "{lp} vs {}", s.log_prob);
        }
    }

    #[test]
    fn histogram_density_matches_log_prob() {
        // 1-D action. Empirical log-density per bin against the log of the
        // bin-averaged analytic density (Simpson's rule on evaluate_log_prob).
        let p = policy(1, -0.2);
        let obs = [0.3, 0.1, -0.4, 0.8];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let bins = 10;
        let width = 2.0 / bins as f64;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let a = p.sample(&obs, &mut rng).unwrap().action[0];
            let b = ((a + 1.0) / width).floor() as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let density = |a: f64| p.evaluate_log_prob(&obs, &[a]).exp();
        let mut checked = 0;
        for (b, &c) in counts.iter().enumerate() {
            if c < 100_000 {
                continue;
            }
            let (lo, hi) = (-1.0 + b as f64 * width, -1.0 + (b + 1) as f64 * width);
            let m = 200;
            let step = (hi - lo) / m as f64;
            let mut integral = density(lo) + density(hi);
            for k in 1..m {
                integral += density(lo + k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            integral *= step / 3.0;
            let empirical = (c as f64 / (n as f64 * width)).ln();
            let analytic = (integral / width).ln();
            assert!((empirical - analytic).abs() < 1e-2, "bin {b}: {empirical} vs {analytic}");
            checked += 1;
        }
        assert!(checked >= 3, "{counts:?}");
    }

    #[test]
    fn entropy_is_the_gaussian_entropy() {
        let p = policy(2, 0.0);
        let expected = 2.0 * 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((p.entropy() - expected).abs() < 1e-12);
    }
}
