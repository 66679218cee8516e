//! Clipped-surrogate loss, its analytic gradient, and the epoch/minibatch
//! update loop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, Adam};
use super::mlp::MlpCache;
use super::policy::{log_one_minus_tanh_sq, ActorCritic};
use super::PpoConfig;
use crate::error::PpoError;

const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_7;

/// Flattened rollout data ready for optimization. Observations are already
/// normalized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub obs: Vec<Vec<f64>>,
    pub pre_tanh: Vec<Vec<f64>>,
    pub log_prob: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// `(A − mean)/(std + 1e-8)` with the population standard deviation.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    adv.iter().map(|a| (a - mean) / (std + 1e-8)).collect()
}

/// Loss over the samples `idx` using the given (already normalized)
/// advantages, accumulating its gradient into `grad`:
///
/// ```text
/// L = −mean(min(ρ·A, clip(ρ, 1−ε, 1+ε)·A)) + c_v·mean((V − R)²) − c_e·H
/// ```
pub fn loss_and_grad(
    policy: &ActorCritic,
    batch: &Batch,
    idx: &[usize],
    advantages: &[f64],
    config: &PpoConfig,
    grad: &mut [f64],
) -> LossParts {
    let (pr, sr, vr) = policy.layout();
    let (pi_shape, v_shape) = (policy.policy_shape(), policy.value_shape());
    let log_std = policy.log_std().to_vec();
    let sigma: Vec<f64> = log_std.iter().map(|l| l.exp()).collect();
    let n = idx.len() as f64;
    let eps = config.clip_range;
    let mut parts = LossParts::default();
    let mut pi_cache = MlpCache::default();
    let mut v_cache = MlpCache::default();
    let mut grad_mean = vec![0.0; policy.act_dim];

    for (k, &i) in idx.iter().enumerate() {
        let obs = &batch.obs[i];
        let u = &batch.pre_tanh[i];
        pi_shape.forward(&policy.params[pr.clone()], obs, &mut pi_cache);
        v_shape.forward(&policy.params[vr.clone()], obs, &mut v_cache);
        let mean = pi_cache.output();
        let mut log_prob = 0.0;
        for d in 0..policy.act_dim {
            let z = (u[d] - mean[d]) / sigma[d];
            log_prob += -0.5 * z * z - log_std[d] - HALF_LOG_TWO_PI - log_one_minus_tanh_sq(u[d]);
        }
        let log_ratio = log_prob - batch.log_prob[i];
        let ratio = log_ratio.exp();
        let a = advantages[k];
        let surrogate = (ratio * a).min(ratio.clamp(1.0 - eps, 1.0 + eps) * a);
        parts.policy_loss -= surrogate / n;
        if (ratio - 1.0).abs() > eps {
            parts.clip_fraction += 1.0 / n;
        }
        parts.approx_kl += ((ratio - 1.0) - log_ratio) / n;

        // The clipped branch is flat in the parameters, boundary included.
        let clipped = (a > 0.0 && ratio >= 1.0 + eps) || (a < 0.0 && ratio <= 1.0 - eps);
        let g_logp = if clipped { 0.0 } else { -ratio * a / n };
        if g_logp != 0.0 {
            for d in 0..policy.act_dim {
                let z = (u[d] - mean[d]) / sigma[d];
                grad_mean[d] = g_logp * z / sigma[d];
                grad[sr.start + d] += g_logp * (z * z - 1.0);
            }
            pi_shape.backward(&policy.params[pr.clone()], &pi_cache, &grad_mean, &mut grad[pr.clone()]);
        }

        let v = v_cache.output()[0];
        let err = v - batch.returns[i];
        parts.value_loss += err * err / n;
        let g_v = [config.value_coef * 2.0 * err / n];
        v_shape.backward(&policy.params[vr.clone()], &v_cache, &g_v, &mut grad[vr.clone()]);
    }

    parts.entropy = policy.entropy();
    for d in 0..policy.act_dim {
        grad[sr.start + d] -= config.entropy_coef;
    }
    parts.total = parts.policy_loss + config.value_coef * parts.value_loss - config.entropy_coef * parts.entropy;
    parts
}

/// Runs `config.epochs` passes of shuffled minibatch Adam steps over `batch`.
/// Returns the loss statistics averaged over all minibatches. A non-finite
/// loss or gradient aborts before the offending step is applied.
pub fn ppo_update<R: Rng>(
    policy: &mut ActorCritic,
    adam: &mut Adam,
    batch: &Batch,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<LossParts, PpoError> {
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut grad = vec![0.0; policy.params.len()];
    let mut sum = LossParts::default();
    let mut count = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch_size) {
            let adv: Vec<f64> = chunk.iter().map(|&i| batch.advantages[i]).collect();
            let adv = normalize_advantages(&adv);
            grad.fill(0.0);
            let parts = loss_and_grad(policy, batch, chunk, &adv, config, &mut grad);
            if !parts.total.is_finite() {
                return Err(PpoError::NonFinite("loss"));
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(PpoError::NonFinite("gradient"));
            }
            clip_grad_norm(&mut grad, config.max_grad_norm);
            adam.step(&mut policy.params, &grad);
            policy.clamp_log_std();
            sum.total += parts.total;
            sum.policy_loss += parts.policy_loss;
            sum.value_loss += parts.value_loss;
            sum.entropy += parts.entropy;
            sum.clip_fraction += parts.clip_fraction;
            sum.approx_kl += parts.approx_kl;
            count += 1;
        }
    }
    let c = count.max(1) as f64;
    Ok(LossParts {
        total: sum.total / c,
        policy_loss: sum.policy_loss / c,
        value_loss: sum.value_loss / c,
        entropy: sum.entropy / c,
        clip_fraction: sum.clip_fraction / c,
        approx_kl: sum.approx_kl / c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_batch(policy: &ActorCritic, n: usize, seed: u64) -> Batch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Batch::default();
        for k in 0..n {
            let obs: Vec<f64> = (0..policy.obs_dim).map(|d| ((k * 3 + d) as f64 * 0.7).sin()).collect();
            let s = policy.sample(&obs, &mut rng).unwrap();
            b.obs.push(obs);
            b.pre_tanh.push(s.pre_tanh);
            b.log_prob.push(s.log_prob);
            b.advantages.push(rng.random_range(-2.0..2.0));
            b.returns.push(rng.random_range(-1.0..1.0));
        }
        b
    }

    #[test]
    fn fresh_policy_has_unit_ratio_and_no_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = ActorCritic::new(3, 2, &[5], 0.0, 1.0, &mut rng);
        let b = small_batch(&p, 20, 1);
        let idx: Vec<usize> = (0..20).collect();
        let mut g = vec![0.0; p.params.len()];
        let parts = loss_and_grad(&p, &b, &idx, &b.advantages, &PpoConfig::default(), &mut g);
        assert_eq!(parts.clip_fraction, 0.0);
        assert!(parts.approx_kl.abs() < 1e-12);
        let unclipped = -b.advantages.iter().sum::<f64>() / 20.0;
        assert!((parts.policy_loss - unclipped).abs() < 1e-12);
    }

    #[test]
    fn zero_clip_range_zeroes_the_policy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = ActorCritic::new(3, 2, &[5], 0.0, 1.0, &mut rng);
        let b = small_batch(&p, 12, 2);
        let idx: Vec<usize> = (0..12).collect();
        let config = PpoConfig {
            clip_range: 0.0,
            ..PpoConfig::default()
        };
        let mut g = vec![0.0; p.params.len()];
        loss_and_grad(&p, &b, &idx, &b.advantages, &config, &mut g);
        let (pr, sr, _) = p.layout();
        assert!(g[pr].iter().chain(&g[sr]).all(|x| *x == 0.0));
    }

    #[test]
    fn normalized_advantages_are_standardized() {
        let adv: Vec<f64> = (0..64).map(|k| (k as f64 * 1.3).sin() * 7.0 + 3.0).collect();
        let z = normalize_advantages(&adv);
        let mean = z.iter().sum::<f64>() / 64.0;
        let std = (z.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 64.0).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-6);
    }

    #[test]
    fn update_statistics_are_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = ActorCritic::new(3, 2, &[6, 6], 0.0, 1.0, &mut rng);
        let b = small_batch(&p, 64, 3);
        let config = PpoConfig {
            minibatch_size: 16,
            epochs: 4,
            learning_rate: 1e-2,
            ..PpoConfig::default()
        };
        let mut adam = Adam::new(p.params.len(), config.learning_rate);
        let stats = ppo_update(&mut p, &mut adam, &b, &config, &mut rng).unwrap();
        assert!((0.0..=1.0).contains(&stats.clip_fraction));
        assert!(stats.approx_kl >= -1e-9);
        assert!(stats.clip_fraction > 0.0);
        assert!(p.log_std().iter().all(|l| (-5.0..=2.0).contains(l)));
    }

    #[test]
    fn gradient_matches_central_differences() {
        // obs 2 → 2 → 1 policy and value nets: 19 parameters in total.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = ActorCritic::new(2, 1, &[2], -0.3, 1.0, &mut rng);
        assert_eq!(p.params.len(), 19);
        let mut b = small_batch(&p, 6, 4);
        // Shift the behaviour log-probs so ratios land inside and outside the
        // clip range, away from its edges.
        for (lp, shift) in b.log_prob.iter_mut().zip([-0.1, 0.05, 0.4, -0.5, 0.12, -0.03]) {
            *lp += shift;
        }
        let config = PpoConfig {
            entropy_coef: 0.01,
            ..PpoConfig::default()
        };
        let idx: Vec<usize> = (0..b.len()).collect();
        let mut g = vec![0.0; p.params.len()];
        loss_and_grad(&p, &b, &idx, &b.advantages, &config, &mut g);
        let loss = |params: &[f64]| {
            let mut q = p.clone();
            q.params.copy_from_slice(params);
            let mut scratch = vec![0.0; params.len()];
            loss_and_grad(&q, &b, &idx, &b.advantages, &config, &mut scratch).total
        };
        let h = 1e-5;
        for k in 0..p.params.len() {
            let mut x = p.params.clone();
            x[k] += h;
            let up = loss(&x);
            x[k] -= 2.0 * h;
            let down = loss(&x);
            let fd = (up - down) / (2.0 * h);
            let tol = 1e-4 * fd.abs().max(g[k].abs()) + 1e-9;
            assert!((fd - g[k]).abs() <= tol, "param {k}: fd {fd} vs analytic {}", g[k]);
        }
    }
}
