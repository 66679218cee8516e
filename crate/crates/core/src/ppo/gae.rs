/// One step of a single environment's trajectory as seen by GAE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaeStep {
    pub reward: f64,
    /// `V(s_t)`
    pub value: f64,
    /// `V(s_{t+1})`, the value of the observation that followed this step
    /// (the final observation when the episode ended here).
    pub next_value: f64,
    /// The episode ended in a state with no future value (success or failure).
    pub terminal: bool,
    /// The episode ended here for any reason; the recursion does not cross it.
    pub episode_end: bool,
}

/// Generalized advantage estimates and returns for one trajectory segment:
///
/// ```text
/// δ_t = r_t + γ·V(s_{t+1})·(1 − terminal_t) − V(s_t)
/// A_t = δ_t + γλ·(1 − end_t)·A_{t+1}
/// ```
///
/// A time-limit truncation is `episode_end` without `terminal`, so it
/// bootstraps from `next_value`.
pub fn compute_gae(steps: &[GaeStep], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let mut adv = vec![0.0; steps.len()];
    let mut next_adv = 0.0;
    for (t, s) in steps.iter().enumerate().rev() {
        let live = if s.terminal { 0.0 } else { 1.0 };
        let cont = if s.episode_end { 0.0 } else { 1.0 };
        let delta = s.reward + gamma * s.next_value * live - s.value;
        next_adv = delta + gamma * lambda * cont * next_adv;
        adv[t] = next_adv;
    }
    let returns = adv.iter().zip(steps).map(|(a, s)| a + s.value).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct double loop: `A_t = Σ_k (γλ)^(k−t)·δ_k` up to the episode end.
    fn brute_force(steps: &[GaeStep], gamma: f64, lambda: f64) -> Vec<f64> {
        (0..steps.len())
            .map(|t| {
                let mut total = 0.0;
                for k in t..steps.len() {
                    let s = steps[k];
                    let boot = if s.terminal { 0.0 } else { s.next_value };
                    let delta = s.reward + gamma * boot - s.value;
                    total += (gamma * lambda).powi((k - t) as i32) * delta;
                    if s.episode_end {
                        break;
                    }
                }
                total
            })
            .collect()
    }

    fn chain(rewards: &[f64], values: &[f64], ends: &[(usize, bool)], last_value: f64) -> Vec<GaeStep> {
        (0..rewards.len())
            .map(|t| {
                let end = ends.iter().find(|(i, _)| *i == t);
                GaeStep {
                    reward: rewards[t],
                    value: values[t],
                    next_value: if t + 1 < values.len() && end.is_none() { values[t + 1] } else { last_value },
                    terminal: end.is_some_and(|(_, term)| *term),
                    episode_end: end.is_some(),
                }
            })
            .collect()
    }

    #[test]
    fn zero_lambda_gives_one_step_td() {
        let steps = chain(&[1.0, 2.0, 3.0], &[0.5, 0.1, -0.2], &[], 0.7);
        let (adv, _) = compute_gae(&steps, 0.9, 0.0);
        assert_eq!(adv[0], 1.0 + 0.9 * 0.1 - 0.5);
        assert_eq!(adv[2], 3.0 + 0.9 * 0.7 + 0.2);
    }

    #[test]
    fn unit_gamma_lambda_gives_monte_carlo_return() {
        let rewards = [1.0, -2.0, 0.5, 4.0];
        let values = [0.3, 0.2, -0.1, 0.9];
        let steps = chain(&rewards, &values, &[(3, true)], 123.0);
        let (adv, ret) = compute_gae(&steps, 1.0, 1.0);
        for t in 0..4 {
            let g: f64 = rewards[t..].iter().sum();
            assert!((adv[t] - (g - values[t])).abs() < 1e-12);
            assert!((ret[t] - g).abs() < 1e-12);
        }
    }

    #[test]
    fn handcrafted_five_steps_match_brute_force() {
        // A terminal at step 1, a time-limit truncation at step 3.
        let steps = chain(&[1.0, 0.0, 2.0, -1.0, 0.5], &[0.2, 0.4, -0.3, 0.1, 0.6], &[(1, true), (3, false)], 0.8);
        let mut steps = steps;
        steps[3].next_value = 1.5;
        let (adv, _) = compute_gae(&steps, 0.99, 0.95);
        for (a, b) in adv.iter().zip(brute_force(&steps, 0.99, 0.95)) {
            assert!((a - b).abs() < 1e-12);
        }
        // The time-limit step bootstraps, the terminal one does not.
        assert!((adv[1] - (0.0 - 0.4)).abs() < 1e-12);
        assert!((adv[3] - (-1.0 + 0.99 * 1.5 - 0.1)).abs() < 1e-12);
    }

    fn arb_step() -> impl Strategy<Value = GaeStep> {
        (-10.0f64..10.0, -5.0f64..5.0, -5.0f64..5.0, 0u8..6).prop_map(|(reward, value, next_value, kind)| GaeStep {
            reward,
            value,
            next_value,
            terminal: kind == 0,
            episode_end: kind <= 1,
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_ten_step_buffers_match_brute_force(
            steps in proptest::collection::vec(arb_step(), 10),
            gamma in 0.0f64..=1.0,
            lambda in 0.0f64..=1.0,
        ) {
            let (adv, ret) = compute_gae(&steps, gamma, lambda);
            for ((a, b), (r, s)) in adv.iter().zip(brute_force(&steps, gamma, lambda)).zip(ret.iter().zip(&steps)) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
                prop_assert!((r - (a + s.value)).abs() < 1e-12);
            }
        }
    }
}
