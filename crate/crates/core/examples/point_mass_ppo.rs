//! Trains PPO on the point-mass env and benchmarks it on 100 goals.
//!
//! `cargo run --release --example point_mass_ppo -- [seed]`

use std::time::Instant;

use tripod_core::env::EpisodeConfig;
use tripod_core::eval::{default_obs_scale, run_goal_benchmark, MeanPolicy, PointMassEnv};
use tripod_core::exec::ExecMode;
use tripod_core::ppo::{train, PpoConfig};

fn main() {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed must be an integer"));
    let config = PpoConfig {
        total_steps: 200_000,
        horizon: 512,
        n_envs: 4,
        ..PpoConfig::default()
    };
    let env = PointMassEnv::new(EpisodeConfig::default()).unwrap();
    let start = Instant::now();
    let out = train(
        vec![env.clone(); config.n_envs],
        "point_mass",
        default_obs_scale(),
        &config,
        seed,
        ExecMode::Parallel,
        |row, _| {
            if row.update % 10 == 0 {
                eprintln!("{}", row.csv_line());
            }
            Ok(())
        },
    )
    .unwrap();
    eprintln!("trained in {:.1} s", start.elapsed().as_secs_f64());
    let policy = MeanPolicy::from_checkpoint(&out.checkpoint);
    let report = run_goal_benchmark(&env, &policy, 100, 1234, ExecMode::Parallel).unwrap();
    println!("{}", report.summary());
}
