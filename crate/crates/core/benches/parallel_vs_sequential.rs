use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tripod_core::env::{EpisodeConfig, TripodEnv, VectorEnv, ACT_DIM};
use tripod_core::eval::{run_goal_benchmark, PointMassEnv};
use tripod_core::exec::ExecMode;
use tripod_core::scene::SceneConfig;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn vector_step(c: &mut Criterion) {
    let env = TripodEnv::new(&SceneConfig::default(), EpisodeConfig::default()).unwrap();
    let n = 4;
    let actions: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..ACT_DIM).map(|k| ((i * ACT_DIM + k) as f64 * 0.37).sin()).collect())
        .collect();
    let mut group = c.benchmark_group("robot_step_all");
    group.sample_size(20);
    for (name, mode) in MODES {
        let mut venv = VectorEnv::new(vec![env.clone(); n], mode);
        let seeds: Vec<u64> = (0..n as u64).collect();
        group.bench_function(BenchmarkId::new(name, n), |b| {
            b.iter_batched(
                || (),
                |_| {
                    venv.reset_all(&seeds);
                    for _ in 0..5 {
                        for r in venv.step_all(&actions) {
                            r.unwrap();
                        }
                    }
                },
                criterion::BatchSize::PerIteration,
            )
        });
    }
    group.finish();
}

fn goal_benchmark(c: &mut Criterion) {
    let env = PointMassEnv::new(EpisodeConfig::default()).unwrap();
    let steer = |obs: &tripod_core::env::Observation| {
        let phi = (obs.goal[1] - obs.pose.y).atan2(obs.goal[0] - obs.pose.x);
        tripod_core::eval::action_toward(phi)
    };
    let mut group = c.benchmark_group("point_mass_benchmark");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new(name, 64), |b| {
            b.iter(|| run_goal_benchmark(&env, &steer, 64, 0, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, vector_step, goal_benchmark);
criterion_main!(benches);
