use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tripod_core::cable::CableCommand;
use tripod_core::env::{ACT_DIM, OBS_DIM};
use tripod_core::eval::{
    benchmark_csv, benchmark_svg, default_obs_scale, make_arc_waypoints, run_goal_benchmark, run_trajectory,
    trajectory_csv, trajectory_svg, GoalBenchmarkReport, MeanPolicy, TrajectoryReport,
};
use tripod_core::exec::ExecMode;
use tripod_core::ppo::{train as run_training, Checkpoint, CurveRow, CURVE_HEADER};
use tripod_core::scene::Simulation;

use crate::config::{self, RunConfig};
use crate::envs::AnyEnv;
use crate::plot;
use crate::Common;

pub const RESOLVED_CONFIG: &str = "config.resolved.json";
pub const CURVE_CSV: &str = "learning_curve.csv";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const TRAIN_SUMMARY: &str = "train_summary.json";
pub const EVAL_JSON: &str = "eval_report.json";
pub const EVAL_CSV: &str = "eval_episodes.csv";
pub const EVAL_SVG: &str = "eval_map.svg";
pub const TRAJECTORY_JSON: &str = "trajectory_report.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const TRAJECTORY_SVG: &str = "trajectory.svg";
pub const LEG_CSV: &str = "leg_sweep.csv";
pub const CURVE_SVG: &str = "learning_curve.svg";

const SUMMARY_SCHEMA_VERSION: u32 = 1;
const LEG_SCHEMA_VERSION: u32 = 1;
/// Checkpoints are rewritten every this many updates during training.
const CHECKPOINT_EVERY: u64 = 10;

/// Loads the config with command-line flags folded in as overrides, prepares
/// the output directory and worker pool, and writes the resolved snapshot.
fn setup(common: &Common, mut flags: Vec<String>) -> Result<(RunConfig, ExecMode)> {
    if let Some(seed) = common.seed {
        flags.push(format!("seed={seed}"));
    }
    let mut overrides = common.overrides.clone();
    overrides.extend(flags);
    let config = config::load(common.config.as_deref(), &overrides)?;
    fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    write_json(&common.out.join(RESOLVED_CONFIG), &config)?;
    let mode = if common.workers == 1 {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    #[cfg(feature = "parallel")]
    if common.workers > 1 {
        // Fails only if a pool already exists, which is fine to ignore.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(common.workers).build_global();
    }
    Ok((config, mode))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    schema_version: u32,
    env: &'a str,
    seed: u64,
    updates: u64,
    env_steps: u64,
    last: Option<&'a CurveRow>,
}

pub fn train(common: Common, total_steps: Option<u64>, n_envs: Option<usize>, horizon: Option<usize>) -> Result<()> {
    let mut flags = Vec::new();
    if let Some(v) = total_steps {
        flags.push(format!("ppo.total_steps={v}"));
    }
    if let Some(v) = n_envs {
        flags.push(format!("ppo.n_envs={v}"));
    }
    if let Some(v) = horizon {
        flags.push(format!("ppo.horizon={v}"));
    }
    let (config, mode) = setup(&common, flags)?;
    let env = AnyEnv::build(&config)?;
    let envs = vec![env; config.ppo.n_envs];
    let curve_path = common.out.join(CURVE_CSV);
    let mut curve_file = fs::File::create(&curve_path).with_context(|| format!("writing {}", curve_path.display()))?;
    writeln!(curve_file, "{CURVE_HEADER}")?;
    let checkpoint_path = common.out.join(CHECKPOINT);
    let updates = config.ppo.updates();
    let started = Instant::now();
    eprintln!(
        "training {} for {} updates of {} steps (seed {})",
        config.env.name(),
        updates,
        config.ppo.horizon * config.ppo.n_envs,
        config.seed
    );
    let outcome = run_training(
        envs,
        config.env.name(),
        default_obs_scale(),
        &config.ppo,
        config.seed,
        mode,
        |row, ckpt| {
            let io = |e: std::io::Error| tripod_core::PpoError::Config(format!("writing training output: {e}"));
            writeln!(curve_file, "{}", row.csv_line()).map_err(io)?;
            curve_file.flush().map_err(io)?;
            if row.update % CHECKPOINT_EVERY == 0 || row.update == updates {
                let text = ckpt.to_json().map_err(|e| tripod_core::PpoError::Config(e.to_string()))?;
                fs::write(&checkpoint_path, text).map_err(io)?;
            }
            eprintln!(
                "update {:>5}  steps {:>9}  episodes {:>4}  reward {:>10.2}  success {:>5.3}  [{:.0?}]",
                row.update,
                row.env_steps,
                row.episodes,
                row.mean_episode_reward,
                row.success_rate,
                started.elapsed()
            );
            Ok(())
        },
    )?;
    write_json(
        &common.out.join(TRAIN_SUMMARY),
        &TrainSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            env: config.env.name(),
            seed: config.seed,
            updates: outcome.checkpoint.updates,
            env_steps: outcome.checkpoint.env_steps,
            last: outcome.curve.last(),
        },
    )?;
    eprintln!("wrote {} and {}", curve_path.display(), checkpoint_path.display());
    Ok(())
}

fn load_policy(config: &RunConfig, checkpoint: Option<&PathBuf>, random: bool) -> Result<MeanPolicy> {
    if random {
        return Ok(MeanPolicy::random(config.seed, &config.ppo.hidden, default_obs_scale()));
    }
    let path = checkpoint.expect("clap requires --checkpoint without --random");
    let text = fs::read_to_string(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    let ckpt = Checkpoint::from_json(&text).with_context(|| format!("loading checkpoint {}", path.display()))?;
    ckpt.check_dims(OBS_DIM, ACT_DIM)
        .with_context(|| format!("checkpoint {}", path.display()))?;
    if ckpt.env != config.env.name() {
        bail!(
            "checkpoint {} was trained on `{}` but the config selects `{}`",
            path.display(),
            ckpt.env,
            config.env.name()
        );
    }
    Ok(MeanPolicy::from_checkpoint(&ckpt))
}

pub fn eval(common: Common, checkpoint: Option<PathBuf>, random: bool, n_goals: Option<usize>) -> Result<()> {
    let flags = n_goals.map(|n| format!("eval.n_goals={n}")).into_iter().collect();
    let (config, mode) = setup(&common, flags)?;
    let policy = load_policy(&config, checkpoint.as_ref(), random)?;
    let env = AnyEnv::build(&config)?;
    let report = run_goal_benchmark(&env, &policy, config.eval.n_goals, config.seed, mode)?;
    write_eval(&common.out, &report)?;
    println!("{}", report.summary());
    Ok(())
}

fn write_eval(out: &Path, report: &GoalBenchmarkReport) -> Result<()> {
    write_json(&out.join(EVAL_JSON), report)?;
    write_text(&out.join(EVAL_CSV), &benchmark_csv(report)?)?;
    write_text(&out.join(EVAL_SVG), &benchmark_svg(report))
}

pub fn trajectory(
    common: Common,
    checkpoint: Option<PathBuf>,
    random: bool,
    arc_degrees: Option<f64>,
    waypoints: Option<usize>,
) -> Result<()> {
    let mut flags = Vec::new();
    if let Some(v) = arc_degrees {
        flags.push(format!("eval.arc_degrees={v}"));
    }
    if let Some(v) = waypoints {
        flags.push(format!("eval.waypoints={v}"));
    }
    let (config, _) = setup(&common, flags)?;
    let policy = load_policy(&config, checkpoint.as_ref(), random)?;
    let mut env = AnyEnv::build(&config)?;
    let path = make_arc_waypoints(config.eval.arc_radius, config.eval.arc_degrees, config.eval.waypoints);
    let report = run_trajectory(&mut env, &policy, &path, config.seed)?;
    write_trajectory(&common.out, &report)?;
    println!("{}", report.summary());
    Ok(())
}

fn write_trajectory(out: &Path, report: &TrajectoryReport) -> Result<()> {
    write_json(&out.join(TRAJECTORY_JSON), report)?;
    write_text(&out.join(TRAJECTORY_CSV), &trajectory_csv(report)?)?;
    write_text(&out.join(TRAJECTORY_SVG), &trajectory_svg(report))
}

/// Commanded displacement of each cable at time `t` of the sweep: cables take
/// turns ramping up to `amplitude`, holding, and ramping back down.
fn sweep_command(t: f64, demo: &config::LegDemoConfig, cables: usize) -> (usize, Vec<f64>) {
    let phase = 2.0 * demo.ramp_time + demo.hold_time;
    let c = ((t / phase) as usize).min(cables - 1);
    let local = t - c as f64 * phase;
    let level = if local < demo.ramp_time {
        local / demo.ramp_time
    } else if local < demo.ramp_time + demo.hold_time {
        1.0
    } else {
        (phase - local).max(0.0) / demo.ramp_time
    };
    let mut d = vec![0.0; cables];
    d[c] = demo.amplitude * level;
    (c, d)
}

pub fn demo_leg(common: Common) -> Result<()> {
    let (config, _) = setup(&common, Vec::new())?;
    let demo = config.leg_demo;
    let mut sim = Simulation::leg(&config.scene)?;
    let cables = sim.cables.cables.len();
    let h = sim.params.time_step;
    // Let the leg sag under gravity before the sweep starts.
    for _ in 0..20_000 {
        sim.step().context("settling the leg")?;
        let vmax = sim.state.velocities.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if vmax < 1e-9 {
            break;
        }
    }
    let start = sim.tip_position(0);
    let steps = (cables as f64 * (2.0 * demo.ramp_time + demo.hold_time) / h).round() as usize;
    let mut w = csv::Writer::from_path(common.out.join(LEG_CSV))?;
    w.write_record([
        "schema_version", "step", "time", "active_cable", "d0", "d1", "d2", "tip_x", "tip_y", "tip_z", "tip_dx",
        "tip_dy", "tip_dz",
    ])?;
    for k in 0..steps {
        let t = k as f64 * h;
        let (active, target) = sweep_command(t, &demo, cables);
        sim.set_command(CableCommand { displacements: target });
        sim.step().with_context(|| format!("sweep step {}", k + 1))?;
        let tip = sim.tip_position(0);
        let d = sim.cables.displacements();
        let mut row = vec![
            LEG_SCHEMA_VERSION.to_string(),
            (k + 1).to_string(),
            format!("{:.4}", t + h),
            active.to_string(),
        ];
        row.extend(d.iter().map(|x| x.to_string()));
        row.extend([tip.x, tip.y, tip.z].map(|x| x.to_string()));
        row.extend([tip.x - start.x, tip.y - start.y, tip.z - start.z].map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    eprintln!("wrote {} ({steps} steps)", common.out.join(LEG_CSV).display());
    Ok(())
}

pub fn plot(common: Common) -> Result<()> {
    let (_, _) = setup(&common, Vec::new())?;
    let out = &common.out;
    let mut wrote = Vec::new();
    let curve = out.join(CURVE_CSV);
    if curve.exists() {
        let text = fs::read_to_string(&curve)?;
        write_text(&out.join(CURVE_SVG), &plot::learning_curve_svg(&text)?)?;
        wrote.push(CURVE_SVG);
    }
    let eval = out.join(EVAL_JSON);
    if eval.exists() {
        let report: GoalBenchmarkReport = serde_json::from_str(&fs::read_to_string(&eval)?)
            .with_context(|| format!("parsing {}", eval.display()))?;
        write_text(&out.join(EVAL_SVG), &benchmark_svg(&report))?;
        wrote.push(EVAL_SVG);
    }
    let traj = out.join(TRAJECTORY_JSON);
    if traj.exists() {
        let report: TrajectoryReport = serde_json::from_str(&fs::read_to_string(&traj)?)
            .with_context(|| format!("parsing {}", traj.display()))?;
        write_text(&out.join(TRAJECTORY_SVG), &trajectory_svg(&report))?;
        wrote.push(TRAJECTORY_SVG);
    }
    if wrote.is_empty() {
        bail!(
            "nothing to plot in {}: expected {CURVE_CSV}, {EVAL_JSON} or {TRAJECTORY_JSON}",
            out.display()
        );
    }
    eprintln!("wrote {} in {}", wrote.join(", "), out.display());
    Ok(())
}
