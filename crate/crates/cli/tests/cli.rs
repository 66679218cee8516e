use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use tripod_core::eval::{GoalBenchmarkReport, TrajectoryReport};
use tripod_core::ppo::{ActorCritic, Checkpoint, ObsNormalizer};

fn tripod(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tripod"));
    cmd.args(args).env_remove("TRIPOD_OUT_DIR");
    cmd
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    tripod(args).arg("--out").arg(out).output().unwrap()
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = run_in(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn train_point_mass(out: &Path) {
    ok(
        out,
        &["train", "--set", "env=point_mass", "--total-steps", "1024", "--n-envs", "2", "--horizon", "512"],
    );
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_config_exits_with_code_two_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere").join("run.json");
    let o = run_in(dir.path(), &["eval", "--random", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(missing.to_str().unwrap()), "{}", stderr(&o));
}

#[test]
fn bad_override_is_an_ordinary_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["eval", "--random", "--set", "episode.no_such_key=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("episode.no_such_key"), "{}", stderr(&o));
}

#[test]
fn one_update_of_accounting() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["train", "--set", "env=point_mass", "--total-steps", "2048", "--n-envs", "1", "--horizon", "2048"],
    );
    let curve = std::fs::read_to_string(dir.path().join("learning_curve.csv")).unwrap();
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines.len(), 2, "{curve}");
    assert!(lines[0].starts_with("schema_version,update,env_steps"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[1..3], &["1", "2048"]);
    let summary = json(&dir.path().join("train_summary.json"));
    assert_eq!(summary["updates"], 1);
    assert_eq!(summary["env_steps"], 2048);
    let ckpt = Checkpoint::from_json(&std::fs::read_to_string(dir.path().join("checkpoint.json")).unwrap()).unwrap();
    assert_eq!(ckpt.env_steps, 2048);
    assert_eq!(ckpt.env, "point_mass");
}

#[test]
fn single_goal_eval() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["eval", "--random", "--set", "env=point_mass", "--n-goals", "1"]);
    let report: GoalBenchmarkReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval_report.json")).unwrap()).unwrap();
    assert_eq!(report.episodes.len(), 1);
    assert_eq!(report.aggregate.episodes, 1);
    let svg = std::fs::read_to_string(dir.path().join("eval_map.svg")).unwrap();
    assert_eq!(svg.matches("class=\"goal\"").count(), 1);
}

#[test]
fn zero_goals_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["eval", "--random", "--n-goals", "0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("n_goals"), "{}", stderr(&o));
}

#[test]
fn corrupted_checkpoint_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("checkpoint.json");
    std::fs::write(&bad, "{\"schema_version\": 1, \"policy\": [1, 2").unwrap();
    let o = run_in(dir.path(), &["eval", "--checkpoint", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("checkpoint"), "{}", stderr(&o));
    assert!(!dir.path().join("eval_report.json").exists());
}

#[test]
fn dimension_mismatch_reports_both_shapes() {
    let dir = tempfile::tempdir().unwrap();
    train_point_mass(dir.path());
    let path = dir.path().join("checkpoint.json");
    let mut ckpt = Checkpoint::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let hidden = ckpt.policy.hidden.clone();
    ckpt.policy = ActorCritic::new(7, 4, &hidden, 0.0, 1.0, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
    ckpt.normalizer = ObsNormalizer::new(vec![1.0; 7]);
    let narrow = dir.path().join("narrow.json");
    std::fs::write(&narrow, ckpt.to_json().unwrap()).unwrap();
    let o = run_in(dir.path(), &["eval", "--set", "env=point_mass", "--checkpoint", narrow.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("(obs 7, act 4)") && err.contains("(obs 8, act 9)"), "{err}");
}

#[test]
fn checkpoint_from_another_env_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    train_point_mass(dir.path());
    let ckpt = dir.path().join("checkpoint.json");
    let o = run_in(dir.path(), &["eval", "--n-goals", "1", "--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("point_mass"), "{}", stderr(&o));
}

#[test]
fn two_waypoint_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["trajectory", "--random", "--set", "env=point_mass", "--waypoints", "2", "--arc-degrees", "45"]);
    let report: TrajectoryReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory_report.json")).unwrap()).unwrap();
    assert_eq!(report.waypoints.len(), 2);
    assert_eq!(report.reached.len(), 2);
    let end = report.waypoints[1];
    let expected = 80.0 * std::f64::consts::FRAC_1_SQRT_2;
    assert!((end[0] - expected).abs() < 1e-9 && (end[1] - expected).abs() < 1e-9, "{end:?}");
    let rows = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, report.total_steps);
}

#[test]
fn zero_amplitude_leg_demo_keeps_the_tip_still() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["demo-leg", "--set", "leg_demo.amplitude=0"]);
    let mut reader = csv::Reader::from_path(dir.path().join("leg_sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (dx, dy, dz) = (col("tip_dx"), col("tip_dy"), col("tip_dz"));
    let mut rows = 0;
    for row in reader.records() {
        let row = row.unwrap();
        for c in [dx, dy, dz] {
            let v: f64 = row[c].parse().unwrap();
            assert!(v.abs() < 1e-6, "row {rows}: {v}");
        }
        rows += 1;
    }
    // Defaults: 3 cables × (2·1 s + 0.5 s) at 0.01 s.
    assert_eq!(rows, 750);
}

#[test]
fn every_subcommand_writes_a_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 5] = [
        ("train", &["train", "--set", "env=point_mass", "--total-steps", "512", "--horizon", "512"]),
        ("eval", &["eval", "--random", "--set", "env=point_mass", "--n-goals", "2"]),
        ("trajectory", &["trajectory", "--random", "--set", "env=point_mass"]),
        ("demo-leg", &["demo-leg", "--set", "leg_demo.amplitude=2", "--set", "leg_demo.ramp_time=0.05", "--set", "leg_demo.hold_time=0.05"]),
        ("plot", &["plot"]),
    ];
    for (name, args) in cases {
        let out = if name == "plot" { dir.path().join("train") } else { dir.path().join(name) };
        std::fs::remove_file(out.join("config.resolved.json")).ok();
        ok(&out, args);
        let config = json(&out.join("config.resolved.json"));
        assert_eq!(config["schema_version"], 1, "{name}");
        assert!(config["episode"]["max_steps"].is_u64(), "{name}");
    }
    assert!(dir.path().join("train").join("learning_curve.svg").exists());
}

#[test]
fn seed_flag_lands_in_the_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["eval", "--random", "--set", "env=point_mass", "--n-goals", "1", "--seed", "77"]);
    assert_eq!(json(&dir.path().join("config.resolved.json"))["seed"], 77);
    assert_eq!(json(&dir.path().join("eval_report.json"))["seed"], 77);
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_env");
    let o = tripod(&["eval", "--random", "--set", "env=point_mass", "--n-goals", "1"])
        .env("TRIPOD_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("eval_report.json").exists());
    assert!(out.join("config.resolved.json").exists());
}

#[test]
fn plot_with_nothing_to_draw_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["plot"]);
    assert!(!o.status.success());
}

/// Regenerates `tests/data/robot_checkpoint.json`. Takes hours on one core.
#[test]
#[ignore]
fn retrain_robot_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "train",
            "--seed",
            "7",
            "--set",
            "episode.goal_band=[40,60]",
            "--total-steps",
            "2000000",
            "--n-envs",
            "8",
            "--horizon",
            "256",
        ],
    );
    let fresh = Checkpoint::from_json(&std::fs::read_to_string(dir.path().join("checkpoint.json")).unwrap()).unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/robot_checkpoint.json");
    let stored = Checkpoint::from_json(&std::fs::read_to_string(data).unwrap()).unwrap();
    assert_eq!(fresh, stored);
}
