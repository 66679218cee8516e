//! Run configuration: one JSON document with a section per component,
//! defaults for every field and dotted `--set` overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tripod_core::env::EpisodeConfig;
use tripod_core::ppo::PpoConfig;
use tripod_core::scene::SceneConfig;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    #[default]
    Robot,
    PointMass,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Robot => "robot",
            EnvKind::PointMass => "point_mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_goals: usize,
    /// mm
    pub arc_radius: f64,
    pub arc_degrees: f64,
    pub waypoints: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_goals: 50,
            arc_radius: 80.0,
            arc_degrees: 90.0,
            waypoints: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegDemoConfig {
    /// Peak shortening of each cable in turn, mm.
    pub amplitude: f64,
    /// Seconds per ramp; each cable ramps up, holds, and ramps down.
    pub ramp_time: f64,
    pub hold_time: f64,
}

impl Default for LegDemoConfig {
    fn default() -> Self {
        Self {
            amplitude: 15.0,
            ramp_time: 1.0,
            hold_time: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub env: EnvKind,
    pub seed: u64,
    pub scene: SceneConfig,
    pub episode: EpisodeConfig,
    pub ppo: PpoConfig,
    pub eval: EvalConfig,
    pub leg_demo: LegDemoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            env: EnvKind::default(),
            seed: 0,
            scene: SceneConfig::default(),
            episode: EpisodeConfig::default(),
            ppo: PpoConfig::default(),
            eval: EvalConfig::default(),
            leg_demo: LegDemoConfig::default(),
        }
    }
}

/// The config file named on the command line does not exist.
#[derive(Debug)]
pub struct MissingConfig(pub PathBuf);

impl std::fmt::Display for MissingConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingConfig {}

/// Reads `path` (or the built-in defaults) and applies `overrides`.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut doc = serde_json::to_value(RunConfig::default())?;
    if let Some(path) = path {
        if !path.exists() {
            return Err(MissingConfig(path.to_path_buf()).into());
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        merge(&mut doc, file, "").with_context(|| format!("in {}", path.display()))?;
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let config: RunConfig = serde_json::from_value(doc).context("invalid configuration")?;
    if config.schema_version != CONFIG_SCHEMA_VERSION {
        bail!(
            "schema_version: config is version {}, this build reads {}",
            config.schema_version,
            CONFIG_SCHEMA_VERSION
        );
    }
    config.scene.validate()?;
    config.episode.validate()?;
    config.ppo.validate()?;
    if config.eval.n_goals == 0 {
        bail!("eval.n_goals must be >= 1");
    }
    if config.eval.waypoints == 0 {
        bail!("eval.waypoints must be >= 1");
    }
    Ok(config)
}

/// Recursively overlays `src` on `dst`. Keys absent from the defaults are
/// rejected so typos do not pass silently.
fn merge(dst: &mut Value, src: Value, at: &str) -> Result<()> {
    match (dst, src) {
        (Value::Object(d), Value::Object(s)) => {
            for (k, v) in s {
                let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match d.get_mut(&k) {
                    Some(slot) => merge(slot, v, &path)?,
                    None => bail!("unknown config key `{path}`"),
                }
            }
            Ok(())
        }
        (d, s) => {
            *d = s;
            Ok(())
        }
    }
}

/// `a.b.c=value`, where `value` is parsed as JSON and falls back to a string.
fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects key=value, got `{spec}`"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut patch = value;
    for part in key.rsplit('.') {
        let mut m = serde_json::Map::new();
        m.insert(part.to_string(), patch);
        patch = Value::Object(m);
    }
    merge(doc, patch, "").with_context(|| format!("--set {spec}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_file_matches_built_in_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
        assert_eq!(load(Some(&path), &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn dotted_override_reaches_nested_field() {
        let c = load(None, &["ppo.horizon=128".into(), "episode.goal_band=[40,60]".into(), "env=point_mass".into()])
            .unwrap();
        assert_eq!(c.ppo.horizon, 128);
        assert_eq!(c.episode.goal_band, [40.0, 60.0]);
        assert_eq!(c.env, EnvKind::PointMass);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = load(None, &["ppo.horizn=128".into()]).unwrap_err();
        assert!(format!("{e:#}").contains("ppo.horizn"), "{e:#}");
    }

    #[test]
    fn invalid_value_names_the_field() {
        let e = load(None, &["episode.d_max=5".into()]).unwrap_err();
        assert!(format!("{e:#}").contains("d_max"), "{e:#}");
    }

    #[test]
    fn optional_fields_can_be_set() {
        let c = load(None, &["episode.height_limits=[10,200]".into()]).unwrap();
        assert_eq!(c.episode.height_limits, Some([10.0, 200.0]));
    }
}
