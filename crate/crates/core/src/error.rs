use thiserror::Error;

/// Failures raised while building a model from geometry and material inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("degenerate lattice: {0}")]
    Degenerate(String),
    #[error("model invariant violated: {0}")]
    Invariant(String),
}

impl BuildError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        BuildError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("step called after the episode ended; call reset first")]
    EpisodeOver,
    #[error("action has {actual} entries, expected {expected}")]
    ActionDimension { expected: usize, actual: usize },
    #[error("action contains a non-finite value")]
    NonFiniteAction,
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("non-finite {0} (training diverged)")]
    NonFinite(&'static str),
    #[error("aborting after {0} consecutive non-finite updates")]
    Diverged(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unsupported schema_version {found} for {kind} (expected {expected})")]
    Version {
        kind: &'static str,
        found: u32,
        expected: u32,
    },
    #[error("dimension mismatch: checkpoint has (obs {ckpt_obs}, act {ckpt_act}), environment has (obs {env_obs}, act {env_act})")]
    Dimension {
        ckpt_obs: usize,
        ckpt_act: usize,
        env_obs: usize,
        env_act: usize,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Build(#[from] BuildError),
}
