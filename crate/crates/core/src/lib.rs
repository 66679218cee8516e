//! Cable-driven soft tripod: mass-spring simulation, episodic environment,
//! PPO learner and evaluation harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cable;
pub mod contact;
pub mod env;
pub mod error;
pub mod eval;
pub mod exec;
pub mod physics;
pub mod ppo;
pub mod rng;
pub mod scene;

pub use error::{BuildError, EnvError, FormatError, PhysicsError, PpoError};
