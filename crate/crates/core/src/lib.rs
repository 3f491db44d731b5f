//! First-exit and first-passage statistics of Ornstein-Uhlenbeck processes.

pub mod curve;
pub mod error;
pub mod extensions;
pub mod mc_oracle;
pub mod mean_exit;
pub mod ou_model;
pub mod quad;
pub mod spectral;
pub mod specfun;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
