pub mod algebra;
pub mod certify;
pub mod cli;
pub mod cohomology;
pub mod config;
pub mod diagonal;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod norms;
pub mod linalg;
pub mod spin;
pub mod wedderburn;

pub use config::ToleranceConfig;
pub use error::{Error, Result};
