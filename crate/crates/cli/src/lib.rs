//! Scene files, analysis runs and exports behind the `ruled` binary.

pub mod analyze;
pub mod error;
pub mod mesh;
pub mod scene;
pub mod selftest;

pub use error::CliError;
