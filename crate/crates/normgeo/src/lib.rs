//! Command-line front end and file formats for `normgeo-core`.
//!
//! The library half exists so integration tests can reuse the rayon
//! executor, the canonical JSON writer and the config loader.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod json;

pub use error::CliError;
pub use exec::Rayon;
