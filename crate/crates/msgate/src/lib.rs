//! Files, parameter sweeps and the `msgate` command line on top of
//! `msgate-core`.

pub mod config;
mod error;
pub mod harness;
pub mod io;

pub use error::{Error, Result};
