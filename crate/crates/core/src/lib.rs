#![no_std]
// Validity checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod basis;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod modes;
pub mod synth;
pub mod quad;
mod warning;

pub use error::{Error, Result};
pub use warning::Warning;
