//! Resonance poles of a 1D reaction path by smooth exterior scaling, a
//! transfer-matrix pole oracle, and cavity polariton rate models.

pub mod commands;
pub mod config;
pub mod constants;
pub mod error;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod pes;
pub mod polariton;
pub mod resonance;
pub mod ses;

pub use error::{Error, Result};
