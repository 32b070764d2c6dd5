//! Streaming cluster validity indices.

pub mod cvi;
pub mod datagen;
pub mod dispersion;
pub mod engine;
pub mod error;
pub mod io;
pub mod oec;
pub mod oracle;
pub mod par;
pub mod scenario;
pub mod skmeans;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
