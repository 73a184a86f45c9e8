//! Finite-field harmonic analysis on varieties over `F_p`.

pub mod distance;
pub mod ffield;
pub mod grid;
pub mod mpoly;
pub mod opnorm;
pub mod qformula;
pub mod seed;
pub mod spectrum;
pub mod variety;

/// Library version recorded in reports and cache keys.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
