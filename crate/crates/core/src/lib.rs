//! Simulation of differential equations driven by multiplicative fractional
//! Brownian motion in the smooth (`H > 1`), Young (`1/2 < H < 1`) and rough
//! (`1/3 < H <= 1/2`) regimes.

pub mod config;
pub mod controlled;
pub mod error;
pub mod fbm;
pub mod fft;
pub mod function_spaces;
pub mod grid;
pub mod heatkernel;
pub mod holder;
pub mod integrate;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod roughpath;
pub mod scalar;
pub mod solver;
pub mod suite;

pub use error::{Error, Result};
pub use grid::{GridPath, TimeGrid};
pub use scalar::Real;

/// Double precision path.
pub type Path = GridPath<f64>;
/// Single precision path.
pub type Path32 = GridPath<f32>;
