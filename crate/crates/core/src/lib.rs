//! Spectral laboratory for the Choquard equation
//! `-Δu + u = (I_α * |u|^p)|u|^{p-2}u` on truncated periodic boxes.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the solvers and experiments
//! use.

pub mod energy;
pub mod error;
pub mod fft;
pub mod grid;
pub mod io;
pub mod lab;
pub mod reference;
pub mod riesz;
pub mod scalar;
pub mod solvers;

mod eigen;
mod optimize;

pub use error::{Error, Result, SignPart};
pub use grid::GridSpec;
pub use scalar::Scalar;

pub type Field = grid::FieldOf<f64>;
pub type SpectralField = grid::SpectralFieldOf<f64>;
pub type FieldF32 = grid::FieldOf<f32>;
