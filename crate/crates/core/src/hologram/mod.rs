//! Phase-only holograms for tweezer arrays by weighted Gerchberg–Saxton.
//!
//! The SLM plane and the focal plane are related by a unitary 2-D DFT. Spot
//! coordinates are given in the centred focal-plane image, with zero spatial
//! frequency at `(height / 2, width / 2)`.

mod export;
mod fft;
mod wgs;

pub use export::{decode_phase_png, decode_raw, encode_phase_png, encode_raw, RawSidecar};
pub use fft::Fft2;
pub use wgs::{
    evaluate_mask, gaussian_incident, run_wgs, target_grid, uniformity, wgs_iterate,
    HologramState, IterationStats, Spot, UniformityReport, WgsOutcome,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HologramError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("phase file: {0}")]
    Decode(String),
}
