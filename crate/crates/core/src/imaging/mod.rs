//! Fluorescence-image synthesis and single-atom detection.

mod fidelity;
mod filter;
mod io;
mod pipeline;
mod readout;
mod synth;
mod threshold;

pub use fidelity::{estimate_fidelity, imaging_lifetime, FidelityEstimate, LifetimeFit, TripleCounts};
pub use filter::{filter_frame, gaussian_blur, FilterParams};
pub use io::{decode_raw_frame, decode_tiff, encode_raw_frame, encode_tiff, FrameSidecar};
pub use pipeline::{analyze, classification_accuracy, simulate_sequence, Analysis, ImagingScenario, SyntheticSequence};
pub use readout::{calibrate_weights, classify, site_brightness, SiteRoi, ROI_SIZE};
pub use synth::{out_of_plane_background, square_lattice, synthesize_frame, Blob, SynthParams};
pub use threshold::{fit_threshold, ThresholdFit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("site {site} has no signal in its region of interest")]
    NoSignal { site: usize },
    #[error("region of interest of site {site} leaves the frame")]
    RoiOutOfBounds { site: usize },
    #[error("brightness distribution is unimodal (means {0:.3} and {1:.3} closer than two pooled sigma)")]
    Unimodal(f64, f64),
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),
    #[error("lifetime fit failed: {0}")]
    FitFailure(String),
    #[error("frame file: {0}")]
    Decode(String),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ImagingError {
    ImagingError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Camera counts on a row-major `height × width` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageFrame {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
    /// Exposure time, s.
    pub exposure: f64,
}

impl ImageFrame {
    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            pixels: vec![value; height * width],
            exposure: 0.0,
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn total(&self) -> f64 {
        self.pixels.iter().sum()
    }
}
