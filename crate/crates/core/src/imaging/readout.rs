use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{invalid, ImageFrame, ImagingError};

/// Side length of the square readout window, px.
pub const ROI_SIZE: usize = 10;

/// Weighted readout window of one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRoi {
    pub centre: (f64, f64),
    /// Top-left pixel of the window.
    pub origin: (usize, usize),
    /// Row-major window weights, non-negative with unit sum.
    pub weights: Vec<f64>,
}

fn window_origin(centre: (f64, f64), frame: (usize, usize), site: usize) -> Result<(usize, usize), ImagingError> {
    let half = (ROI_SIZE / 2) as f64;
    let r = (centre.0 - half + 0.5).floor();
    let c = (centre.1 - half + 0.5).floor();
    if r < 0.0 || c < 0.0 || r as usize + ROI_SIZE > frame.0 || c as usize + ROI_SIZE > frame.1 {
        return Err(ImagingError::RoiOutOfBounds { site });
    }
    Ok((r as usize, c as usize))
}

fn window<'a>(frame: &'a ImageFrame, origin: (usize, usize)) -> impl Iterator<Item = f64> + 'a {
    (0..ROI_SIZE).flat_map(move |i| {
        let start = (origin.0 + i) * frame.width + origin.1;
        frame.pixels[start..start + ROI_SIZE].iter().copied()
    })
}

/// Per-site weights from the average filtered brightness profile over a
/// calibration series, clipped at zero and normalized.
pub fn calibrate_weights(frames: &[ImageFrame], centres: &[(f64, f64)]) -> Result<Vec<SiteRoi>, ImagingError> {
    let first = frames.first().ok_or_else(|| invalid("frames", "need at least one calibration frame"))?;
    let shape = (first.height, first.width);
    if frames.iter().any(|f| (f.height, f.width) != shape) {
        return Err(invalid("frames", "calibration frames differ in size"));
    }
    centres
        .iter()
        .enumerate()
        .map(|(site, &centre)| {
            let origin = window_origin(centre, shape, site)?;
            let mut profile = vec![0.0; ROI_SIZE * ROI_SIZE];
            for f in frames {
                for (p, x) in profile.iter_mut().zip(window(f, origin)) {
                    *p += x;
                }
            }
            profile.iter_mut().for_each(|p| *p = p.max(0.0));
            let total: f64 = profile.iter().sum();
            if !(total > 0.0) {
                return Err(ImagingError::NoSignal { site });
            }
            profile.iter_mut().for_each(|p| *p /= total);
            Ok(SiteRoi {
                centre,
                origin,
                weights: profile,
            })
        })
        .collect()
}

/// Weighted sum of the window pixels.
pub fn site_brightness(frame: &ImageFrame, roi: &SiteRoi) -> f64 {
    window(frame, roi.origin).zip(&roi.weights).map(|(x, w)| x * w).sum()
}

/// Occupancy per frame and site: brightness above `threshold`.
pub fn classify(frames: &[ImageFrame], rois: &[SiteRoi], threshold: f64) -> Vec<Vec<bool>> {
    frames
        .par_iter()
        .map(|f| rois.iter().map(|r| site_brightness(f, r) > threshold).collect())
        .collect()
}
