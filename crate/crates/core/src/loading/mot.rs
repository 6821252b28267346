use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{invalid, LoadingError};

/// Samples of the MOT centre along its circular path.
const RING_SAMPLES: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MotMode {
    Fixed,
    /// Centre moved on a circle of this radius (m); the profile is the time average.
    Rotating { radius: f64 },
}

/// Mean initial occupancy at each site of a `rows × cols` array (row-major)
/// centred on the MOT. The cloud is a Gaussian of standard deviation
/// `mot_radius` with peak value `peak`.
pub fn mot_overlap_profile(
    rows: usize,
    cols: usize,
    spacing: f64,
    mot_radius: f64,
    mode: MotMode,
    peak: f64,
) -> Result<Vec<f64>, LoadingError> {
    if !(spacing > 0.0 && mot_radius > 0.0) {
        return Err(invalid("mot geometry", "spacing and MOT radius must be positive"));
    }
    if rows == 0 || cols == 0 {
        return Err(invalid("mot geometry", "array must have at least one site"));
    }
    let centres: Vec<(f64, f64)> = match mode {
        MotMode::Fixed => vec![(0.0, 0.0)],
        MotMode::Rotating { radius } if radius < 0.0 => {
            return Err(invalid("rotation radius", format!("must be >= 0, got {radius}")))
        }
        MotMode::Rotating { radius: 0.0 } => vec![(0.0, 0.0)],
        MotMode::Rotating { radius } => (0..RING_SAMPLES)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / RING_SAMPLES as f64;
                (radius * a.cos(), radius * a.sin())
            })
            .collect(),
    };
    let inv = 1.0 / (2.0 * mot_radius * mot_radius);
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let y = (i as f64 - 0.5 * (rows - 1) as f64) * spacing;
        for j in 0..cols {
            let x = (j as f64 - 0.5 * (cols - 1) as f64) * spacing;
            let sum: f64 = centres
                .iter()
                .map(|(cx, cy)| (-((x - cx).powi(2) + (y - cy).powi(2)) * inv).exp())
                .sum();
            out.push(peak * sum / centres.len() as f64);
        }
    }
    Ok(out)
}

/// Standard deviation over mean.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}
