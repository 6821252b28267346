use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{invalid, ImageFrame, ImagingError};

/// Defocused fluorescence from an out-of-plane trap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub row: f64,
    pub col: f64,
    pub sigma: f64,
    /// Peak photon rate per pixel per exposure.
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub psf_sigma: f64,
    pub photons_per_atom: f64,
    pub blobs: Vec<Blob>,
    /// Camera bias added to every pixel.
    pub offset: f64,
    pub read_noise: f64,
    pub shot_noise: bool,
    pub exposure: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            psf_sigma: 1.6,
            photons_per_atom: 400.0,
            blobs: Vec::new(),
            offset: 100.0,
            read_noise: 2.0,
            shot_noise: true,
            exposure: 0.2,
        }
    }
}

/// Site centres (row, col) of a `rows × cols` lattice with the given pitch,
/// first site at `origin`.
pub fn square_lattice(rows: usize, cols: usize, pitch: f64, origin: (f64, f64)) -> Vec<(f64, f64)> {
    (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (origin.0 + i as f64 * pitch, origin.1 + j as f64 * pitch)))
        .collect()
}

/// `count` broad blobs scattered over the frame, widths between 30 and 60 px.
pub fn out_of_plane_background(height: usize, width: usize, count: usize, peak: f64, seed: u64) -> Vec<Blob> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Blob {
            row: rng.random::<f64>() * height as f64,
            col: rng.random::<f64>() * width as f64,
            sigma: 30.0 + 30.0 * rng.random::<f64>(),
            peak,
        })
        .collect()
}

fn add_gaussian(rate: &mut [f64], width: usize, (r0, c0): (f64, f64), sigma: f64, scale: f64) {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let height = rate.len() / width;
    let gy: Vec<f64> = (0..height).map(|i| (-(i as f64 - r0).powi(2) * inv).exp()).collect();
    let gx: Vec<f64> = (0..width).map(|j| (-(j as f64 - c0).powi(2) * inv).exp()).collect();
    for (i, row) in rate.chunks_exact_mut(width).enumerate() {
        for (p, g) in row.iter_mut().zip(&gx) {
            *p += scale * gy[i] * g;
        }
    }
}

/// Atoms at the occupied sites imaged with a Gaussian PSF, plus out-of-plane
/// blobs, photon shot noise, camera offset and Gaussian read noise.
pub fn synthesize_frame<R: Rng + ?Sized>(
    (height, width): (usize, usize),
    sites: &[(f64, f64)],
    occupancy: &[bool],
    params: &SynthParams,
    rng: &mut R,
) -> Result<ImageFrame, ImagingError> {
    if sites.len() != occupancy.len() {
        return Err(invalid(
            "occupancy",
            format!("{} flags for {} sites", occupancy.len(), sites.len()),
        ));
    }
    if !(params.psf_sigma > 0.0 && params.photons_per_atom >= 0.0 && params.read_noise >= 0.0) {
        return Err(invalid("synthesis", "need psf_sigma > 0, photons >= 0, read_noise >= 0"));
    }
    let mut rate = vec![0.0; height * width];
    let norm = params.photons_per_atom / (2.0 * PI * params.psf_sigma * params.psf_sigma);
    for (&site, _) in sites.iter().zip(occupancy).filter(|(_, &o)| o) {
        add_gaussian(&mut rate, width, site, params.psf_sigma, norm);
    }
    for b in &params.blobs {
        add_gaussian(&mut rate, width, (b.row, b.col), b.sigma, b.peak);
    }
    let read = Normal::new(0.0, params.read_noise).expect("read noise checked above");
    let pixels = rate
        .into_iter()
        .map(|mean| {
            let photons = if params.shot_noise && mean > 0.0 {
                Poisson::new(mean).expect("positive mean").sample(rng)
            } else {
                mean
            };
            let noise = if params.read_noise > 0.0 { read.sample(rng) } else { 0.0 };
            photons + params.offset + noise
        })
        .collect();
    Ok(ImageFrame {
        height,
        width,
        pixels,
        exposure: params.exposure,
    })
}
