use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    calibrate_weights, estimate_fidelity, filter_frame, fit_threshold, out_of_plane_background, site_brightness,
    square_lattice, synthesize_frame, FidelityEstimate, FilterParams, ImageFrame, ImagingError, SiteRoi, SynthParams,
    ThresholdFit,
};
use crate::imaging::invalid;
use crate::loading::trial_rng;

/// Synthetic imaging run: a square array photographed three times per shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImagingScenario {
    pub rows: usize,
    pub cols: usize,
    /// Site spacing, px.
    pub pitch: f64,
    /// Distance from the frame edge to the outermost sites, px.
    pub margin: f64,
    pub shots: usize,
    pub filling: f64,
    pub loss_per_image: f64,
    /// Fully loaded frames used only to calibrate the readout weights.
    pub calibration_frames: usize,
    pub background_blobs: usize,
    /// Peak photons per pixel of each out-of-plane blob.
    pub background_peak: f64,
    pub synth: SynthParams,
    pub filter: FilterParams,
}

impl Default for ImagingScenario {
    fn default() -> Self {
        Self {
            rows: 16,
            cols: 16,
            pitch: 12.0,
            margin: 15.0,
            shots: 100,
            filling: 0.6,
            loss_per_image: 0.009,
            calibration_frames: 50,
            background_blobs: 6,
            background_peak: 0.1,
            synth: SynthParams::default(),
            filter: FilterParams {
                bias: SynthParams::default().offset,
                ..FilterParams::default()
            },
        }
    }
}

impl ImagingScenario {
    pub fn validate(&self) -> Result<(), ImagingError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(invalid("geometry", "array needs at least one row and column"));
        }
        if !(self.pitch > 0.0 && self.margin >= 0.0) {
            return Err(invalid("geometry", "need pitch > 0 and margin >= 0"));
        }
        if self.shots == 0 || self.calibration_frames == 0 {
            return Err(invalid("shots", "need at least one shot and one calibration frame"));
        }
        for (name, p) in [("filling", self.filling), ("loss_per_image", self.loss_per_image)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(name, format!("{p} is not a probability")));
            }
        }
        if !(self.background_peak >= 0.0) {
            return Err(invalid("background_peak", "must be non-negative"));
        }
        self.filter.validate()
    }

    pub fn sites(&self) -> Vec<(f64, f64)> {
        square_lattice(self.rows, self.cols, self.pitch, (self.margin, self.margin))
    }

    pub fn frame_shape(&self) -> (usize, usize) {
        let extent = |n: usize| (2.0 * self.margin + (n - 1) as f64 * self.pitch).ceil() as usize + 1;
        (extent(self.rows), extent(self.cols))
    }

    /// Synthesis parameters with the scenario's out-of-plane blobs appended.
    pub fn synth_with_background(&self, seed: u64) -> SynthParams {
        let (h, w) = self.frame_shape();
        let mut synth = self.synth.clone();
        synth
            .blobs
            .extend(out_of_plane_background(h, w, self.background_blobs, self.background_peak, seed));
        synth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSequence {
    pub sites: Vec<(f64, f64)>,
    pub calibration: Vec<ImageFrame>,
    /// Three consecutive images per shot, shot-major.
    pub frames: Vec<ImageFrame>,
    /// True occupancy per frame and site.
    pub truth: Vec<Vec<bool>>,
}

/// Draws loading and per-image loss, then renders every frame with its own
/// random stream so the result is independent of thread count.
pub fn simulate_sequence(scenario: &ImagingScenario, seed: u64) -> Result<SyntheticSequence, ImagingError> {
    scenario.validate()?;
    let sites = scenario.sites();
    let shape = scenario.frame_shape();
    let synth = scenario.synth_with_background(seed);

    let mut rng = trial_rng(seed, 0);
    let mut truth = Vec::with_capacity(3 * scenario.shots);
    for _ in 0..scenario.shots {
        let mut present: Vec<bool> = sites.iter().map(|_| rng.random::<f64>() < scenario.filling).collect();
        for image in 0..3 {
            if image > 0 {
                for p in present.iter_mut().filter(|p| **p) {
                    *p = rng.random::<f64>() >= scenario.loss_per_image;
                }
            }
            truth.push(present.clone());
        }
    }

    let full = vec![true; sites.len()];
    let render = |stream: usize, occupancy: &[bool]| {
        synthesize_frame(shape, &sites, occupancy, &synth, &mut trial_rng(seed, 1 + stream as u64))
    };
    let frames = truth
        .par_iter()
        .enumerate()
        .map(|(k, occ)| render(k, occ))
        .collect::<Result<Vec<_>, _>>()?;
    let calibration = (0..scenario.calibration_frames)
        .into_par_iter()
        .map(|k| render(truth.len() + k, &full))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SyntheticSequence {
        sites,
        calibration,
        frames,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub rois: Vec<SiteRoi>,
    /// Weighted brightness per frame and site.
    pub brightness: Vec<Vec<f64>>,
    pub threshold: ThresholdFit,
    pub occupancy: Vec<Vec<bool>>,
    pub estimate: FidelityEstimate,
}

/// Filters every frame, calibrates readout weights, fits one threshold for
/// all sites and estimates fidelity from consecutive image triples.
pub fn analyze(
    frames: &[ImageFrame],
    calibration: &[ImageFrame],
    sites: &[(f64, f64)],
    filter: &FilterParams,
) -> Result<Analysis, ImagingError> {
    if frames.is_empty() || !frames.len().is_multiple_of(3) {
        return Err(invalid("frames", format!("need a positive multiple of 3, got {}", frames.len())));
    }
    if sites.is_empty() {
        return Err(invalid("sites", "no site centres given"));
    }
    let filtered_cal = calibration
        .par_iter()
        .map(|f| filter_frame(f, filter))
        .collect::<Result<Vec<_>, _>>()?;
    let rois = calibrate_weights(&filtered_cal, sites)?;
    let brightness: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|f| {
            let filtered = filter_frame(f, filter)?;
            Ok(rois.iter().map(|r| site_brightness(&filtered, r)).collect())
        })
        .collect::<Result<_, ImagingError>>()?;
    let samples: Vec<f64> = brightness.iter().flatten().copied().collect();
    let threshold = fit_threshold(&samples)?;
    let occupancy: Vec<Vec<bool>> = brightness
        .iter()
        .map(|row| row.iter().map(|&b| b > threshold.threshold).collect())
        .collect();
    let triples: Vec<[bool; 3]> = occupancy
        .chunks_exact(3)
        .flat_map(|shot| (0..sites.len()).map(move |s| [shot[0][s], shot[1][s], shot[2][s]]))
        .collect();
    let estimate = estimate_fidelity(&triples)?;
    Ok(Analysis {
        rois,
        brightness,
        threshold,
        occupancy,
        estimate,
    })
}

/// Fraction of (frame, site) classifications that agree with the truth.
pub fn classification_accuracy(occupancy: &[Vec<bool>], truth: &[Vec<bool>]) -> f64 {
    let (mut right, mut total) = (0usize, 0usize);
    for (a, b) in occupancy.iter().zip(truth) {
        right += a.iter().zip(b).filter(|(x, y)| x == y).count();
        total += a.len();
    }
    right as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ImagingScenario {
        ImagingScenario {
            rows: 6,
            cols: 6,
            shots: 40,
            calibration_frames: 10,
            ..ImagingScenario::default()
        }
    }

    #[test]
    fn frame_shape_covers_sites() {
        let s = small();
        let (h, w) = s.frame_shape();
        assert_eq!((h, w), (91, 91));
        assert!(s.sites().iter().all(|&(r, c)| r + s.margin < h as f64 && c + s.margin < w as f64));
    }

    #[test]
    fn sequence_is_deterministic() {
        let a = simulate_sequence(&small(), 5).unwrap();
        let b = simulate_sequence(&small(), 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frames.len(), 120);
        assert_ne!(a.frames[0], simulate_sequence(&small(), 6).unwrap().frames[0]);
    }

    #[test]
    fn loss_only_removes_atoms() {
        let seq = simulate_sequence(&small(), 1).unwrap();
        for shot in seq.truth.chunks_exact(3) {
            for ((a, b), c) in shot[0].iter().zip(&shot[1]).zip(&shot[2]) {
                assert!(b <= a && c <= b);
            }
        }
    }

    #[test]
    fn small_array_classifies_well() {
        let seq = simulate_sequence(&small(), 3).unwrap();
        let s = small();
        let a = analyze(&seq.frames, &seq.calibration, &seq.sites, &s.filter).unwrap();
        assert!(classification_accuracy(&a.occupancy, &seq.truth) > 0.98);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = ImagingScenario {
            filling: 1.5,
            ..small()
        };
        assert!(simulate_sequence(&bad, 0).is_err());
        let seq = simulate_sequence(&small(), 0).unwrap();
        assert!(analyze(&seq.frames[..2], &seq.calibration, &seq.sites, &small().filter).is_err());
    }
}
