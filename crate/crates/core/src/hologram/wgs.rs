use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::fft::Fft2;
use super::HologramError;

/// A focal-plane target in centred pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spot {
    pub row: usize,
    pub col: usize,
    pub amplitude: f64,
}

/// Centred `rows × cols` lattice of unit-amplitude spots with the given pitch
/// on a `height × width` focal plane.
pub fn target_grid(
    rows: usize,
    cols: usize,
    spacing: usize,
    (height, width): (usize, usize),
) -> Result<Vec<Spot>, HologramError> {
    if rows == 0 || cols == 0 || height == 0 || width == 0 {
        return Err(HologramError::InvalidGrid("dimensions must be positive".into()));
    }
    if (rows > 1 || cols > 1) && spacing == 0 {
        return Err(HologramError::InvalidGrid("spacing must be positive".into()));
    }
    let first = |n: usize, size: usize| -> Result<usize, HologramError> {
        let extent = (n - 1) * spacing;
        let start = (size / 2).checked_sub(extent / 2);
        match start {
            Some(s) if s + extent < size => Ok(s),
            _ => Err(HologramError::InvalidGrid(format!(
                "{n} spots at pitch {spacing} do not fit in {size} px"
            ))),
        }
    };
    let (r0, c0) = (first(rows, height)?, first(cols, width)?);
    Ok((0..rows)
        .flat_map(|i| {
            (0..cols).map(move |j| Spot {
                row: r0 + i * spacing,
                col: c0 + j * spacing,
                amplitude: 1.0,
            })
        })
        .collect())
}

/// Gaussian beam amplitude with 1/e² intensity radius `radius_fraction · min(H, W)`.
pub fn gaussian_incident(height: usize, width: usize, radius_fraction: f64) -> Vec<f64> {
    let w0 = radius_fraction * height.min(width) as f64;
    let (cy, cx) = (0.5 * (height as f64 - 1.0), 0.5 * (width as f64 - 1.0));
    let mut out = Vec::with_capacity(height * width);
    for i in 0..height {
        for j in 0..width {
            let r2 = (i as f64 - cy).powi(2) + (j as f64 - cx).powi(2);
            out.push((-r2 / (w0 * w0)).exp());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub intensities: Vec<f64>,
    /// 1 − (max − min)/(max + min) over spot intensities.
    pub uniformity: f64,
    /// Fraction of the incident power landing on spot pixels.
    pub efficiency: f64,
}

pub fn uniformity(intensities: &[f64]) -> f64 {
    let max = intensities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = intensities.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 {
        return 0.0;
    }
    1.0 - (max - min) / (max + min)
}

#[derive(Debug, Clone)]
pub struct HologramState {
    pub height: usize,
    pub width: usize,
    /// SLM phase, rad in [0, 2π), row-major.
    pub phase: Vec<f64>,
    pub incident: Vec<f64>,
    pub spots: Vec<Spot>,
    pub weights: Vec<f64>,
    pub iteration: usize,
    pub history: Vec<f64>,
    /// Spot amplitudes rescaled so their total power equals the incident power.
    scaled_targets: Vec<f64>,
    fft_index: Vec<usize>,
}

impl HologramState {
    /// Starts from a seeded uniformly random phase.
    pub fn new(
        height: usize,
        width: usize,
        spots: Vec<Spot>,
        incident: Vec<f64>,
        seed: u64,
    ) -> Result<Self, HologramError> {
        if incident.len() != height * width {
            return Err(HologramError::ShapeMismatch(format!(
                "incident profile has {} pixels, expected {}",
                incident.len(),
                height * width
            )));
        }
        if spots.is_empty() {
            return Err(HologramError::InvalidGrid("no target spots".into()));
        }
        if let Some(s) = spots.iter().find(|s| s.row >= height || s.col >= width) {
            return Err(HologramError::InvalidGrid(format!(
                "spot ({}, {}) outside {height}×{width}",
                s.row, s.col
            )));
        }
        if spots.iter().any(|s| !(s.amplitude > 0.0)) {
            return Err(HologramError::InvalidGrid("spot amplitudes must be positive".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let phase = (0..height * width).map(|_| rng.random::<f64>() * TAU).collect();
        let power: f64 = incident.iter().map(|a| a * a).sum();
        let target_power: f64 = spots.iter().map(|s| s.amplitude * s.amplitude).sum();
        let k = (power / target_power).sqrt();
        let fft_index = spots.iter().map(|s| fft_index(s, height, width)).collect();
        Ok(Self {
            height,
            width,
            phase,
            incident,
            weights: vec![1.0; spots.len()],
            scaled_targets: spots.iter().map(|s| k * s.amplitude).collect(),
            spots,
            iteration: 0,
            history: Vec::new(),
            fft_index,
        })
    }

    pub fn incident_power(&self) -> f64 {
        self.incident.iter().map(|a| a * a).sum()
    }
}

/// Position of a centred spot in unshifted DFT order.
fn fft_index(s: &Spot, height: usize, width: usize) -> usize {
    let r = (s.row + height - height / 2) % height;
    let c = (s.col + width - width / 2) % width;
    r * width + c
}

fn far_field(phase: &[f64], incident: &[f64], fft: &Fft2) -> Vec<Complex64> {
    let mut field: Vec<Complex64> = incident
        .iter()
        .zip(phase)
        .map(|(&a, &p)| Complex64::from_polar(a, p))
        .collect();
    fft.forward(&mut field);
    field
}

fn wrap(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn report(field: &[Complex64], indices: &[usize], incident_power: f64) -> UniformityReport {
    let intensities: Vec<f64> = indices.iter().map(|&k| field[k].norm_sqr()).collect();
    UniformityReport {
        uniformity: uniformity(&intensities),
        efficiency: (intensities.iter().sum::<f64>() / incident_power).clamp(0.0, 1.0),
        intensities,
    }
}

/// Far-field spot intensities of a phase mask.
pub fn evaluate_mask(
    phase: &[f64],
    incident: &[f64],
    (height, width): (usize, usize),
    spots: &[Spot],
) -> Result<UniformityReport, HologramError> {
    if phase.len() != height * width || incident.len() != height * width {
        return Err(HologramError::ShapeMismatch(format!(
            "phase has {} and incident {} pixels, expected {}",
            phase.len(),
            incident.len(),
            height * width
        )));
    }
    let fft = Fft2::new(height, width);
    let field = far_field(phase, incident, &fft);
    let indices: Vec<usize> = spots.iter().map(|s| fft_index(s, height, width)).collect();
    let power: f64 = incident.iter().map(|a| a * a).sum();
    Ok(report(&field, &indices, power))
}

/// What one iteration saw in the far field of the mask it started from.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub report: UniformityReport,
    /// |Σ|far field|² − Σ|incident|²| relative to the incident power.
    pub parseval_error: f64,
}

/// One weighted Gerchberg–Saxton cycle. Non-spot focal-plane pixels keep
/// their computed field.
pub fn wgs_iterate(state: &mut HologramState, fft: &Fft2) -> IterationStats {
    let power = state.incident_power();
    let mut field = far_field(&state.phase, &state.incident, fft);
    let far_power: f64 = field.iter().map(|z| z.norm_sqr()).sum();
    let stats = IterationStats {
        report: report(&field, &state.fft_index, power),
        parseval_error: (far_power - power).abs() / power,
    };

    let amps: Vec<f64> = state.fft_index.iter().map(|&k| field[k].norm()).collect();
    let mean = amps.iter().sum::<f64>() / amps.len() as f64;
    for (w, &a) in state.weights.iter_mut().zip(&amps) {
        if a > 0.0 {
            *w *= mean / a;
        }
    }
    let norm = state.weights.iter().sum::<f64>() / state.weights.len() as f64;
    state.weights.iter_mut().for_each(|w| *w /= norm);

    for ((&k, &w), &t) in state.fft_index.iter().zip(&state.weights).zip(&state.scaled_targets) {
        field[k] = Complex64::from_polar(w * t, field[k].arg());
    }
    fft.inverse(&mut field);
    for (p, z) in state.phase.iter_mut().zip(&field) {
        *p = wrap(z.arg());
    }
    state.iteration += 1;
    state.history.push(stats.report.uniformity);
    stats
}

#[derive(Debug, Clone)]
pub struct WgsOutcome {
    /// Best mask seen.
    pub phase: Vec<f64>,
    pub report: UniformityReport,
    /// Iteration at which the best mask was evaluated (0 = initial phase).
    pub best_iteration: usize,
    /// Uniformity of the mask entering each iteration.
    pub history: Vec<f64>,
    pub max_parseval_error: f64,
    pub converged: bool,
    pub weights: Vec<f64>,
}

/// Iterates until the mask reaches `u_goal` or `max_iter` cycles have run,
/// returning the most uniform mask encountered.
pub fn run_wgs(
    mut state: HologramState,
    max_iter: usize,
    u_goal: f64,
) -> Result<WgsOutcome, HologramError> {
    if max_iter == 0 {
        return Err(HologramError::InvalidGrid("max_iter must be at least 1".into()));
    }
    let fft = Fft2::new(state.height, state.width);
    let mut best: Option<(Vec<f64>, UniformityReport, usize)> = None;
    let mut max_parseval: f64 = 0.0;
    let mut converged = false;
    for _ in 0..max_iter {
        let phase_in = state.phase.clone();
        let iteration = state.iteration;
        let stats = wgs_iterate(&mut state, &fft);
        max_parseval = max_parseval.max(stats.parseval_error);
        let u = stats.report.uniformity;
        if best.as_ref().is_none_or(|b| u > b.1.uniformity) {
            best = Some((phase_in, stats.report, iteration));
        }
        if u >= u_goal {
            converged = true;
            break;
        }
    }
    let (phase, report, best_iteration) = best.expect("at least one iteration ran");
    Ok(WgsOutcome {
        phase,
        report,
        best_iteration,
        history: state.history,
        max_parseval_error: max_parseval,
        converged,
        weights: state.weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_centred_spot() {
        let spots = target_grid(1, 1, 0, (64, 64)).unwrap();
        assert_eq!((spots[0].row, spots[0].col), (32, 32));
    }

    #[test]
    fn two_by_two_offsets() {
        let spots = target_grid(2, 2, 64, (512, 512)).unwrap();
        let rows: Vec<usize> = spots.iter().map(|s| s.row).collect();
        assert_eq!(rows, vec![224, 224, 288, 288]);
        assert_eq!(spots[1].col, 288);
    }

    #[test]
    fn full_scale_grid_fits() {
        let spots = target_grid(61, 49, 8, (1200, 1920)).unwrap();
        assert_eq!(spots.len(), 2989);
        assert!(target_grid(61, 49, 30, (1200, 1920)).is_err());
        assert!(target_grid(0, 3, 4, (64, 64)).is_err());
    }

    #[test]
    fn uniformity_arithmetic() {
        assert_eq!(uniformity(&[2.0, 2.0, 2.0]), 1.0);
        assert_relative_eq!(uniformity(&[1.0, 3.0]), 0.5);
    }

    #[test]
    fn flat_phase_sends_power_to_dc() {
        let (h, w) = (32, 32);
        let spots = target_grid(1, 1, 0, (h, w)).unwrap();
        let incident = vec![1.0; h * w];
        let r = evaluate_mask(&vec![0.0; h * w], &incident, (h, w), &spots).unwrap();
        assert_eq!(r.uniformity, 1.0);
        assert_relative_eq!(r.efficiency, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn equal_amplitudes_leave_weights_unchanged() {
        let (h, w) = (16, 16);
        // One spot: the mean amplitude is its own amplitude.
        let spots = target_grid(1, 1, 0, (h, w)).unwrap();
        let mut state = HologramState::new(h, w, spots, vec![1.0; h * w], 0).unwrap();
        state.phase = vec![0.0; h * w];
        wgs_iterate(&mut state, &Fft2::new(h, w));
        assert_eq!(state.weights, vec![1.0]);
    }

    #[test]
    fn two_by_two_converges() {
        let (h, w) = (512, 512);
        let spots = target_grid(2, 2, 64, (h, w)).unwrap();
        let state = HologramState::new(h, w, spots.clone(), gaussian_incident(h, w, 0.45), 1).unwrap();
        let out = run_wgs(state, 50, 0.99).unwrap();
        assert!(out.report.uniformity >= 0.99, "{:?}", out.history);
        let again = evaluate_mask(&out.phase, &gaussian_incident(h, w, 0.45), (h, w), &spots).unwrap();
        assert_eq!(again, out.report);
        assert!(out.phase.iter().all(|p| (0.0..TAU).contains(p)));
    }

    #[test]
    fn seeded_runs_repeat() {
        let (h, w) = (64, 64);
        let spots = target_grid(3, 3, 8, (h, w)).unwrap();
        let run = |seed| {
            let s = HologramState::new(h, w, spots.clone(), gaussian_incident(h, w, 0.45), seed).unwrap();
            run_wgs(s, 10, 1.1).unwrap()
        };
        assert_eq!(run(5).phase, run(5).phase);
        assert_ne!(run(5).phase, run(6).phase);
    }

    #[test]
    fn rejects_bad_state() {
        let spots = vec![Spot { row: 70, col: 0, amplitude: 1.0 }];
        assert!(HologramState::new(64, 64, spots, vec![1.0; 64 * 64], 0).is_err());
        let spots = target_grid(1, 1, 0, (64, 64)).unwrap();
        assert!(HologramState::new(64, 64, spots, vec![1.0; 10], 0).is_err());
    }
}
