use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{invalid, ImagingError};

const MAX_EM_STEPS: usize = 1000;
const LOG_LIKELIHOOD_TOLERANCE: f64 = 1e-10;
/// Minimum separation of the fitted means, in pooled standard deviations.
const UNIMODAL_SEPARATION: f64 = 2.0;
/// Lower quantiles used to seed the component means; the upper mean starts
/// at the mirrored quantile.
const SEED_QUANTILES: [f64; 10] = [0.25, 0.1, 0.05, 0.15, 0.2, 0.3, 0.35, 0.4, 0.02, 0.45];

/// Two-component Gaussian mixture, component 0 the dimmer one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub threshold: f64,
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub sigmas: [f64; 2],
    pub log_likelihood: f64,
    /// Posteriors never crossed between the means; threshold is their midpoint.
    pub midpoint_fallback: bool,
}

impl ThresholdFit {
    fn log_component(&self, k: usize, x: f64) -> f64 {
        let z = (x - self.means[k]) / self.sigmas[k];
        self.weights[k].ln() - 0.5 * z * z - self.sigmas[k].ln() - 0.5 * (2.0 * PI).ln()
    }

    /// log[π₁N₁(x)] − log[π₀N₀(x)].
    pub fn log_posterior_ratio(&self, x: f64) -> f64 {
        self.log_component(1, x) - self.log_component(0, x)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn em(samples: &[f64], init: [f64; 2], floor: f64) -> ThresholdFit {
    let spread = (init[1] - init[0]).abs().max(floor);
    let mut fit = ThresholdFit {
        threshold: 0.0,
        weights: [0.5, 0.5],
        means: init,
        sigmas: [0.5 * spread, 0.5 * spread],
        log_likelihood: f64::NEG_INFINITY,
        midpoint_fallback: false,
    };
    let mut resp = vec![0.0; samples.len()];
    for _ in 0..MAX_EM_STEPS {
        let mut ll = 0.0;
        for (r, &x) in resp.iter_mut().zip(samples) {
            let (a, b) = (fit.log_component(0, x), fit.log_component(1, x));
            let m = a.max(b);
            let lse = m + ((a - m).exp() + (b - m).exp()).ln();
            *r = (b - lse).exp();
            ll += lse;
        }
        let n1: f64 = resp.iter().sum();
        let n0 = samples.len() as f64 - n1;
        if n0 <= 1.0 || n1 <= 1.0 {
            fit.log_likelihood = ll;
            break;
        }
        let m1 = resp.iter().zip(samples).map(|(r, x)| r * x).sum::<f64>() / n1;
        let m0 = resp.iter().zip(samples).map(|(r, x)| (1.0 - r) * x).sum::<f64>() / n0;
        let v1 = resp.iter().zip(samples).map(|(r, x)| r * (x - m1).powi(2)).sum::<f64>() / n1;
        let v0 = resp.iter().zip(samples).map(|(r, x)| (1.0 - r) * (x - m0).powi(2)).sum::<f64>() / n0;
        fit.weights = [n0 / samples.len() as f64, n1 / samples.len() as f64];
        fit.means = [m0, m1];
        fit.sigmas = [v0.sqrt().max(floor), v1.sqrt().max(floor)];
        let done = (ll - fit.log_likelihood).abs() < LOG_LIKELIHOOD_TOLERANCE * ll.abs().max(1.0);
        fit.log_likelihood = ll;
        if done {
            break;
        }
    }
    if fit.means[0] > fit.means[1] {
        fit.means.swap(0, 1);
        fit.sigmas.swap(0, 1);
        fit.weights.swap(0, 1);
    }
    fit
}

/// Fits a two-Gaussian mixture by expectation-maximization from several
/// quantile-seeded starts and places the threshold where the two weighted
/// components are equally likely.
pub fn fit_threshold(samples: &[f64]) -> Result<ThresholdFit, ImagingError> {
    if samples.len() < 200 {
        return Err(invalid("samples", format!("need at least 200, got {}", samples.len())));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(invalid("samples", "all brightness values must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if range <= 0.0 {
        return Err(ImagingError::Unimodal(sorted[0], sorted[0]));
    }
    let floor = 1e-6 * range;

    let mut best: Option<ThresholdFit> = None;
    for q in SEED_QUANTILES {
        let fit = em(samples, [quantile(&sorted, q), quantile(&sorted, 1.0 - q)], floor);
        if best.is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
            best = Some(fit);
        }
    }
    let mut fit = best.expect("at least one start");

    // Ashman's D < 2: a single Gaussian split by EM lands around D ≈ 1.
    let pooled = (0.5 * (fit.sigmas[0].powi(2) + fit.sigmas[1].powi(2))).sqrt();
    if fit.means[1] - fit.means[0] < UNIMODAL_SEPARATION * pooled {
        return Err(ImagingError::Unimodal(fit.means[0], fit.means[1]));
    }

    let (mut lo, mut hi) = (fit.means[0], fit.means[1]);
    if fit.log_posterior_ratio(lo) < 0.0 && fit.log_posterior_ratio(hi) > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fit.log_posterior_ratio(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        fit.threshold = 0.5 * (lo + hi);
    } else {
        fit.threshold = 0.5 * (fit.means[0] + fit.means[1]);
        fit.midpoint_fallback = true;
    }
    Ok(fit)
}
