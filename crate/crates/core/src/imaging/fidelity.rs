use serde::{Deserialize, Serialize};

use super::{invalid, ImagingError};

/// Occurrences of each occupancy pattern over three consecutive images,
/// indexed by `4·img1 + 2·img2 + img3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TripleCounts(pub [usize; 8]);

impl TripleCounts {
    pub fn from_triples(triples: &[[bool; 3]]) -> Self {
        let mut n = [0; 8];
        for t in triples {
            n[4 * t[0] as usize + 2 * t[1] as usize + t[2] as usize] += 1;
        }
        Self(n)
    }

    pub fn get(&self, a: bool, b: bool, c: bool) -> usize {
        self.0[4 * a as usize + 2 * b as usize + c as usize]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub false_positive: f64,
    pub false_negative: f64,
    /// Per-image atom loss probability.
    pub loss: f64,
    pub fidelity: f64,
    /// Fraction of sites classified occupied in the first image.
    pub filling: f64,
    pub counts: TripleCounts,
}

fn ratio(num: usize, den: usize, what: &str) -> Result<f64, ImagingError> {
    if den == 0 {
        return Err(ImagingError::InsufficientStatistics(format!("no {what} patterns")));
    }
    Ok(num as f64 / den as f64)
}

/// Classification errors and loss from the temporal correlation of three
/// consecutive images.
///
/// A miss in the middle image of an otherwise occupied triple (1,0,1) is a
/// false negative, a lone detection (0,1,0) a false positive, and an atom
/// disappearing in the last image (1,1,0) is loss once misses are removed.
pub fn estimate_fidelity(triples: &[[bool; 3]]) -> Result<FidelityEstimate, ImagingError> {
    if triples.len() < 1000 {
        return Err(invalid("triples", format!("need at least 1000, got {}", triples.len())));
    }
    let n = TripleCounts::from_triples(triples);
    let f_fn = ratio(n.get(true, false, true), n.get(true, false, true) + n.get(true, true, true), "occupied")?;
    let f_fp = ratio(n.get(false, true, false), n.get(false, false, false) + n.get(false, true, false), "empty")?;
    let lost = ratio(n.get(true, true, false), n.get(true, true, false) + n.get(true, true, true), "retained")?;
    let filling = triples.iter().filter(|t| t[0]).count() as f64 / triples.len() as f64;
    Ok(FidelityEstimate {
        false_positive: f_fp,
        false_negative: f_fn,
        loss: (lost - f_fn).max(0.0),
        fidelity: 1.0 - (f_fp * (1.0 - filling) + f_fn * filling),
        filling,
        counts: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeFit {
    /// Decay time τ of S(t) = exp(−t/τ), s.
    pub tau: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

/// Least-squares fit of S(t) = exp(−t/τ) by Gauss–Newton on the rate 1/τ,
/// started from a log-linear fit through the origin.
pub fn imaging_lifetime(times: &[f64], survival: &[f64]) -> Result<LifetimeFit, ImagingError> {
    if times.len() != survival.len() {
        return Err(invalid("survival", "times and fractions differ in length"));
    }
    if times.len() < 5 {
        return Err(invalid("survival", format!("need at least 5 points, got {}", times.len())));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &s) in times.iter().zip(survival) {
        if s > 0.0 {
            num -= t * s.ln();
            den += t * t;
        }
    }
    let mut k = num / den;
    if !(k > 0.0 && k.is_finite()) {
        return Err(ImagingError::FitFailure("survival does not decay".into()));
    }
    for _ in 0..100 {
        let (mut g, mut h) = (0.0, 0.0);
        for (&t, &s) in times.iter().zip(survival) {
            let e = (-k * t).exp();
            let j = -t * e;
            g += j * (e - s);
            h += j * j;
        }
        let step = g / h;
        k -= step;
        if !(k > 0.0) {
            return Err(ImagingError::FitFailure("decay rate left the positive axis".into()));
        }
        if step.abs() < 1e-15 * k {
            break;
        }
    }
    let rss: f64 = times
        .iter()
        .zip(survival)
        .map(|(&t, &s)| ((-k * t).exp() - s).powi(2))
        .sum();
    Ok(LifetimeFit {
        tau: 1.0 / k,
        rms_residual: (rss / times.len() as f64).sqrt(),
    })
}
