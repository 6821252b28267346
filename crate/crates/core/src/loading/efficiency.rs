use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::exact_efficiency;
use super::dynamics::{sample_initial_occupancy, simulate_enhanced, trial_rng};
use super::{check_probability, invalid, LoadingError, LoadingParams};

const Z_95: f64 = 1.959_963_984_540_054;

/// Monte Carlo estimate of single-atom loading probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyEstimate {
    pub p_single: f64,
    pub lower: f64,
    pub upper: f64,
    pub successes: usize,
    pub trials: usize,
}

impl EfficiencyEstimate {
    pub fn from_counts(successes: usize, trials: usize) -> Self {
        let (lower, upper) = wilson_interval(successes, trials);
        Self {
            p_single: successes as f64 / trials as f64,
            lower,
            upper,
            successes,
            trials,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.lower..=self.upper).contains(&p)
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    /// Binomial standard error of `p_single`.
    pub fn standard_error(&self) -> f64 {
        (self.p_single * (1.0 - self.p_single) / self.trials as f64).sqrt()
    }
}

/// Wilson score interval at 95 % confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

fn one_trial(params: &LoadingParams, mean: f64, p_ic: f64, index: u64) -> bool {
    let mut rng = trial_rng(params.seed, index);
    let n0 = sample_initial_occupancy(mean, params.initial, &mut rng);
    simulate_enhanced(n0, p_ic, params, &mut rng)
        .map(|t| t.final_occupancy() == 1)
        .unwrap_or(false)
}

/// Fraction of `params.trials` independent sites ending with one atom.
/// Each trial draws from its own stream, so the result does not depend on
/// thread scheduling.
pub fn loading_efficiency(params: &LoadingParams, p_ic: f64) -> Result<EfficiencyEstimate, LoadingError> {
    params.validate()?;
    check_probability("p_ic", p_ic)?;
    if params.trials < 100 {
        return Err(invalid("trials", format!("need at least 100, got {}", params.trials)));
    }
    let successes = (0..params.trials as u64)
        .into_par_iter()
        .filter(|&i| one_trial(params, params.mean_occupancy, p_ic, i))
        .count();
    Ok(EfficiencyEstimate::from_counts(successes, params.trials))
}

/// Loading efficiency over a map of collision probabilities. Every cell
/// reuses the same trial streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMap {
    /// `None` where the collision probability is undefined.
    pub estimates: Vec<Vec<Option<EfficiencyEstimate>>>,
    /// Master-equation value per cell (NaN where undefined).
    pub exact: Vec<Vec<f64>>,
}

impl EfficiencyMap {
    pub fn best(&self) -> Option<(usize, usize, EfficiencyEstimate)> {
        self.estimates
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter_map(move |(j, e)| e.map(|e| (i, j, e))))
            .max_by(|a, b| a.2.p_single.total_cmp(&b.2.p_single))
    }
}

pub fn sweep_loading(pic: &[Vec<f64>], params: &LoadingParams) -> Result<EfficiencyMap, LoadingError> {
    params.validate()?;
    let mut estimates = Vec::with_capacity(pic.len());
    let mut exact = Vec::with_capacity(pic.len());
    for row in pic {
        let mut est_row = Vec::with_capacity(row.len());
        let mut exact_row = Vec::with_capacity(row.len());
        for &p in row {
            if p.is_finite() {
                est_row.push(Some(loading_efficiency(params, p)?));
                exact_row.push(exact_efficiency(params, p)?);
            } else {
                est_row.push(None);
                exact_row.push(f64::NAN);
            }
        }
        estimates.push(est_row);
        exact.push(exact_row);
    }
    Ok(EfficiencyMap { estimates, exact })
}

/// Loading statistics of a whole array over repeated shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEfficiency {
    pub sites: usize,
    pub shots: usize,
    pub estimate: EfficiencyEstimate,
    /// Per-site fraction of shots ending with one atom.
    pub per_site: Vec<f64>,
    /// Exact per-site efficiency.
    pub exact: Vec<f64>,
}

impl ArrayEfficiency {
    pub fn exact_mean(&self) -> f64 {
        self.exact.iter().sum::<f64>() / self.sites as f64
    }
}

/// Simulates `shots` loading cycles of an array whose sites have the given
/// mean occupancies. Sites are independent; trial `shot·N + site` has its
/// own stream.
pub fn array_efficiency(
    params: &LoadingParams,
    p_ic: f64,
    site_means: &[f64],
    shots: usize,
) -> Result<ArrayEfficiency, LoadingError> {
    params.validate()?;
    check_probability("p_ic", p_ic)?;
    if site_means.is_empty() || shots == 0 {
        return Err(invalid("array", "need at least one site and one shot"));
    }
    let n = site_means.len();
    let counts: Vec<usize> = site_means
        .par_iter()
        .enumerate()
        .map(|(site, &mean)| {
            (0..shots)
                .filter(|&shot| one_trial(params, mean, p_ic, (shot * n + site) as u64))
                .count()
        })
        .collect();
    let mut exact_cache: Vec<(f64, f64)> = Vec::new();
    let mut exact = Vec::with_capacity(n);
    for &mean in site_means {
        let e = match exact_cache.iter().find(|(m, _)| *m == mean) {
            Some(&(_, e)) => e,
            None => {
                let e = exact_efficiency(&LoadingParams { mean_occupancy: mean, ..*params }, p_ic)?;
                exact_cache.push((mean, e));
                e
            }
        };
        exact.push(e);
    }
    Ok(ArrayEfficiency {
        sites: n,
        shots,
        estimate: EfficiencyEstimate::from_counts(counts.iter().sum(), n * shots),
        per_site: counts.iter().map(|&c| c as f64 / shots as f64).collect(),
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loading::InitialDistribution;

    #[test]
    fn wilson_contains_estimate() {
        for (k, n) in [(0, 100), (50, 100), (100, 100), (811, 1000)] {
            let e = EfficiencyEstimate::from_counts(k, n);
            assert!(e.lower <= e.p_single && e.p_single <= e.upper);
            assert!(e.lower >= 0.0 && e.upper <= 1.0);
        }
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
    }

    #[test]
    fn too_few_trials_rejected() {
        let p = LoadingParams {
            trials: 10,
            ..LoadingParams::default()
        };
        assert!(loading_efficiency(&p, 0.5).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let p = LoadingParams {
            trials: 2000,
            seed: 9,
            ..LoadingParams::default()
        };
        assert_eq!(loading_efficiency(&p, 0.3).unwrap(), loading_efficiency(&p, 0.3).unwrap());
    }

    #[test]
    fn monte_carlo_matches_master_equation() {
        let p = LoadingParams {
            trials: 20_000,
            seed: 4,
            ..LoadingParams::default()
        };
        for p_ic in [0.0, 0.25, 0.5] {
            let mc = loading_efficiency(&p, p_ic).unwrap();
            let exact = exact_efficiency(&p, p_ic).unwrap();
            assert!((mc.p_single - exact).abs() < 4.0 * mc.standard_error(), "{p_ic}: {mc:?} vs {exact}");
        }
    }

    #[test]
    fn sweep_marks_undefined_cells() {
        let p = LoadingParams {
            trials: 500,
            ..LoadingParams::default()
        };
        let map = sweep_loading(&[vec![0.0, f64::NAN, 0.5]], &p).unwrap();
        assert!(map.estimates[0][1].is_none());
        assert!(map.exact[0][2] > map.exact[0][0]);
        assert_eq!(map.best().unwrap().1, 2);
    }

    #[test]
    fn uniform_array_exact_mean_independent_of_size() {
        let p = LoadingParams {
            initial: InitialDistribution::Poisson,
            ..LoadingParams::default()
        };
        let small = array_efficiency(&p, 0.4, &[2.0; 4], 10).unwrap();
        let large = array_efficiency(&p, 0.4, &vec![2.0; 400], 10).unwrap();
        assert!(small.exact.iter().chain(&large.exact).all(|&e| e == small.exact[0]));
    }
}
