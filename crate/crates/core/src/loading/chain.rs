use nalgebra::{DMatrix, DVector};

use super::{check_probability, LoadingError, LoadingParams};

/// Largest atom number tracked for a given mean occupancy; the Poisson tail
/// beyond it is below double precision.
fn truncation(mean: f64) -> usize {
    (mean + 10.0 * mean.sqrt() + 25.0).ceil() as usize
}

/// Normalized initial distribution on 0..=n_max.
pub(crate) fn initial_pmf(params: &LoadingParams, n_max: usize) -> Vec<f64> {
    let lambda = params.mean_occupancy;
    let w = params.initial.odd_weight();
    let mut pmf = Vec::with_capacity(n_max + 1);
    let mut p = (-lambda).exp();
    for n in 0..=n_max {
        if n > 0 {
            p *= lambda / n as f64;
        }
        pmf.push(if n % 2 == 1 { w * p } else { p });
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    pmf
}

/// Exact distribution of the final atom number, from the master equation of
/// the loading dynamics propagated over the enhancement window.
pub fn final_distribution(params: &LoadingParams, p_ic: f64) -> Result<Vec<f64>, LoadingError> {
    params.validate()?;
    check_probability("p_ic", p_ic)?;
    let n_max = truncation(params.mean_occupancy);
    let dim = n_max + 1;
    let blue = params.atoms_lost_per_inelastic() as usize;
    let beta = params.pair_event_rate;
    let p20 = params.red_pa_probability;

    // q[(m, n)] is the rate of n → m; states n ≤ 1 are absorbing.
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    for n in 2..dim {
        let pair = beta * (n * (n - 1)) as f64 / 2.0;
        let mut add = |lost: usize, rate: f64| {
            if lost > 0 && rate > 0.0 {
                q[(n - lost, n)] += rate;
                q[(n, n)] -= rate;
            }
        };
        add(2, pair * p20);
        add(blue, pair * (1.0 - p20) * p_ic);
        add(1, params.background_loss_rate * n as f64);
    }
    let p0 = DVector::from_vec(initial_pmf(params, n_max));
    let propagator = (q * params.duration).exp();
    let p = propagator * p0;
    Ok(p.iter().map(|x| x.max(0.0)).collect())
}

/// Exact probability that a site ends with exactly one atom.
pub fn exact_efficiency(params: &LoadingParams, p_ic: f64) -> Result<f64, LoadingError> {
    Ok(final_distribution(params, p_ic)?[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loading::InitialDistribution;
    use approx::assert_relative_eq;

    fn poisson(lambda: f64) -> LoadingParams {
        LoadingParams {
            mean_occupancy: lambda,
            initial: InitialDistribution::Poisson,
            ..LoadingParams::default()
        }
    }

    #[test]
    fn red_only_parity_closed_form() {
        for lambda in [0.5, 1.0, 3.0, 6.0] {
            let p = LoadingParams {
                red_pa_probability: 1.0,
                duration: 10.0,
                ..poisson(lambda)
            };
            let e = exact_efficiency(&p, 0.0).unwrap();
            assert_relative_eq!(e, 0.5 * (1.0 - (-2.0 * lambda).exp()), epsilon = 1e-9);
        }
    }

    #[test]
    fn funnel_to_one_closed_form() {
        for lambda in [0.5, 2.0, 4.0] {
            let p = LoadingParams {
                red_pa_probability: 0.0,
                duration: 10.0,
                ..poisson(lambda)
            };
            let e = exact_efficiency(&p, 1.0).unwrap();
            assert_relative_eq!(e, 1.0 - (-lambda).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_duration_keeps_initial_statistics() {
        let p = LoadingParams {
            duration: 0.0,
            ..poisson(2.0)
        };
        let d = final_distribution(&p, 0.5).unwrap();
        assert_relative_eq!(d[1], 2.0 * (-2.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn distribution_is_normalized() {
        let d = final_distribution(&LoadingParams::default(), 0.3).unwrap();
        assert_relative_eq!(d.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn efficiency_increases_with_pic() {
        let p = LoadingParams::default();
        let mut prev = 0.0;
        for k in 0..=10 {
            let e = exact_efficiency(&p, k as f64 / 20.0).unwrap();
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn calibrated_baseline() {
        let e = exact_efficiency(&LoadingParams::default(), 0.0).unwrap();
        assert!((e - 0.60).abs() < 1e-3, "baseline {e}");
    }
}
