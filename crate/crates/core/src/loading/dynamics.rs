use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use super::{check_probability, InitialDistribution, LoadingError, LoadingParams};

/// Independent generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws an initial atom number. The odd-weighted variant rejects Poisson
/// draws with probability proportional to their parity weight.
pub fn sample_initial_occupancy<R: Rng + ?Sized>(
    mean: f64,
    initial: InitialDistribution,
    rng: &mut R,
) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(mean).expect("mean is positive and finite");
    let w = initial.odd_weight();
    let (odd, even) = if w >= 1.0 { (1.0, 1.0 / w) } else { (w, 1.0) };
    loop {
        let n = poisson.sample(rng) as u32;
        let accept = if n % 2 == 1 { odd } else { even };
        if accept >= 1.0 || rng.random::<f64>() < accept {
            return n;
        }
    }
}

fn pairs(n: u32) -> f64 {
    let n = n as f64;
    0.5 * n * (n - 1.0)
}

/// Red photo-association only: every pair event removes two atoms.
pub fn simulate_red_pa<R: Rng + ?Sized>(n0: u32, duration: f64, rate: f64, rng: &mut R) -> u32 {
    let mut n = n0;
    let mut t = 0.0;
    while n >= 2 && rate > 0.0 {
        let dt: f64 = Exp1.sample(rng);
        t += dt / (rate * pairs(n));
        if t > duration {
            break;
        }
        n -= 2;
    }
    n
}

/// Occupancy changes of one site: `(time, n)` after each transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteOccupancyTrace {
    pub initial: u32,
    pub transitions: Vec<(f64, u32)>,
}

impl SiteOccupancyTrace {
    pub fn final_occupancy(&self) -> u32 {
        self.transitions.last().map_or(self.initial, |&(_, n)| n)
    }
}

/// Runs the combined red/blue collision dynamics from `n0` atoms until the
/// enhancement window closes or at most one atom is left.
pub fn simulate_enhanced<R: Rng + ?Sized>(
    n0: u32,
    p_ic: f64,
    params: &LoadingParams,
    rng: &mut R,
) -> Result<SiteOccupancyTrace, LoadingError> {
    check_probability("p_ic", p_ic)?;
    params.validate()?;
    let blue_loss = params.atoms_lost_per_inelastic();
    let mut n = n0;
    let mut t = 0.0;
    let mut transitions = Vec::new();
    while n >= 2 {
        let pair_rate = params.pair_event_rate * pairs(n);
        let single_rate = params.background_loss_rate * n as f64;
        let total = pair_rate + single_rate;
        if total <= 0.0 {
            break;
        }
        let dt: f64 = Exp1.sample(rng);
        t += dt / total;
        if t > params.duration {
            break;
        }
        let lost = if rng.random::<f64>() * total < single_rate {
            1
        } else if rng.random::<f64>() < params.red_pa_probability {
            2
        } else if rng.random::<f64>() < p_ic {
            blue_loss
        } else {
            0
        };
        if lost > 0 {
            n -= lost;
            transitions.push((t, n));
        }
    }
    Ok(SiteOccupancyTrace {
        initial: n0,
        transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_gives_empty_sites() {
        let mut rng = trial_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_initial_occupancy(0.0, InitialDistribution::Poisson, &mut rng), 0);
        }
    }

    #[test]
    fn poisson_moments() {
        let mut rng = trial_rng(7, 0);
        let lambda: f64 = 2.0;
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut zeros = 0usize;
        for _ in 0..n {
            let k = sample_initial_occupancy(lambda, InitialDistribution::Poisson, &mut rng);
            sum += k as f64;
            zeros += usize::from(k == 0);
        }
        let mean = sum / n as f64;
        assert!((mean - lambda).abs() < 3.0 * (lambda / n as f64).sqrt());
        let p0 = (-lambda).exp();
        let frac = zeros as f64 / n as f64;
        assert!((frac - p0).abs() < 3.0 * (p0 * (1.0 - p0) / n as f64).sqrt());
    }

    #[test]
    fn odd_weighting_matches_target_parity() {
        let (lambda, w) = (3.0_f64, 1.5);
        let even: f64 = (0.5 * (1.0 + (-2.0 * lambda).exp())).max(0.0);
        let odd = 1.0 - even;
        let expected = w * odd / (w * odd + even);
        let mut rng = trial_rng(3, 0);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| {
                sample_initial_occupancy(lambda, InitialDistribution::OddWeighted { odd_weight: w }, &mut rng)
                    % 2
                    == 1
            })
            .count();
        let frac = hits as f64 / n as f64;
        assert!((frac - expected).abs() < 4.0 * (expected * (1.0 - expected) / n as f64).sqrt());
    }

    #[test]
    fn red_pa_preserves_parity() {
        let mut rng = trial_rng(11, 0);
        for n0 in 0..12 {
            let n = simulate_red_pa(n0, 10.0, 100.0, &mut rng);
            assert_eq!(n, n0 % 2);
        }
        assert_eq!(simulate_red_pa(5, 0.0, 100.0, &mut rng), 5);
    }

    #[test]
    fn perfect_blue_collisions_leave_one_atom() {
        let params = LoadingParams {
            red_pa_probability: 0.0,
            duration: 1e3,
            ..LoadingParams::default()
        };
        let mut rng = trial_rng(5, 0);
        for n0 in 1..15 {
            let trace = simulate_enhanced(n0, 1.0, &params, &mut rng).unwrap();
            assert_eq!(trace.final_occupancy(), 1);
            let mut prev = n0;
            for &(_, n) in &trace.transitions {
                assert!(n < prev);
                prev = n;
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let params = LoadingParams::default();
        let a = simulate_enhanced(9, 0.4, &params, &mut trial_rng(42, 17)).unwrap();
        let b = simulate_enhanced(9, 0.4, &params, &mut trial_rng(42, 17)).unwrap();
        assert_eq!(a, b);
        let c = simulate_enhanced(9, 0.4, &params, &mut trial_rng(42, 18)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_invalid_probability() {
        let params = LoadingParams::default();
        assert!(simulate_enhanced(3, 1.2, &params, &mut trial_rng(0, 0)).is_err());
    }
}
