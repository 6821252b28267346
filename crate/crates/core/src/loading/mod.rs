//! Per-site atom-number dynamics during loading.
//!
//! A tweezer starts with a random number of atoms. Pairs then collide at a
//! fixed rate per unordered pair; each collision may eject both atoms (red
//! photo-association from the cooling light) or, if it is inelastic on the
//! blue-detuned collision light, one atom or both depending on how the
//! released energy compares with the trap depth.

mod chain;
mod dynamics;
mod efficiency;
mod mot;

pub use chain::{exact_efficiency, final_distribution};
pub use dynamics::{
    sample_initial_occupancy, simulate_enhanced, simulate_red_pa, trial_rng, SiteOccupancyTrace,
};
pub use efficiency::{
    array_efficiency, loading_efficiency, sweep_loading, wilson_interval, ArrayEfficiency,
    EfficiencyEstimate, EfficiencyMap,
};
pub use mot::{coefficient_of_variation, mot_overlap_profile, MotMode};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadingError {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> LoadingError {
    LoadingError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Shape of the initial atom-number distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDistribution {
    Poisson,
    /// Poisson weights multiplied by `odd_weight` on odd n, then renormalized.
    OddWeighted { odd_weight: f64 },
}

impl InitialDistribution {
    fn odd_weight(&self) -> f64 {
        match *self {
            Self::Poisson => 1.0,
            Self::OddWeighted { odd_weight } => odd_weight,
        }
    }
}

/// Calibrated mean occupancy.
pub const CALIBRATED_MEAN_OCCUPANCY: f64 = 3.0;
/// Odd-n weight giving a 0.60 red-only baseline at the calibrated occupancy.
pub const CALIBRATED_ODD_WEIGHT: f64 = 1.5075;
/// Probability that a pair collision ends in red photo-association.
pub const CALIBRATED_RED_PA_PROBABILITY: f64 = 0.1314;
/// Collision events per second per unordered pair.
pub const CALIBRATED_PAIR_EVENT_RATE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadingParams {
    pub mean_occupancy: f64,
    pub initial: InitialDistribution,
    pub pair_event_rate: f64,
    /// Enhancement duration, s.
    pub duration: f64,
    pub red_pa_probability: f64,
    /// Pair energy released per inelastic collision in units of the trap depth, hδ/U.
    pub detuning_over_trap: f64,
    pub background_loss_rate: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for LoadingParams {
    fn default() -> Self {
        Self {
            mean_occupancy: CALIBRATED_MEAN_OCCUPANCY,
            initial: InitialDistribution::OddWeighted {
                odd_weight: CALIBRATED_ODD_WEIGHT,
            },
            pair_event_rate: CALIBRATED_PAIR_EVENT_RATE,
            duration: 0.5,
            red_pa_probability: CALIBRATED_RED_PA_PROBABILITY,
            detuning_over_trap: 1.5,
            background_loss_rate: 0.0,
            trials: 100_000,
            seed: 0,
        }
    }
}

impl LoadingParams {
    pub fn validate(&self) -> Result<(), LoadingError> {
        let nonneg = |name, x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and >= 0, got {x}")))
            }
        };
        nonneg("mean_occupancy", self.mean_occupancy)?;
        nonneg("pair_event_rate", self.pair_event_rate)?;
        nonneg("duration", self.duration)?;
        nonneg("detuning_over_trap", self.detuning_over_trap)?;
        nonneg("background_loss_rate", self.background_loss_rate)?;
        check_probability("red_pa_probability", self.red_pa_probability)?;
        if let InitialDistribution::OddWeighted { odd_weight } = self.initial {
            if !(odd_weight > 0.0 && odd_weight.is_finite()) {
                return Err(invalid("odd_weight", format!("must be > 0, got {odd_weight}")));
            }
        }
        Ok(())
    }

    /// Atoms removed by one inelastic blue-detuned collision.
    pub fn atoms_lost_per_inelastic(&self) -> u32 {
        match self.detuning_over_trap {
            x if x < 1.0 => 0,
            x if x < 2.0 => 1,
            _ => 2,
        }
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<(), LoadingError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in [0, 1], got {p}")))
    }
}
