//! Time-optimal controlled-Z gate on the clock–Rydberg transition.
//!
//! Both atoms are driven globally with a fixed Rabi frequency and a
//! piecewise-constant laser phase. Under blockade the dynamics split into a
//! two-level block {|01⟩, |0r⟩} and a √2-enhanced block {|11⟩, |W⟩} (with
//! |rr⟩ added for a finite interaction). Rydberg decay enters as
//! non-Hermitian damping of every Rydberg amplitude.

mod model;
mod optimize;

pub use model::{
    bell_fidelity, bell_overlap, error_budget, evolve, fidelity_gradient, optimal_correction, GateState, BASIS,
};
pub use optimize::{optimize_pulse, OptimizedPulse, OptimizerOptions, RestartSummary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::angular;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("no restart converged within the iteration limit (best fidelity {fidelity:.6})")]
    NotConverged { fidelity: f64, best: Box<OptimizedPulse> },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> GateError {
    GateError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Blockade {
    /// |rr⟩ is never populated.
    #[default]
    Perfect,
    /// Pair interaction V (rad/s) shifting |rr⟩.
    Finite { interaction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateModel {
    /// Rabi frequency Ω, rad/s.
    pub rabi: f64,
    /// Rydberg lifetime τ in s; `None` for no decay.
    pub rydberg_lifetime: Option<f64>,
    #[serde(default)]
    pub blockade: Blockade,
}

impl Default for GateModel {
    fn default() -> Self {
        Self {
            rabi: angular(15e6),
            rydberg_lifetime: Some(40e-6),
            blockade: Blockade::Perfect,
        }
    }
}

impl GateModel {
    pub fn validate(&self) -> Result<(), GateError> {
        if !(self.rabi > 0.0 && self.rabi.is_finite()) {
            return Err(invalid("rabi", format!("must be finite and > 0, got {}", self.rabi)));
        }
        if let Some(tau) = self.rydberg_lifetime {
            if !(tau > 0.0) {
                return Err(invalid("rydberg_lifetime", format!("must be > 0, got {tau}")));
            }
        }
        if let Blockade::Finite { interaction } = self.blockade {
            if !interaction.is_finite() {
                return Err(invalid("interaction", "must be finite"));
            }
        }
        Ok(())
    }

    /// The same model without Rydberg decay.
    pub fn without_decay(&self) -> Self {
        Self {
            rydberg_lifetime: None,
            ..*self
        }
    }

    /// Decay rate 1/τ in units of Ω.
    pub(crate) fn scaled_decay(&self) -> f64 {
        self.rydberg_lifetime.map_or(0.0, |tau| 1.0 / (self.rabi * tau))
    }
}

/// Laser phase on a uniform grid of `phases.len()` segments; amplitude fixed
/// at the model's Rabi frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseWaveform {
    /// Total duration T, s.
    pub duration: f64,
    /// Phase of each segment, rad.
    pub phases: Vec<f64>,
}

impl PulseWaveform {
    pub fn constant(duration: f64, segments: usize, phase: f64) -> Self {
        Self {
            duration,
            phases: vec![phase; segments],
        }
    }

    pub fn validate(&self) -> Result<(), GateError> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(invalid("duration", format!("must be finite and >= 0, got {}", self.duration)));
        }
        if self.phases.is_empty() {
            return Err(invalid("phases", "need at least one segment"));
        }
        if let Some(k) = self.phases.iter().position(|p| !p.is_finite()) {
            return Err(invalid("phases", format!("segment {k} is not finite")));
        }
        Ok(())
    }

    pub fn segment_duration(&self) -> f64 {
        self.duration / self.phases.len() as f64
    }

    /// Segment start times and phases, plus the end point, for plotting φ(t).
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let dt = self.segment_duration();
        let mut out: Vec<(f64, f64)> = self.phases.iter().enumerate().map(|(k, &p)| (k as f64 * dt, p)).collect();
        out.push((self.duration, *self.phases.last().expect("validated")));
        out
    }

    /// Phases played backwards and negated. Transposition of the propagator
    /// maps a pulse to this one, so its Bell fidelity is identical.
    pub fn time_reversed(&self) -> Self {
        Self {
            duration: self.duration,
            phases: self.phases.iter().rev().map(|p| -p).collect(),
        }
    }

    pub fn offset(&self, c: f64) -> Self {
        Self {
            duration: self.duration,
            phases: self.phases.iter().map(|p| p + c).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Fidelity lost to Rydberg decay at fixed pulse.
    pub decay: f64,
    /// Fidelity lost to a finite blockade (zero when perfect).
    pub leakage: f64,
    /// Infidelity of the pulse without decay under perfect blockade.
    pub residual: f64,
}

impl ErrorBudget {
    pub fn total(&self) -> f64 {
        self.decay + self.leakage + self.residual
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub bell_fidelity: f64,
    /// Single-qubit Z phase θ applied to both atoms after the pulse.
    pub correction_phase: f64,
    /// ∫⟨n_r⟩dt for the Bell input state, s.
    pub rydberg_time: f64,
    /// ⟨01|U|01⟩ and ⟨11|U|11⟩ as (re, im).
    pub amplitude_01: (f64, f64),
    pub amplitude_11: (f64, f64),
    pub error_budget: ErrorBudget,
}
