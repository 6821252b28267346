use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::CollisionError;
use crate::units::{
    angular, ATOMIC_MASS_UNIT, BOLTZMANN, HBAR, PLANCK, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY,
};

/// Atom together with the narrow line that carries the collision light.
///
/// The transition dipole moment, saturation intensity and C₃ coefficient are
/// derived from the linewidth and wavelength, so they can never drift out of
/// agreement with each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomicSpecies {
    /// kg
    pub mass: f64,
    /// Natural linewidth Γ, rad/s.
    pub linewidth: f64,
    /// m
    pub wavelength: f64,
    /// Landé factor of the excited J = 1 level.
    pub excited_gj: f64,
}

impl AtomicSpecies {
    pub fn new(
        mass: f64,
        linewidth: f64,
        wavelength: f64,
        excited_gj: f64,
    ) -> Result<Self, CollisionError> {
        let species = Self {
            mass,
            linewidth,
            wavelength,
            excited_gj,
        };
        species.validate()?;
        Ok(species)
    }

    /// ¹⁷⁴Yb on the ¹S₀ → ³P₁ intercombination line.
    pub fn ytterbium_174() -> Self {
        Self {
            mass: 173.938_858 * ATOMIC_MASS_UNIT,
            linewidth: angular(182.2e3),
            wavelength: 555.802e-9,
            excited_gj: 1.493,
        }
    }

    pub fn validate(&self) -> Result<(), CollisionError> {
        let fields = [
            ("mass", self.mass),
            ("linewidth", self.linewidth),
            ("wavelength", self.wavelength),
            ("excited_gj", self.excited_gj),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(CollisionError::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Reduced wavelength λ/2π.
    pub fn reduced_wavelength(&self) -> f64 {
        self.wavelength / (2.0 * PI)
    }

    /// Transition dipole moment in C·m, from d² = 3πε₀ħΓ(λ/2π)³.
    pub fn dipole_moment(&self) -> f64 {
        (3.0 * PI * VACUUM_PERMITTIVITY * HBAR * self.linewidth * self.reduced_wavelength().powi(3))
            .sqrt()
    }

    /// Dipole-dipole coefficient C₃ = d²/(4πε₀) in J·m³.
    pub fn c3(&self) -> f64 {
        let d = self.dipole_moment();
        d * d / (4.0 * PI * VACUUM_PERMITTIVITY)
    }

    /// Two-level saturation intensity πhcΓ/(3λ³) in W/m².
    pub fn saturation_intensity(&self) -> f64 {
        PI * PLANCK * SPEED_OF_LIGHT * self.linewidth / (3.0 * self.wavelength.powi(3))
    }
}

/// Tweezer and reservoir parameters entering the collision and loading models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Trap depth U₀/h in Hz. Also the frequency unit `f_trap` of sweep axes.
    pub depth_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_frequency_hz: Option<f64>,
    /// Atom temperature in K.
    pub temperature: f64,
    /// Tweezer wavelength in m.
    pub wavelength: f64,
    /// Site spacing in m.
    pub spacing: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self {
            depth_hz: 3.6e6,
            trap_frequency_hz: None,
            temperature: 5e-6,
            wavelength: 532e-9,
            spacing: 2.8e-6,
        }
    }
}

impl TrapConfig {
    pub fn validate(&self) -> Result<(), CollisionError> {
        if !(self.depth_hz.is_finite() && self.depth_hz > 0.0) {
            return Err(CollisionError::InvalidParameter {
                name: "depth_hz",
                reason: format!("must be > 0, got {}", self.depth_hz),
            });
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(CollisionError::InvalidParameter {
                name: "temperature",
                reason: format!("must be > 0, got {}", self.temperature),
            });
        }
        Ok(())
    }
}

/// Mean Maxwell–Boltzmann relative speed √(16 k_B T / (π m)) of two identical atoms.
pub fn collision_velocity(species: &AtomicSpecies, trap: &TrapConfig) -> f64 {
    (16.0 * BOLTZMANN * trap.temperature / (PI * species.mass)).sqrt()
}
