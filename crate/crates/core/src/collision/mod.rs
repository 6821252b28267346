//! Blue-detuned light-assisted collisions between two atoms.
//!
//! The excited pair states are the eigenvectors of single-atom shifts plus the
//! resonant dipole-dipole interaction. Each channel that rises through the
//! dressed |gg⟩ level is a Landau–Zener crossing; a collision is inelastic
//! when exactly one of its two passages is adiabatic. Averaging the resulting
//! loss over isotropic head-on approaches gives `P_ic`.

mod average;
mod crossing;
mod drive;
mod potential;
mod species;
mod sweep;

pub use average::{
    angular_profile, inelastic_probability, loss_integrand, single_channel_loss, two_channel_loss,
    AngleSample, PicResult, QuadratureMeta, QuadratureSpec, RadialGrid, COUPLING_CONVENTION,
};
pub use crossing::{find_crossings, landau_zener_p, CrossingInfo};
pub use drive::{effective_coupling, single_atom_shifts, DetuningReference, DriveConfig, Polarization};
pub use potential::{
    azimuthal_rotation, dipole_dipole_matrix, log_grid, molecular_channels, CMatrix3, CVector3,
    MolecularChannel, MolecularChannels, Monotonicity, PairHamiltonian,
};
pub use species::{collision_velocity, AtomicSpecies, TrapConfig};
pub use sweep::{pic_sweep, CellFailure, MapPeak, PicSweep};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("separation must be positive, got {0} m")]
    NonPositiveRadius(f64),
    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),
    #[error("collision light must be blue detuned, got Δ = {0} rad/s")]
    NotBlueDetuned(f64),
    #[error("crossing of channel {channel} not bracketed by the radial grid: {reason}")]
    UnbracketedCrossing { channel: usize, reason: String },
}

/// Named drive configurations used throughout the examples and tests.
pub mod presets {
    use super::{DetuningReference, DriveConfig, Polarization};
    use crate::units::angular;

    /// Tensor light shift of the m_J = ±1 sublevels assumed by default.
    pub const TENSOR_LIGHT_SHIFT_HZ: f64 = 1.0e6;

    /// Mixed polarization at zero field: all three sublevels nearly degenerate.
    pub fn globally_repulsive(saturation: f64, detuning_hz: f64) -> DriveConfig {
        DriveConfig {
            saturation,
            detuning: angular(detuning_hz),
            polarization: Polarization::mixed(),
            magnetic_field: 0.0,
            tensor_light_shift: angular(TENSOR_LIGHT_SHIFT_HZ),
            detuning_reference: DetuningReference::Bare,
        }
    }

    /// π light with a 9 G field along the quantization axis.
    pub fn partially_repulsive(saturation: f64, detuning_hz: f64) -> DriveConfig {
        DriveConfig {
            polarization: Polarization::pi(),
            magnetic_field: 9.0,
            ..globally_repulsive(saturation, detuning_hz)
        }
    }

    /// σ⁻ light at 8.6 G, detuned from the m_J = −1 line it drives.
    pub fn sigma_minus_high_field(saturation: f64, detuning_hz: f64) -> DriveConfig {
        DriveConfig {
            polarization: Polarization::sigma_minus(),
            magnetic_field: 8.6,
            detuning_reference: DetuningReference::Sublevel(-1),
            ..globally_repulsive(saturation, detuning_hz)
        }
    }

    /// π light at 2.3 G, I/I_sat = 17, Δ = 2π × 6.4 MHz.
    pub fn moderate_field_pi() -> DriveConfig {
        DriveConfig {
            polarization: Polarization::pi(),
            magnetic_field: 2.3,
            ..globally_repulsive(17.0, 6.4e6)
        }
    }
}
