use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use super::species::AtomicSpecies;
use super::CollisionError;
use crate::units::{BOHR_MAGNETON, GAUSS, HBAR};

/// Unit-norm polarization amplitudes on (σ⁻, π, σ⁺), i.e. on the excited
/// sublevels m_J = −1, 0, +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization([Complex64; 3]);

impl Polarization {
    /// Normalizes the given amplitudes. Fails on a zero or non-finite vector.
    pub fn new(amplitudes: [Complex64; 3]) -> Result<Self, CollisionError> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(CollisionError::InvalidParameter {
                name: "polarization",
                reason: "amplitudes must be finite and not all zero".into(),
            });
        }
        Ok(Self(amplitudes.map(|a| a / norm)))
    }

    pub fn from_real(amplitudes: [f64; 3]) -> Result<Self, CollisionError> {
        Self::new(amplitudes.map(|a| Complex64::new(a, 0.0)))
    }

    pub fn sigma_minus() -> Self {
        Self([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)])
    }

    pub fn pi() -> Self {
        Self([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
    }

    pub fn sigma_plus() -> Self {
        Self([Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// Equal weight on all three components.
    pub fn mixed() -> Self {
        let a = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
        Self([a, a, a])
    }

    pub fn amplitudes(&self) -> &[Complex64; 3] {
        &self.0
    }

    /// Multiplies every component by e^{iα}.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let p = Complex64::from_polar(1.0, alpha);
        Self(self.0.map(|a| a * p))
    }
}

/// Which transition the detuning Δ is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "m_j")]
pub enum DetuningReference {
    /// The unshifted ¹S₀ → ³P₁ line.
    #[default]
    Bare,
    /// The field- and light-shifted transition to the given m_J sublevel.
    Sublevel(i8),
}

/// Collision-light and bias-field configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    /// s = I / I_sat.
    pub saturation: f64,
    /// Δ in rad/s, positive for blue detuning.
    pub detuning: f64,
    pub polarization: Polarization,
    /// Bias field along the quantization axis, gauss.
    pub magnetic_field: f64,
    /// Tensor light shift of the m_J = ±1 sublevels, rad/s.
    pub tensor_light_shift: f64,
    pub detuning_reference: DetuningReference,
}

impl DriveConfig {
    pub fn validate(&self) -> Result<(), CollisionError> {
        if !(self.saturation.is_finite() && self.saturation >= 0.0) {
            return Err(CollisionError::InvalidParameter {
                name: "saturation",
                reason: format!("must be ≥ 0, got {}", self.saturation),
            });
        }
        for (name, value) in [
            ("detuning", self.detuning),
            ("magnetic_field", self.magnetic_field),
            ("tensor_light_shift", self.tensor_light_shift),
        ] {
            if !value.is_finite() {
                return Err(CollisionError::InvalidParameter {
                    name,
                    reason: "must be finite".into(),
                });
            }
        }
        if let DetuningReference::Sublevel(m) = self.detuning_reference {
            if !(-1..=1).contains(&m) {
                return Err(CollisionError::InvalidParameter {
                    name: "detuning_reference",
                    reason: format!("m_J must be -1, 0 or 1, got {m}"),
                });
            }
        }
        Ok(())
    }

    /// Detuning from the bare line, in rad/s.
    pub fn bare_detuning(&self, species: &AtomicSpecies) -> f64 {
        match self.detuning_reference {
            DetuningReference::Bare => self.detuning,
            DetuningReference::Sublevel(m) => {
                let shifts = single_atom_shifts(self, species);
                self.detuning + shifts[(m + 1) as usize]
            }
        }
    }

    /// Single-atom Rabi frequencies Ω_j = Γ√(s/2)·p_j on the three sublevels.
    pub fn rabi_components(&self, species: &AtomicSpecies) -> [Complex64; 3] {
        let omega = species.linewidth * (self.saturation / 2.0).sqrt();
        self.polarization.amplitudes().map(|p| p * omega)
    }
}

/// Tensor light shift plus linear Zeeman shift of m_J = −1, 0, +1, in rad/s.
pub fn single_atom_shifts(drive: &DriveConfig, species: &AtomicSpecies) -> [f64; 3] {
    let zeeman = species.excited_gj * BOHR_MAGNETON * drive.magnetic_field * GAUSS / HBAR;
    let tls = drive.tensor_light_shift;
    [tls - zeeman, 0.0, tls + zeeman]
}

/// Coupling between |gg⟩ and a symmetric singly-excited pair state with
/// amplitudes `eigenvector` on (|ge₋₁⟩, |ge₀⟩, |ge₊₁⟩), as an angular frequency.
///
/// The pair matrix element is ħΩ_j/√2 per component: a factor √2 from the
/// symmetrized state times the ½ of the single-atom ħΩ_j/2 coupling.
pub fn effective_coupling(
    drive: &DriveConfig,
    species: &AtomicSpecies,
    eigenvector: &[Complex64; 3],
) -> f64 {
    let rabi = drive.rabi_components(species);
    let overlap: Complex64 = eigenvector
        .iter()
        .zip(rabi.iter())
        .map(|(c, o)| c.conj() * o)
        .sum();
    FRAC_1_SQRT_2 * overlap.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::angular;
    use approx::assert_relative_eq;

    fn drive(b: f64, tls: f64) -> DriveConfig {
        DriveConfig {
            saturation: 100.0,
            detuning: angular(5.4e6),
            polarization: Polarization::pi(),
            magnetic_field: b,
            tensor_light_shift: tls,
            detuning_reference: DetuningReference::Bare,
        }
    }

    #[test]
    fn zero_field_has_no_shifts() {
        let yb = AtomicSpecies::ytterbium_174();
        assert_eq!(single_atom_shifts(&drive(0.0, 0.0), &yb), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn one_gauss_zeeman_splitting() {
        let yb = AtomicSpecies {
            excited_gj: 1.5,
            ..AtomicSpecies::ytterbium_174()
        };
        let s = single_atom_shifts(&drive(1.0, 0.0), &yb);
        // μ_B/h = 1.399 624 5 MHz/G.
        let expected = angular(1.5 * 1.399_624_5e6);
        assert_relative_eq!(s[0], -expected, max_relative = 1e-7);
        assert_eq!(s[1], 0.0);
        assert_relative_eq!(s[2], expected, max_relative = 1e-7);
    }

    #[test]
    fn m_zero_never_shifts() {
        let yb = AtomicSpecies::ytterbium_174();
        for b in [0.0, 1.0, 9.0, -3.0] {
            assert_eq!(single_atom_shifts(&drive(b, angular(1e6)), &yb)[1], 0.0);
        }
    }

    #[test]
    fn coupling_conventions() {
        let yb = AtomicSpecies::ytterbium_174();
        let d = drive(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let omega = yb.linewidth * (d.saturation / 2.0).sqrt();
        assert_relative_eq!(
            effective_coupling(&d, &yb, &[zero, one, zero]),
            omega * FRAC_1_SQRT_2,
            max_relative = 1e-14
        );
        assert_eq!(effective_coupling(&d, &yb, &[zero, zero, one]), 0.0);
        let dark = DriveConfig {
            saturation: 0.0,
            ..d
        };
        assert_eq!(effective_coupling(&dark, &yb, &[one, one, one]), 0.0);
    }

    #[test]
    fn polarization_is_normalized() {
        let p = Polarization::from_real([3.0, 0.0, 4.0]).unwrap();
        let norm: f64 = p.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
        assert!(Polarization::from_real([0.0; 3]).is_err());
    }

    #[test]
    fn sublevel_reference_shifts_drive_level() {
        let yb = AtomicSpecies::ytterbium_174();
        let mut d = drive(8.6, angular(1e6));
        d.polarization = Polarization::sigma_minus();
        d.detuning_reference = DetuningReference::Sublevel(-1);
        let shifts = single_atom_shifts(&d, &yb);
        assert_relative_eq!(d.bare_detuning(&yb), d.detuning + shifts[0]);
    }
}
