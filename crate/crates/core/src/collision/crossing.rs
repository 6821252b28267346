use num_complex::Complex64;
use std::f64::consts::PI;

use super::drive::{effective_coupling, DriveConfig};
use super::potential::{azimuthal_rotation, CVector3, MolecularChannels};
use super::species::AtomicSpecies;
use super::CollisionError;
use crate::units::HBAR;

/// Relative bisection tolerance on the crossing radius.
const RADIUS_TOLERANCE: f64 = 1e-13;
/// Relative step of the centred finite difference for the slope.
const SLOPE_STEP: f64 = 1e-5;

/// Where an excited channel rises through the dressed |gg⟩ level.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingInfo {
    /// Crossing radius r_c, m.
    pub radius: f64,
    pub channel: usize,
    /// Channel energy at r_c, J.
    pub energy: f64,
    /// Steepness −dE/dr at r_c in J/m; positive for a curve rising inward.
    pub slope: f64,
    /// Channel eigenvector at r_c on (|ge₋₁⟩, |ge₀⟩, |ge₊₁⟩).
    pub eigenvector: [Complex64; 3],
    pub theta: f64,
    pub phi: f64,
}

impl CrossingInfo {
    /// Ω_eff for this crossing, with the pair rotated to azimuth `phi`.
    pub fn coupling_at(&self, drive: &DriveConfig, species: &AtomicSpecies, phi: f64) -> f64 {
        let d = azimuthal_rotation(phi - self.phi);
        let rotated = std::array::from_fn(|j| d[j] * self.eigenvector[j]);
        effective_coupling(drive, species, &rotated)
    }
}

/// Finds, for every channel whose asymptote lies below `level` (J), the
/// outermost radius where it rises through `level` coming in from large r.
/// Results are sorted by descending radius, so the first entry is the outer
/// channel.
pub fn find_crossings(
    channels: &MolecularChannels,
    level: f64,
) -> Result<Vec<CrossingInfo>, CollisionError> {
    let radii = &channels.radii;
    let h = &channels.hamiltonian;
    let last = radii.len() - 1;
    let mut found = Vec::new();

    for channel in &channels.channels {
        if channel.asymptote >= level {
            continue;
        }
        let e = &channel.energies;
        if e[last] >= level {
            return Err(CollisionError::UnbracketedCrossing {
                channel: channel.index,
                reason: format!(
                    "channel is already above the drive level at the outermost radius {:.3e} m",
                    radii[last]
                ),
            });
        }
        let Some(i) = (1..=last).rev().find(|&i| e[i] < level && e[i - 1] >= level) else {
            if e[0] > e[1] {
                return Err(CollisionError::UnbracketedCrossing {
                    channel: channel.index,
                    reason: format!(
                        "channel still rising below the drive level at the innermost radius {:.3e} m",
                        radii[0]
                    ),
                });
            }
            continue;
        };

        let (mut inner, mut outer) = (radii[i - 1], radii[i]);
        let mut reference = channel.eigenvectors[i];
        while outer - inner > RADIUS_TOLERANCE * outer {
            let mid = 0.5 * (inner + outer);
            let (energy, vector) = h.follow(mid, &reference);
            if energy < level {
                outer = mid;
                reference = vector;
            } else {
                inner = mid;
            }
        }
        let radius = 0.5 * (inner + outer);
        let (energy, vector) = h.follow(radius, &reference);
        let step = SLOPE_STEP * radius;
        let (e_out, _) = h.follow(radius + step, &vector);
        let (e_in, _) = h.follow(radius - step, &vector);
        found.push(CrossingInfo {
            radius,
            channel: channel.index,
            energy,
            slope: (e_in - e_out) / (2.0 * step),
            eigenvector: to_array(&vector),
            theta: h.theta,
            phi: h.phi,
        });
    }
    found.sort_by(|a, b| b.radius.total_cmp(&a.radius));
    Ok(found)
}

fn to_array(v: &CVector3) -> [Complex64; 3] {
    [v[0], v[1], v[2]]
}

/// Landau–Zener probability 1 − exp(−2πħΩ²/(v|s₊|)) of following the
/// adiabatic curve through one passage of a crossing.
///
/// `coupling` is the |gg⟩–channel matrix element divided by ħ (rad/s),
/// `velocity` the radial speed (m/s) and `slope` the relative slope of the
/// two diabatic curves (J/m); the exponent is dimensionless in these units.
pub fn landau_zener_p(coupling: f64, velocity: f64, slope: f64) -> Result<f64, CollisionError> {
    if !(velocity > 0.0 && velocity.is_finite()) {
        return Err(CollisionError::InvalidParameter {
            name: "velocity",
            reason: format!("must be > 0, got {velocity}"),
        });
    }
    if !(coupling.is_finite() && slope.is_finite()) {
        return Err(CollisionError::InvalidParameter {
            name: "coupling",
            reason: "coupling and slope must be finite".into(),
        });
    }
    if coupling == 0.0 {
        return Ok(0.0);
    }
    if slope == 0.0 {
        return Ok(1.0);
    }
    let exponent = 2.0 * PI * HBAR * coupling * coupling / (velocity * slope.abs());
    Ok(-(-exponent).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::potential::{log_grid, molecular_channels};
    use crate::units::angular;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    const C3: f64 = 6.27e-50;

    #[test]
    fn pure_repulsive_crossing_closed_form() {
        // At θ = π/2 with no shifts, |ge₀⟩ is decoupled with E = C₃/r³.
        let grid = log_grid(2e-9, 2e-6, 400);
        let ch = molecular_channels([0.0; 3], C3, FRAC_PI_2, 0.0, &grid).unwrap();
        let level = HBAR * angular(5.4e6);
        let crossings = find_crossings(&ch, level).unwrap();
        assert!(!crossings.is_empty());
        let r_c = (C3 / level).cbrt();
        for c in &crossings {
            assert_relative_eq!(c.radius, r_c, max_relative = 1e-10);
            assert!(c.slope > 0.0);
            assert_relative_eq!(c.slope, 3.0 * level / r_c, max_relative = 1e-7);
            assert!((c.energy - level).abs() < 1e-9 * level);
        }
    }

    #[test]
    fn attractive_channel_never_crosses() {
        // θ = 0: |ge₀⟩ sits at −2C₃/r³ and must not appear.
        let grid = log_grid(2e-9, 2e-6, 400);
        let ch = molecular_channels([0.0; 3], C3, 0.0, 0.0, &grid).unwrap();
        let crossings = find_crossings(&ch, HBAR * angular(5e6)).unwrap();
        assert_eq!(crossings.len(), 2);
        assert!(crossings.iter().all(|c| c.eigenvector[1].norm() < 1e-8));
    }

    #[test]
    fn channel_above_drive_is_skipped() {
        let level = HBAR * angular(5e6);
        let shift = 2.0 * level / HBAR;
        let grid = log_grid(2e-9, 2e-6, 400);
        let ch = molecular_channels([shift, shift, shift], C3, FRAC_PI_2, 0.0, &grid).unwrap();
        assert!(find_crossings(&ch, level).unwrap().is_empty());
    }

    #[test]
    fn unbracketed_grid_is_reported() {
        // Grid ends where C₃/r³ is still far above the drive level.
        let grid = log_grid(2e-9, 5e-9, 50);
        let ch = molecular_channels([0.0; 3], C3, FRAC_PI_2, 0.0, &grid).unwrap();
        assert!(matches!(
            find_crossings(&ch, HBAR * angular(5e6)),
            Err(CollisionError::UnbracketedCrossing { .. })
        ));
    }

    #[test]
    fn landau_zener_limits() {
        assert_eq!(landau_zener_p(0.0, 0.03, 1e-19).unwrap(), 0.0);
        let (v, s) = (0.035, 4e-19);
        let omega = (std::f64::consts::LN_2 * v * s / (2.0 * PI * HBAR)).sqrt();
        assert_relative_eq!(landau_zener_p(omega, v, s).unwrap(), 0.5, epsilon = 1e-12);
        assert!(landau_zener_p(omega, 1e-12, s).unwrap() > 1.0 - 1e-12);
        assert!(landau_zener_p(omega, 0.0, s).is_err());
        assert!(landau_zener_p(omega, -1.0, s).is_err());
    }

    #[test]
    fn landau_zener_monotonicity() {
        let base = landau_zener_p(5e6, 0.035, 4e-19).unwrap();
        assert!(landau_zener_p(6e6, 0.035, 4e-19).unwrap() > base);
        assert!(landau_zener_p(5e6, 0.05, 4e-19).unwrap() < base);
        assert!(landau_zener_p(5e6, 0.035, 8e-19).unwrap() < base);
    }
}
