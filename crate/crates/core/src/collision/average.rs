//! Orientation-averaged inelastic collision probability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::crossing::{find_crossings, landau_zener_p, CrossingInfo};
use super::drive::{single_atom_shifts, DriveConfig};
use super::potential::{log_grid, molecular_channels};
use super::species::{collision_velocity, AtomicSpecies, TrapConfig};
use super::CollisionError;
use crate::quadrature::gauss_legendre;
use crate::units::HBAR;

/// Crossings closer than this fraction of r_c are flagged as near-degenerate.
const NEAR_DEGENERATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self {
            r_min: 2e-9,
            r_max: 2e-6,
            points: 600,
        }
    }
}

impl RadialGrid {
    pub fn radii(&self) -> Vec<f64> {
        log_grid(self.r_min, self.r_max, self.points)
    }
}

/// Gauss–Legendre in cos θ times a periodic trapezoid in φ, doubled in both
/// directions until successive estimates agree to `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub theta_nodes: usize,
    pub phi_nodes: usize,
    pub tolerance: f64,
    pub max_refinements: usize,
    pub radial: RadialGrid,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            theta_nodes: 64,
            phi_nodes: 32,
            tolerance: 1e-4,
            max_refinements: 3,
            radial: RadialGrid::default(),
        }
    }
}

impl QuadratureSpec {
    fn level(&self, k: usize) -> (usize, usize) {
        (self.theta_nodes << k, self.phi_nodes << k)
    }

    pub fn validate(&self) -> Result<(), CollisionError> {
        if self.theta_nodes == 0 || self.phi_nodes == 0 {
            return Err(CollisionError::InvalidParameter {
                name: "quadrature",
                reason: "node counts must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Loss integrand for a single coupled repulsive channel: one adiabatic and
/// one diabatic passage, in either order.
pub fn single_channel_loss(p: f64) -> f64 {
    2.0 * p * (1.0 - p)
}

/// Loss integrand for two channels crossed one after the other, `outer`
/// (P₂) first on the way in.
pub fn two_channel_loss(outer: f64, inner: f64) -> f64 {
    let (p2, p1) = (outer, inner);
    p2 * (1.0 - p2)
        + 2.0 * (1.0 - p2) * p1 * (1.0 - p1)
        + p2 * (1.0 - p2) * (p1 * p1 + (1.0 - p1) * (1.0 - p1))
}

/// Integrand f from tunnelling probabilities ordered outermost first.
pub fn loss_integrand(tunnel: &[f64]) -> f64 {
    match tunnel {
        [] => 0.0,
        [p] => single_channel_loss(*p),
        [outer, inner, ..] => two_channel_loss(*outer, *inner),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSample {
    pub theta: f64,
    pub phi: f64,
    /// Tunnelling probability per crossing, outermost first.
    pub tunnel: Vec<f64>,
    pub integrand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    pub theta_nodes: usize,
    pub phi_nodes: usize,
    pub refinements: usize,
    pub estimated_error: f64,
    pub converged: bool,
    /// θ nodes where two crossings lie within 1 % of each other.
    pub near_degenerate_nodes: usize,
    /// θ nodes with more than two crossings; only the outer two enter.
    pub extra_crossing_nodes: usize,
    pub coupling_convention: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicResult {
    pub pic: f64,
    pub per_angle: Vec<AngleSample>,
    pub quadrature: QuadratureMeta,
}

pub const COUPLING_CONVENTION: &str =
    "Omega_j = Gamma*sqrt(s/2)*p_j; Omega_eff = |sum_j conj(c_j) Omega_j|/sqrt(2); \
     P_tunnel = 1 - exp(-2*pi*hbar*Omega_eff^2/(v*|dE/dr|))";

/// Crossings at each Gauss–Legendre θ node (evaluated at φ = 0).
#[derive(Debug, Clone)]
pub(crate) struct ThetaTable {
    pub cos_theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub crossings: Vec<Vec<CrossingInfo>>,
}

impl ThetaTable {
    pub fn build(
        drive: &DriveConfig,
        species: &AtomicSpecies,
        radial: &RadialGrid,
        nodes: usize,
    ) -> Result<Self, CollisionError> {
        let (cos_theta, weights) = gauss_legendre(nodes);
        let shifts = single_atom_shifts(drive, species);
        let level = HBAR * drive.bare_detuning(species);
        let radii = radial.radii();
        let c3 = species.c3();
        let crossings = cos_theta
            .par_iter()
            .map(|&x| {
                let channels = molecular_channels(shifts, c3, x.acos(), 0.0, &radii)?;
                find_crossings(&channels, level)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            cos_theta,
            weights,
            crossings,
        })
    }

    fn flags(&self) -> (usize, usize) {
        let near = self
            .crossings
            .iter()
            .filter(|c| {
                c.windows(2)
                    .any(|w| (w[0].radius - w[1].radius).abs() < NEAR_DEGENERATE * w[0].radius)
            })
            .count();
        let extra = self.crossings.iter().filter(|c| c.len() > 2).count();
        (near, extra)
    }

    /// Sphere average of f with `phi_nodes` azimuths; optionally records samples.
    pub fn average(
        &self,
        drive: &DriveConfig,
        species: &AtomicSpecies,
        velocity: f64,
        phi_nodes: usize,
        mut samples: Option<&mut Vec<AngleSample>>,
    ) -> Result<f64, CollisionError> {
        let mut total = 0.0;
        for ((x, w), crossings) in self.cos_theta.iter().zip(&self.weights).zip(&self.crossings) {
            let theta = x.acos();
            let mut ring = 0.0;
            for k in 0..phi_nodes {
                let phi = 2.0 * PI * k as f64 / phi_nodes as f64;
                let tunnel = tunnel_probabilities(crossings, drive, species, velocity, phi)?;
                let f = loss_integrand(&tunnel);
                ring += f;
                if let Some(s) = samples.as_deref_mut() {
                    s.push(AngleSample {
                        theta,
                        phi,
                        tunnel,
                        integrand: f,
                    });
                }
            }
            total += w * ring / phi_nodes as f64;
        }
        // (1/4π)∫dΩ with ∫d(cos θ) weights summing to 2 and φ averaged.
        Ok(0.5 * total)
    }
}

fn tunnel_probabilities(
    crossings: &[CrossingInfo],
    drive: &DriveConfig,
    species: &AtomicSpecies,
    velocity: f64,
    phi: f64,
) -> Result<Vec<f64>, CollisionError> {
    crossings
        .iter()
        .map(|c| landau_zener_p(c.coupling_at(drive, species, phi), velocity, c.slope))
        .collect()
}

fn check_blue(drive: &DriveConfig) -> Result<(), CollisionError> {
    drive.validate()?;
    if !(drive.detuning > 0.0) {
        return Err(CollisionError::NotBlueDetuned(drive.detuning));
    }
    Ok(())
}

/// Sphere-averaged probability that one pair collision is inelastic.
pub fn inelastic_probability(
    drive: &DriveConfig,
    species: &AtomicSpecies,
    trap: &TrapConfig,
    quadrature: &QuadratureSpec,
) -> Result<PicResult, CollisionError> {
    check_blue(drive)?;
    species.validate()?;
    trap.validate()?;
    quadrature.validate()?;
    let velocity = collision_velocity(species, trap);
    let mut levels = LevelCache::default();
    let outcome = refine(drive, species, velocity, quadrature, &mut levels)?;

    let (nt, np) = quadrature.level(outcome.level);
    let table = levels.get(drive, species, quadrature, outcome.level)?;
    let mut per_angle = Vec::with_capacity(nt * np);
    table.average(drive, species, velocity, np, Some(&mut per_angle))?;
    let (near, extra) = table.flags();
    Ok(PicResult {
        pic: outcome.value,
        per_angle,
        quadrature: QuadratureMeta {
            theta_nodes: nt,
            phi_nodes: np,
            refinements: outcome.level,
            estimated_error: outcome.error,
            converged: outcome.converged,
            near_degenerate_nodes: near,
            extra_crossing_nodes: extra,
            coupling_convention: COUPLING_CONVENTION.to_string(),
        },
    })
}

pub(crate) struct Refined {
    pub value: f64,
    pub error: f64,
    pub level: usize,
    pub converged: bool,
}

/// θ tables per refinement level, built on first use. Tables depend on the
/// detuning and field but not on the intensity, so sweeps reuse them.
#[derive(Default)]
pub(crate) struct LevelCache {
    tables: Vec<ThetaTable>,
}

impl LevelCache {
    pub fn get(
        &mut self,
        drive: &DriveConfig,
        species: &AtomicSpecies,
        quadrature: &QuadratureSpec,
        level: usize,
    ) -> Result<&ThetaTable, CollisionError> {
        while self.tables.len() <= level {
            let (nt, _) = quadrature.level(self.tables.len());
            self.tables.push(ThetaTable::build(drive, species, &quadrature.radial, nt)?);
        }
        Ok(&self.tables[level])
    }
}

pub(crate) fn refine(
    drive: &DriveConfig,
    species: &AtomicSpecies,
    velocity: f64,
    quadrature: &QuadratureSpec,
    levels: &mut LevelCache,
) -> Result<Refined, CollisionError> {
    let (_, np) = quadrature.level(0);
    let mut value = levels
        .get(drive, species, quadrature, 0)?
        .average(drive, species, velocity, np, None)?;
    let mut error = f64::INFINITY;
    for level in 1..=quadrature.max_refinements {
        let (_, np) = quadrature.level(level);
        let next = levels
            .get(drive, species, quadrature, level)?
            .average(drive, species, velocity, np, None)?;
        error = (next - value).abs();
        value = next;
        if error < quadrature.tolerance {
            return Ok(Refined {
                value,
                error,
                level,
                converged: true,
            });
        }
    }
    Ok(Refined {
        value,
        error,
        level: quadrature.max_refinements,
        converged: quadrature.max_refinements == 0 || error < quadrature.tolerance,
    })
}

/// Integrand f(θ) at a fixed azimuth, before sphere averaging.
pub fn angular_profile(
    drive: &DriveConfig,
    species: &AtomicSpecies,
    trap: &TrapConfig,
    thetas: &[f64],
    phi: f64,
    radial: &RadialGrid,
) -> Result<Vec<(f64, f64)>, CollisionError> {
    check_blue(drive)?;
    let velocity = collision_velocity(species, trap);
    let shifts = single_atom_shifts(drive, species);
    let level = HBAR * drive.bare_detuning(species);
    let radii = radial.radii();
    let c3 = species.c3();
    thetas
        .par_iter()
        .map(|&theta| {
            let channels = molecular_channels(shifts, c3, theta, phi, &radii)?;
            let crossings = find_crossings(&channels, level)?;
            let tunnel = tunnel_probabilities(&crossings, drive, species, velocity, phi)?;
            Ok((theta, loss_integrand(&tunnel)))
        })
        .collect()
}
