use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::average::{refine, LevelCache, QuadratureSpec, COUPLING_CONVENTION};
use super::drive::DriveConfig;
use super::species::{collision_velocity, AtomicSpecies, TrapConfig};
use super::CollisionError;
use crate::units::angular;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub s_index: usize,
    pub delta_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapPeak {
    pub s_index: usize,
    pub delta_index: usize,
    pub saturation: f64,
    pub delta_over_ftrap: f64,
    pub value: f64,
}

/// P_ic on an (I/I_sat, Δ/f_trap) grid. `pic[i][j]` belongs to
/// `saturations[i]`, `deltas[j]`; failed cells hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicSweep {
    pub saturations: Vec<f64>,
    pub deltas: Vec<f64>,
    pub pic: Vec<Vec<f64>>,
    /// Quadrature error estimate per cell.
    pub errors: Vec<Vec<f64>>,
    pub failures: Vec<CellFailure>,
    pub argmax: Option<MapPeak>,
    pub quadrature: QuadratureSpec,
    pub coupling_convention: String,
}

impl PicSweep {
    /// Best intensity for each detuning column.
    pub fn column_peaks(&self) -> Vec<Option<MapPeak>> {
        (0..self.deltas.len())
            .map(|j| {
                peak(
                    self.saturations
                        .iter()
                        .enumerate()
                        .map(|(i, _)| (i, j, self.pic[i][j])),
                    self,
                )
            })
            .collect()
    }

    pub fn max_value(&self) -> f64 {
        self.argmax.map_or(0.0, |p| p.value)
    }
}

fn peak(cells: impl Iterator<Item = (usize, usize, f64)>, sweep: &PicSweep) -> Option<MapPeak> {
    cells
        .filter(|(_, _, v)| v.is_finite())
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(i, j, value)| MapPeak {
            s_index: i,
            delta_index: j,
            saturation: sweep.saturations[i],
            delta_over_ftrap: sweep.deltas[j],
            value,
        })
}

/// Evaluates P_ic on the grid spanned by `saturations` and `deltas` (in units
/// of the trap depth f_trap = U₀/h). Detuning columns run in parallel and
/// share their angular crossing tables across the intensity axis.
pub fn pic_sweep(
    template: &DriveConfig,
    saturations: &[f64],
    deltas: &[f64],
    species: &AtomicSpecies,
    trap: &TrapConfig,
    quadrature: &QuadratureSpec,
) -> Result<PicSweep, CollisionError> {
    if saturations.is_empty() || deltas.is_empty() {
        return Err(CollisionError::InvalidGrid("sweep axes must be non-empty".into()));
    }
    species.validate()?;
    trap.validate()?;
    quadrature.validate()?;
    let velocity = collision_velocity(species, trap);

    let columns: Vec<Vec<Result<(f64, f64), CollisionError>>> = deltas
        .par_iter()
        .map(|&delta| {
            let base = DriveConfig {
                detuning: angular(delta * trap.depth_hz),
                ..*template
            };
            let mut levels = LevelCache::default();
            saturations
                .iter()
                .map(|&s| {
                    let drive = DriveConfig {
                        saturation: s,
                        ..base
                    };
                    drive.validate()?;
                    if !(drive.detuning > 0.0) {
                        return Err(CollisionError::NotBlueDetuned(drive.detuning));
                    }
                    let r = refine(&drive, species, velocity, quadrature, &mut levels)?;
                    Ok((r.value, r.error))
                })
                .collect()
        })
        .collect();

    let mut pic = vec![vec![f64::NAN; deltas.len()]; saturations.len()];
    let mut errors = vec![vec![f64::NAN; deltas.len()]; saturations.len()];
    let mut failures = Vec::new();
    for (j, column) in columns.into_iter().enumerate() {
        for (i, cell) in column.into_iter().enumerate() {
            match cell {
                Ok((value, err)) => {
                    pic[i][j] = value;
                    errors[i][j] = err;
                }
                Err(e) => failures.push(CellFailure {
                    s_index: i,
                    delta_index: j,
                    message: e.to_string(),
                }),
            }
        }
    }
    let mut sweep = PicSweep {
        saturations: saturations.to_vec(),
        deltas: deltas.to_vec(),
        pic,
        errors,
        failures,
        argmax: None,
        quadrature: *quadrature,
        coupling_convention: COUPLING_CONVENTION.to_string(),
    };
    let all = (0..saturations.len())
        .flat_map(|i| (0..deltas.len()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, sweep.pic[i][j]));
    sweep.argmax = peak(all, &sweep);
    Ok(sweep)
}
