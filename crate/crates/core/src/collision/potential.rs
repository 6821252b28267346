//! Excited-pair potentials: dipole-dipole coupling in the symmetric
//! singly-excited basis (|ge₋₁⟩, |ge₀⟩, |ge₊₁⟩) plus single-atom shifts.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use super::CollisionError;
use crate::units::HBAR;

pub type CMatrix3 = Matrix3<Complex64>;
pub type CVector3 = Vector3<Complex64>;

/// Resonant dipole-dipole interaction at separation `r`, polar angle `theta`
/// from the quantization axis and azimuth `phi`, in J.
pub fn dipole_dipole_matrix(
    r: f64,
    theta: f64,
    phi: f64,
    c3: f64,
) -> Result<CMatrix3, CollisionError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(CollisionError::NonPositiveRadius(r));
    }
    Ok(dipole_dipole_unchecked(r, theta, phi, c3))
}

fn dipole_dipole_unchecked(r: f64, theta: f64, phi: f64, c3: f64) -> CMatrix3 {
    let scale = c3 / (r * r * r);
    let (s, c) = theta.sin_cos();
    let diag_pm = 0.5 * (3.0 * c * c - 1.0);
    let diag_0 = 1.0 - 3.0 * c * c;
    let near = -3.0 * (2.0 * theta).sin() / (2.0 * SQRT_2);
    let far = -1.5 * s * s;
    let e1 = Complex64::from_polar(1.0, phi);
    let e2 = Complex64::from_polar(1.0, 2.0 * phi);
    let re = |x: f64| Complex64::new(x * scale, 0.0);
    let m01 = e1.conj() * near * scale;
    let m02 = e2.conj() * far * scale;
    #[rustfmt::skip]
    let m = Matrix3::new(
        re(diag_pm), m01, m02,
        m01.conj(), re(diag_0), m01,
        m02.conj(), m01.conj(), re(diag_pm),
    );
    m
}

/// Diagonal phase D(φ) = diag(e^{−iφ}, 1, e^{iφ}) with V(θ, φ) = D V(θ, 0) D†.
pub fn azimuthal_rotation(phi: f64) -> [Complex64; 3] {
    [
        Complex64::from_polar(1.0, -phi),
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, phi),
    ]
}

/// H_shift + V_dd(r) at fixed orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairHamiltonian {
    /// Single-atom sublevel shifts, rad/s.
    pub shifts: [f64; 3],
    /// J·m³
    pub c3: f64,
    pub theta: f64,
    pub phi: f64,
}

impl PairHamiltonian {
    pub fn matrix(&self, r: f64) -> CMatrix3 {
        let mut m = dipole_dipole_unchecked(r, self.theta, self.phi, self.c3);
        for (j, shift) in self.shifts.iter().enumerate() {
            m[(j, j)] += Complex64::new(HBAR * shift, 0.0);
        }
        m
    }

    /// Eigenpairs sorted by ascending energy.
    pub fn eigen(&self, r: f64) -> [(f64, CVector3); 3] {
        let eig = self.matrix(r).symmetric_eigen();
        let mut pairs: [(f64, CVector3); 3] =
            std::array::from_fn(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }

    /// The eigenpair at `r` whose eigenvector overlaps most with `reference`.
    pub fn follow(&self, r: f64, reference: &CVector3) -> (f64, CVector3) {
        let pairs = self.eigen(r);
        let (energy, mut vector) = pairs
            .into_iter()
            .max_by(|a, b| overlap(reference, &a.1).total_cmp(&overlap(reference, &b.1)))
            .expect("three eigenpairs");
        align_phase(reference, &mut vector);
        (energy, vector)
    }
}

fn overlap(a: &CVector3, b: &CVector3) -> f64 {
    a.dotc(b).norm()
}

/// Rotates the global phase of `v` so that ⟨reference|v⟩ is real and positive.
fn align_phase(reference: &CVector3, v: &mut CVector3) {
    let ov = reference.dotc(v);
    if ov.norm() > 0.0 {
        let phase = ov.conj() / ov.norm();
        *v *= phase;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    /// Energy rises monotonically as r decreases.
    Repulsive,
    /// Energy falls monotonically as r decreases.
    Attractive,
    Mixed,
}

/// One continuity-tracked eigenvalue curve of H_shift + V_dd.
#[derive(Debug, Clone)]
pub struct MolecularChannel {
    pub index: usize,
    /// Energies on the shared radial grid, J.
    pub energies: Vec<f64>,
    pub eigenvectors: Vec<CVector3>,
    /// Energy at r → ∞, J.
    pub asymptote: f64,
    pub character: Monotonicity,
}

#[derive(Debug, Clone)]
pub struct MolecularChannels {
    pub hamiltonian: PairHamiltonian,
    /// Strictly increasing radii, m.
    pub radii: Vec<f64>,
    pub channels: Vec<MolecularChannel>,
}

/// Diagonalizes H_shift + V_dd on `r_grid` and links eigenvectors between
/// neighbouring radii by maximal overlap, starting from the largest radius
/// where channels are labelled by ascending asymptotic energy.
pub fn molecular_channels(
    shifts: [f64; 3],
    c3: f64,
    theta: f64,
    phi: f64,
    r_grid: &[f64],
) -> Result<MolecularChannels, CollisionError> {
    validate_grid(r_grid)?;
    let hamiltonian = PairHamiltonian {
        shifts,
        c3,
        theta,
        phi,
    };
    let n = r_grid.len();
    let mut energies = vec![vec![0.0; n]; 3];
    let mut vectors = vec![vec![CVector3::zeros(); n]; 3];

    let mut previous: Option<[CVector3; 3]> = None;
    for i in (0..n).rev() {
        let pairs = hamiltonian.eigen(r_grid[i]);
        let assigned = match &previous {
            None => pairs,
            Some(prev) => match_by_overlap(prev, pairs),
        };
        for (k, (e, v)) in assigned.iter().enumerate() {
            energies[k][i] = *e;
            vectors[k][i] = *v;
        }
        previous = Some(std::array::from_fn(|k| assigned[k].1));
    }

    let mut sorted_shifts = shifts;
    sorted_shifts.sort_by(f64::total_cmp);
    let channels = energies
        .into_iter()
        .zip(vectors)
        .enumerate()
        .map(|(index, (energies, eigenvectors))| {
            let character = classify(&energies);
            MolecularChannel {
                index,
                energies,
                eigenvectors,
                asymptote: HBAR * sorted_shifts[index],
                character,
            }
        })
        .collect();
    Ok(MolecularChannels {
        hamiltonian,
        radii: r_grid.to_vec(),
        channels,
    })
}

fn validate_grid(r_grid: &[f64]) -> Result<(), CollisionError> {
    if r_grid.len() < 2 {
        return Err(CollisionError::InvalidGrid("radial grid needs at least two points".into()));
    }
    if r_grid[0] <= 0.0 || !r_grid.iter().all(|r| r.is_finite()) {
        return Err(CollisionError::InvalidGrid("radii must be positive and finite".into()));
    }
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CollisionError::InvalidGrid("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Greedy assignment by descending overlap; equal overlaps keep the previous order.
fn match_by_overlap(prev: &[CVector3; 3], pairs: [(f64, CVector3); 3]) -> [(f64, CVector3); 3] {
    let mut candidates = Vec::with_capacity(9);
    for (i, p) in prev.iter().enumerate() {
        for (j, (_, v)) in pairs.iter().enumerate() {
            candidates.push((overlap(p, v), i, j));
        }
    }
    // Stable sort: ties resolved by (previous index, new index) order.
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut slot = [usize::MAX; 3];
    let mut taken = [false; 3];
    for (_, i, j) in candidates {
        if slot[i] == usize::MAX && !taken[j] {
            slot[i] = j;
            taken[j] = true;
        }
    }
    std::array::from_fn(|i| {
        let (e, mut v) = pairs[slot[i]];
        align_phase(&prev[i], &mut v);
        (e, v)
    })
}

fn classify(energies: &[f64]) -> Monotonicity {
    // Energies are stored at increasing r.
    let rising_inward = energies.windows(2).all(|w| w[0] >= w[1]);
    let falling_inward = energies.windows(2).all(|w| w[0] <= w[1]);
    match (rising_inward, falling_inward) {
        (true, false) => Monotonicity::Repulsive,
        (false, true) => Monotonicity::Attractive,
        _ => Monotonicity::Mixed,
    }
}

/// Logarithmically spaced radii.
pub fn log_grid(r_min: f64, r_max: f64, points: usize) -> Vec<f64> {
    let (a, b) = (r_min.ln(), r_max.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}
