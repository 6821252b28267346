use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use super::{Blockade, ErrorBudget, GateError, GateModel, GateResult, PulseWaveform};
use crate::quadrature::gauss_legendre;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Labels of the amplitudes in [`GateState`]; |W⟩ = (|1r⟩ + |r1⟩)/√2.
pub const BASIS: [&str; 6] = ["00", "01", "0r", "11", "W", "rr"];

/// Two-atom amplitudes in the order of [`BASIS`]. |10⟩ behaves exactly like
/// |01⟩ and is not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateState(pub [Complex64; 6]);

impl GateState {
    pub fn basis(index: usize) -> Self {
        let mut a = [ZERO; 6];
        a[index] = Complex64::new(1.0, 0.0);
        Self(a)
    }

    /// Squared norm, counting |01⟩-block amplitudes once.
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// One coupled block in units of Ω: the Hamiltonian at zero laser phase and
/// the Rydberg excitation number of each state. A laser phase φ acts as
/// H(φ) = e^{iφN} H(0) e^{−iφN}.
struct Block {
    h0: DMatrix<Complex64>,
    excitations: Vec<f64>,
    /// Positions of the block states in [`GateState`].
    slots: Vec<usize>,
}

fn blocks(model: &GateModel) -> [Block; 2] {
    let g = model.scaled_decay();
    let c = |re: f64| Complex64::new(re, 0.0);
    let damp = |rate: f64| Complex64::new(0.0, -rate);
    let single = Block {
        h0: DMatrix::from_row_slice(2, 2, &[ZERO, c(0.5), c(0.5), damp(0.5 * g)]),
        excitations: vec![0.0, 1.0],
        slots: vec![1, 2],
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pair = match model.blockade {
        Blockade::Perfect => Block {
            h0: DMatrix::from_row_slice(2, 2, &[ZERO, c(s), c(s), damp(0.5 * g)]),
            excitations: vec![0.0, 1.0],
            slots: vec![3, 4],
        },
        Blockade::Finite { interaction } => {
            let v = interaction / model.rabi;
            #[rustfmt::skip]
            let h0 = DMatrix::from_row_slice(3, 3, &[
                ZERO, c(s), ZERO,
                c(s), damp(0.5 * g), c(s),
                ZERO, c(s), Complex64::new(v, -g),
            ]);
            Block {
                h0,
                excitations: vec![0.0, 1.0, 2.0],
                slots: vec![3, 4, 5],
            }
        }
    };
    [single, pair]
}

impl Block {
    fn dim(&self) -> usize {
        self.excitations.len()
    }

    fn step(&self, s: f64) -> DMatrix<Complex64> {
        (self.h0.map(|h| -I * h * s)).exp()
    }

    /// e^{iφN} M e^{−iφN}.
    fn rotate(&self, m: &DMatrix<Complex64>, phase: f64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim(), self.dim(), |a, b| {
            m[(a, b)] * Complex64::from_polar(1.0, phase * (self.excitations[a] - self.excitations[b]))
        })
    }

    fn propagate(&self, psi: DVector<Complex64>, phases: &[f64], s: f64) -> DVector<Complex64> {
        let u0 = self.step(s);
        phases.iter().fold(psi, |psi, &p| self.rotate(&u0, p) * psi)
    }

    /// ⟨0|U|0⟩ for the block's ground state and its derivatives with
    /// respect to each segment phase and to the scaled duration ΩT.
    fn amplitude_with_gradient(&self, phases: &[f64], scaled_duration: f64) -> (Complex64, Vec<Complex64>, Complex64) {
        let n = phases.len();
        let s = scaled_duration / n as f64;
        let u0 = self.step(s);
        let steps: Vec<DMatrix<Complex64>> = phases.iter().map(|&p| self.rotate(&u0, p)).collect();
        let hams: Vec<DMatrix<Complex64>> = phases.iter().map(|&p| self.rotate(&self.h0, p)).collect();
        let e0 = DVector::from_fn(self.dim(), |a, _| if a == 0 { Complex64::new(1.0, 0.0) } else { ZERO });

        // forward[k] = U_k⋯U_1 e0, backward[k] = (U_n⋯U_{k+1})† e0.
        let mut forward = Vec::with_capacity(n + 1);
        forward.push(e0.clone());
        for u in &steps {
            let next = u * forward.last().expect("non-empty");
            forward.push(next);
        }
        let mut backward = vec![e0.clone(); n + 1];
        for k in (0..n).rev() {
            backward[k] = steps[k].adjoint() * &backward[k + 1];
        }
        let amp = forward[n][0];

        let number = |v: &DVector<Complex64>, w: &DVector<Complex64>| -> Complex64 {
            (0..self.dim()).map(|a| v[a].conj() * self.excitations[a] * w[a]).sum()
        };
        // dU_k/dφ_k = i[N, U_k] telescopes into differences of ⟨χ|N|ψ⟩.
        let g: Vec<Complex64> = (0..=n).map(|k| number(&backward[k], &forward[k])).collect();
        let d_phase = (1..=n).map(|k| I * (g[k] - g[k - 1])).collect();
        let d_duration = (1..=n)
            .map(|k| (backward[k].adjoint() * &hams[k - 1] * &forward[k])[(0, 0)])
            .sum::<Complex64>()
            * (-I / n as f64);
        (amp, d_phase, d_duration)
    }

    /// ∫ Σ_a N_a |ψ_a(t)|² dt in units of 1/Ω, starting from the ground state,
    /// with an 8-point Gauss–Legendre rule inside each segment.
    fn excitation_time(&self, phases: &[f64], s: f64) -> f64 {
        let (nodes, weights) = gauss_legendre(8);
        let partial: Vec<DMatrix<Complex64>> = nodes.iter().map(|x| self.step(0.5 * s * (x + 1.0))).collect();
        let u0 = self.step(s);
        let mut psi = DVector::from_fn(self.dim(), |a, _| if a == 0 { Complex64::new(1.0, 0.0) } else { ZERO });
        let mut total = 0.0;
        for &p in phases {
            for (u, w) in partial.iter().zip(&weights) {
                let v = self.rotate(u, p) * &psi;
                let n: f64 = (0..self.dim()).map(|a| self.excitations[a] * v[a].norm_sqr()).sum();
                total += 0.5 * s * w * n;
            }
            psi = self.rotate(&u0, p) * psi;
        }
        total
    }
}

/// Applies the pulse to arbitrary initial amplitudes. |00⟩ is inert, and
/// under perfect blockade so is |rr⟩.
pub fn evolve(model: &GateModel, pulse: &PulseWaveform, initial: &GateState) -> Result<GateState, GateError> {
    model.validate()?;
    pulse.validate()?;
    let s = model.rabi * pulse.segment_duration();
    let mut out = *initial;
    for block in blocks(model) {
        let psi = DVector::from_iterator(block.dim(), block.slots.iter().map(|&i| initial.0[i]));
        let psi = block.propagate(psi, &pulse.phases, s);
        for (a, &i) in block.slots.iter().enumerate() {
            out.0[i] = psi[a];
        }
    }
    Ok(out)
}

/// ⟨CZ_θ|ψ⟩ for the product input (|0⟩+|1⟩)⊗(|0⟩+|1⟩)/2, where
/// |CZ_θ⟩ = (|00⟩ + e^{iθ}|01⟩ + e^{iθ}|10⟩ − e^{2iθ}|11⟩)/2 and the gate
/// mapped |01⟩ → a₀₁|01⟩, |11⟩ → a₁₁|11⟩ (plus Rydberg components).
pub fn bell_overlap(a01: Complex64, a11: Complex64, theta: f64) -> Complex64 {
    let u = Complex64::from_polar(1.0, -theta);
    (1.0 + 2.0 * a01 * u - a11 * u * u) / 4.0
}

/// Correction phase θ ∈ (−π, π] maximizing |⟨CZ_θ|ψ⟩|², and that maximum.
pub fn optimal_correction(a01: Complex64, a11: Complex64) -> (f64, f64) {
    let f = |t: f64| bell_overlap(a01, a11, t).norm_sqr();
    const GRID: usize = 256;
    let h = 2.0 * PI / GRID as f64;
    let start = (0..GRID)
        .map(|k| -PI + k as f64 * h)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .expect("non-empty grid");
    let (mut lo, mut hi) = (start - h, start + h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let theta = 0.5 * (lo + hi);
    let wrapped = if theta > PI {
        theta - 2.0 * PI
    } else if theta <= -PI {
        theta + 2.0 * PI
    } else {
        theta
    };
    (wrapped, f(theta))
}

fn amplitudes(model: &GateModel, pulse: &PulseWaveform) -> Result<(Complex64, Complex64), GateError> {
    let out01 = evolve(model, pulse, &GateState::basis(1))?;
    let out11 = evolve(model, pulse, &GateState::basis(3))?;
    Ok((out01.0[1], out11.0[3]))
}

fn fidelity_only(model: &GateModel, pulse: &PulseWaveform) -> Result<f64, GateError> {
    let (a01, a11) = amplitudes(model, pulse)?;
    Ok(optimal_correction(a01, a11).1)
}

/// Splits 1 − F into decay, finite-blockade leakage and the pulse's own
/// residual error, evaluated at fixed pulse.
pub fn error_budget(model: &GateModel, pulse: &PulseWaveform) -> Result<ErrorBudget, GateError> {
    let full = fidelity_only(model, pulse)?;
    let no_decay = model.without_decay();
    let undamped = fidelity_only(&no_decay, pulse)?;
    let ideal = match model.blockade {
        Blockade::Perfect => undamped,
        Blockade::Finite { .. } => fidelity_only(
            &GateModel {
                blockade: Blockade::Perfect,
                ..no_decay
            },
            pulse,
        )?,
    };
    Ok(ErrorBudget {
        decay: undamped - full,
        leakage: ideal - undamped,
        residual: (1.0 - ideal).max(0.0),
    })
}

/// Bell-state fidelity after optimal single-qubit phase correction,
/// including amplitude lost to decay.
pub fn bell_fidelity(model: &GateModel, pulse: &PulseWaveform) -> Result<GateResult, GateError> {
    let (a01, a11) = amplitudes(model, pulse)?;
    let (theta, fidelity) = optimal_correction(a01, a11);
    let s = model.rabi * pulse.segment_duration();
    let [single, pair] = blocks(model);
    let scaled = (2.0 * single.excitation_time(&pulse.phases, s) + pair.excitation_time(&pulse.phases, s)) / 4.0;
    Ok(GateResult {
        bell_fidelity: fidelity.clamp(0.0, 1.0),
        correction_phase: theta,
        rydberg_time: scaled / model.rabi,
        amplitude_01: (a01.re, a01.im),
        amplitude_11: (a11.re, a11.im),
        error_budget: error_budget(model, pulse)?,
    })
}

/// F together with ∂F/∂φ_k and ∂F/∂T (per second), at the optimal correction
/// phase. The phase is stationary there, so it needs no derivative.
pub fn fidelity_gradient(model: &GateModel, pulse: &PulseWaveform) -> Result<(f64, Vec<f64>, f64), GateError> {
    model.validate()?;
    pulse.validate()?;
    let x = model.rabi * pulse.duration;
    let [single, pair] = blocks(model);
    let (a01, da01, dt01) = single.amplitude_with_gradient(&pulse.phases, x);
    let (a11, da11, dt11) = pair.amplitude_with_gradient(&pulse.phases, x);
    let (theta, fidelity) = optimal_correction(a01, a11);
    let z = bell_overlap(a01, a11, theta);
    let u = Complex64::from_polar(1.0, -theta);
    let dz = |d01: Complex64, d11: Complex64| (2.0 * d01 * u - d11 * u * u) / 4.0;
    let df = |d01: Complex64, d11: Complex64| 2.0 * (z.conj() * dz(d01, d11)).re;
    let d_phase = da01.iter().zip(&da11).map(|(&p, &q)| df(p, q)).collect();
    Ok((fidelity, d_phase, df(dt01, dt11) * model.rabi))
}
