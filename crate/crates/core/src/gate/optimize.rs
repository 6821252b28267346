use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient, State, TerminationReason};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{bell_fidelity, fidelity_gradient, invalid, GateError, GateModel, GateResult, PulseWaveform};
use crate::loading::trial_rng;

const GRADIENT_TOLERANCE: f64 = 1e-8;
const COST_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub segments: usize,
    pub restarts: usize,
    /// L-BFGS iteration limit per restart.
    pub max_iters: u64,
    pub seed: u64,
    /// Cost per unit of ΩT added to 1 − F in a first pass. Without decay
    /// every pulse longer than the minimum can be perfect; the weight pulls
    /// towards the shortest. A second pass without it polishes the result.
    pub duration_weight: f64,
    /// Range of ΩT the random starts are drawn from.
    pub initial_duration: (f64, f64),
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            segments: 64,
            restarts: 20,
            max_iters: 500,
            seed: 0,
            duration_weight: 1e-4,
            initial_duration: (7.0, 9.0),
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<(), GateError> {
        if self.segments < 8 {
            return Err(invalid("segments", format!("need at least 8, got {}", self.segments)));
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(invalid("restarts", "need at least one restart and one iteration"));
        }
        if !(self.duration_weight >= 0.0 && self.duration_weight.is_finite()) {
            return Err(invalid("duration_weight", "must be finite and >= 0"));
        }
        let (lo, hi) = self.initial_duration;
        if !(0.0 < lo && lo <= hi && hi.is_finite()) {
            return Err(invalid("initial_duration", format!("need 0 < lo <= hi, got ({lo}, {hi})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub fidelity: f64,
    /// ΩT of the restart's final pulse.
    pub scaled_duration: f64,
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedPulse {
    pub waveform: PulseWaveform,
    pub result: GateResult,
    /// Index of the restart that produced the waveform.
    pub best_restart: usize,
    pub converged: bool,
    pub restarts: Vec<RestartSummary>,
}

/// Parameters are the segment phases followed by ΩT; only |ΩT| is used so
/// line searches may cross zero harmlessly.
struct Problem<'a> {
    model: &'a GateModel,
    weight: f64,
}

impl Problem<'_> {
    fn pulse(&self, x: &[f64]) -> PulseWaveform {
        let (phases, t) = x.split_at(x.len() - 1);
        PulseWaveform {
            duration: t[0].abs() / self.model.rabi,
            phases: phases.to_vec(),
        }
    }

    fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>), GateError> {
        let (f, mut grad, d_duration) = fidelity_gradient(self.model, &self.pulse(x))?;
        let t = x[x.len() - 1];
        let cost = 1.0 - f + self.weight * t.abs();
        grad.iter_mut().for_each(|g| *g = -*g);
        grad.push((-d_duration / self.model.rabi + self.weight) * t.signum());
        Ok((cost, grad))
    }
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> Result<f64, ArgminError> {
        Ok(self.evaluate(x)?.0)
    }
}

impl Gradient for Problem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Self::Param) -> Result<Vec<f64>, ArgminError> {
        Ok(self.evaluate(x)?.1)
    }
}

/// Smooth random start: a linear phase ramp plus three Fourier components.
fn initial_guess(options: &OptimizerOptions, restart: usize) -> Vec<f64> {
    let mut rng = trial_rng(options.seed, restart as u64);
    let (lo, hi) = options.initial_duration;
    let duration = lo + (hi - lo) * rng.random::<f64>();
    let ramp = 2.0 * rng.random::<f64>() - 1.0;
    let modes: Vec<(f64, f64)> = (1..=3)
        .map(|m| {
            let scale = 2.0 / m as f64;
            (scale * (2.0 * rng.random::<f64>() - 1.0), scale * (2.0 * rng.random::<f64>() - 1.0))
        })
        .collect();
    let n = options.segments;
    let mut x: Vec<f64> = (0..n)
        .map(|k| {
            let u = (k as f64 + 0.5) / n as f64;
            let fourier: f64 = modes
                .iter()
                .enumerate()
                .map(|(m, (a, b))| {
                    let w = (m + 1) as f64 * PI * u;
                    a * w.cos() + b * w.sin()
                })
                .sum();
            ramp * duration * u + fourier
        })
        .collect();
    x.push(duration);
    x
}

struct Outcome {
    params: Vec<f64>,
    cost: f64,
    iterations: u64,
    converged: bool,
}

fn minimize(model: &GateModel, weight: f64, init: Vec<f64>, max_iters: u64) -> Outcome {
    let problem = || Problem { model, weight };
    let unmoved = |params: Vec<f64>| Outcome {
        cost: problem().evaluate(&params).map_or(f64::INFINITY, |(c, _)| c),
        params,
        iterations: 0,
        converged: false,
    };
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(GRADIENT_TOLERANCE)
        .and_then(|s| s.with_tolerance_cost(COST_TOLERANCE));
    let Ok(solver) = solver else {
        return unmoved(init);
    };
    match Executor::new(problem(), solver)
        .configure(|state| state.param(init.clone()).max_iters(max_iters))
        .run()
    {
        Ok(res) => {
            let state = res.state();
            Outcome {
                params: state.get_best_param().cloned().unwrap_or(init),
                cost: state.get_best_cost(),
                iterations: state.get_iter(),
                converged: !matches!(state.get_termination_reason(), Some(TerminationReason::MaxItersReached)),
            }
        }
        Err(_) => unmoved(init),
    }
}

fn run_restart(model: &GateModel, options: &OptimizerOptions, restart: usize) -> Outcome {
    let init = initial_guess(options, restart);
    let first = minimize(model, options.duration_weight, init, options.max_iters);
    let second = minimize(model, 0.0, first.params, options.max_iters);
    Outcome {
        iterations: first.iterations + second.iterations,
        ..second
    }
}

/// Removes 2π jumps between neighbouring segments.
fn unwrap_phases(phases: &mut [f64]) {
    for k in 1..phases.len() {
        let step = phases[k] - phases[k - 1];
        phases[k] -= 2.0 * PI * (step / (2.0 * PI)).round();
    }
}

/// Maximizes the Bell fidelity over segment phases and total duration with
/// L-BFGS from `restarts` seeded random starts run in parallel. The returned
/// phases are shifted to zero mean.
pub fn optimize_pulse(model: &GateModel, options: &OptimizerOptions) -> Result<OptimizedPulse, GateError> {
    model.validate()?;
    options.validate()?;
    let outcomes: Vec<Outcome> = (0..options.restarts)
        .into_par_iter()
        .map(|r| run_restart(model, options, r))
        .collect();
    let problem = Problem { model, weight: 0.0 };
    let mut summaries = Vec::with_capacity(outcomes.len());
    for (index, o) in outcomes.iter().enumerate() {
        summaries.push(RestartSummary {
            index,
            fidelity: 1.0 - problem.evaluate(&o.params)?.0,
            scaled_duration: o.params[o.params.len() - 1].abs(),
            iterations: o.iterations,
            converged: o.converged,
        });
    }
    let best = (0..outcomes.len())
        .min_by(|&a, &b| outcomes[a].cost.total_cmp(&outcomes[b].cost))
        .expect("at least one restart");
    let mut raw = problem.pulse(&outcomes[best].params);
    unwrap_phases(&mut raw.phases);
    let mean = raw.phases.iter().sum::<f64>() / raw.phases.len() as f64;
    let waveform = raw.offset(-mean);
    let result = bell_fidelity(model, &waveform)?;
    let out = OptimizedPulse {
        waveform,
        result,
        best_restart: best,
        converged: outcomes[best].converged,
        restarts: summaries,
    };
    if outcomes.iter().any(|o| o.converged) {
        Ok(out)
    } else {
        Err(GateError::NotConverged {
            fidelity: out.result.bell_fidelity,
            best: Box::new(out),
        })
    }
}
