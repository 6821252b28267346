//! Time-optimal CZ pulse at Ω = 2π×15 MHz: fidelity, duration and error
//! budget for several Rydberg lifetimes.

use std::time::Instant;
use tweezer_sim::gate::{optimize_pulse, GateModel, OptimizerOptions};

fn main() {
    let options = OptimizerOptions::default();
    for lifetime in [None, Some(40e-6), Some(80e-6)] {
        let model = GateModel {
            rydberg_lifetime: lifetime,
            ..GateModel::default()
        };
        let start = Instant::now();
        let opt = optimize_pulse(&model, &options).expect("optimization");
        let r = &opt.result;
        println!(
            "tau {:>8}: F = {:.6}  ΩT = {:.4}  Ω·T_R = {:.4}  decay {:.2e}  residual {:.2e}  converged {}/{}  ({:.1} s)",
            lifetime.map_or("inf".to_string(), |t| format!("{:.0} us", t * 1e6)),
            r.bell_fidelity,
            model.rabi * opt.waveform.duration,
            model.rabi * r.rydberg_time,
            r.error_budget.decay,
            r.error_budget.residual,
            opt.restarts.iter().filter(|s| s.converged).count(),
            opt.restarts.len(),
            start.elapsed().as_secs_f64(),
        );
    }
}
