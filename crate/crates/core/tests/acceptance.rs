//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always appear in `cargo test` output; exits nonzero
//! if any check fails.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use tweezer_sim::collision::{
    angular_profile, pic_sweep, presets, two_channel_loss, AtomicSpecies, PicSweep, QuadratureSpec, RadialGrid,
    TrapConfig,
};
use tweezer_sim::gate::{optimize_pulse, GateModel, OptimizerOptions};
use tweezer_sim::hologram::{gaussian_incident, run_wgs, target_grid, HologramState};
use tweezer_sim::imaging::{
    analyze, classification_accuracy, estimate_fidelity, filter_frame, imaging_lifetime, simulate_sequence,
    FilterParams, ImageFrame, ImagingScenario,
};
use tweezer_sim::loading::{
    array_efficiency, exact_efficiency, loading_efficiency, trial_rng, InitialDistribution, LoadingParams,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// The 12 × 10 grid shared by the map comparisons.
fn standard_map(drive: &tweezer_sim::collision::DriveConfig) -> PicSweep {
    let quadrature = QuadratureSpec {
        max_refinements: 0,
        ..QuadratureSpec::default()
    };
    pic_sweep(
        drive,
        &geomspace(10.0, 1000.0, 12),
        &linspace(0.1, 1.9, 10),
        &AtomicSpecies::ytterbium_174(),
        &TrapConfig::default(),
        &quadrature,
    )
    .expect("sweep runs")
}

fn two_channel_supremum() -> Outcome {
    // Zoom in on the best point of a coarse grid; the integrand is smooth and
    // the maximum interior, so each stage keeps it inside the window.
    let (mut c1, mut c2, mut span) = (0.5, 0.5, 1.0);
    let mut best = f64::MIN;
    for _ in 0..12 {
        let n = 40;
        let (mut b1, mut b2) = (c1, c2);
        for i in 0..=n {
            for j in 0..=n {
                let p1 = (c1 - span / 2.0 + span * i as f64 / n as f64).clamp(0.0, 1.0);
                let p2 = (c2 - span / 2.0 + span * j as f64 / n as f64).clamp(0.0, 1.0);
                let f = two_channel_loss(p2, p1);
                if f > best {
                    (best, b1, b2) = (f, p1, p2);
                }
            }
        }
        (c1, c2, span) = (b1, b2, span * 0.2);
    }
    let ok = (best - 2.0 / 3.0).abs() < 1e-4 && (c1 - 0.5).abs() < 1e-4 && (c2 - 1.0 / 3.0).abs() < 1e-4;
    check(ok, format!("max {best:.8} at P1 = {c1:.6}, P2 = {c2:.6}"))
}

fn single_channel_bound() -> Outcome {
    let quadrature = QuadratureSpec {
        tolerance: 1e-3,
        max_refinements: 3,
        ..QuadratureSpec::default()
    };
    let map = pic_sweep(
        &presets::partially_repulsive(1.0, 1.0),
        &geomspace(10.0, 1000.0, 20),
        &linspace(0.1, 1.9, 20),
        &AtomicSpecies::ytterbium_174(),
        &TrapConfig::default(),
        &quadrature,
    )
    .map_err(|e| e.to_string())?;
    let max = map.pic.iter().flatten().copied().fold(f64::MIN, f64::max);
    let worst_error = map.errors.iter().flatten().copied().fold(0.0, f64::max);
    let ok = map.failures.is_empty() && max <= 0.5 + 1e-12 && worst_error < 1e-3;
    check(
        ok,
        format!(
            "20x20 max P_ic {max:.4}, worst node-doubling change {worst_error:.2e}, {} failed cells",
            map.failures.len()
        ),
    )
}

fn global_map_argmax_and_partial_shape() -> Outcome {
    let map = standard_map(&presets::globally_repulsive(1.0, 1.0));
    let peak = map.argmax.ok_or("no valid cell")?;
    let in_window = (50.0..=200.0).contains(&peak.saturation) && (0.75..=3.0).contains(&peak.delta_over_ftrap);

    let trap = TrapConfig::default();
    let drive = presets::partially_repulsive(100.0, 1.5 * trap.depth_hz);
    let thetas: Vec<f64> = (0..=36).map(|k| k as f64 * PI / 36.0).collect();
    let profile = angular_profile(&drive, &AtomicSpecies::ytterbium_174(), &trap, &thetas, 0.0, &RadialGrid::default())
        .map_err(|e| e.to_string())?;
    let at_zero = profile[0].1;
    let top = profile.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    let peak_deg = top.0.to_degrees();
    let at_90 = profile[18].1;
    let ok = in_window && at_zero < 1e-9 && (peak_deg - 90.0).abs() <= 20.0;
    check(
        ok,
        format!(
            "argmax (I/I_sat, delta/f_trap) = ({:.1}, {:.2}), P_ic {:.3}; partial f(0) = {at_zero:.1e}, max f = {:.3} at {peak_deg:.0} deg, f(90 deg) = {at_90:.3}",
            peak.saturation, peak.delta_over_ftrap, peak.value, top.1
        ),
    )
}

fn poisson_params(lambda: f64) -> LoadingParams {
    LoadingParams {
        mean_occupancy: lambda,
        initial: InitialDistribution::Poisson,
        duration: 10.0,
        trials: 100_000,
        ..LoadingParams::default()
    }
}

fn loading_calibration() -> Outcome {
    let global = standard_map(&presets::globally_repulsive(1.0, 1.0)).max_value();
    let partial = standard_map(&presets::partially_repulsive(1.0, 1.0)).max_value();
    let params = LoadingParams::default();
    let run = |p_ic: f64| loading_efficiency(&params, p_ic).map_err(|e| e.to_string());
    let (g, p, red) = (run(global)?, run(partial)?, run(0.0)?);
    let mut ok = (0.78..=0.84).contains(&g.p_single) && (0.71..=0.78).contains(&p.p_single);
    ok &= (red.p_single - 0.60).abs() <= 0.02;

    // Closed forms for Poisson loading: red light alone keeps the parity,
    // perfect one-by-one loss keeps exactly one atom whenever any was there.
    let lambda = 3.0;
    let red_only = loading_efficiency(&LoadingParams { red_pa_probability: 1.0, ..poisson_params(lambda) }, 0.0)
        .map_err(|e| e.to_string())?;
    let funnel = loading_efficiency(&LoadingParams { red_pa_probability: 0.0, ..poisson_params(lambda) }, 1.0)
        .map_err(|e| e.to_string())?;
    let parity = 0.5 * (1.0 - (-2.0 * lambda).exp());
    let one = 1.0 - (-lambda).exp();
    let z = |e: &tweezer_sim::loading::EfficiencyEstimate, truth: f64| {
        let sigma = (truth * (1.0 - truth) / e.trials as f64).sqrt();
        (e.p_single - truth).abs() / sigma
    };
    let (z_parity, z_one) = (z(&red_only, parity), z(&funnel, one));
    ok &= z_parity <= 3.0 && z_one <= 3.0;

    // Sites are independent, so per-site expectations cannot depend on array size.
    let mut flat = true;
    for n in [16, 144, 1024, 2939] {
        let a = array_efficiency(&params, global, &vec![params.mean_occupancy; n], 2).map_err(|e| e.to_string())?;
        let reference = exact_efficiency(&params, global).map_err(|e| e.to_string())?;
        flat &= a.exact.iter().all(|&e| e == reference);
    }
    ok &= flat;
    check(
        ok,
        format!(
            "P_ic {global:.3} -> {:.4} [{:.4}, {:.4}]; P_ic {partial:.3} -> {:.4}; red only {:.4}; \
             parity oracle z = {z_parity:.2}, 1-exp(-lambda) oracle z = {z_one:.2}; array flatness {}",
            g.p_single,
            g.lower,
            g.upper,
            p.p_single,
            red.p_single,
            if flat { "exact" } else { "broken" }
        ),
    )
}

fn sigma_minus_suppressed() -> Outcome {
    let global = standard_map(&presets::globally_repulsive(1.0, 1.0)).max_value();
    let sigma = standard_map(&presets::sigma_minus_high_field(1.0, 1.0)).max_value();
    let ratio = sigma / global;
    check(ratio < 0.2, format!("sigma- max {sigma:.4} vs globally repulsive {global:.4}, ratio {ratio:.3}"))
}

fn wgs_uniformity() -> Outcome {
    let (h, w) = (512, 512);
    let spots = target_grid(10, 10, 12, (h, w)).map_err(|e| e.to_string())?;
    let state = HologramState::new(h, w, spots, gaussian_incident(h, w, 0.45), 0).map_err(|e| e.to_string())?;
    let out = run_wgs(state, 100, 0.98).map_err(|e| e.to_string())?;
    let ok = out.report.uniformity >= 0.98 && out.max_parseval_error < 1e-9;
    check(
        ok,
        format!(
            "uniformity {:.4} at iteration {} of {}, worst Parseval error {:.1e}",
            out.report.uniformity,
            out.best_iteration,
            out.history.len(),
            out.max_parseval_error
        ),
    )
}

fn imaging_pipeline() -> Outcome {
    let base = ImagingScenario::default();
    let scenario = ImagingScenario {
        background_peak: 10.0 * base.background_peak,
        ..base
    };
    let seq = simulate_sequence(&scenario, 5).map_err(|e| e.to_string())?;
    let analysis = analyze(&seq.frames, &seq.calibration, &seq.sites, &scenario.filter).map_err(|e| e.to_string())?;
    let accuracy = classification_accuracy(&analysis.occupancy, &seq.truth);
    let mut ok = accuracy >= 0.99 && analysis.estimate.fidelity >= 0.99;

    let flat = ImageFrame::filled(96, 80, 137.0);
    let filtered = filter_frame(&flat, &FilterParams::default()).map_err(|e| e.to_string())?;
    let zero = filtered.pixels.iter().all(|&p| p == 0.0);
    ok &= zero;

    // Independent generator: load, lose atoms between images, then misread.
    let (f_fp, f_fn, loss) = (0.005, 0.01, 0.009);
    let mut rng = trial_rng(21, 0);
    let triples: Vec<[bool; 3]> = (0..100_000)
        .map(|_| {
            let mut present = rng.random::<f64>() < 0.5;
            let mut out = [false; 3];
            for (k, o) in out.iter_mut().enumerate() {
                if k > 0 && present && rng.random::<f64>() < loss {
                    present = false;
                }
                let u = rng.random::<f64>();
                *o = if present { u >= f_fn } else { u < f_fp };
            }
            out
        })
        .collect();
    let est = estimate_fidelity(&triples).map_err(|e| e.to_string())?;
    let rel = |x: f64, truth: f64| (x / truth - 1.0).abs();
    let worst_rate = rel(est.false_positive, f_fp).max(rel(est.false_negative, f_fn)).max(rel(est.loss, loss));
    ok &= worst_rate <= 0.2;

    let sites = 2939;
    let times: Vec<f64> = (0..30).map(|k| 2.0 * k as f64).collect();
    let mut rng = trial_rng(22, 0);
    let survival: Vec<f64> = times
        .iter()
        .map(|t| Binomial::new(sites, (-t / 35.1).exp()).expect("valid").sample(&mut rng) as f64 / sites as f64)
        .collect();
    let fit = imaging_lifetime(&times, &survival).map_err(|e| e.to_string())?;
    let tau_err = rel(fit.tau, 35.1);
    ok &= tau_err <= 0.05;
    check(
        ok,
        format!(
            "10x background: accuracy {accuracy:.4}, estimated F {:.4}; flat frame filters to zero: {zero}; \
             worst rate error {:.1}%; lifetime {:.2} s ({:.1}%)",
            analysis.estimate.fidelity,
            100.0 * worst_rate,
            fit.tau,
            100.0 * tau_err
        ),
    )
}

fn gate_fidelity() -> Outcome {
    let options = OptimizerOptions::default();
    let base = GateModel::default();
    let run = |model: &GateModel| optimize_pulse(model, &options).map_err(|e| e.to_string());
    let at40 = run(&GateModel {
        rydberg_lifetime: Some(40e-6),
        ..base
    })?;
    let ideal = run(&base.without_decay())?;
    let at80 = run(&GateModel {
        rydberg_lifetime: Some(80e-6),
        ..base
    })?;
    let f40 = at40.result.bell_fidelity;
    let omega_t = base.rabi * ideal.waveform.duration;
    let ratio = at40.result.error_budget.decay / at80.result.error_budget.decay;
    let ok = (f40 - 0.9991).abs() <= 0.0005
        && ideal.result.bell_fidelity >= 0.9999
        && (omega_t - 7.6).abs() <= 0.2
        && (ratio / 2.0 - 1.0).abs() <= 0.15;
    check(
        ok,
        format!(
            "F(40 us) = {f40:.5}; F(no decay) = {:.6} at Omega*T = {omega_t:.3}; decay error ratio 40/80 us = {ratio:.3}",
            ideal.result.bell_fidelity
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
seed = 11

[pic_sweep.saturation]
min = 10.0
max = 1000.0
count = 6
log = true

[pic_sweep.delta]
min = 0.5
max = 1.9
count = 5

[load_sim]
array_sizes = [16, 144]
shots = 10

[load_sim.params]
trials = 20000

[holo]
rows = 6
cols = 6
spacing = 8
height = 128
width = 128
max_iterations = 30

[img]
rows = 6
cols = 6
shots = 30
calibration_frames = 20

[gate.optimizer]
segments = 32
restarts = 4
"#;

fn run_all(dir: &Path, config: &Path, threads: &str) -> Result<(), String> {
    for cmd in ["pic-sweep", "load-sim", "holo", "img-sim", "img-analyze", "gate-opt"] {
        let out = Command::new(env!("CARGO_BIN_EXE_tweezer"))
            .arg(cmd)
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(dir)
            .args(["--threads", threads])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{cmd} failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = root.path().join("run.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    run_all(&a, &config, "1")?;
    run_all(&b, &config, "2")?;
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut other: Vec<String> = std::fs::read_dir(&b)
        .map_err(|e| e.to_string())?
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    other.sort();
    if names != other {
        return Err(format!("file sets differ: {names:?} vs {other:?}"));
    }
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).ok() != std::fs::read(b.join(n)).ok())
        .collect();
    check(
        differing.is_empty(),
        format!("{} artifacts from 6 subcommands compared, differing: {differing:?}", names.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "two-channel loss supremum", two_channel_supremum),
        (2, "single-channel P_ic bound and quadrature convergence", single_channel_bound),
        (3, "P_ic map optimum and angular profile", global_map_argmax_and_partial_shape),
        (4, "loading efficiency calibration and oracles", loading_calibration),
        (5, "sigma- high-field suppression", sigma_minus_suppressed),
        (6, "WGS uniformity and power conservation", wgs_uniformity),
        (7, "image pipeline", imaging_pipeline),
        (8, "CZ gate fidelity", gate_fidelity),
        (9, "CLI determinism", determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS ({name}, {secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL ({name}, {secs:.1} s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
