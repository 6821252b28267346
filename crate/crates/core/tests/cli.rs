use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tweezer(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tweezer"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

const SMALL_IMAGING: &str = "[img]\nrows = 5\ncols = 5\nshots = 50\ncalibration_frames = 20\n";

#[test]
fn malformed_toml_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n\n[holo]\nrows = \"ten\"\n");
    let out = tweezer(&["holo", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn empty_sweep_axis_exits_2_pointing_at_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[pic_sweep.delta]\nmin = 0.5\nmax = 1.5\ncount = 0\n");
    let out = tweezer(&["pic-sweep", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("run.toml:4: pic_sweep.delta.count"), "{err}");
    assert!(!dir.path().join("o").exists(), "nothing written on config errors");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tweezer(&["teleport"], dir.path()).status.code(), Some(2));
    assert_eq!(tweezer(&["holo", "--format", "pdf"], dir.path()).status.code(), Some(2));
    assert_eq!(tweezer(&["holo", "--threads", "0", "--out", "o"], dir.path()).status.code(), Some(2));
}

#[test]
fn optimizer_failure_exits_3_with_best_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[gate.optimizer]\nsegments = 16\nrestarts = 2\nmax_iters = 1\n");
    let out = tweezer(&["gate-opt", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("best F ="), "{}", stderr(&out));
}

#[test]
fn img_analyze_without_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = tweezer(&["img-analyze", "--input", "missing", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("frames.raw.json"), "{}", stderr(&out));
}

#[test]
fn empty_array_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL_IMAGING}filling = 0.0\n"));
    let sim = tweezer(&["img-sim", "--config", &cfg, "--out", "o"], dir.path());
    assert!(sim.status.success(), "{}", stderr(&sim));
    let out = tweezer(&["img-analyze", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn simulated_sequence_round_trips_through_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_IMAGING);
    let sim = tweezer(&["img-sim", "--config", &cfg, "--out", "data", "--seed", "3"], dir.path());
    assert!(sim.status.success(), "{}", stderr(&sim));
    let ana = tweezer(
        &["img-analyze", "--config", &cfg, "--input", "data", "--out", "report", "--seed", "3"],
        dir.path(),
    );
    assert!(ana.status.success(), "{}", stderr(&ana));

    let report = dir.path().join("report");
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(report.join("fidelity.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["command"], "img-analyze");
    assert!(doc["data"]["accuracy"].as_f64().unwrap() >= 0.99, "{doc}");
    for key in ["false_positive", "false_negative", "loss_per_image", "fidelity"] {
        assert!(doc["data"][key].is_number(), "{key} missing");
    }
    let csv = fs::read_to_string(report.join("classification.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# schema_version=1"));
    assert_eq!(lines.next().unwrap(), "site_id,frame_id,occupied");
    assert_eq!(lines.count(), 25 * 150);
}

#[test]
fn format_flag_limits_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[holo]\nrows = 4\ncols = 4\nspacing = 6\nheight = 64\nwidth = 64\nmax_iterations = 20\n");
    let out = tweezer(&["holo", "--config", &cfg, "--out", "o", "--format", "json"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        names(&dir.path().join("o")),
        ["holo.manifest.json", "holo_report.json", "phase.png", "phase.raw", "phase.raw.json"]
    );
    let listed = String::from_utf8_lossy(&out.stdout).lines().count();
    assert_eq!(listed, 5);
}

#[test]
fn seed_flag_overrides_config_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 5\n[holo]\nrows = 2\ncols = 2\nspacing = 8\nheight = 32\nwidth = 32\nmax_iterations = 5\n",
    );
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec!["holo", "--config", &cfg, "--out", out, "--format", "json"];
        args.extend_from_slice(extra);
        assert!(tweezer(&args, dir.path()).status.success());
        let doc: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join(out).join("holo_report.json")).unwrap()).unwrap();
        (doc["meta"]["seed"].as_u64().unwrap(), fs::read(dir.path().join(out).join("phase.raw")).unwrap())
    };
    let (s_cfg, phase_cfg) = run("a", &[]);
    let (s_flag, phase_flag) = run("b", &["--seed", "6"]);
    let (s_same, phase_same) = run("c", &["--seed", "5"]);
    assert_eq!((s_cfg, s_flag, s_same), (5, 6, 5));
    assert_ne!(phase_cfg, phase_flag);
    assert_eq!(phase_cfg, phase_same);
}

#[test]
fn pic_sweep_writes_map_contours_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[pic_sweep.saturation]\nmin = 20.0\nmax = 500.0\ncount = 5\nlog = true\n\
         [pic_sweep.delta]\nmin = 0.5\nmax = 1.9\ncount = 4\n\
         [pic_sweep.quadrature]\ntheta_nodes = 24\nphi_nodes = 12\nmax_refinements = 0\n",
    );
    let out = tweezer(&["pic-sweep", "--config", &cfg, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let o = dir.path().join("o");
    let csv = fs::read_to_string(o.join("pic_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 20);
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(o.join("pic_map.json")).unwrap()).unwrap();
    assert_eq!(doc["data"]["contours"].as_array().unwrap().len(), 2);
    assert!(doc["data"]["sweep"]["argmax"]["value"].as_f64().unwrap() > 0.0);
    let svg = fs::read_to_string(o.join("pic_map.svg")).unwrap();
    assert!(svg.contains("<!-- schema_version=1") && svg.contains("<polygon"));
}

#[test]
fn load_sim_and_gate_opt_produce_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[load_sim]\narray_sizes = [4, 9]\nshots = 5\n[load_sim.params]\ntrials = 2000\nduration = 0.0\n\
         [load_sim.mot]\nrows = 6\ncols = 5\n\
         [gate]\n[gate.optimizer]\nsegments = 16\nrestarts = 2\n",
    );
    let load = tweezer(&["load-sim", "--config", &cfg, "--out", "o"], dir.path());
    assert!(load.status.success(), "{}", stderr(&load));
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("o/efficiency.json")).unwrap()).unwrap();
    // No enhancement window: only the initial statistics remain.
    assert_eq!(doc["data"]["exact"], doc["data"]["red_only_baseline"]);
    let lambda = fs::read_to_string(dir.path().join("o/lambda_map.csv")).unwrap();
    assert_eq!(lambda.lines().count(), 2 + 30);

    let gate = tweezer(&["gate-opt", "--config", &cfg, "--out", "o"], dir.path());
    assert!(gate.status.success(), "{}", stderr(&gate));
    let wave = fs::read_to_string(dir.path().join("o/waveform.csv")).unwrap();
    assert_eq!(wave.lines().nth(1), Some("t_us,phase_rad"));
    assert_eq!(wave.lines().count(), 2 + 17);
}
