use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use super::artifact::{num, Meta, OutputDir};
use super::config::{Axis, RunConfig};
use super::svg::{self, Contour, Heatmap, Series};
use super::{AppError, Command, CommonArgs, Format, ImgAnalyzeArgs};
use crate::collision::{pic_sweep, AtomicSpecies, MapPeak, PicSweep};
use crate::gate::{optimize_pulse, GateError};
use crate::hologram::{encode_phase_png, encode_raw, gaussian_incident, run_wgs, target_grid, HologramState, RawSidecar};
use crate::imaging::{
    analyze, classification_accuracy, decode_raw_frame, encode_raw_frame, encode_tiff, simulate_sequence, FrameSidecar,
    ImageFrame,
};
use crate::loading::{
    array_efficiency, coefficient_of_variation, exact_efficiency, loading_efficiency, mot_overlap_profile,
    sweep_loading, MotMode,
};

/// Contour levels drawn on P_ic maps, as fractions of the map maximum.
const CONTOUR_FRACTIONS: [f64; 2] = [0.9, 0.7];
/// Longest side of the img-sim SVG preview, in blocks.
const PREVIEW_SIZE: usize = 64;

struct Ctx<'a> {
    config: &'a RunConfig,
    out: OutputDir,
    format: Option<Format>,
    verbose: u8,
}

impl Ctx<'_> {
    fn wants(&self, f: Format) -> bool {
        self.format.is_none_or(|g| g == f)
    }

    fn progress(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("[{}] {}", self.out.meta().command, msg.as_ref());
        }
    }
}

pub(super) fn dispatch(command: &Command, config: &RunConfig, common: &CommonArgs) -> Result<Vec<PathBuf>, AppError> {
    let meta = Meta::new(command.name(), config.hash(), config.seed);
    let mut ctx = Ctx {
        config,
        out: OutputDir::create(&common.out, meta)?,
        format: common.format,
        verbose: common.verbose,
    };
    match command {
        Command::PicSweep => pic_sweep_cmd(&mut ctx)?,
        Command::LoadSim => load_sim(&mut ctx)?,
        Command::Holo => holo(&mut ctx)?,
        Command::ImgSim => img_sim(&mut ctx)?,
        Command::ImgAnalyze(args) => img_analyze(&mut ctx, args, &common.out)?,
        Command::GateOpt => gate_opt(&mut ctx)?,
    }
    Ok(ctx.out.finish()?)
}

/// Position `u` in index units along an axis, mapped back to axis values.
fn axis_value(axis: &Axis, values: &[f64], u: f64) -> f64 {
    if values.len() < 2 {
        return values[0];
    }
    let k = (u.floor() as usize).min(values.len() - 2);
    let t = u - k as f64;
    let (a, b) = (values[k], values[k + 1]);
    if axis.log {
        a * (b / a).powf(t)
    } else {
        a + (b - a) * t
    }
}

#[derive(Serialize)]
struct ContourOut {
    fraction: f64,
    level: f64,
    /// Polylines of (I/I_sat, Δ/f_trap) points.
    lines: Vec<Vec<(f64, f64)>>,
}

fn run_sweep(ctx: &Ctx) -> Result<PicSweep, AppError> {
    let c = &ctx.config.pic_sweep;
    let (s, d) = (c.saturation.values(), c.delta.values());
    ctx.progress(format!("{} × {} grid, preset {:?}", s.len(), d.len(), c.preset));
    let sweep = pic_sweep(&c.preset.template(), &s, &d, &AtomicSpecies::ytterbium_174(), &c.trap, &c.quadrature)?;
    if sweep.argmax.is_none() {
        let first = sweep.failures.first().map_or(String::new(), |f| f.message.clone());
        return Err(AppError::Numerical(format!("every map cell failed; first: {first}")));
    }
    Ok(sweep)
}

fn pic_sweep_cmd(ctx: &mut Ctx) -> Result<(), AppError> {
    let sweep = run_sweep(ctx)?;
    let c = &ctx.config.pic_sweep;
    let peak = sweep.argmax.expect("checked in run_sweep");
    let contours: Vec<Contour> = CONTOUR_FRACTIONS
        .iter()
        .map(|f| Contour {
            level: f * peak.value,
            lines: svg::contour_lines(&sweep.pic, f * peak.value),
        })
        .collect();

    if ctx.wants(Format::Csv) {
        let mut rows = Vec::new();
        for (i, s) in sweep.saturations.iter().enumerate() {
            for (j, d) in sweep.deltas.iter().enumerate() {
                rows.push(vec![num(*s), num(*d), num(sweep.pic[i][j]), num(sweep.errors[i][j])]);
            }
        }
        ctx.out.write_csv("pic_map.csv", &["saturation", "delta_over_ftrap", "pic", "error"], rows)?;
    }
    if ctx.wants(Format::Json) {
        #[derive(Serialize)]
        struct Out<'a> {
            preset: super::config::DrivePreset,
            sweep: &'a PicSweep,
            column_peaks: Vec<Option<MapPeak>>,
            contours: Vec<ContourOut>,
        }
        let contours_out = contours
            .iter()
            .zip(CONTOUR_FRACTIONS)
            .map(|(ct, fraction)| ContourOut {
                fraction,
                level: ct.level,
                lines: ct
                    .lines
                    .iter()
                    .map(|l| {
                        l.iter()
                            .map(|&(x, y)| (axis_value(&c.saturation, &sweep.saturations, y), axis_value(&c.delta, &sweep.deltas, x)))
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        let out = Out {
            preset: c.preset,
            sweep: &sweep,
            column_peaks: sweep.column_peaks(),
            contours: contours_out,
        };
        ctx.out.write_json("pic_map.json", &out)?;
    }
    if ctx.wants(Format::Svg) {
        let doc = svg::heatmap(&Heatmap {
            title: &format!("P_ic, max {:.3} at I/I_sat = {:.1}, Δ/f_trap = {:.2}", peak.value, peak.saturation, peak.delta_over_ftrap),
            x_title: "Δ / f_trap",
            y_title: "I / I_sat",
            x_values: &sweep.deltas,
            y_values: &sweep.saturations,
            values: &sweep.pic,
            contours: &contours,
            marker: Some((peak.s_index, peak.delta_index)),
        });
        ctx.out.write_svg("pic_map.svg", &doc)?;
    }
    Ok(())
}

fn load_sim(ctx: &mut Ctx) -> Result<(), AppError> {
    let c = &ctx.config.load_sim;
    let params = c.params;
    ctx.progress(format!("{} trials at P_ic = {}", params.trials, c.p_ic));
    let single = loading_efficiency(&params, c.p_ic)?;
    let exact = exact_efficiency(&params, c.p_ic)?;
    let baseline = exact_efficiency(&params, 0.0)?;

    let mut arrays = Vec::new();
    for &n in &c.array_sizes {
        ctx.progress(format!("array of {n} sites, {} shots", c.shots));
        arrays.push(array_efficiency(&params, c.p_ic, &vec![params.mean_occupancy; n], c.shots)?);
    }
    let m = &c.mot;
    let profile = mot_overlap_profile(m.rows, m.cols, m.spacing, m.radius, m.mode, params.mean_occupancy)?;
    let fixed = mot_overlap_profile(m.rows, m.cols, m.spacing, m.radius, MotMode::Fixed, params.mean_occupancy)?;

    let map = if c.from_map {
        let sweep = run_sweep(ctx)?;
        ctx.progress("efficiency map");
        let eff = sweep_loading(&sweep.pic, &params)?;
        Some((sweep, eff))
    } else {
        None
    };

    if ctx.wants(Format::Csv) {
        let rows = arrays.iter().map(|a| {
            let lo = a.per_site.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = a.per_site.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vec![
                a.sites.to_string(),
                a.shots.to_string(),
                num(a.estimate.p_single),
                num(a.estimate.lower),
                num(a.estimate.upper),
                num(a.exact_mean()),
                num(lo),
                num(hi),
            ]
        });
        ctx.out.write_csv(
            "array_sizes.csv",
            &["sites", "shots", "p_single", "lower", "upper", "exact", "site_min", "site_max"],
            rows,
        )?;
        let rows = (0..m.rows).flat_map(|i| {
            let (profile, fixed) = (&profile, &fixed);
            (0..m.cols).map(move |j| {
                let k = i * m.cols + j;
                vec![i.to_string(), j.to_string(), num(profile[k]), num(fixed[k])]
            })
        });
        ctx.out.write_csv("lambda_map.csv", &["row", "col", "lambda", "lambda_fixed"], rows.collect::<Vec<_>>())?;
        if let Some((sweep, eff)) = &map {
            let mut rows = Vec::new();
            for (i, s) in sweep.saturations.iter().enumerate() {
                for (j, d) in sweep.deltas.iter().enumerate() {
                    let est = eff.estimates[i][j];
                    let f = |g: fn(&crate::loading::EfficiencyEstimate) -> f64| est.as_ref().map_or(f64::NAN, g);
                    rows.push(vec![
                        num(*s),
                        num(*d),
                        num(sweep.pic[i][j]),
                        num(f(|e| e.p_single)),
                        num(f(|e| e.lower)),
                        num(f(|e| e.upper)),
                        num(eff.exact[i][j]),
                    ]);
                }
            }
            ctx.out.write_csv(
                "efficiency_map.csv",
                &["saturation", "delta_over_ftrap", "pic", "p_single", "lower", "upper", "exact"],
                rows,
            )?;
        }
    }
    if ctx.wants(Format::Json) {
        #[derive(Serialize)]
        struct ArrayRow {
            sites: usize,
            shots: usize,
            estimate: crate::loading::EfficiencyEstimate,
            exact: f64,
        }
        #[derive(Serialize)]
        struct MapBest {
            saturation: f64,
            delta_over_ftrap: f64,
            pic: f64,
            estimate: crate::loading::EfficiencyEstimate,
        }
        #[derive(Serialize)]
        struct Out {
            params: crate::loading::LoadingParams,
            p_ic: f64,
            estimate: crate::loading::EfficiencyEstimate,
            exact: f64,
            red_only_baseline: f64,
            arrays: Vec<ArrayRow>,
            mot_mode: MotMode,
            lambda_cv: f64,
            lambda_cv_fixed: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            map_best: Option<MapBest>,
        }
        let out = Out {
            params,
            p_ic: c.p_ic,
            estimate: single,
            exact,
            red_only_baseline: baseline,
            arrays: arrays
                .iter()
                .map(|a| ArrayRow {
                    sites: a.sites,
                    shots: a.shots,
                    estimate: a.estimate,
                    exact: a.exact_mean(),
                })
                .collect(),
            mot_mode: m.mode,
            lambda_cv: coefficient_of_variation(&profile),
            lambda_cv_fixed: coefficient_of_variation(&fixed),
            map_best: map.as_ref().and_then(|(sweep, eff)| {
                eff.best().map(|(i, j, estimate)| MapBest {
                    saturation: sweep.saturations[i],
                    delta_over_ftrap: sweep.deltas[j],
                    pic: sweep.pic[i][j],
                    estimate,
                })
            }),
        };
        ctx.out.write_json("efficiency.json", &out)?;
    }
    if ctx.wants(Format::Svg) {
        let doc = match &map {
            Some((sweep, eff)) => {
                let values: Vec<Vec<f64>> = eff
                    .estimates
                    .iter()
                    .map(|row| row.iter().map(|e| e.map_or(f64::NAN, |e| e.p_single)).collect())
                    .collect();
                let marker = eff.best().map(|(i, j, _)| (i, j));
                svg::heatmap(&Heatmap {
                    title: "Single-atom loading efficiency",
                    x_title: "Δ / f_trap",
                    y_title: "I / I_sat",
                    x_values: &sweep.deltas,
                    y_values: &sweep.saturations,
                    values: &values,
                    contours: &[],
                    marker,
                })
            }
            None => {
                let values: Vec<Vec<f64>> = profile.chunks(m.cols).map(<[f64]>::to_vec).collect();
                let xs: Vec<f64> = (0..m.cols).map(|j| j as f64).collect();
                let ys: Vec<f64> = (0..m.rows).map(|i| i as f64).collect();
                svg::heatmap(&Heatmap {
                    title: &format!("Mean occupancy per site, CV {:.3}", coefficient_of_variation(&profile)),
                    x_title: "column",
                    y_title: "row",
                    x_values: &xs,
                    y_values: &ys,
                    values: &values,
                    contours: &[],
                    marker: None,
                })
            }
        };
        ctx.out.write_svg("efficiency.svg", &doc)?;
    }
    Ok(())
}

fn holo(ctx: &mut Ctx) -> Result<(), AppError> {
    let h = ctx.config.holo;
    ctx.progress(format!("{}×{} spots on {}×{}", h.rows, h.cols, h.height, h.width));
    let spots = target_grid(h.rows, h.cols, h.spacing, (h.height, h.width))?;
    let incident = gaussian_incident(h.height, h.width, h.incident_radius);
    let state = HologramState::new(h.height, h.width, spots, incident, ctx.config.seed)?;
    let outcome = run_wgs(state, h.max_iterations, h.uniformity_goal)?;
    ctx.progress(format!(
        "uniformity {:.4} after {} iterations",
        outcome.report.uniformity,
        outcome.history.len()
    ));

    ctx.out.write_bytes("phase.png", &encode_phase_png(&outcome.phase, h.height, h.width)?)?;
    ctx.out.write_bytes("phase.raw", &encode_raw(&outcome.phase))?;
    ctx.out.write_json("phase.raw.json", &RawSidecar::new(h.height, h.width))?;
    if ctx.wants(Format::Json) {
        #[derive(Serialize)]
        struct Out<'a> {
            converged: bool,
            uniformity: f64,
            efficiency: f64,
            best_iteration: usize,
            iterations: usize,
            max_parseval_error: f64,
            spot_intensities: &'a [f64],
        }
        ctx.out.write_json(
            "holo_report.json",
            &Out {
                converged: outcome.converged,
                uniformity: outcome.report.uniformity,
                efficiency: outcome.report.efficiency,
                best_iteration: outcome.best_iteration,
                iterations: outcome.history.len(),
                max_parseval_error: outcome.max_parseval_error,
                spot_intensities: &outcome.report.intensities,
            },
        )?;
    }
    if ctx.wants(Format::Csv) {
        let rows = outcome.history.iter().enumerate().map(|(k, u)| vec![k.to_string(), num(*u)]);
        ctx.out.write_csv("holo_history.csv", &["iteration", "uniformity"], rows)?;
    }
    if ctx.wants(Format::Svg) {
        let points = outcome.history.iter().enumerate().map(|(k, &u)| (k as f64, u)).collect();
        let doc = svg::line_plot(
            "WGS convergence",
            "iteration",
            "uniformity",
            &[Series { label: "uniformity", points }],
        );
        ctx.out.write_svg("holo_history.svg", &doc)?;
    }
    Ok(())
}

fn block_average(frame: &ImageFrame, size: usize) -> (Vec<Vec<f64>>, usize) {
    let b = frame.height.max(frame.width).div_ceil(size).max(1);
    let (rows, cols) = (frame.height.div_ceil(b), frame.width.div_ceil(b));
    let mut out = vec![vec![0.0; cols]; rows];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let (mut sum, mut n) = (0.0, 0usize);
            for y in i * b..((i + 1) * b).min(frame.height) {
                for x in j * b..((j + 1) * b).min(frame.width) {
                    sum += frame.at(y, x);
                    n += 1;
                }
            }
            *cell = sum / n as f64;
        }
    }
    // Image row 0 is the top; heatmap row 0 is the bottom.
    out.reverse();
    (out, b)
}

fn img_sim(ctx: &mut Ctx) -> Result<(), AppError> {
    let scenario = &ctx.config.img;
    let (h, w) = scenario.frame_shape();
    ctx.progress(format!("{} shots of {}×{} px", scenario.shots, h, w));
    let seq = simulate_sequence(scenario, ctx.config.seed)?;

    let (bytes, sidecar) = encode_raw_frame(&seq.frames)?;
    ctx.out.write_bytes("frames.raw", &bytes)?;
    ctx.out.write_json("frames.raw.json", &sidecar)?;
    let (bytes, sidecar) = encode_raw_frame(&seq.calibration)?;
    ctx.out.write_bytes("calibration.raw", &bytes)?;
    ctx.out.write_json("calibration.raw.json", &sidecar)?;
    ctx.out.write_bytes("frame_0000.tiff", &encode_tiff(&seq.frames[0])?)?;
    let rows = seq
        .sites
        .iter()
        .enumerate()
        .map(|(k, (r, c))| vec![k.to_string(), num(*r), num(*c)]);
    ctx.out.write_csv("sites.csv", &["site_id", "row", "col"], rows)?;
    let rows = seq.truth.iter().enumerate().flat_map(|(f, occ)| {
        occ.iter()
            .enumerate()
            .map(move |(s, &o)| vec![s.to_string(), f.to_string(), u8::from(o).to_string()])
    });
    ctx.out.write_csv("truth.csv", &["site_id", "frame_id", "occupied"], rows.collect::<Vec<_>>())?;

    if ctx.wants(Format::Json) {
        #[derive(Serialize)]
        struct Out<'a> {
            scenario: &'a crate::imaging::ImagingScenario,
            height: usize,
            width: usize,
            frames: usize,
            calibration_frames: usize,
            sites: usize,
            occupied_fraction: f64,
        }
        let occupied = seq.truth.iter().flatten().filter(|&&o| o).count();
        let total = seq.truth.iter().map(Vec::len).sum::<usize>().max(1);
        ctx.out.write_json(
            "img_summary.json",
            &Out {
                scenario,
                height: h,
                width: w,
                frames: seq.frames.len(),
                calibration_frames: seq.calibration.len(),
                sites: seq.sites.len(),
                occupied_fraction: occupied as f64 / total as f64,
            },
        )?;
    }
    if ctx.wants(Format::Svg) {
        let (values, b) = block_average(&seq.frames[0], PREVIEW_SIZE);
        let xs: Vec<f64> = (0..values[0].len()).map(|j| (j * b) as f64).collect();
        let ys: Vec<f64> = (0..values.len()).rev().map(|i| (i * b) as f64).collect();
        let doc = svg::heatmap(&Heatmap {
            title: "Frame 0 (counts)",
            x_title: "column (px)",
            y_title: "row (px)",
            x_values: &xs,
            y_values: &ys,
            values: &values,
            contours: &[],
            marker: None,
        });
        ctx.out.write_svg("frame_0000.svg", &doc)?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct Document<T> {
    data: T,
}

fn read_input(dir: &Path, name: &str) -> Result<Vec<u8>, AppError> {
    let path = dir.join(name);
    fs::read(&path).map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))
}

fn read_frames(dir: &Path, stem: &str) -> Result<Vec<ImageFrame>, AppError> {
    let meta = read_input(dir, &format!("{stem}.raw.json"))?;
    let doc: Document<FrameSidecar> =
        serde_json::from_slice(&meta).map_err(|e| AppError::Config(format!("{stem}.raw.json: {e}")))?;
    Ok(decode_raw_frame(&read_input(dir, &format!("{stem}.raw"))?, &doc.data)?)
}

/// Data rows of a CSV written by this tool: comment and header lines skipped.
fn csv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|(n, l)| (n + 1, l.split(',').map(str::trim).collect()))
}

fn read_sites(dir: &Path) -> Result<Vec<(f64, f64)>, AppError> {
    let text = String::from_utf8(read_input(dir, "sites.csv")?).map_err(|e| AppError::Config(format!("sites.csv: {e}")))?;
    csv_rows(&text)
        .map(|(n, cols)| {
            let parse = |k: usize| cols.get(k).and_then(|v| v.parse::<f64>().ok());
            match (parse(1), parse(2)) {
                (Some(r), Some(c)) => Ok((r, c)),
                _ => Err(AppError::Config(format!("sites.csv:{n}: expected site_id,row,col"))),
            }
        })
        .collect()
}

fn read_truth(dir: &Path, frames: usize, sites: usize) -> Result<Option<Vec<Vec<bool>>>, AppError> {
    let Ok(bytes) = fs::read(dir.join("truth.csv")) else {
        return Ok(None);
    };
    let text = String::from_utf8(bytes).map_err(|e| AppError::Config(format!("truth.csv: {e}")))?;
    let mut truth = vec![vec![false; sites]; frames];
    for (n, cols) in csv_rows(&text) {
        let parse = |k: usize| cols.get(k).and_then(|v| v.parse::<usize>().ok());
        match (parse(0), parse(1), parse(2)) {
            (Some(s), Some(f), Some(o)) if s < sites && f < frames => truth[f][s] = o == 1,
            _ => return Err(AppError::Config(format!("truth.csv:{n}: bad row"))),
        }
    }
    Ok(Some(truth))
}

fn img_analyze(ctx: &mut Ctx, args: &ImgAnalyzeArgs, out_dir: &Path) -> Result<(), AppError> {
    let input = args
        .input
        .clone()
        .or_else(|| ctx.config.img_analyze.input.clone())
        .unwrap_or_else(|| out_dir.to_path_buf());
    let mut filter = ctx.config.img.filter;
    filter.sigma_sharp = args.sigma_sharp.unwrap_or(filter.sigma_sharp);
    filter.sigma_wide1 = args.sigma_wide1.unwrap_or(filter.sigma_wide1);
    filter.sigma_wide2 = args.sigma_wide2.unwrap_or(filter.sigma_wide2);
    filter.bias = args.bias.unwrap_or(filter.bias);
    filter.validate()?;

    let frames = read_frames(&input, "frames")?;
    let calibration = read_frames(&input, "calibration")?;
    let sites = read_sites(&input)?;
    ctx.progress(format!("{} frames, {} sites from {}", frames.len(), sites.len(), input.display()));
    let analysis = analyze(&frames, &calibration, &sites, &filter)?;
    let truth = read_truth(&input, frames.len(), sites.len())?;
    let accuracy = truth.as_ref().map(|t| classification_accuracy(&analysis.occupancy, t));
    let exposure = frames[0].exposure;
    let loss = analysis.estimate.loss;
    // Per-image survival 1 − ε over one exposure.
    let lifetime = (loss > 0.0 && loss < 1.0).then(|| -exposure / (1.0 - loss).ln());

    if ctx.wants(Format::Csv) {
        let rows = analysis.occupancy.iter().enumerate().flat_map(|(f, occ)| {
            occ.iter()
                .enumerate()
                .map(move |(s, &o)| vec![s.to_string(), f.to_string(), u8::from(o).to_string()])
        });
        ctx.out.write_csv("classification.csv", &["site_id", "frame_id", "occupied"], rows.collect::<Vec<_>>())?;
    }
    if ctx.wants(Format::Json) {
        #[derive(Serialize)]
        struct Out<'a> {
            filter: crate::imaging::FilterParams,
            threshold: &'a crate::imaging::ThresholdFit,
            false_positive: f64,
            false_negative: f64,
            loss_per_image: f64,
            fidelity: f64,
            filling: f64,
            imaging_lifetime_s: Option<f64>,
            triples: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            accuracy: Option<f64>,
        }
        let e = &analysis.estimate;
        ctx.out.write_json(
            "fidelity.json",
            &Out {
                filter,
                threshold: &analysis.threshold,
                false_positive: e.false_positive,
                false_negative: e.false_negative,
                loss_per_image: e.loss,
                fidelity: e.fidelity,
                filling: e.filling,
                imaging_lifetime_s: lifetime,
                triples: e.counts.total(),
                accuracy,
            },
        )?;
    }
    if ctx.wants(Format::Svg) {
        let samples: Vec<f64> = analysis.brightness.iter().flatten().copied().collect();
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bins = 80;
        let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
        let mut counts = vec![0usize; bins];
        for s in &samples {
            counts[(((s - lo) / width) as usize).min(bins - 1)] += 1;
        }
        let hist = counts
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| [(lo + k as f64 * width, c as f64), (lo + (k + 1) as f64 * width, c as f64)])
            .collect();
        let peak = counts.iter().copied().max().unwrap_or(0) as f64;
        let t = analysis.threshold.threshold;
        let doc = svg::line_plot(
            "Site brightness",
            "weighted counts",
            "samples",
            &[
                Series { label: "histogram", points: hist },
                Series { label: "threshold", points: vec![(t, 0.0), (t, peak)] },
            ],
        );
        ctx.out.write_svg("brightness.svg", &doc)?;
    }
    Ok(())
}

fn gate_opt(ctx: &mut Ctx) -> Result<(), AppError> {
    let g = &ctx.config.gate;
    let model = g.model();
    ctx.progress(format!("{} restarts × {} segments", g.optimizer.restarts, g.optimizer.segments));
    let opt = match optimize_pulse(&model, &g.optimizer) {
        Ok(o) => o,
        Err(GateError::NotConverged { fidelity, best }) => {
            return Err(AppError::Numerical(format!(
                "no restart converged within {} iterations; best F = {fidelity:.6} at ΩT = {:.4}",
                g.optimizer.max_iters,
                model.rabi * best.waveform.duration
            )))
        }
        Err(e) => return Err(e.into()),
    };
    ctx.progress(format!("F = {:.6}", opt.result.bell_fidelity));

    if ctx.wants(Format::Csv) {
        let rows = opt.waveform.samples().into_iter().map(|(t, p)| vec![num(t * 1e6), num(p)]);
        ctx.out.write_csv("waveform.csv", &["t_us", "phase_rad"], rows)?;
    }
    if ctx.wants(Format::Json) {
        #[derive(Serialize)]
        struct Out<'a> {
            model: crate::gate::GateModel,
            scaled_duration: f64,
            scaled_rydberg_time: f64,
            result: &'a crate::gate::GateResult,
            error_total: f64,
            best_restart: usize,
            converged: bool,
            restarts: &'a [crate::gate::RestartSummary],
            waveform: &'a crate::gate::PulseWaveform,
        }
        ctx.out.write_json(
            "gate_result.json",
            &Out {
                model,
                scaled_duration: model.rabi * opt.waveform.duration,
                scaled_rydberg_time: model.rabi * opt.result.rydberg_time,
                result: &opt.result,
                error_total: opt.result.error_budget.total(),
                best_restart: opt.best_restart,
                converged: opt.converged,
                restarts: &opt.restarts,
                waveform: &opt.waveform,
            },
        )?;
    }
    if ctx.wants(Format::Svg) {
        let points = opt.waveform.samples().into_iter().map(|(t, p)| (t * 1e6, p)).collect();
        let doc = svg::line_plot(
            &format!("CZ pulse, F = {:.6}", opt.result.bell_fidelity),
            "t (µs)",
            "laser phase (rad)",
            &[Series { label: "φ(t)", points }],
        );
        ctx.out.write_svg("waveform.svg", &doc)?;
    }
    Ok(())
}
