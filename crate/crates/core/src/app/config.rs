use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

use crate::collision::{presets, DriveConfig, QuadratureSpec, TrapConfig};
use crate::gate::{Blockade, GateModel, OptimizerOptions};
use crate::imaging::ImagingScenario;
use crate::loading::{LoadingParams, MotMode};
use crate::units::angular;

/// Evenly spaced (or log-spaced) sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| {
                    let u = i as f64 / (n - 1) as f64;
                    if self.log {
                        self.min * (self.max / self.min).powf(u)
                    } else {
                        self.min + (self.max - self.min) * u
                    }
                })
                .collect(),
        }
    }

    fn check(&self, path: &str) -> Result<(), ConfigIssue> {
        let issue = |key: &str, message: String| ConfigIssue::new(format!("{path}.{key}"), message);
        if self.count == 0 {
            return Err(issue("count", "sweep axis is empty; need count >= 1".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(issue("max", format!("need finite min <= max, got [{}, {}]", self.min, self.max)));
        }
        if self.log && !(self.min > 0.0) {
            return Err(issue("min", "a log axis needs min > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivePreset {
    #[default]
    GloballyRepulsive,
    PartiallyRepulsive,
    SigmaMinusHighField,
    ModerateFieldPi,
}

impl DrivePreset {
    /// Drive template; the sweep overwrites intensity and detuning.
    pub fn template(&self) -> DriveConfig {
        match self {
            Self::GloballyRepulsive => presets::globally_repulsive(1.0, 1.0),
            Self::PartiallyRepulsive => presets::partially_repulsive(1.0, 1.0),
            Self::SigmaMinusHighField => presets::sigma_minus_high_field(1.0, 1.0),
            Self::ModerateFieldPi => presets::moderate_field_pi(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicSweepConfig {
    pub preset: DrivePreset,
    /// I/I_sat axis.
    pub saturation: Axis,
    /// Δ/f_trap axis.
    pub delta: Axis,
    pub quadrature: QuadratureSpec,
    pub trap: TrapConfig,
}

impl Default for PicSweepConfig {
    fn default() -> Self {
        Self {
            preset: DrivePreset::GloballyRepulsive,
            saturation: Axis {
                min: 10.0,
                max: 1000.0,
                count: 12,
                log: true,
            },
            delta: Axis {
                min: 0.1,
                max: 1.9,
                count: 10,
                log: false,
            },
            quadrature: QuadratureSpec {
                max_refinements: 0,
                ..QuadratureSpec::default()
            },
            trap: TrapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotConfig {
    pub rows: usize,
    pub cols: usize,
    /// Site spacing, m.
    pub spacing: f64,
    /// Standard deviation of the MOT cloud, m.
    pub radius: f64,
    pub mode: MotMode,
}

impl Default for MotConfig {
    fn default() -> Self {
        Self {
            rows: 61,
            cols: 49,
            spacing: 2.8e-6,
            radius: 60e-6,
            mode: MotMode::Rotating { radius: 80e-6 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadSimConfig {
    pub params: LoadingParams,
    /// Inelastic probability used when no map is computed.
    pub p_ic: f64,
    /// Compute P_ic on the `pic_sweep` grid and an efficiency map over it.
    pub from_map: bool,
    /// Site counts of the array-size sweep.
    pub array_sizes: Vec<usize>,
    /// Loading cycles simulated per array size.
    pub shots: usize,
    pub mot: MotConfig,
}

impl Default for LoadSimConfig {
    fn default() -> Self {
        Self {
            params: LoadingParams::default(),
            p_ic: 0.517,
            from_map: false,
            array_sizes: vec![16, 144, 1024, 2939],
            shots: 40,
            mot: MotConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoloConfig {
    pub rows: usize,
    pub cols: usize,
    /// Spot pitch in Fourier pixels.
    pub spacing: usize,
    pub height: usize,
    pub width: usize,
    pub max_iterations: usize,
    pub uniformity_goal: f64,
    /// Incident 1/e² radius as a fraction of min(H, W).
    pub incident_radius: f64,
}

impl Default for HoloConfig {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            spacing: 12,
            height: 512,
            width: 512,
            max_iterations: 100,
            uniformity_goal: 0.98,
            incident_radius: 0.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImgAnalyzeConfig {
    /// Directory written by `img-sim`; defaults to the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    /// Ω/2π, Hz.
    pub rabi_hz: f64,
    /// Rydberg lifetime, µs; omit for no decay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rydberg_lifetime_us: Option<f64>,
    /// Pair interaction V/2π in Hz; omit for perfect blockade.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction_hz: Option<f64>,
    pub optimizer: OptimizerOptions,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            rabi_hz: 15e6,
            rydberg_lifetime_us: Some(40.0),
            interaction_hz: None,
            optimizer: OptimizerOptions::default(),
        }
    }
}

impl GateConfig {
    pub fn model(&self) -> GateModel {
        GateModel {
            rabi: angular(self.rabi_hz),
            rydberg_lifetime: self.rydberg_lifetime_us.map(|t| t * 1e-6),
            blockade: match self.interaction_hz {
                None => Blockade::Perfect,
                Some(v) => Blockade::Finite { interaction: angular(v) },
            },
        }
    }
}

/// One file configures every subcommand; each reads its own section.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of every random stream; module-level seed fields are overwritten by it.
    pub seed: u64,
    pub pic_sweep: PicSweepConfig,
    pub load_sim: LoadSimConfig,
    pub holo: HoloConfig,
    pub img: ImagingScenario,
    pub img_analyze: ImgAnalyzeConfig,
    pub gate: GateConfig,
}

/// A validation failure tied to a dotted config key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl ConfigIssue {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }

    /// "file:line: key: message" when the key appears in `source`.
    pub fn render(&self, file: &str, source: Option<&str>) -> String {
        match source.and_then(|s| locate(s, &self.key)) {
            Some(line) => format!("{file}:{line}: {}: {}", self.key, self.message),
            None => format!("{file}: {}: {}", self.key, self.message),
        }
    }
}

/// 1-based line of a dotted key such as `pic_sweep.saturation.count`: the
/// key itself inside its table, else the nearest enclosing table header.
pub fn locate(source: &str, key: &str) -> Option<usize> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut table: Vec<String> = Vec::new();
    let mut best: Option<(usize, usize)> = None;
    for (n, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim();
            table = name.split('.').map(|s| s.trim().to_string()).collect();
            let depth = table.len();
            if depth <= parts.len() && table.iter().zip(&parts).all(|(a, b)| a == b) && best.is_none_or(|(d, _)| depth > d) {
                best = Some((depth, n + 1));
            }
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let mut full: Vec<&str> = table.iter().map(String::as_str).collect();
        full.extend(k.trim().split('.').map(str::trim));
        if full == parts {
            return Some(n + 1);
        }
        let depth = full.len();
        if depth <= parts.len() && full.iter().zip(&parts).all(|(a, b)| a == b) && best.is_none_or(|(d, _)| depth > d) {
            best = Some((depth, n + 1));
        }
    }
    best.map(|(_, n)| n)
}

impl RunConfig {
    pub fn parse(source: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(source)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Copies the top-level seed into every module that draws random numbers.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.load_sim.params.seed = seed;
        self.gate.optimizer.seed = seed;
    }

    pub fn validate_pic_sweep(&self) -> Result<(), ConfigIssue> {
        self.pic_sweep.saturation.check("pic_sweep.saturation")?;
        self.pic_sweep.delta.check("pic_sweep.delta")?;
        if self.pic_sweep.quadrature.theta_nodes == 0 || self.pic_sweep.quadrature.phi_nodes == 0 {
            return Err(ConfigIssue::new("pic_sweep.quadrature.theta_nodes", "node counts must be positive"));
        }
        if !(self.pic_sweep.delta.min > 0.0) {
            return Err(ConfigIssue::new("pic_sweep.delta.min", "collision light must be blue detuned (delta > 0)"));
        }
        Ok(())
    }

    pub fn validate_load_sim(&self) -> Result<(), ConfigIssue> {
        let c = &self.load_sim;
        if !(0.0..=1.0).contains(&c.p_ic) {
            return Err(ConfigIssue::new("load_sim.p_ic", format!("{} is not a probability", c.p_ic)));
        }
        if c.params.trials < 100 {
            return Err(ConfigIssue::new("load_sim.params.trials", "need at least 100 trials"));
        }
        if c.shots == 0 {
            return Err(ConfigIssue::new("load_sim.shots", "need at least one shot"));
        }
        if let Some(k) = c.array_sizes.iter().position(|&n| n == 0) {
            return Err(ConfigIssue::new("load_sim.array_sizes", format!("entry {k} has no sites")));
        }
        if c.mot.rows == 0 || c.mot.cols == 0 || !(c.mot.spacing > 0.0 && c.mot.radius > 0.0) {
            return Err(ConfigIssue::new("load_sim.mot", "need a non-empty array and positive spacing and radius"));
        }
        if c.from_map {
            self.validate_pic_sweep()?;
        }
        Ok(())
    }

    pub fn validate_holo(&self) -> Result<(), ConfigIssue> {
        let h = &self.holo;
        if h.height < 2 || h.width < 2 {
            return Err(ConfigIssue::new("holo.height", format!("resolution {}×{} is too small", h.height, h.width)));
        }
        if h.rows == 0 || h.cols == 0 {
            return Err(ConfigIssue::new("holo.rows", "need at least one spot row and column"));
        }
        if h.max_iterations == 0 {
            return Err(ConfigIssue::new("holo.max_iterations", "need at least one iteration"));
        }
        if !(h.incident_radius > 0.0) {
            return Err(ConfigIssue::new("holo.incident_radius", "must be positive"));
        }
        Ok(())
    }

    pub fn validate_img(&self) -> Result<(), ConfigIssue> {
        self.img
            .validate()
            .map_err(|e| ConfigIssue::new("img", e.to_string()))
    }

    pub fn validate_gate(&self) -> Result<(), ConfigIssue> {
        let g = &self.gate;
        if !(g.rabi_hz > 0.0 && g.rabi_hz.is_finite()) {
            return Err(ConfigIssue::new("gate.rabi_hz", "must be finite and positive"));
        }
        if let Some(t) = g.rydberg_lifetime_us {
            if !(t > 0.0) {
                return Err(ConfigIssue::new("gate.rydberg_lifetime_us", "must be positive"));
            }
        }
        g.optimizer
            .validate()
            .map_err(|e| ConfigIssue::new("gate.optimizer", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let text = c.to_toml();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn edited_config_round_trips() {
        let src = "seed = 9\n[pic_sweep]\npreset = \"partially_repulsive\"\n[pic_sweep.saturation]\nmin = 5.0\nmax = 50.0\ncount = 3\nlog = true\n[gate]\nrabi_hz = 1e7\n[load_sim.mot.mode]\nkind = \"fixed\"\n";
        let c = RunConfig::parse(src).unwrap();
        assert_eq!(c.pic_sweep.preset, DrivePreset::PartiallyRepulsive);
        assert_eq!(c.gate.rydberg_lifetime_us, Some(40.0));
        assert_eq!(c.load_sim.mot.mode, MotMode::Fixed);
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let err = RunConfig::parse("seed = 1\n\n[holo]\nrowz = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rowz"), "{msg}");
        assert!(msg.contains("line 4") || msg.contains(":4:") || msg.contains("4 |"), "{msg}");
    }

    #[test]
    fn empty_axis_points_at_its_line() {
        let src = "[pic_sweep]\npreset = \"globally_repulsive\"\n\n[pic_sweep.saturation]\nmin = 10.0\nmax = 100.0\ncount = 0\n";
        let c = RunConfig::parse(src).unwrap();
        let issue = c.validate_pic_sweep().unwrap_err();
        assert_eq!(issue.key, "pic_sweep.saturation.count");
        assert_eq!(issue.render("run.toml", Some(src)), format!("run.toml:7: {}: {}", issue.key, issue.message));
    }

    #[test]
    fn locate_falls_back_to_table_header() {
        let src = "seed = 1\n[gate]\nrabi_hz = 1.0\n[gate.optimizer]\nsegments = 4\n";
        assert_eq!(locate(src, "gate.optimizer.segments"), Some(5));
        assert_eq!(locate(src, "gate.optimizer"), Some(4));
        assert_eq!(locate(src, "gate.rydberg_lifetime_us"), Some(2));
        assert_eq!(locate(src, "holo.rows"), None);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.apply_seed(3);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn axes() {
        let lin = Axis { min: 0.1, max: 1.9, count: 10, log: false }.values();
        assert!((lin[9] - 1.9).abs() < 1e-15 && (lin[1] - 0.3).abs() < 1e-15);
        let log = Axis { min: 10.0, max: 1000.0, count: 3, log: true }.values();
        assert!((log[1] - 100.0).abs() < 1e-12);
        assert_eq!(Axis { min: 2.0, max: 2.0, count: 1, log: true }.values(), vec![2.0]);
    }
}
