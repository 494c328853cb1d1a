//! Run configuration: a schema-versioned TOML file holding everything the
//! statistical pipeline needs. Environment variables may override only the
//! output paths and the thread count; the statistics always come from the
//! file so a report's config echo reproduces the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use eigenwatch::detector::config::{Direction, VanishTransform};
use eigenwatch::simulate::Scenario;
use eigenwatch::{DetectorConfig, DetectorFamily};

use crate::error::{CliError, Result};
use crate::ingest::DataFormat;

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_ENV: &str = "EIGENWATCH_REPORT_PATH";
pub const PLOT_ENV: &str = "EIGENWATCH_PLOT_PATH";
pub const THREADS_ENV: &str = "EIGENWATCH_THREADS";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    pub detector: DetectorSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub path: PathBuf,
    /// "csv" or "binary"; inferred from the extension when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub p1: usize,
    pub p2: usize,
    pub t_len: usize,
    #[serde(default = "default_k")]
    pub k1: usize,
    #[serde(default = "default_k")]
    pub k2: usize,
    #[serde(default = "default_ar")]
    pub phi: f64,
    #[serde(default = "default_ar")]
    pub psi_ar: f64,
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_star: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub k1: usize,
    pub m: usize,
    /// Monitoring horizon; defaults to T − m.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_m: Option<usize>,
    /// "partial-sum", "darling-erdos", "renyi" or "worst-case".
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Rényi lower cutoff override.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_direction")]
    pub direction: String,
    #[serde(default = "default_k_tilde")]
    pub k_tilde: usize,
    #[serde(default = "default_vanish")]
    pub vanish_transform: String,
    /// Critical-value cache file; the builtin table is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    /// Observations before this 0-based index are dropped before anything
    /// runs; the projection window is then start..start+m.
    #[serde(default)]
    pub start: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
}

fn default_k() -> usize {
    3
}
fn default_ar() -> f64 {
    0.1
}
fn default_scenario() -> String {
    "null".into()
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_direction() -> String {
    "emerge".into()
}
fn default_k_tilde() -> usize {
    8
}
fn default_vanish() -> String {
    "reciprocal-g".into()
}

pub fn parse_scenario(name: &str, t_star: Option<usize>) -> Result<Scenario> {
    if name == "null" {
        return Ok(Scenario::Null);
    }
    let t_star = t_star.ok_or_else(|| {
        CliError::Config(format!("scenario {name:?} needs t_star"))
    })?;
    match name {
        "loading-switch" => Ok(Scenario::LoadingSwitch(t_star)),
        "factor-emerge" => Ok(Scenario::FactorEmerge(t_star)),
        "factor-vanish" => Ok(Scenario::FactorVanish(t_star)),
        "c-switch" => Ok(Scenario::CSwitch(t_star)),
        "both-switch" => Ok(Scenario::BothSwitch(t_star)),
        other => Err(CliError::Config(format!(
            "unknown scenario {other:?}; expected null, loading-switch, factor-emerge, \
             factor-vanish, c-switch or both-switch"
        ))),
    }
}

/// Parse one family spec: "ps:0.25", "partial-sum:0", "de", "darling-erdos",
/// "renyi:0.75", "renyi:0.75:r=12", "wc", "worst-case".
pub fn parse_family(text: &str) -> Result<DetectorFamily> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = |msg: &str| CliError::Config(format!("family {text:?}: {msg}"));
    match parts[0] {
        "ps" | "partial-sum" => {
            let eta = match parts.len() {
                1 => 0.0,
                2 => parts[1].parse().map_err(|_| bad("bad eta"))?,
                _ => return Err(bad("expected ps:<eta>")),
            };
            Ok(DetectorFamily::PartialSum { eta })
        }
        "de" | "darling-erdos" => {
            if parts.len() > 1 {
                return Err(bad("takes no parameters"));
            }
            Ok(DetectorFamily::DarlingErdos)
        }
        "renyi" => {
            if parts.len() < 2 || parts.len() > 3 {
                return Err(bad("expected renyi:<eta>[:r=<cutoff>]"));
            }
            let eta = parts[1].parse().map_err(|_| bad("bad eta"))?;
            let r_override = match parts.get(2) {
                None => None,
                Some(spec) => {
                    let digits = spec
                        .strip_prefix("r=")
                        .ok_or_else(|| bad("expected r=<cutoff>"))?;
                    Some(digits.parse().map_err(|_| bad("bad cutoff"))?)
                }
            };
            Ok(DetectorFamily::Renyi { eta, r_override })
        }
        "wc" | "worst-case" => {
            if parts.len() > 1 {
                return Err(bad("takes no parameters"));
            }
            Ok(DetectorFamily::WorstCase)
        }
        other => Err(CliError::Config(format!(
            "unknown family {other:?}; expected partial-sum, darling-erdos, renyi or worst-case"
        ))),
    }
}

fn parse_direction(name: &str) -> Result<Direction> {
    match name {
        "emerge" => Ok(Direction::Emerge),
        "vanish" => Ok(Direction::Vanish),
        other => Err(CliError::Config(format!(
            "unknown direction {other:?}; expected emerge or vanish"
        ))),
    }
}

fn parse_vanish_transform(name: &str) -> Result<VanishTransform> {
    match name {
        "reciprocal-g" => Ok(VanishTransform::ReciprocalG),
        "exp-inverse" => Ok(VanishTransform::ExpInverse),
        other => Err(CliError::Config(format!(
            "unknown vanish transform {other:?}; expected reciprocal-g or exp-inverse"
        ))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema version {} unsupported; this build reads {SCHEMA_VERSION}",
                self.schema
            )));
        }
        match (&self.input, &self.sim) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "config has both [input] and [sim]; exactly one must be present".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "config needs either [input] or [sim]".into(),
                ))
            }
            _ => {}
        }
        if let Some(input) = &self.input {
            if !input.path.is_file() {
                return Err(CliError::Config(format!(
                    "input path {} does not exist",
                    input.path.display()
                )));
            }
            match &input.format {
                Some(name) => {
                    DataFormat::from_name(name)?;
                }
                None => {
                    DataFormat::from_path(&input.path)?;
                }
            }
        }
        if let Some(sim) = &self.sim {
            parse_scenario(&sim.scenario, sim.t_star)?;
        }
        if !(self.detector.alpha > 0.0 && self.detector.alpha < 1.0) {
            return Err(CliError::Config(format!(
                "alpha = {} must lie in (0, 1)",
                self.detector.alpha
            )));
        }
        parse_family(&self.detector.family)?;
        parse_direction(&self.detector.direction)?;
        parse_vanish_transform(&self.detector.vanish_transform)?;
        if let Some(cache) = &self.detector.cache {
            if !cache.is_file() {
                return Err(CliError::Config(format!(
                    "critical-value cache {} does not exist",
                    cache.display()
                )));
            }
        }
        for path in [&self.output.report, &self.output.plot].into_iter().flatten() {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            if let Some(dir) = dir {
                if !dir.is_dir() {
                    return Err(CliError::Config(format!(
                        "output directory {} does not exist",
                        dir.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Output-path overrides: command-line flags beat environment variables,
    /// which beat the file. Statistical fields are never overridden.
    pub fn apply_output_overrides(
        &mut self,
        report_flag: Option<PathBuf>,
        plot_flag: Option<PathBuf>,
    ) {
        if let Ok(path) = std::env::var(REPORT_ENV) {
            self.output.report = Some(PathBuf::from(path));
        }
        if let Ok(path) = std::env::var(PLOT_ENV) {
            self.output.plot = Some(PathBuf::from(path));
        }
        if let Some(path) = report_flag {
            self.output.report = Some(path);
        }
        if let Some(path) = plot_flag {
            self.output.plot = Some(path);
        }
    }

    pub fn input_format(&self) -> Result<Option<(PathBuf, DataFormat)>> {
        match &self.input {
            None => Ok(None),
            Some(input) => {
                let format = match &input.format {
                    Some(name) => DataFormat::from_name(name)?,
                    None => DataFormat::from_path(&input.path)?,
                };
                Ok(Some((input.path.clone(), format)))
            }
        }
    }

    /// Assemble the core detector configuration for a series of length
    /// `series_len` (after any training offset).
    pub fn detector_config(&self, series_len: usize) -> Result<DetectorConfig> {
        let d = &self.detector;
        if d.m >= series_len {
            return Err(CliError::Config(format!(
                "training window m = {} must be below the series length {series_len}",
                d.m
            )));
        }
        let t_m = d.t_m.unwrap_or(series_len - d.m);
        let family = parse_family(&d.family)?;
        let mut config = DetectorConfig::new(d.k1, d.m, t_m, family, d.alpha);
        config.epsilon = d.epsilon;
        config.delta_override = d.delta;
        config.rng_seed = d.rng_seed;
        config.direction = parse_direction(&d.direction)?;
        config.vanish_transform = parse_vanish_transform(&d.vanish_transform)?;
        Ok(config)
    }
}
