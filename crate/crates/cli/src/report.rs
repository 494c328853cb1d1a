//! Run reports and plot data. Reports serialize to pretty JSON with shortest
//! round-trip numerals; rerunning the echoed config reproduces the bytes
//! (timing is opt-in precisely so the default output is reproducible).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use eigenwatch::Verdict;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ReportSeeds {
    pub detector_rng: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<u64>,
}

/// Per-τ monitoring trajectories; every vector has exactly T_m entries.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectories {
    pub lambda: Vec<f64>,
    pub psi: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub statistic: Vec<f64>,
    pub threshold: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool_version: &'static str,
    pub config: RunConfig,
    pub k_tilde: usize,
    /// 0-based half-open projection window.
    pub training_window: [usize; 2],
    pub delta: f64,
    pub seeds: ReportSeeds,
    pub verdict: Verdict,
    pub trajectories: Trajectories,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_seconds: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let json = self.to_json();
        match path {
            Some(path) => fs::write(path, json).map_err(|e| CliError::io(path, e)),
            None => {
                print!("{json}");
                Ok(())
            }
        }
    }

    /// Tab-separated plot data, one row per τ: the columns behind the
    /// rolling-eigenvalue monitoring displays. Non-finite thresholds (the
    /// Rényi warm-up) print as "inf".
    pub fn write_plot(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = BufWriter::new(file);
        let t = &self.trajectories;
        let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
            writeln!(out, "tau\tlambda\tpsi\ty\ts\tstatistic\tthreshold")?;
            for tau in 0..t.lambda.len() {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    tau + 1,
                    t.lambda[tau],
                    t.psi[tau],
                    t.y[tau],
                    t.s[tau],
                    t.statistic[tau],
                    t.threshold[tau],
                )?;
            }
            out.flush()
        };
        write(&mut out).map_err(|e| CliError::io(path, e))
    }
}
