//! Sequential monitor: eigenvalue stream in, verdict out.
//!
//! [`Monitor`] owns the resolved tuning (δ, critical value), the seeded
//! Gaussian stream, and the running paths; [`monitor_series`] wires it to a
//! raw series through the training-window projection and the rolling
//! covariance cursor. The z-stream is seeded from
//! `derive_seed(rng_seed, [label("z-stream")])`, so a verdict is a pure
//! function of (config, data).

use serde::{Deserialize, Serialize};

use crate::covariance::{initial_projection, MonitoredEigens, RollingCov};
use crate::detector::config::{DetectorConfig, DetectorFamily, Direction};
use crate::detector::critical::{
    darling_erdos_critical, worst_case_critical, CriticalValueTable,
};
use crate::detector::psi::psi_value;
use crate::detector::stats::StreamingDetector;
use crate::detector::tuning::select_delta;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, label, StreamRng};
use crate::series::MatrixSeries;

/// Growing trajectories of one monitoring run. All paths share length
/// `tau`; `s_path` carries compensated prefix sums of `y_path`.
#[derive(Debug, Clone)]
pub struct MonitorState {
    pub tau: usize,
    pub psi_path: Vec<f64>,
    pub z_path: Vec<f64>,
    pub y_path: Vec<f64>,
    pub s_path: Vec<f64>,
    rng: StreamRng,
    sum: f64,
    compensation: f64,
}

impl MonitorState {
    fn new(rng: StreamRng) -> Self {
        MonitorState {
            tau: 0,
            psi_path: Vec::new(),
            z_path: Vec::new(),
            y_path: Vec::new(),
            s_path: Vec::new(),
            rng,
            sum: 0.0,
            compensation: 0.0,
        }
    }

    /// Kahan-compensated running sum; returns S_τ after adding y.
    fn add(&mut self, y: f64) -> f64 {
        let adjusted = y - self.compensation;
        let next = self.sum + adjusted;
        self.compensation = (next - self.sum) - adjusted;
        self.sum = next;
        next
    }
}

/// Final description of a monitoring run. `statistic_path` holds the raw
/// per-τ comparison value (|S_τ|, or y_τ for the worst case) matched
/// elementwise against `threshold_path`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub rejected: bool,
    pub tau_hat: Option<usize>,
    pub statistic: f64,
    pub statistic_path: Vec<f64>,
    pub threshold_path: Vec<f64>,
    pub critical_value: f64,
    pub family: DetectorFamily,
}

/// Resolve a family's critical value against a table.
pub(crate) fn resolve_critical(
    family: DetectorFamily,
    alpha: f64,
    t_m: usize,
    table: &CriticalValueTable,
) -> Result<f64> {
    match family {
        DetectorFamily::PartialSum { eta } => {
            table.critical_value(eta, alpha).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "no critical value for weight {eta}, α = {alpha}; calibrate first"
                ))
            })
        }
        DetectorFamily::DarlingErdos => darling_erdos_critical(t_m, alpha),
        DetectorFamily::Renyi { eta, .. } => {
            let dual = 1.0 - eta;
            table.critical_value(dual, alpha).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "no critical value for dual weight {dual}, α = {alpha}; calibrate first"
                ))
            })
        }
        DetectorFamily::WorstCase => worst_case_critical(t_m, alpha),
    }
}

/// One monitoring run over the horizon. Detection latches the verdict but
/// stepping may continue to the horizon end; the trajectories keep
/// recording either way.
#[derive(Debug, Clone)]
pub struct Monitor {
    config: DetectorConfig,
    p1: usize,
    delta: f64,
    detector: StreamingDetector,
    state: MonitorState,
}

impl Monitor {
    /// Build with the built-in critical-value table.
    pub fn new(config: DetectorConfig, p1: usize, p2: usize) -> Result<Self> {
        Self::with_table(config, p1, p2, &CriticalValueTable::builtin())
    }

    /// Build against a caller-supplied table (custom calibrations).
    pub fn with_table(
        config: DetectorConfig,
        p1: usize,
        p2: usize,
        table: &CriticalValueTable,
    ) -> Result<Self> {
        config.validate()?;
        if p1 < 1 || p2 < 1 {
            return Err(Error::InvalidConfig(format!(
                "matrix dimensions p1 = {p1}, p2 = {p2} must be positive"
            )));
        }
        if config.k1 + 1 > p1 {
            return Err(Error::InvalidConfig(format!(
                "k1 = {} needs k1+1 ≤ p1 = {p1}",
                config.k1
            )));
        }
        let delta = match config.delta_override {
            Some(d) => d,
            None => select_delta(p1, p2, config.m, config.epsilon),
        };
        let critical = resolve_critical(config.family, config.alpha, config.t_m, table)?;
        let detector = StreamingDetector::new(config.family, config.t_m, critical)?;
        let rng = StreamRng::from_seed(derive_seed(config.rng_seed, &[label("z-stream")]));
        Ok(Monitor {
            config,
            p1,
            delta,
            detector,
            state: MonitorState::new(rng),
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Resolved δ for this run.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn critical_value(&self) -> f64 {
        self.detector.critical_value()
    }

    pub fn state(&self) -> &MonitorState {
        &self.state
    }

    pub fn tau_hat(&self) -> Option<usize> {
        self.detector.tau_hat()
    }

    /// Advance one monitoring step from the rolling spectrum at the current
    /// τ. Returns the latched τ̂ once the boundary has been crossed.
    pub fn step(&mut self, eigens: &MonitoredEigens) -> Result<Option<usize>> {
        let lambda = match self.config.direction {
            Direction::Emerge => eigens.lambda_next,
            Direction::Vanish => eigens.lambda_kth.ok_or_else(|| {
                Error::InvalidArgument("vanish monitoring needs k1 ≥ 1 (no k-th eigenvalue)".into())
            })?,
        };
        let psi = psi_value(
            lambda,
            eigens.trace_mean,
            self.p1,
            self.delta,
            self.config.transform,
            self.config.direction,
            self.config.vanish_transform,
        );
        self.step_raw(psi)
    }

    /// Advance with a precomputed ψ_τ. This is the randomization core:
    /// z_τ is drawn from the seeded stream, y_τ = z_τ + ψ_τ is appended,
    /// and the detector sees (τ, S_τ, y_τ). With ψ_τ ≡ 0 the y-path is
    /// exactly the seeded Gaussian stream.
    pub fn step_raw(&mut self, psi_tau: f64) -> Result<Option<usize>> {
        if !(psi_tau >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ψ_τ = {psi_tau} must be nonnegative"
            )));
        }
        let tau = self.state.tau + 1;
        if tau > self.config.t_m {
            return Err(Error::InvalidArgument(format!(
                "monitoring horizon T_m = {} exhausted",
                self.config.t_m
            )));
        }
        let z = self.state.rng.standard_normal();
        let y = z + psi_tau;
        let s = self.state.add(y);
        self.state.tau = tau;
        self.state.psi_path.push(psi_tau);
        self.state.z_path.push(z);
        self.state.y_path.push(y);
        self.state.s_path.push(s);
        self.detector.observe(tau, s, y)
    }

    /// Assemble the verdict from everything observed so far.
    pub fn verdict(&self) -> Verdict {
        let statistic_path: Vec<f64> = match self.config.family {
            DetectorFamily::WorstCase => self.state.y_path.clone(),
            _ => self.state.s_path.iter().map(|s| s.abs()).collect(),
        };
        let threshold_path: Vec<f64> = (1..=self.state.tau)
            .map(|tau| self.detector.threshold_at(tau))
            .collect();
        let tau_hat = self.detector.tau_hat();
        Verdict {
            rejected: tau_hat.is_some(),
            tau_hat,
            statistic: self.detector.statistic(),
            statistic_path,
            threshold_path,
            critical_value: self.detector.critical_value(),
            family: self.config.family,
        }
    }
}

fn check_series_shape(series: &MatrixSeries, config: &DetectorConfig) -> Result<()> {
    let t_len = series.len();
    if config.m >= t_len {
        return Err(Error::InvalidConfig(format!(
            "training window m = {} needs observations beyond it (T = {t_len})",
            config.m
        )));
    }
    if config.t_m > t_len - config.m {
        return Err(Error::InvalidConfig(format!(
            "horizon T_m = {} exceeds the {} observations after the training window",
            config.t_m,
            t_len - config.m
        )));
    }
    Ok(())
}

/// Precompute the monitored eigenvalue stream for τ = 1..=T_m with the
/// projection frozen from the training window 0..m.
fn eigen_stream(
    series: &MatrixSeries,
    config: &DetectorConfig,
    k_tilde: usize,
) -> Result<Vec<MonitoredEigens>> {
    let proj = initial_projection(series, 0..config.m, k_tilde)?;
    let mut roll = RollingCov::new(series, &proj, 1, config.m)?;
    let mut out = Vec::with_capacity(config.t_m);
    for tau in 1..=config.t_m {
        out.push(roll.monitored(config.k1)?);
        if tau < config.t_m {
            roll.advance()?;
        }
    }
    Ok(out)
}

/// Run one full monitoring pass: project on the training window 0..m,
/// slide the rolling covariance over τ = 1..=T_m, and return the verdict.
/// Monitoring always runs to the horizon end so the verdict carries the
/// complete trajectories.
pub fn monitor_series(
    series: &MatrixSeries,
    config: &DetectorConfig,
    k_tilde: usize,
) -> Result<Verdict> {
    config.validate()?;
    check_series_shape(series, config)?;
    let (p1, p2) = series.dims();
    let mut monitor = Monitor::new(config.clone(), p1, p2)?;
    for eigens in eigen_stream(series, config, k_tilde)? {
        monitor.step(&eigens)?;
    }
    Ok(monitor.verdict())
}

/// One detected segment of a restarted run: `offset` is the 0-based start
/// of the segment in the original series, `k1` the factor count supplied
/// for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentVerdict {
    pub offset: usize,
    pub k1: usize,
    pub t_m: usize,
    pub verdict: Verdict,
}

/// Repeatedly monitor, restarting after each detection with the training
/// window re-anchored at the detection point. Segment s re-seeds its
/// z-stream as `derive_seed(rng_seed, [label("segment"), s])`; `next_k1`
/// receives each new segment's offset and supplies its factor count (the
/// first segment uses `config.k1`). Stops at the first non-rejection or
/// when too little data remains for the configured family.
pub fn monitor_with_restarts(
    series: &MatrixSeries,
    config: &DetectorConfig,
    k_tilde: usize,
    mut next_k1: impl FnMut(usize) -> usize,
) -> Result<Vec<SegmentVerdict>> {
    config.validate()?;
    check_series_shape(series, config)?;
    let (p1, p2) = series.dims();
    let mut segments = Vec::new();
    let mut offset = 0usize;
    let mut k1 = config.k1;
    loop {
        let remaining = series.len() - offset;
        if remaining < config.m + 1 {
            break;
        }
        let mut segment_config = config.clone();
        segment_config.k1 = k1;
        segment_config.t_m = remaining - config.m;
        segment_config.rng_seed =
            derive_seed(config.rng_seed, &[label("segment"), segments.len() as u64]);
        if segment_config.validate().is_err() {
            break;
        }
        let sub = series.window(offset..series.len())?;
        let Ok(monitor) = Monitor::new(segment_config.clone(), p1, p2) else {
            // Family floor (e.g. Darling–Erdős horizon) no longer met.
            break;
        };
        let mut monitor = monitor;
        for eigens in eigen_stream(&sub, &segment_config, k_tilde)? {
            monitor.step(&eigens)?;
        }
        let verdict = monitor.verdict();
        let tau_hat = verdict.tau_hat;
        segments.push(SegmentVerdict {
            offset,
            k1,
            t_m: segment_config.t_m,
            verdict,
        });
        match tau_hat {
            Some(tau) => {
                offset += config.m + tau;
                k1 = next_k1(offset);
            }
            None => break,
        }
    }
    Ok(segments)
}

/// Outcome of the seed-replication vote: rerun the randomization (fresh
/// z-streams, same data) and declare a change only when more than 80% of
/// the replications reject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub n_replications: usize,
    pub rejections: usize,
    pub rejection_fraction: f64,
    pub declared: bool,
    /// Median τ̂ among rejecting replications (mid-average for even counts).
    pub median_tau_hat: Option<f64>,
}

pub fn replication_vote(
    series: &MatrixSeries,
    config: &DetectorConfig,
    k_tilde: usize,
    n_replications: usize,
) -> Result<VoteOutcome> {
    if n_replications == 0 {
        return Err(Error::InvalidArgument("need at least one replication".into()));
    }
    config.validate()?;
    check_series_shape(series, config)?;
    let (p1, p2) = series.dims();
    let eigens = eigen_stream(series, config, k_tilde)?;
    let mut tau_hats: Vec<usize> = Vec::new();
    for i in 0..n_replications {
        let mut replication_config = config.clone();
        replication_config.rng_seed =
            derive_seed(config.rng_seed, &[label("vote"), i as u64]);
        let mut monitor = Monitor::new(replication_config, p1, p2)?;
        for e in &eigens {
            monitor.step(e)?;
        }
        if let Some(tau) = monitor.tau_hat() {
            tau_hats.push(tau);
        }
    }
    let rejections = tau_hats.len();
    let rejection_fraction = rejections as f64 / n_replications as f64;
    tau_hats.sort_unstable();
    let median_tau_hat = if tau_hats.is_empty() {
        None
    } else if tau_hats.len() % 2 == 1 {
        Some(tau_hats[tau_hats.len() / 2] as f64)
    } else {
        let hi = tau_hats.len() / 2;
        Some((tau_hats[hi - 1] + tau_hats[hi]) as f64 / 2.0)
    };
    Ok(VoteOutcome {
        n_replications,
        rejections,
        rejection_fraction,
        declared: rejection_fraction > 0.8,
        median_tau_hat,
    })
}
