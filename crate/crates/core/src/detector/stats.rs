//! The four detector statistics.
//!
//! [`StreamingDetector`] is the single definition of each family's
//! normalization, threshold curve, and boundary comparison; the batch
//! `stat_*` functions and the monitor both drive it, so a streaming run and
//! a batch replay of the same path cannot disagree.

use crate::detector::config::DetectorFamily;
use crate::detector::critical::{darling_erdos_critical, worst_case_critical};
use crate::error::{Error, Result};

/// Batch evaluation of one detector over a full (or truncated) path.
/// `threshold_path[i]` is the boundary for the raw comparison value at
/// τ = i+1: |S_τ| for the CUSUM-type families, y_τ for the worst case.
#[derive(Debug, Clone, PartialEq)]
pub struct StatOutcome {
    /// Final detector statistic in the family's own normalization.
    pub statistic: f64,
    /// Resolved critical value the thresholds are built from.
    pub critical_value: f64,
    pub threshold_path: Vec<f64>,
    /// First boundary crossing, 1-based; `None` if the path never crossed.
    pub tau_hat: Option<usize>,
}

/// Online detector. Feed (τ, S_τ, y_τ) in order; the first crossing is
/// latched and later observations only extend the recorded statistic.
#[derive(Debug, Clone)]
pub struct StreamingDetector {
    family: DetectorFamily,
    t_m: usize,
    critical: f64,
    r: usize,
    /// Normalization T_m^{η−1/2} (partial sum), r^{η−1/2} (Rényi), 1 else.
    norm: f64,
    statistic: f64,
    tau_hat: Option<usize>,
}

impl StreamingDetector {
    pub fn new(family: DetectorFamily, t_m: usize, critical: f64) -> Result<Self> {
        if t_m == 0 {
            return Err(Error::InvalidConfig("monitoring horizon T_m = 0".into()));
        }
        if !(critical.is_finite() && critical > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "critical value {critical} must be finite and positive"
            )));
        }
        let r = family.r_tm(t_m);
        let norm = match family {
            DetectorFamily::PartialSum { eta } => {
                if !(0.0..0.5).contains(&eta) {
                    return Err(Error::InvalidConfig(format!(
                        "partial-sum weight η = {eta} must lie in [0, 1/2)"
                    )));
                }
                (t_m as f64).powf(eta - 0.5)
            }
            DetectorFamily::DarlingErdos => {
                if t_m < 16 {
                    return Err(Error::InvalidConfig(format!(
                        "Darling–Erdős needs T_m ≥ 16, got {t_m}"
                    )));
                }
                1.0
            }
            DetectorFamily::Renyi { eta, .. } => {
                if !(eta > 0.5 && eta <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "Rényi weight η = {eta} must lie in (1/2, 1]"
                    )));
                }
                if r < 1 || r > t_m {
                    return Err(Error::InvalidConfig(format!(
                        "Rényi start r = {r} must lie in 1..=T_m = {t_m}"
                    )));
                }
                (r as f64).powf(eta - 0.5)
            }
            DetectorFamily::WorstCase => {
                if t_m < 2 {
                    return Err(Error::InvalidConfig(format!(
                        "worst case needs T_m ≥ 2, got {t_m}"
                    )));
                }
                1.0
            }
        };
        let statistic = match family {
            DetectorFamily::WorstCase => f64::NEG_INFINITY,
            _ => 0.0,
        };
        Ok(StreamingDetector {
            family,
            t_m,
            critical,
            r,
            norm,
            statistic,
            tau_hat: None,
        })
    }

    pub fn family(&self) -> DetectorFamily {
        self.family
    }

    pub fn critical_value(&self) -> f64 {
        self.critical
    }

    /// Boundary for the raw comparison value at monitoring index τ
    /// (1-based). Infinite below the Rényi start index.
    pub fn threshold_at(&self, tau: usize) -> f64 {
        let t = tau as f64;
        match self.family {
            DetectorFamily::PartialSum { eta } => {
                self.critical * (self.t_m as f64).powf(0.5 - eta) * t.powf(eta)
            }
            DetectorFamily::DarlingErdos => self.critical * t.sqrt(),
            DetectorFamily::Renyi { eta, .. } => {
                if tau < self.r {
                    f64::INFINITY
                } else {
                    self.critical * (self.r as f64).powf(0.5 - eta) * t.powf(eta)
                }
            }
            DetectorFamily::WorstCase => self.critical,
        }
    }

    /// The raw value this family compares against its threshold at τ.
    fn raw(&self, s_tau: f64, y_tau: f64) -> f64 {
        match self.family {
            DetectorFamily::WorstCase => y_tau,
            _ => s_tau.abs(),
        }
    }

    /// One step of the sequential rule. τ must advance by one from 1.
    /// Returns the latched τ̂ (old or new) if the boundary has been hit.
    pub fn observe(&mut self, tau: usize, s_tau: f64, y_tau: f64) -> Result<Option<usize>> {
        if tau == 0 || tau > self.t_m {
            return Err(Error::InvalidArgument(format!(
                "monitoring index τ = {tau} outside 1..={}",
                self.t_m
            )));
        }
        let raw = self.raw(s_tau, y_tau);
        let t = tau as f64;
        match self.family {
            DetectorFamily::PartialSum { eta } => {
                let value = self.norm * raw / t.powf(eta);
                self.statistic = self.statistic.max(value);
            }
            DetectorFamily::DarlingErdos => {
                self.statistic = self.statistic.max(raw / t.sqrt());
            }
            DetectorFamily::Renyi { eta, .. } => {
                if tau >= self.r {
                    self.statistic = self.statistic.max(self.norm * raw / t.powf(eta));
                }
            }
            DetectorFamily::WorstCase => {
                self.statistic = self.statistic.max(raw);
            }
        }
        if self.tau_hat.is_none() && self.crossed(tau, raw) {
            self.tau_hat = Some(tau);
        }
        Ok(self.tau_hat)
    }

    /// Boundary comparison. The maximum-type detector rejects on a strict
    /// exceedance ("y_τ > c"); the CUSUM-type rules reject at the boundary
    /// ("|S_τ| ≥ …").
    fn crossed(&self, tau: usize, raw: f64) -> bool {
        let threshold = self.threshold_at(tau);
        match self.family {
            DetectorFamily::WorstCase => raw > threshold,
            _ => raw >= threshold,
        }
    }

    /// Detector statistic over everything observed so far.
    pub fn statistic(&self) -> f64 {
        self.statistic
    }

    pub fn tau_hat(&self) -> Option<usize> {
        self.tau_hat
    }
}

fn replay(
    family: DetectorFamily,
    t_m: usize,
    critical: f64,
    s_path: &[f64],
    y_path: &[f64],
) -> Result<StatOutcome> {
    if s_path.len() != y_path.len() {
        return Err(Error::InvalidArgument(format!(
            "path lengths differ: {} vs {}",
            s_path.len(),
            y_path.len()
        )));
    }
    if s_path.is_empty() {
        return Err(Error::InvalidArgument("empty detector path".into()));
    }
    if s_path.len() > t_m {
        return Err(Error::InvalidArgument(format!(
            "path length {} exceeds the horizon T_m = {t_m}",
            s_path.len()
        )));
    }
    let mut detector = StreamingDetector::new(family, t_m, critical)?;
    let mut threshold_path = Vec::with_capacity(s_path.len());
    for (i, (&s, &y)) in s_path.iter().zip(y_path).enumerate() {
        let tau = i + 1;
        detector.observe(tau, s, y)?;
        threshold_path.push(detector.threshold_at(tau));
    }
    Ok(StatOutcome {
        statistic: detector.statistic(),
        critical_value: critical,
        threshold_path,
        tau_hat: detector.tau_hat(),
    })
}

/// Weighted CUSUM: statistic T_m^{η−1/2} max_τ |S_τ|/τ^η, boundary
/// c_{α,η} T_m^{1/2−η} τ^η. `critical` comes from the sup-functional table
/// at weight η.
pub fn stat_partial_sum(s_path: &[f64], t_m: usize, eta: f64, critical: f64) -> Result<StatOutcome> {
    replay(DetectorFamily::PartialSum { eta }, t_m, critical, s_path, s_path)
}

/// Darling–Erdős: statistic max_τ |S_τ|/√τ against the closed-form
/// c_{α,m}.
pub fn stat_darling_erdos(s_path: &[f64], t_m: usize, alpha: f64) -> Result<StatOutcome> {
    let critical = darling_erdos_critical(t_m, alpha)?;
    replay(DetectorFamily::DarlingErdos, t_m, critical, s_path, s_path)
}

/// Rényi: statistic r^{η−1/2} max_{τ≥r} |S_τ|/τ^η with r = `r_override`
/// or ⌈√T_m⌉. `critical_dual` is the weight-(1−η) sup-functional value;
/// the scale identity maps the (1,∞) sup back onto the unit interval.
pub fn stat_renyi(
    s_path: &[f64],
    t_m: usize,
    eta: f64,
    r_override: Option<usize>,
    critical_dual: f64,
) -> Result<StatOutcome> {
    replay(
        DetectorFamily::Renyi { eta, r_override },
        t_m,
        critical_dual,
        s_path,
        s_path,
    )
}

/// Worst case: Z_{T_m} = max_τ y_τ against the constant c_{α,2}; strict
/// exceedance.
pub fn stat_worst_case(y_path: &[f64], t_m: usize, alpha: f64) -> Result<StatOutcome> {
    let critical = worst_case_critical(t_m, alpha)?;
    let zeros = vec![0.0; y_path.len()];
    replay(DetectorFamily::WorstCase, t_m, critical, &zeros, y_path)
}
