//! Tuning rules and advisory diagnostics: the δ selection rule, the rate
//! sequence l_{p₁,p₂,m}, the transform restriction, and the power
//! conditions.

use serde::{Deserialize, Serialize};

use super::config::{DetectorConfig, DetectorFamily, Transform};
use super::psi::{g_transform, PSI_CAP};

/// Rate ε used inside l_{p₁,p₂,m} for the advisory checks; matches the
/// simulation ε.
pub const EPSILON_RATE: f64 = 0.05;

/// δ from β = ln p₁ / ln(p₂ m): ε when β ≤ 1/2, else 1 − 1/(2β) + ε;
/// clamped to [0, 1).
pub fn select_delta(p1: usize, p2: usize, m: usize, epsilon: f64) -> f64 {
    let beta = (p1 as f64).ln() / (p2 as f64 * m as f64).ln();
    let delta = if beta <= 0.5 {
        epsilon
    } else {
        1.0 - 1.0 / (2.0 * beta) + epsilon
    };
    delta.clamp(0.0, 1.0 - f64::EPSILON)
}

/// l_{p₁,p₂,m} = (1/p₂ + 1/m + p₁/√(m p₂)) (ln²p₁ · ln p₂ · ln m)^{1+ε}.
pub fn l_sequence(p1: usize, p2: usize, m: usize, epsilon_rate: f64) -> f64 {
    let (p1f, p2f, mf) = (p1 as f64, p2 as f64, m as f64);
    let rate = 1.0 / p2f + 1.0 / mf + p1f / (mf * p2f).sqrt();
    let logs = p1f.ln().powi(2) * p2f.ln() * mf.ln();
    rate * logs.powf(1.0 + epsilon_rate)
}

/// Outcome of the transform restriction check: the finite-sample value of
/// T_m · g(p₁^{−δ} l_{p₁,p₂,m}) and whether it is large enough to warrant
/// a warning. Advisory only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictionReport {
    pub value: f64,
    pub warn: bool,
}

/// Evaluate the restriction on g at the configured sizes (ε_rate = 0.05
/// inside l). Warns when the value exceeds 0.01; never blocks a run.
pub fn check_restriction(
    t_m: usize,
    p1: usize,
    p2: usize,
    m: usize,
    delta: f64,
    transform: Transform,
) -> RestrictionReport {
    let l = l_sequence(p1, p2, m, EPSILON_RATE);
    let x = (p1 as f64).powf(-delta) * l;
    let value = t_m as f64 * g_transform(x, transform);
    RestrictionReport {
        value,
        warn: value > 0.01,
    }
}

/// One power-condition expression evaluated at finite sizes. `divergent`
/// marks values that hit the saturation cap of g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionValue {
    pub value: f64,
    pub divergent: bool,
}

fn condition(value: f64) -> ConditionValue {
    ConditionValue {
        value,
        divergent: value >= PSI_CAP,
    }
}

/// Finite-size evaluation of the three power conditions plus the
/// small-delay heuristics and window guidance. Advisory only; the
/// conditions involve unknown constants, so only raw values are reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConditionReport {
    /// (t*/T_m)^{1−η} · T_m^{1/2}/√(ln ln T_m) · g(p₁^{1−δ})
    pub partial_sum: ConditionValue,
    /// (t*/T_m)^{1/2} · T_m^{1/2}/(ln ln T_m) · g(p₁^{1−δ})
    pub darling_erdos: ConditionValue,
    /// (r/T_m)^{η−1/2} · (t*/T_m)^{1−η} · T_m^{1/2}/√(ln ln T_m) · g(p₁^{1−δ})
    pub renyi: ConditionValue,
    /// Per-step detection drift (p₁/m) under the small-p₁ regime.
    pub small_p1_rate: f64,
    /// Per-step detection drift √(p₂/m) when p₁^{1−δ} ≍ √(m p₂).
    pub large_p1_rate: f64,
    /// Window guidance m ≲ p₁/ln p₁ for short delays.
    pub recommended_m_max: f64,
    /// Complementary guidance m = o(p₂): keep m below this.
    pub recommended_m_p2_bound: f64,
}

pub fn power_condition_report(
    config: &DetectorConfig,
    p1: usize,
    p2: usize,
    t_star_hypothetical: usize,
) -> PowerConditionReport {
    let t_m = config.t_m as f64;
    let t_star = (t_star_hypothetical as f64).max(1.0).min(t_m);
    let delta = config
        .delta_override
        .unwrap_or_else(|| select_delta(p1, p2, config.m, config.epsilon));
    let g_signal = g_transform((p1 as f64).powf(1.0 - delta), config.transform);
    let lnln = t_m.ln().ln();

    let eta_ps = match config.family {
        DetectorFamily::PartialSum { eta } => eta,
        _ => 0.0,
    };
    let ps = (t_star / t_m).powf(1.0 - eta_ps) * t_m.sqrt() / lnln.sqrt() * g_signal;

    let de = (t_star / t_m).sqrt() * t_m.sqrt() / lnln * g_signal;

    let (eta_renyi, r) = match config.family {
        DetectorFamily::Renyi { eta, .. } => (eta, config.family.r_tm(config.t_m)),
        _ => {
            let family = DetectorFamily::Renyi { eta: 0.75, r_override: None };
            (0.75, family.r_tm(config.t_m))
        }
    };
    let renyi = (r as f64 / t_m).powf(eta_renyi - 0.5)
        * (t_star / t_m).powf(1.0 - eta_renyi)
        * t_m.sqrt()
        / lnln.sqrt()
        * g_signal;

    let (p1f, p2f, mf) = (p1 as f64, p2 as f64, config.m as f64);
    PowerConditionReport {
        partial_sum: condition(ps),
        darling_erdos: condition(de),
        renyi: condition(renyi),
        small_p1_rate: p1f / mf,
        large_p1_rate: (p2f / mf).sqrt(),
        recommended_m_max: p1f / p1f.ln(),
        recommended_m_p2_bound: p2f,
    }
}
