//! Detector configuration: family, transform, direction, and validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monitoring direction: watch λ̂_{k₁+1,τ} for an emerging factor (ψ), or
/// λ̂_{k₁,τ} for a vanishing one (ψ̃).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Emerge,
    Vanish,
}

/// The transform g applied to the normalized eigenvalue ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    /// g(x) = [exp(x) − 1]^q; q = 4 is the reference choice.
    GExpPow { q: u32 },
}

impl Default for Transform {
    fn default() -> Self {
        Transform::GExpPow { q: 4 }
    }
}

/// Shape of g̃ for the Vanish direction: the reciprocal 1/g (the applied
/// sections' own choice, the default) or exp(1/x) − 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum VanishTransform {
    #[default]
    ReciprocalG,
    ExpInverse,
}

/// Which sequential detector consumes the randomized stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DetectorFamily {
    /// Weighted CUSUM, T_m^{η−1/2} max_τ |S_τ|/τ^η with 0 ≤ η < 1/2.
    PartialSum { eta: f64 },
    /// η = 1/2 standardized CUSUM with Gumbel-type norming.
    DarlingErdos,
    /// η > 1/2 variant maximized over τ ≥ r_{T_m}; `r_override` replaces
    /// the default rule r_{T_m} = ⌈√T_m⌉.
    Renyi { eta: f64, r_override: Option<usize> },
    /// Z_{T_m} = max_τ y_τ against the Gaussian-maximum critical value.
    WorstCase,
}

impl DetectorFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorFamily::PartialSum { .. } => "partial-sum",
            DetectorFamily::DarlingErdos => "darling-erdos",
            DetectorFamily::Renyi { .. } => "renyi",
            DetectorFamily::WorstCase => "worst-case",
        }
    }

    /// Resolved Rényi lower index r_{T_m}; 1 for every other family.
    pub fn r_tm(&self, t_m: usize) -> usize {
        match self {
            DetectorFamily::Renyi { r_override, .. } => {
                r_override.unwrap_or_else(|| (t_m as f64).sqrt().ceil() as usize)
            }
            _ => 1,
        }
    }
}

/// Everything the detector needs besides the data dimensions. δ itself is
/// resolved at monitor construction from (p₁, p₂, m, ε) unless overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Number of row factors under the null.
    pub k1: usize,
    /// Training-window and rolling-window length.
    pub m: usize,
    /// Monitoring horizon length (T − m).
    pub t_m: usize,
    /// ε in the δ selection rule.
    pub epsilon: f64,
    /// Fixed δ, bypassing the selection rule (applied work uses 0.4).
    pub delta_override: Option<f64>,
    pub transform: Transform,
    pub family: DetectorFamily,
    pub alpha: f64,
    pub rng_seed: u64,
    pub direction: Direction,
    pub vanish_transform: VanishTransform,
}

impl DetectorConfig {
    /// A null-direction config with reference defaults (q = 4, ε = 0.05).
    pub fn new(k1: usize, m: usize, t_m: usize, family: DetectorFamily, alpha: f64) -> Self {
        DetectorConfig {
            k1,
            m,
            t_m,
            epsilon: 0.05,
            delta_override: None,
            transform: Transform::default(),
            family,
            alpha,
            rng_seed: 0,
            direction: Direction::Emerge,
            vanish_transform: VanishTransform::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidConfig(format!("m = {} must be ≥ 2", self.m)));
        }
        if self.t_m == 0 {
            return Err(Error::InvalidConfig("T_m must be ≥ 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha = {} must lie in (0,1)",
                self.alpha
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        if let Some(d) = self.delta_override {
            if !(0.0..1.0).contains(&d) {
                return Err(Error::InvalidConfig(format!(
                    "delta_override = {d} must lie in [0,1)"
                )));
            }
        }
        let Transform::GExpPow { q } = self.transform;
        if q == 0 {
            return Err(Error::InvalidConfig("transform exponent q must be ≥ 1".into()));
        }
        match self.family {
            DetectorFamily::PartialSum { eta } => {
                if !(0.0..0.5).contains(&eta) {
                    return Err(Error::InvalidConfig(format!(
                        "partial-sum weight η = {eta} must lie in [0, 1/2)"
                    )));
                }
            }
            DetectorFamily::DarlingErdos => {
                // ln ln ln T_m must be defined and positive.
                if self.t_m < 16 {
                    return Err(Error::InvalidConfig(format!(
                        "Darling–Erdős needs T_m ≥ 16, got {}",
                        self.t_m
                    )));
                }
            }
            DetectorFamily::Renyi { eta, r_override } => {
                if !(eta > 0.5 && eta <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "Rényi weight η = {eta} must lie in (1/2, 1]"
                    )));
                }
                let r = r_override.unwrap_or_else(|| (self.t_m as f64).sqrt().ceil() as usize);
                if r == 0 || r > self.t_m {
                    return Err(Error::InvalidConfig(format!(
                        "Rényi lower index r = {r} must lie in 1..=T_m = {}",
                        self.t_m
                    )));
                }
            }
            DetectorFamily::WorstCase => {
                if self.t_m < 2 {
                    return Err(Error::InvalidConfig(
                        "worst-case detector needs T_m ≥ 2".into(),
                    ));
                }
            }
        }
        if self.direction == Direction::Vanish && self.k1 == 0 {
            return Err(Error::InvalidConfig(
                "Vanish direction needs k1 ≥ 1 (ψ̃ watches λ̂_{k₁,τ})".into(),
            ));
        }
        Ok(())
    }
}
