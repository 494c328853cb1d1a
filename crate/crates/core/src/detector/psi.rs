//! The randomization drift ψ_τ / ψ̃_τ.

use super::config::{Direction, Transform, VanishTransform};

/// Saturation cap for ψ and ψ̃. g(x) = [exp(x)−1]⁴ overflows f64 for
/// x ≳ 175; any value this large is already above every threshold, so
/// clamping preserves verdicts while keeping S_τ finite.
pub const PSI_CAP: f64 = 1e12;

/// Guard below which the trace denominator counts as degenerate.
const TRACE_FLOOR: f64 = 1e-300;

/// g(x), saturated at [`PSI_CAP`]. Negative arguments (possible only
/// through eigenvalue rounding noise) are treated as 0.
pub fn g_transform(x: f64, transform: Transform) -> f64 {
    let Transform::GExpPow { q } = transform;
    if x <= 0.0 {
        return 0.0;
    }
    let base = x.exp_m1();
    let v = base.powi(q as i32);
    if v.is_nan() {
        PSI_CAP
    } else {
        v.min(PSI_CAP)
    }
}

/// g̃(x), saturated: diverges as x → 0⁺ and vanishes as x → ∞.
pub fn g_tilde_transform(x: f64, transform: Transform, variant: VanishTransform) -> f64 {
    if x <= 0.0 {
        return PSI_CAP;
    }
    let v = match variant {
        VanishTransform::ReciprocalG => {
            let g = g_transform(x, transform);
            if g <= 0.0 {
                return PSI_CAP;
            }
            1.0 / g
        }
        VanishTransform::ExpInverse => (1.0 / x).exp_m1(),
    };
    if v.is_nan() {
        PSI_CAP
    } else {
        v.min(PSI_CAP)
    }
}

/// ψ_τ (Emerge) or ψ̃_τ (Vanish) from the monitored eigenvalue and the
/// trace mean of the same rolling window:
/// ψ_τ = g(p₁^{−δ} λ̂ / trace_mean). A degenerate trace (all-zero window)
/// yields 0 for Emerge and the cap for Vanish.
#[allow(clippy::too_many_arguments)]
pub fn psi_value(
    lambda_monitored: f64,
    trace_mean: f64,
    p1: usize,
    delta: f64,
    transform: Transform,
    direction: Direction,
    vanish_variant: VanishTransform,
) -> f64 {
    if trace_mean < TRACE_FLOOR {
        return match direction {
            Direction::Emerge => 0.0,
            Direction::Vanish => PSI_CAP,
        };
    }
    let shrink = (p1 as f64).powf(-delta);
    let x = shrink * lambda_monitored.max(0.0) / trace_mean;
    match direction {
        Direction::Emerge => g_transform(x, transform),
        Direction::Vanish => g_tilde_transform(x, transform, vanish_variant),
    }
}
