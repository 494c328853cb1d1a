//! One-time generator for the built-in Monte Carlo critical values.
//!
//! Simulates sup_{0≤u≤1} |W(u)|/u^w at the builtin resolution (10⁶ paths ×
//! 10⁴ steps, seed 1069) for the weight grid {0, 0.25, 0.35, 0.45}, sharing
//! one set of Brownian paths across weights. Before the long run it checks,
//! at a small resolution, that the shared-pass kernel reproduces
//! `calibrate_sup_functional_batch` bit-for-bit, and afterwards it compares
//! the weight-0 quantiles against the closed-form series. Prints the array
//! to freeze into `CriticalValueTable::builtin`.

use eigenwatch::detector::critical::{
    calibrate_sup_functional_batch, sup_abs_brownian_quantile, BUILTIN_N_PATHS, BUILTIN_N_STEPS,
    BUILTIN_SEED,
};
use eigenwatch::rng::{derive_seed, label, StreamRng};
use rayon::prelude::*;

const WEIGHTS: [f64; 4] = [0.0, 0.25, 0.35, 0.45];
const ALPHAS: [f64; 2] = [0.05, 0.10];

/// Sorted sup samples for every weight from one pass over the paths.
/// Per-path seeds match `calibrate_sup_functional`, so each weight's sample
/// is identical to a standalone run.
fn shared_pass(n_paths: u64, n_steps: u32, seed: u64) -> Vec<Vec<f64>> {
    let n = n_steps as f64;
    let factors: Vec<Vec<f64>> = WEIGHTS
        .iter()
        .map(|w| {
            (1..=n_steps)
                .map(|t| (t as f64 / n).powf(-w) / n.sqrt())
                .collect()
        })
        .collect();
    let path_label = label("bm-path");
    let per_path: Vec<[f64; 4]> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = StreamRng::from_seed(derive_seed(seed, &[path_label, p]));
            let mut s = 0.0f64;
            let mut sups = [0.0f64; 4];
            for t in 0..n_steps as usize {
                s += rng.standard_normal();
                let a = s.abs();
                for (k, f) in factors.iter().enumerate() {
                    let v = a * f[t];
                    if v > sups[k] {
                        sups[k] = v;
                    }
                }
            }
            sups
        })
        .collect();
    (0..WEIGHTS.len())
        .map(|k| {
            let mut col: Vec<f64> = per_path.iter().map(|s| s[k]).collect();
            col.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            col
        })
        .collect()
}

fn quantile(sorted: &[f64], alpha: f64) -> f64 {
    let n = sorted.len();
    let k = ((1.0 - alpha) * n as f64).ceil() as usize;
    sorted[k.clamp(1, n) - 1]
}

fn main() {
    // Consistency gate at small resolution.
    let small = shared_pass(20_000, 256, BUILTIN_SEED);
    for (k, &w) in WEIGHTS.iter().enumerate() {
        let reference = calibrate_sup_functional_batch(w, &ALPHAS, 20_000, 256, BUILTIN_SEED)
            .expect("small calibration");
        for (j, &alpha) in ALPHAS.iter().enumerate() {
            let ours = quantile(&small[k], alpha);
            assert_eq!(
                ours.to_bits(),
                reference[j].value.to_bits(),
                "shared pass diverged from calibrate_sup_functional at w={w}, α={alpha}"
            );
        }
    }
    eprintln!("small-resolution consistency check passed");

    let start = std::time::Instant::now();
    let sups = shared_pass(BUILTIN_N_PATHS, BUILTIN_N_STEPS, BUILTIN_SEED);
    eprintln!(
        "{} paths x {} steps in {:.1}s",
        BUILTIN_N_PATHS,
        BUILTIN_N_STEPS,
        start.elapsed().as_secs_f64()
    );

    for &alpha in &ALPHAS {
        let series = sup_abs_brownian_quantile(alpha).unwrap();
        let mc = quantile(&sups[0], alpha);
        eprintln!(
            "weight 0 cross-check: α={alpha} series {series:.6} vs MC {mc:.6} (diff {:+.5})",
            mc - series
        );
        assert!(
            (mc - series).abs() < 0.02,
            "weight-0 Monte Carlo strayed from the closed form"
        );
    }

    println!("const BUILTIN_MONTE_CARLO: [(f64, f64, f64); 6] = [");
    for (k, &w) in WEIGHTS.iter().enumerate().skip(1) {
        for &alpha in &ALPHAS {
            println!("    ({w:?}, {alpha:?}, {:?}),", quantile(&sups[k], alpha));
        }
    }
    println!("];");
}
