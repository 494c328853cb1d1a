//! Symmetric eigendecomposition.
//!
//! Householder tridiagonalization followed by implicit-shift QL iteration,
//! the classical dense path for the modest orders used here (p ≤ a few
//! hundred). Eigenvalues come back sorted descending; eigenvectors, when
//! requested, are orthonormal columns aligned with the sorted values and
//! sign-fixed so the first meaningfully nonzero component of each vector is
//! positive. Everything is plain scalar arithmetic in a fixed order, so a
//! given matrix yields bit-identical output run to run.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Relative symmetry tolerance: max |a_ij - a_ji| ≤ 1e-9·‖a‖_F.
const SYMMETRY_TOL: f64 = 1e-9;
/// QL convergence threshold on off-diagonal mass, relative to neighbours.
const QL_TOL: f64 = 1e-12;
/// Iteration budget per eigenvalue in the QL stage.
const QL_MAX_ITER: usize = 100;

/// Spectrum of a symmetric matrix: eigenvalues descending, eigenvectors
/// optional (column i pairs with eigenvalue i).
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Array2<f64>>,
}

impl SymmetricSpectrum {
    /// Sum of all eigenvalues (equals the trace of the input).
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Full spectrum of a symmetric matrix.
///
/// `want_vectors` controls whether the orthogonal transform is accumulated;
/// skipping it roughly halves the work, which matters in rolling loops that
/// need eigenvalues only.
pub fn eigh_sym(a: ArrayView2<'_, f64>, want_vectors: bool) -> Result<SymmetricSpectrum> {
    let n = check_square_symmetric(&a)?;
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }

    // Work on the symmetrized copy; asymmetry within tolerance is noise.
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            z[i * n + j] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }

    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, n, &mut d, &mut e, want_vectors);
    let vectors_arg = if want_vectors { Some(z.as_mut_slice()) } else { None };
    ql_implicit(&mut d, &mut e, vectors_arg, n)?;

    // Sort descending, permuting vectors alongside.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("finite eigenvalues"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    let eigenvectors = if want_vectors {
        let mut v = Array2::zeros((n, n));
        for (new_col, &old_col) in order.iter().enumerate() {
            // Sign convention: first component with meaningful magnitude
            // is positive, so repeated runs and platforms agree on C̃.
            let mut max_abs = 0.0f64;
            for r in 0..n {
                max_abs = max_abs.max(z[r * n + old_col].abs());
            }
            let mut sign = 1.0;
            for r in 0..n {
                let x = z[r * n + old_col];
                if x.abs() > 1e-12 * max_abs {
                    sign = if x < 0.0 { -1.0 } else { 1.0 };
                    break;
                }
            }
            for r in 0..n {
                v[[r, new_col]] = sign * z[r * n + old_col];
            }
        }
        Some(v)
    } else {
        None
    };

    Ok(SymmetricSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn check_square_symmetric(a: &ArrayView2<'_, f64>) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::InvalidArgument(format!("matrix is {r}×{c}, not square")));
    }
    let mut frob2 = 0.0;
    let mut max_asym = 0.0f64;
    for i in 0..r {
        for j in 0..r {
            let x = a[[i, j]];
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("a[{i},{j}] = {x}")));
            }
            frob2 += x * x;
            if j > i {
                max_asym = max_asym.max((x - a[[j, i]]).abs());
            }
        }
    }
    let tol = SYMMETRY_TOL * frob2.sqrt();
    if max_asym > tol {
        return Err(Error::NotSymmetric { max_asym, tol });
    }
    Ok(r)
}

/// Householder reduction to tridiagonal form (EISPACK tred2 layout).
/// On exit `d` holds the diagonal, `e[1..]` the subdiagonal; if
/// `accumulate`, `z` holds the orthogonal transform, otherwise its content
/// is scratch.
fn tridiagonalize(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = z[i * n + l];
            } else {
                for k in 0..=l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let f = z[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    if accumulate {
                        z[j * n + i] = z[i * n + j] / h;
                    }
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += z[j * n + k] * z[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * z[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = z[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j * n + k] -= f * e[k] + g * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l];
        }
        d[i] = h;
    }
    if accumulate {
        d[0] = 0.0;
    }
    e[0] = 0.0;
    for i in 0..n {
        if accumulate {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += z[i * n + k] * z[k * n + j];
                    }
                    for k in 0..i {
                        z[k * n + j] -= g * z[k * n + i];
                    }
                }
            }
            d[i] = z[i * n + i];
            z[i * n + i] = 1.0;
            for j in 0..i {
                z[j * n + i] = 0.0;
                z[i * n + j] = 0.0;
            }
        } else {
            d[i] = z[i * n + i];
        }
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix (EISPACK tql2);
/// rotations are applied to `z`'s columns when present.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>, n: usize) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find a negligible subdiagonal element to split the problem.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= QL_TOL * dd + f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence {
                    residual: e[l].abs(),
                    iterations: QL_MAX_ITER,
                });
            }
            // Wilkinson-style shift from the 2×2 at the top of the block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                let i1 = i - 1;
                let mut f = s * e[i1];
                let b = c * e[i1];
                r = f.hypot(g);
                e[i] = r;
                if r == 0.0 {
                    d[i] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i] - p;
                r = (d[i1] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    for k in 0..n {
                        f = zm[k * n + i];
                        zm[k * n + i] = s * zm[k * n + i1] + c * f;
                        zm[k * n + i1] = c * zm[k * n + i1] - s * f;
                    }
                }
                i -= 1;
            }
            if r == 0.0 && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Symmetric square root A^{1/2} of a PSD matrix via its spectrum; small
/// negative eigenvalues from rounding are clamped to zero.
pub fn symmetric_sqrt(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let spec = eigh_sym(a, true)?;
    let n = spec.eigenvalues.len();
    let v = spec.eigenvectors.as_ref().expect("vectors requested");
    let mut out = Array2::zeros((n, n));
    for (k, &lam) in spec.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = v[[i, k]] * s;
            for j in 0..n {
                out[[i, j]] += vi * v[[j, k]];
            }
        }
    }
    Ok(out)
}

/// Eigenvalue-ratio selector for the number of factors: the j ≤ k_max
/// maximizing λ_j/λ_{j+1} (1-based), ties to the smallest j.
pub fn eigenvalue_ratio_k(spectrum: &SymmetricSpectrum, k_max: usize) -> Result<usize> {
    let vals = &spectrum.eigenvalues;
    if k_max == 0 || k_max >= vals.len() {
        return Err(Error::InvalidArgument(format!(
            "k_max = {k_max} must be in 1..{}",
            vals.len()
        )));
    }
    let top = vals[0];
    if top < 1e-12 {
        return Err(Error::DegenerateSpectrum(format!(
            "largest eigenvalue {top:.3e} below 1e-12"
        )));
    }
    if vals.iter().any(|&v| v < -1e-12 * top.max(1.0)) {
        return Err(Error::InvalidArgument(
            "eigenvalue-ratio selector needs a nonnegative spectrum".into(),
        ));
    }
    let mut best_j = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for j in 1..=k_max {
        let num = vals[j - 1].max(0.0);
        let den = vals[j].max(0.0);
        let ratio = if den > 0.0 {
            num / den
        } else if num > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > best_ratio {
            best_ratio = ratio;
            best_j = j;
        }
    }
    Ok(best_j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Brute-force spectral oracle: repeated power iteration with deflation
    /// on the shifted matrix A + σI (σ makes it positive definite, shifts
    /// subtract out at the end). Independent of the Householder/QL path.
    fn power_iteration_spectrum(a: &Array2<f64>) -> Vec<f64> {
        let n = a.nrows();
        let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sigma = frob + 1.0;
        let mut work = a.clone();
        for i in 0..n {
            work[[i, i]] += sigma;
        }
        let mut out = Vec::with_capacity(n);
        for round in 0..n {
            let mut v: Vec<f64> = (0..n)
                .map(|i| 1.0 + 0.1 * ((i * 7 + round * 13 + 3) % 17) as f64)
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let mut lam = 0.0;
            for _ in 0..200_000 {
                let mut w = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        w[i] += work[[i, j]] * v[j];
                    }
                }
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    lam = 0.0;
                    break;
                }
                w.iter_mut().for_each(|x| *x /= norm);
                let mut rq = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        rq += w[i] * work[[i, j]] * w[j];
                    }
                }
                let delta = (rq - lam).abs();
                lam = rq;
                v = w;
                if delta < 1e-14 * lam.abs().max(1.0) {
                    break;
                }
            }
            out.push(lam - sigma);
            // Deflate: A ← A − λ v vᵀ.
            for i in 0..n {
                for j in 0..n {
                    work[[i, j]] -= lam * v[i] * v[j];
                }
            }
        }
        out.sort_by(|x, y| y.partial_cmp(x).unwrap());
        out
    }

    fn reconstruction_error(a: &Array2<f64>, spec: &SymmetricSpectrum) -> f64 {
        let n = a.nrows();
        let v = spec.eigenvectors.as_ref().unwrap();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += v[[i, k]] * spec.eigenvalues[k] * v[[j, k]];
                }
                err = err.max((s - a[[i, j]]).abs());
            }
        }
        err
    }

    #[test]
    fn identity_spectrum() {
        let a = Array2::eye(3);
        let s = eigh_sym(a.view(), true).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_matrix_axis_aligned() {
        let a = array![[5.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, -1.0]];
        let s = eigh_sym(a.view(), true).unwrap();
        assert_eq!(s.eigenvalues, vec![5.0, 2.0, -1.0]);
        let v = s.eigenvectors.unwrap();
        for (col, axis) in [(0usize, 0usize), (1, 1), (2, 2)] {
            for r in 0..3 {
                let expect = if r == axis { 1.0 } else { 0.0 };
                assert!((v[[r, col]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_by_two_hand_case() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let s = eigh_sym(a.view(), true).unwrap();
        assert!((s.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-12);
        let v = s.eigenvectors.unwrap();
        let r = 0.5f64.sqrt();
        assert!((v[[0, 0]] - r).abs() < 1e-12 && (v[[1, 0]] - r).abs() < 1e-12);
        assert!((v[[0, 1]] - r).abs() < 1e-12 && (v[[1, 1]] + r).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let a = Array2::zeros((4, 4));
        let s = eigh_sym(a.view(), true).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0; 4]);
        assert!(reconstruction_error(&a, &s) < 1e-15);
    }

    #[test]
    fn one_by_one() {
        let a = array![[-7.5]];
        let s = eigh_sym(a.view(), false).unwrap();
        assert_eq!(s.eigenvalues, vec![-7.5]);
    }

    #[test]
    fn repeated_eigenvalues() {
        let a = array![[3.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 1.0]];
        let s = eigh_sym(a.view(), true).unwrap();
        assert!((s.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 3.0).abs() < 1e-12);
        assert!((s.eigenvalues[2] - 1.0).abs() < 1e-12);
        assert!(reconstruction_error(&a, &s) < 1e-12);
    }

    #[test]
    fn random_matrix_matches_power_iteration_oracle() {
        let mut rng = crate::rng::StreamRng::from_seed(1234);
        for trial in 0..20 {
            let n = 3 + trial % 8;
            let mut a = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let x = rng.uniform(-5.0, 5.0);
                    a[[i, j]] = x;
                    a[[j, i]] = x;
                }
            }
            let s = eigh_sym(a.view(), true).unwrap();
            let oracle = power_iteration_spectrum(&a);
            let scale = s.eigenvalues[0].abs().max(1.0);
            for k in 0..n {
                assert!(
                    (s.eigenvalues[k] - oracle[k]).abs() < 1e-8 * scale,
                    "trial {trial} n={n} k={k}: {} vs oracle {}",
                    s.eigenvalues[k],
                    oracle[k]
                );
            }
            assert!(reconstruction_error(&a, &s) < 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn orthonormal_vectors() {
        let mut rng = crate::rng::StreamRng::from_seed(99);
        let n = 16;
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x = rng.uniform(-1.0, 1.0);
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        let s = eigh_sym(a.view(), true).unwrap();
        let v = s.eigenvectors.unwrap();
        for c1 in 0..n {
            for c2 in 0..=c1 {
                let dot: f64 = (0..n).map(|r| v[[r, c1]] * v[[r, c2]]).sum();
                let expect = if c1 == c2 { 1.0 } else { 0.0 };
                assert!(
                    (dot - expect).abs() < 1e-10 * n as f64,
                    "V'V[{c1},{c2}] = {dot}"
                );
            }
        }
    }

    #[test]
    fn trace_identity() {
        let mut rng = crate::rng::StreamRng::from_seed(7);
        let n = 12;
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x = rng.uniform(-3.0, 3.0);
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        let trace: f64 = (0..n).map(|i| a[[i, i]]).sum();
        let s = eigh_sym(a.view(), false).unwrap();
        assert!((s.trace() - trace).abs() <= 1e-9 * trace.abs().max(1.0));
    }

    #[test]
    fn sign_convention_first_meaningful_component_positive() {
        let mut rng = crate::rng::StreamRng::from_seed(55);
        for _ in 0..10 {
            let n = 6;
            let mut a = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let x = rng.uniform(-2.0, 2.0);
                    a[[i, j]] = x;
                    a[[j, i]] = x;
                }
            }
            let s = eigh_sym(a.view(), true).unwrap();
            let v = s.eigenvectors.unwrap();
            for c in 0..n {
                let max_abs = (0..n).map(|r| v[[r, c]].abs()).fold(0.0, f64::max);
                let first = (0..n)
                    .map(|r| v[[r, c]])
                    .find(|x| x.abs() > 1e-12 * max_abs)
                    .unwrap();
                assert!(first > 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(
            eigh_sym(a.view(), false),
            Err(Error::NotSymmetric { .. })
        ));
        let a = array![[f64::NAN, 0.0], [0.0, 1.0]];
        assert!(matches!(eigh_sym(a.view(), false), Err(Error::NonFinite(_))));
        let a = Array2::<f64>::zeros((2, 3));
        assert!(eigh_sym(a.view(), false).is_err());
    }

    #[test]
    fn symmetric_sqrt_squares_back() {
        // (1-ρ)I + ρJ with known PSD structure.
        let p = 5;
        let rho = 0.2;
        let mut a = Array2::from_elem((p, p), rho);
        for i in 0..p {
            a[[i, i]] = 1.0;
        }
        let root = symmetric_sqrt(a.view()).unwrap();
        let sq = root.dot(&root);
        for i in 0..p {
            for j in 0..p {
                assert!((sq[[i, j]] - a[[i, j]]).abs() < 1e-10);
            }
        }
        // Closed form for ((1-ρ)I + ρJ)^{1/2} = aI + bJ.
        let aa = (1.0 - rho).sqrt();
        let bb = ((1.0 - rho + p as f64 * rho).sqrt() - aa) / p as f64;
        for i in 0..p {
            for j in 0..p {
                let expect = bb + if i == j { aa } else { 0.0 };
                assert!(
                    (root[[i, j]] - expect).abs() < 1e-10,
                    "root[{i},{j}] = {} vs {expect}",
                    root[[i, j]]
                );
            }
        }
    }

    #[test]
    fn ratio_selector_cases() {
        let spec = |v: &[f64]| SymmetricSpectrum {
            eigenvalues: v.to_vec(),
            eigenvectors: None,
        };
        assert_eq!(eigenvalue_ratio_k(&spec(&[100.0, 90.0, 1.0, 0.9]), 3).unwrap(), 2);
        // Equal ratios of 10: tie broken at the smallest j.
        assert_eq!(eigenvalue_ratio_k(&spec(&[10.0, 1.0, 0.1]), 2).unwrap(), 1);
        // Zero tail: finite/0 → infinity wins.
        assert_eq!(eigenvalue_ratio_k(&spec(&[5.0, 2.0, 0.0, 0.0]), 3).unwrap(), 2);
        assert!(matches!(
            eigenvalue_ratio_k(&spec(&[1e-13, 1e-14]), 1),
            Err(Error::DegenerateSpectrum(_))
        ));
        assert!(eigenvalue_ratio_k(&spec(&[3.0, 1.0]), 2).is_err());
    }
}
