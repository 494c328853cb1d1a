//! Data-generating processes for the simulation study: the baseline matrix
//! factor model X_t = R F_t C′ + E_t with AR(1) factor and noise dynamics,
//! plus the break scenarios (loading switch, factor emergence, factor
//! vanishing, column-loading changes).
//!
//! Every random component draws from its own named substream derived from
//! the spec seed, so two specs that differ only in scenario produce
//! bit-identical pre-break observations.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, Zip};
use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_sqrt;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, label, StreamRng};
use crate::series::MatrixSeries;

const SQRT3: f64 = 1.7320508075688772;

/// Break scenario tag. `t_star` is an absolute 1-based index; the break is
/// active for observations t > t_star ("regenerated after time point t*+1").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t_star", rename_all = "kebab-case")]
pub enum Scenario {
    Null,
    LoadingSwitch(usize),
    FactorEmerge(usize),
    FactorVanish(usize),
    CSwitch(usize),
    BothSwitch(usize),
}

impl Scenario {
    pub fn break_point(self) -> Option<usize> {
        match self {
            Scenario::Null => None,
            Scenario::LoadingSwitch(t) => Some(t),
            Scenario::FactorEmerge(t) => Some(t),
            Scenario::FactorVanish(t) => Some(t),
            Scenario::CSwitch(t) => Some(t),
            Scenario::BothSwitch(t) => Some(t),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Null => "null",
            Scenario::LoadingSwitch(_) => "loading-switch",
            Scenario::FactorEmerge(_) => "factor-emerge",
            Scenario::FactorVanish(_) => "factor-vanish",
            Scenario::CSwitch(_) => "c-switch",
            Scenario::BothSwitch(_) => "both-switch",
        }
    }

    /// Scenarios whose tables report rejection frequencies rather than
    /// delays: the null, and the column-loading switch (which the projection
    /// absorbs, so it behaves like a null for the row-factor monitor).
    pub fn reports_size(self) -> bool {
        matches!(self, Scenario::Null | Scenario::CSwitch(_))
    }
}

/// Everything needed to generate one replication of the model in Eq. 4.1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub p1: usize,
    pub p2: usize,
    /// Total number of observations T.
    pub t_len: usize,
    /// Row factor count under the null. FactorVanish runs k1+1 factors up
    /// to the break and drops one after.
    pub k1: usize,
    pub k2: usize,
    /// Factor AR(1) coefficient φ.
    pub phi: f64,
    /// Noise AR(1) coefficient (the model's ψ; renamed to avoid clashing
    /// with the detector statistic ψ_τ).
    pub psi_ar: f64,
    pub scenario: Scenario,
    pub seed: u64,
}

impl DgpSpec {
    /// The benchmark simulation defaults: k1 = k2 = 3, φ = ψ = 0.1,
    /// break at t* = T/2 where the scenario carries one.
    pub fn benchmark(p1: usize, p2: usize, t_len: usize, scenario: Scenario, seed: u64) -> Self {
        DgpSpec {
            p1,
            p2,
            t_len,
            k1: 3,
            k2: 3,
            phi: 0.1,
            psi_ar: 0.1,
            scenario,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p1 == 0 || self.p2 == 0 || self.t_len == 0 {
            return Err(Error::InvalidArgument(format!(
                "dimensions must be positive, got p1={}, p2={}, T={}",
                self.p1, self.p2, self.t_len
            )));
        }
        if !(self.phi.abs() < 1.0) || !(self.psi_ar.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "AR coefficients must satisfy |phi| < 1 and |psi_ar| < 1, got {} and {}",
                self.phi, self.psi_ar
            )));
        }
        if let Some(t_star) = self.scenario.break_point() {
            if t_star >= self.t_len {
                return Err(Error::InvalidArgument(format!(
                    "break point t* = {t_star} must be below T = {}",
                    self.t_len
                )));
            }
        }
        Ok(())
    }
}

fn uniform_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Array2<f64> {
    let data = (0..rows * cols)
        .map(|_| rng.uniform(-SQRT3, SQRT3))
        .collect();
    Array2::from_shape_vec((rows, cols), data).expect("shape matches draw count")
}

fn normal_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Array2<f64> {
    let data = (0..rows * cols).map(|_| rng.standard_normal()).collect();
    Array2::from_shape_vec((rows, cols), data).expect("shape matches draw count")
}

/// Row (or column) noise covariance: ones on the diagonal, `off` elsewhere.
fn equicorrelation(p: usize, off: f64) -> Array2<f64> {
    Array2::from_shape_fn((p, p), |(i, j)| if i == j { 1.0 } else { off })
}

/// One variance-preserving AR(1) step state = φ·state + √(1−φ²)·innovation.
fn ar_step(state: &mut Array2<f64>, innovation: &Array2<f64>, coeff: f64) {
    let scale = (1.0 - coeff * coeff).sqrt();
    Zip::from(state)
        .and(innovation)
        .for_each(|s, &e| *s = coeff * *s + scale * e);
}

/// Generate a series and its noise component. The noise is kept separate so
/// tests can inspect the common component exactly; `generate` discards it.
fn generate_parts(spec: &DgpSpec) -> Result<(Array3<f64>, Array3<f64>)> {
    spec.validate()?;
    let &DgpSpec {
        p1,
        p2,
        t_len,
        k1,
        k2,
        phi,
        psi_ar,
        scenario,
        seed,
    } = spec;

    let n_rows = match scenario {
        Scenario::FactorVanish(_) => k1 + 1,
        _ => k1,
    };

    let mut rng_r = StreamRng::from_seed(derive_seed(seed, &[label("R")]));
    let mut rng_c = StreamRng::from_seed(derive_seed(seed, &[label("C")]));
    let mut rng_f = StreamRng::from_seed(derive_seed(seed, &[label("F")]));
    let mut rng_e = StreamRng::from_seed(derive_seed(seed, &[label("E")]));

    let r = uniform_matrix(&mut rng_r, p1, n_rows);
    let c = uniform_matrix(&mut rng_c, p2, k2);

    let (r_new, c_new) = match scenario {
        Scenario::LoadingSwitch(_) => {
            let mut rng = StreamRng::from_seed(derive_seed(seed, &[label("R-new")]));
            (Some(uniform_matrix(&mut rng, p1, k1)), None)
        }
        Scenario::CSwitch(_) => {
            let mut rng = StreamRng::from_seed(derive_seed(seed, &[label("C-new")]));
            (None, Some(uniform_matrix(&mut rng, p2, k2)))
        }
        Scenario::BothSwitch(_) => {
            let mut rng_rn = StreamRng::from_seed(derive_seed(seed, &[label("R-new")]));
            let mut rng_cn = StreamRng::from_seed(derive_seed(seed, &[label("C-new")]));
            (
                Some(uniform_matrix(&mut rng_rn, p1, k1)),
                Some(uniform_matrix(&mut rng_cn, p2, k2)),
            )
        }
        _ => (None, None),
    };
    let ell = match scenario {
        Scenario::FactorEmerge(_) => {
            let mut rng = StreamRng::from_seed(derive_seed(seed, &[label("ell")]));
            Some(uniform_matrix(&mut rng, p1, 1))
        }
        _ => None,
    };
    let mut rng_f_tilde = StreamRng::from_seed(derive_seed(seed, &[label("f-tilde")]));

    let u_sqrt = symmetric_sqrt(equicorrelation(p1, 1.0 / p1 as f64).view())?;
    let v_sqrt = symmetric_sqrt(equicorrelation(p2, 1.0 / p2 as f64).view())?;

    // Stationary initial states: both recursions preserve unit variance, so
    // F_0 is a standard normal draw and E_0 a single matrix-normal draw.
    let mut f_state = normal_matrix(&mut rng_f, n_rows, k2);
    let mut e_state = {
        let z = normal_matrix(&mut rng_e, p1, p2);
        u_sqrt.dot(&z).dot(&v_sqrt)
    };

    let mut x = Array3::zeros((t_len, p1, p2));
    let mut noise = Array3::zeros((t_len, p1, p2));
    let mut uz = Array2::zeros((p1, p2));
    let mut u_t = Array2::zeros((p1, p2));

    for t in 1..=t_len {
        let innovation = normal_matrix(&mut rng_f, n_rows, k2);
        ar_step(&mut f_state, &innovation, phi);

        let z = normal_matrix(&mut rng_e, p1, p2);
        general_mat_mul(1.0, &u_sqrt, &z, 0.0, &mut uz);
        general_mat_mul(1.0, &uz, &v_sqrt, 0.0, &mut u_t);
        ar_step(&mut e_state, &u_t, psi_ar);

        let post_break = matches!(scenario.break_point(), Some(t_star) if t > t_star);
        let (r_t, f_t) = match scenario {
            Scenario::LoadingSwitch(_) | Scenario::BothSwitch(_) if post_break => {
                (r_new.as_ref().expect("drawn above").view(), f_state.view())
            }
            Scenario::FactorVanish(_) if post_break => {
                (r.slice(s![.., ..k1]), f_state.slice(s![..k1, ..]))
            }
            _ => (r.view(), f_state.view()),
        };
        let c_t = match (&c_new, post_break) {
            (Some(cn), true) => cn.view(),
            _ => c.view(),
        };

        let mut slab = x.slice_mut(s![t - 1, .., ..]);
        slab.assign(&e_state);
        let fc = f_t.dot(&c_t.t());
        general_mat_mul(1.0, &r_t, &fc, 1.0, &mut slab);

        if post_break {
            if let Some(ell) = &ell {
                let f_tilde = normal_matrix(&mut rng_f_tilde, 1, k2);
                let extra = f_tilde.dot(&c_t.t());
                general_mat_mul(1.0, ell, &extra, 1.0, &mut slab);
            }
        }

        noise.slice_mut(s![t - 1, .., ..]).assign(&e_state);
    }

    Ok((x, noise))
}

/// Generate one replication of the matrix factor model under `spec`.
pub fn generate(spec: &DgpSpec) -> Result<MatrixSeries> {
    let (x, _) = generate_parts(spec)?;
    MatrixSeries::new(x)
}
