//! Seeded Monte Carlo checks of the statistical claims the library rests on:
//! subspace recovery of the projection, the spiked/bulk eigenvalue separation
//! the monitoring statistic exploits, factor-count selection, size control,
//! and the qualitative delay orderings of the simulation tables.

use eigenwatch::covariance::{initial_projection, monitored_eigenvalues};
use eigenwatch::simulate::{generate, run_table, DgpSpec, Scenario};
use eigenwatch::{
    eigenvalue_ratio_k, eigh_sym, flattened_cov_rows, DetectorFamily, MatrixSeries,
};
use ndarray::{Array2, Array3};

fn stream(seed: u64) -> eigenwatch::rng::StreamRng {
    eigenwatch::rng::StreamRng::from_seed(seed)
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// X_t = R F_t C' + E_t with i.i.d. factors and noise; returns the series
/// and the true column loading C.
fn known_c_series(p1: usize, p2: usize, t_len: usize, k: usize, seed: u64) -> (MatrixSeries, Array2<f64>) {
    let mut rng = stream(seed);
    let r = Array2::from_shape_fn((p1, k), |_| rng.uniform(-SQRT3, SQRT3));
    let c = Array2::from_shape_fn((p2, k), |_| rng.uniform(-SQRT3, SQRT3));
    let mut data = Array3::zeros((t_len, p1, p2));
    for t in 0..t_len {
        let f = Array2::from_shape_fn((k, k), |_| rng.standard_normal());
        let common = r.dot(&f).dot(&c.t());
        let mut slab = data.index_axis_mut(ndarray::Axis(0), t);
        slab.assign(&common);
        slab.zip_mut_with(&Array2::from_shape_fn((p1, p2), |_| rng.standard_normal()), |x, e| {
            *x += e
        });
    }
    (MatrixSeries::new(data).unwrap(), c)
}

/// Columns of `basis` orthonormalized by Gram-Schmidt.
fn orthonormalize(basis: &Array2<f64>) -> Array2<f64> {
    let mut q = basis.clone();
    for j in 0..q.ncols() {
        for i in 0..j {
            let proj = q.column(i).dot(&q.column(j));
            let qi = q.column(i).to_owned();
            q.column_mut(j).zip_mut_with(&qi, |x, y| *x -= proj * y);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    q
}

#[test]
fn projection_captures_the_true_column_space() {
    for seed in 0..5u64 {
        let (series, c) = known_c_series(100, 100, 200, 3, 100 + seed);
        let proj = initial_projection(&series, 0..200, 8).unwrap();
        let c_tilde_orth = proj.c_tilde().mapv(|x| x / (100f64).sqrt());
        let c_orth = orthonormalize(&c);
        // Smallest canonical correlation between span(C~) and span(C) is the
        // smallest singular value of the 8x3 cross product.
        let cross = c_tilde_orth.t().dot(&c_orth);
        let gram = cross.t().dot(&cross);
        let spectrum = eigh_sym(gram.view(), false).unwrap();
        let min_corr = spectrum.eigenvalues.last().unwrap().max(0.0).sqrt();
        assert!(min_corr >= 0.99, "seed {seed}: canonical correlation {min_corr}");
    }
}

#[test]
fn spiked_and_bulk_eigenvalues_separate_at_the_stated_rates() {
    let mut gap_ok = 0;
    for rep in 0..100u64 {
        let spec = DgpSpec::benchmark(100, 80, 52, Scenario::Null, 9_000 + rep);
        let series = generate(&spec).unwrap();
        let proj = initial_projection(&series, 0..52, 8).unwrap();
        let eigens = monitored_eigenvalues(&series, &proj, 1, 50, 3).unwrap();
        let l3 = eigens.lambda_kth.unwrap() / 100.0;
        let l4 = eigens.lambda_next / 100.0;
        if l3 > 0.05 && l4 < 0.05 {
            gap_ok += 1;
        }
    }
    assert_eq!(gap_ok, 100, "spiked/bulk separation failed in {} runs", 100 - gap_ok);
}

#[test]
fn bulk_eigenvalue_ratio_is_small_under_the_null() {
    let mut ok = 0;
    for rep in 0..100u64 {
        let spec = DgpSpec::benchmark(50, 50, 52, Scenario::Null, 4_000 + rep);
        let series = generate(&spec).unwrap();
        let proj = initial_projection(&series, 0..52, 8).unwrap();
        let eigens = monitored_eigenvalues(&series, &proj, 1, 50, 3).unwrap();
        if eigens.lambda_next / eigens.lambda_kth.unwrap() <= 0.15 {
            ok += 1;
        }
    }
    assert!(ok >= 95, "ratio below 0.15 in only {ok}/100 runs");
}

#[test]
fn eigen_gap_tightens_as_dimensions_grow() {
    let mut means = Vec::new();
    for d in [50usize, 80, 100] {
        let mut total = 0.0;
        for rep in 0..30u64 {
            let spec = DgpSpec::benchmark(d, d, d + 2, Scenario::Null, 7_000 + rep);
            let series = generate(&spec).unwrap();
            let proj = initial_projection(&series, 0..d + 2, 8).unwrap();
            let eigens = monitored_eigenvalues(&series, &proj, 1, d, 3).unwrap();
            total += eigens.lambda_next / eigens.lambda_kth.unwrap();
        }
        means.push(total / 30.0);
    }
    assert!(
        means[0] > means[1] && means[1] > means[2],
        "mean ratios not decreasing: {means:?}"
    );
}

#[test]
fn eigenvalue_ratio_selects_the_generating_factor_counts() {
    let (mut cols_ok, mut rows_ok) = (0, 0);
    for rep in 0..200u64 {
        let spec = DgpSpec::benchmark(100, 80, 200, Scenario::Null, 11_000 + rep);
        let series = generate(&spec).unwrap();
        let col_cov = flattened_cov_rows(&series, 0..200).unwrap();
        let col_spec = eigh_sym(col_cov.view(), false).unwrap();
        if eigenvalue_ratio_k(&col_spec, 8).unwrap() == 3 {
            cols_ok += 1;
        }
        let row_cov = flattened_cov_rows(&series.transposed(), 0..200).unwrap();
        let row_spec = eigh_sym(row_cov.view(), false).unwrap();
        if eigenvalue_ratio_k(&row_spec, 8).unwrap() == 3 {
            rows_ok += 1;
        }
    }
    assert!(cols_ok >= 190, "column count recovered in {cols_ok}/200");
    assert!(rows_ok >= 190, "row count recovered in {rows_ok}/200");
}

const PS0: DetectorFamily = DetectorFamily::PartialSum { eta: 0.0 };
const WC: DetectorFamily = DetectorFamily::WorstCase;

fn rate(table: &eigenwatch::SimulationTable, cell: usize, family: DetectorFamily, alpha: f64) -> f64 {
    table.cells[cell]
        .entries
        .iter()
        .find(|e| e.family == family && e.alpha == alpha)
        .unwrap()
        .rejection_rate
}

fn median_delay(table: &eigenwatch::SimulationTable, cell: usize, family: DetectorFamily, alpha: f64) -> f64 {
    table.cells[cell]
        .entries
        .iter()
        .find(|e| e.family == family && e.alpha == alpha)
        .unwrap()
        .median_delay
        .expect("break scenario rejects")
}

#[test]
fn null_sizes_respect_the_binomial_envelope() {
    let n_reps = 150;
    let table = run_table(
        &[(50, 50, 20), (20, 30, 40)],
        &[PS0, WC],
        &[0.05, 0.10],
        n_reps,
        Scenario::Null,
        200,
        21,
    )
    .unwrap();
    for cell in 0..2 {
        for &alpha in &[0.05, 0.10] {
            let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / n_reps as f64).sqrt();
            for family in [PS0, WC] {
                let size = rate(&table, cell, family, alpha);
                assert!(
                    size <= bound,
                    "cell {cell} {family:?} alpha {alpha}: size {size:.3} > {bound:.3}"
                );
            }
        }
    }
}

#[test]
fn rejection_is_complete_under_every_break_scenario() {
    for (scenario, seed) in [
        (Scenario::LoadingSwitch(100), 31u64),
        (Scenario::FactorEmerge(100), 32),
        (Scenario::BothSwitch(100), 33),
        (Scenario::FactorVanish(100), 34),
    ] {
        let table = run_table(&[(50, 50, 20)], &[PS0, WC], &[0.05, 0.10], 100, scenario, 200, seed)
            .unwrap();
        for entry in &table.cells[0].entries {
            assert_eq!(
                entry.rejection_rate, 1.0,
                "{scenario:?} {:?} alpha {}",
                entry.family, entry.alpha
            );
        }
    }
}

#[test]
fn factor_emergence_is_detected_no_sooner_than_loading_switches() {
    let ls = run_table(&[(50, 50, 20)], &[PS0], &[0.05], 150, Scenario::LoadingSwitch(100), 200, 41)
        .unwrap();
    let fe = run_table(&[(50, 50, 20)], &[PS0], &[0.05], 150, Scenario::FactorEmerge(100), 200, 41)
        .unwrap();
    let d_ls = median_delay(&ls, 0, PS0, 0.05);
    let d_fe = median_delay(&fe, 0, PS0, 0.05);
    assert!(d_fe >= d_ls, "emergence delay {d_fe} < loading-switch delay {d_ls}");
}

#[test]
fn column_only_switches_leave_the_size_unchanged() {
    let n_reps = 200;
    let null = run_table(&[(50, 50, 20)], &[PS0], &[0.05], n_reps, Scenario::Null, 200, 51).unwrap();
    let cswitch =
        run_table(&[(50, 50, 20)], &[PS0], &[0.05], n_reps, Scenario::CSwitch(100), 200, 51)
            .unwrap();
    let p_null = rate(&null, 0, PS0, 0.05);
    let p_cs = rate(&cswitch, 0, PS0, 0.05);
    let pooled = (p_null + p_cs) / 2.0;
    let se = (pooled * (1.0 - pooled) * 2.0 / n_reps as f64).sqrt();
    let z = if se == 0.0 { 0.0 } else { (p_null - p_cs).abs() / se };
    assert!(z < 2.576, "two-proportion z = {z:.2} at sizes {p_null} vs {p_cs}");
}

#[test]
fn detection_gets_faster_as_p2_grows() {
    let table = run_table(
        &[(50, 50, 20), (50, 50, 50), (50, 50, 80)],
        &[PS0],
        &[0.05],
        100,
        Scenario::LoadingSwitch(100),
        200,
        61,
    )
    .unwrap();
    let delays: Vec<f64> = (0..3).map(|c| median_delay(&table, c, PS0, 0.05)).collect();
    assert!(
        delays[0] >= delays[1] && delays[1] >= delays[2],
        "delays not nonincreasing in p2: {delays:?}"
    );
}
