//! Subcommand implementations. Exit codes: 0 = completed without a break
//! verdict, 2 = monitor detected a break, 1 = any error (mapped in main).

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;

use eigenwatch::detector::calibrate_sup_functional_batch;
use eigenwatch::simulate::{run_table_with, TableParams};
use eigenwatch::{
    eigenvalue_ratio_k, eigh_sym, flattened_cov_rows, generate, initial_projection,
    CriticalValueTable, Direction, DgpSpec, MatrixSeries, Monitor, RollingCov,
};

use crate::config::{parse_family, parse_scenario, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::{export, ingest, DataFormat};
use crate::report::{ReportSeeds, RunReport, Trajectories};

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the report output path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Override the plot-data output path.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Include wall-clock timing in the report (breaks byte-reproducibility).
    #[arg(long)]
    pub timing: bool,
}

pub fn cmd_monitor(args: MonitorArgs) -> Result<i32> {
    let started = Instant::now();
    let mut config = RunConfig::load(&args.config)?;
    config.apply_output_overrides(args.report, args.plot);
    config.validate()?;

    let (series, sim_seed) = load_series(&config)?;
    let series = if config.training.start > 0 {
        series.window(config.training.start..series.len())?
    } else {
        series
    };
    let detector_config = config.detector_config(series.len())?;
    let (p1, p2) = series.dims();
    let k_tilde = config.detector.k_tilde;
    let m = detector_config.m;
    let t_m = detector_config.t_m;
    if t_m > series.len() - m {
        return Err(CliError::Config(format!(
            "horizon t_m = {t_m} exceeds the {} observations after training",
            series.len() - m
        )));
    }
    let direction = detector_config.direction;
    let k1 = detector_config.k1;

    let mut monitor = match &config.detector.cache {
        Some(path) => {
            let table = CriticalValueTable::load(path)?;
            Monitor::with_table(detector_config, p1, p2, &table)?
        }
        None => Monitor::new(detector_config, p1, p2)?,
    };

    let proj = initial_projection(&series, 0..m, k_tilde)?;
    let mut rolling = RollingCov::new(&series, &proj, 1, m)?;
    let mut lambda = Vec::with_capacity(t_m);
    for tau in 1..=t_m {
        let eigens = rolling.monitored(k1)?;
        lambda.push(match direction {
            Direction::Emerge => eigens.lambda_next,
            Direction::Vanish => eigens.lambda_kth.unwrap_or(f64::NAN),
        });
        monitor.step(&eigens)?;
        if tau < t_m {
            rolling.advance()?;
        }
    }
    let verdict = monitor.verdict();
    let state = monitor.state();
    let rejected = verdict.rejected;

    let report = RunReport {
        tool_version: env!("CARGO_PKG_VERSION"),
        k_tilde,
        training_window: [0, m],
        delta: monitor.delta(),
        seeds: ReportSeeds {
            detector_rng: config.detector.rng_seed,
            simulation: sim_seed,
        },
        trajectories: Trajectories {
            lambda,
            psi: state.psi_path.clone(),
            y: state.y_path.clone(),
            s: state.s_path.clone(),
            statistic: verdict.statistic_path.clone(),
            threshold: verdict.threshold_path.clone(),
        },
        verdict,
        timing_seconds: args.timing.then(|| started.elapsed().as_secs_f64()),
        config,
    };
    let plot_path = report.config.output.plot.clone();
    let report_path = report.config.output.report.clone();
    report.write(report_path.as_deref())?;
    if let Some(path) = &plot_path {
        report.write_plot(path)?;
    }
    Ok(if rejected { 2 } else { 0 })
}

fn load_series(config: &RunConfig) -> Result<(MatrixSeries, Option<u64>)> {
    if let Some((path, format)) = config.input_format()? {
        return Ok((ingest(&path, format)?, None));
    }
    let sim = config.sim.as_ref().expect("validated: one source present");
    let spec = DgpSpec {
        p1: sim.p1,
        p2: sim.p2,
        t_len: sim.t_len,
        k1: sim.k1,
        k2: sim.k2,
        phi: sim.phi,
        psi_ar: sim.psi_ar,
        scenario: parse_scenario(&sim.scenario, sim.t_star)?,
        seed: sim.seed,
    };
    Ok((generate(&spec)?, Some(sim.seed)))
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Grid cell "m,p1,p2"; repeat for more cells. Default 50,50,20.
    #[arg(long = "cell", value_name = "M,P1,P2")]
    pub cells: Vec<String>,
    /// Run the full 27-cell sweep (m, p1 in {50,80,100}; p2 in {20,50,80}).
    #[arg(long)]
    pub full_sweep: bool,
    #[arg(long, default_value = "null")]
    pub scenario: String,
    /// Break location; defaults to t_len/2 for break scenarios.
    #[arg(long)]
    pub t_star: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub t_len: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Detector families, e.g. ps:0,ps:0.25,de,renyi:0.65,renyi:0.75,wc.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "ps:0,ps:0.25,de,renyi:0.65,renyi:0.75,wc"
    )]
    pub families: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.10])]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub k1: usize,
    #[arg(long, default_value_t = 3)]
    pub k2: usize,
    #[arg(long, default_value_t = 0.1)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.1)]
    pub psi_ar: f64,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 8)]
    pub k_tilde: usize,
    /// Write the machine-readable table here as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let grid = if args.full_sweep {
        let mut grid = Vec::new();
        for &m in &[50, 80, 100] {
            for &p1 in &[50, 80, 100] {
                for &p2 in &[20, 50, 80] {
                    grid.push((m, p1, p2));
                }
            }
        }
        grid
    } else if args.cells.is_empty() {
        vec![(50, 50, 20)]
    } else {
        args.cells
            .iter()
            .map(|text| parse_cell(text))
            .collect::<Result<Vec<_>>>()?
    };
    let t_star = args.t_star.unwrap_or(args.t_len / 2);
    let scenario = parse_scenario(&args.scenario, Some(t_star))?;
    let families = args
        .families
        .iter()
        .map(|text| parse_family(text))
        .collect::<Result<Vec<_>>>()?;
    let params = TableParams {
        k1: args.k1,
        k2: args.k2,
        phi: args.phi,
        psi_ar: args.psi_ar,
        epsilon: args.epsilon,
        k_tilde: args.k_tilde,
        ..TableParams::default()
    };
    let table = run_table_with(
        &grid,
        &families,
        &args.alphas,
        args.reps,
        scenario,
        args.t_len,
        args.seed,
        params,
    )?;
    print!("{}", table.render());
    if let Some(path) = &args.json {
        let mut json = serde_json::to_string_pretty(&table)
            .expect("table serialization cannot fail");
        json.push('\n');
        std::fs::write(path, json).map_err(|e| CliError::io(path, e))?;
    }
    Ok(0)
}

fn parse_cell(text: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "cell {text:?} must be m,p1,p2"
        )));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| CliError::Config(format!("cell {text:?}: {s:?} is not an integer")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Weights η of the sup functional to calibrate.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.35, 0.45])]
    pub weights: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.10])]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 2_048)]
    pub steps: u32,
    #[arg(long, default_value_t = 1069)]
    pub seed: u64,
    /// Critical-value cache file to create or extend.
    #[arg(long)]
    pub cache: PathBuf,
}

pub fn cmd_calibrate(args: CalibrateArgs) -> Result<i32> {
    let mut table = if args.cache.is_file() {
        CriticalValueTable::load(&args.cache)?
    } else {
        CriticalValueTable::new()
    };
    for &weight in &args.weights {
        let missing: Vec<f64> = args
            .alphas
            .iter()
            .copied()
            .filter(|&alpha| {
                table
                    .lookup_exact(weight, alpha, args.paths, args.steps, args.seed)
                    .is_none()
            })
            .collect();
        if !missing.is_empty() {
            for entry in
                calibrate_sup_functional_batch(weight, &missing, args.paths, args.steps, args.seed)?
            {
                table.insert(entry)?;
            }
        }
        for &alpha in &args.alphas {
            let entry = table
                .lookup_exact(weight, alpha, args.paths, args.steps, args.seed)
                .expect("just calibrated");
            let source = if missing.contains(&alpha) {
                "computed"
            } else {
                "cached"
            };
            println!(
                "weight={weight} alpha={alpha} value={} ({source})",
                entry.value
            );
        }
    }
    table.save(&args.cache)?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct EstimateKArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// csv or binary; inferred from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    #[arg(long, default_value_t = 8)]
    pub k_max: usize,
    /// 0-based half-open observation window "start..end"; default all.
    #[arg(long)]
    pub window: Option<String>,
}

pub fn cmd_estimate_k(args: EstimateKArgs) -> Result<i32> {
    let format = match args.format {
        Some(f) => f,
        None => DataFormat::from_path(&args.input)?,
    };
    let series = ingest(&args.input, format)?;
    let window = match &args.window {
        None => 0..series.len(),
        Some(text) => parse_window(text)?,
    };
    let estimate = |series: &MatrixSeries| -> Result<usize> {
        let cov = flattened_cov_rows(series, window.clone())?;
        let spectrum = eigh_sym(cov.view(), false)?;
        Ok(eigenvalue_ratio_k(&spectrum, args.k_max)?)
    };
    let k2_hat = estimate(&series)?;
    let k1_hat = estimate(&series.transposed())?;
    println!("row factors    k1_hat = {k1_hat}");
    println!("column factors k2_hat = {k2_hat}");
    Ok(0)
}

fn parse_window(text: &str) -> Result<std::ops::Range<usize>> {
    let (a, b) = text.split_once("..").ok_or_else(|| {
        CliError::Config(format!("window {text:?} must be start..end"))
    })?;
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| CliError::Config(format!("window {text:?}: {s:?} is not an integer")))
    };
    Ok(parse(a)?..parse(b)?)
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub output: PathBuf,
    /// csv or binary; inferred from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    #[arg(long)]
    pub p1: usize,
    #[arg(long)]
    pub p2: usize,
    #[arg(long, default_value_t = 200)]
    pub t_len: usize,
    #[arg(long, default_value_t = 3)]
    pub k1: usize,
    #[arg(long, default_value_t = 3)]
    pub k2: usize,
    #[arg(long, default_value_t = 0.1)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.1)]
    pub psi_ar: f64,
    #[arg(long, default_value = "null")]
    pub scenario: String,
    #[arg(long)]
    pub t_star: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn cmd_export(args: ExportArgs) -> Result<i32> {
    let format = match args.format {
        Some(f) => f,
        None => DataFormat::from_path(&args.output)?,
    };
    let spec = DgpSpec {
        p1: args.p1,
        p2: args.p2,
        t_len: args.t_len,
        k1: args.k1,
        k2: args.k2,
        phi: args.phi,
        psi_ar: args.psi_ar,
        scenario: parse_scenario(&args.scenario, args.t_star.or(Some(args.t_len / 2)))?,
        seed: args.seed,
    };
    let series = generate(&spec)?;
    export(&series, &args.output, format)?;
    Ok(0)
}
