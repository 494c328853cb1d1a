//! Desk-scale probe of the simulation harness against the reference tables.
//! Not part of the test suite; used to sanity-check conventions before the
//! expensive acceptance run.

use std::time::Instant;

use eigenwatch::simulate::{run_table, Scenario};
use eigenwatch::DetectorFamily;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let reps: usize = args.first().map(|s| s.parse().unwrap()).unwrap_or(200);
    let which = args.get(1).map(String::as_str).unwrap_or("all");

    let families = [
        DetectorFamily::PartialSum { eta: 0.0 },
        DetectorFamily::WorstCase,
    ];
    let alphas = [0.05, 0.10];
    let small = [(50usize, 50usize, 20usize)];
    let t_len = 200;
    let t_star = 100;

    if which == "all" || which == "ls" {
        let started = Instant::now();
        let table = run_table(
            &small,
            &families,
            &alphas,
            reps,
            Scenario::LoadingSwitch(t_star),
            t_len,
            1,
        )
        .unwrap();
        println!("took {:.1}s\n{}", started.elapsed().as_secs_f64(), table.render());
    }
    if which == "all" || which == "fe" {
        let table = run_table(
            &small,
            &families,
            &alphas,
            reps,
            Scenario::FactorEmerge(t_star),
            t_len,
            1,
        )
        .unwrap();
        println!("{}", table.render());
    }
    if which == "all" || which == "bs" {
        let table = run_table(
            &small,
            &families,
            &alphas,
            reps,
            Scenario::BothSwitch(t_star),
            t_len,
            1,
        )
        .unwrap();
        println!("{}", table.render());
    }
    if which == "all" || which == "cs" {
        let started = Instant::now();
        let table = run_table(
            &small,
            &families,
            &alphas,
            reps,
            Scenario::CSwitch(t_star),
            t_len,
            1,
        )
        .unwrap();
        println!("took {:.1}s\n{}", started.elapsed().as_secs_f64(), table.render());
    }
    if which == "all" || which == "null" {
        let started = Instant::now();
        let table = run_table(
            &small,
            &families,
            &alphas,
            reps,
            Scenario::Null,
            t_len,
            1,
        )
        .unwrap();
        println!("took {:.1}s\n{}", started.elapsed().as_secs_f64(), table.render());
    }
    if which == "large-null" {
        let started = Instant::now();
        let table = run_table(
            &[(100, 100, 80)],
            &families,
            &alphas,
            reps,
            Scenario::Null,
            t_len,
            1,
        )
        .unwrap();
        println!("took {:.1}s\n{}", started.elapsed().as_secs_f64(), table.render());
    }
    if which == "large-ls" {
        let started = Instant::now();
        let table = run_table(
            &[(100, 100, 80)],
            &families,
            &alphas,
            reps,
            Scenario::LoadingSwitch(t_star),
            t_len,
            1,
        )
        .unwrap();
        println!("took {:.1}s\n{}", started.elapsed().as_secs_f64(), table.render());
    }
}
