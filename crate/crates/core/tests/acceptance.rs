//! One test per acceptance criterion. Each prints a `PASS`/`FAIL` line and
//! fails when the criterion does, or when it exceeds its time limit.

use std::process::Command;
use std::time::{Duration, Instant};

use dyadic_lab::acceptance::{run_criterion, CriterionOutcome};

const SEED: u64 = 7;

fn line(o: &CriterionOutcome) -> String {
    format!("{} {:>2} {} {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.name, o.detail)
}

fn check(id: u32, limit: Option<Duration>) {
    let start = Instant::now();
    let outcome = run_criterion(id, SEED).unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    let elapsed = start.elapsed();
    println!("{} ({:.2}s)", line(&outcome), elapsed.as_secs_f64());
    if let Some(limit) = limit {
        assert!(elapsed < limit, "criterion {id} took {elapsed:?}, limit {limit:?}");
    }
    assert!(outcome.passed, "{}", line(&outcome));
}

#[test]
fn criterion_01_paley_kernel_identity() {
    check(1, Some(Duration::from_secs(10)));
}

#[test]
fn criterion_02_kaczmarz_kernel_identity() {
    check(2, Some(Duration::from_secs(10)));
}

#[test]
fn criterion_03_rearrangement() {
    check(3, Some(Duration::from_secs(30)));
}

#[test]
fn criterion_04_transform_roundtrip_and_parseval() {
    check(4, None);
}

#[test]
fn criterion_05_kernel_product_bounds() {
    check(5, Some(Duration::from_secs(300)));
}

#[test]
fn criterion_06_block_p_mean_shape() {
    check(6, None);
}

#[test]
fn criterion_07_exp_mean_shape() {
    check(7, None);
}

#[test]
fn criterion_08_approximation_inequalities() {
    check(8, None);
}

#[test]
fn criterion_09_counterexample_structure() {
    check(9, Some(Duration::from_secs(60)));
}

#[test]
fn criterion_10_divergence_trace() {
    check(10, None);
}

#[test]
fn criterion_11_cli_acceptance_runs_are_byte_identical() {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_dyadic-lab"))
            .args(["run", "acceptance", "--seed", "7"])
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    assert!(!a.stdout.is_empty());
    assert!(a.status.code() == Some(0) || a.status.code() == Some(4), "{:?}", a.status);
    let identical = a.stdout == b.stdout && a.status.code() == b.status.code();
    println!(
        "{} 11 determinism run acceptance --seed 7 twice: {} bytes, identical={identical}",
        if identical { "PASS" } else { "FAIL" },
        a.stdout.len()
    );
    assert!(identical);
}
