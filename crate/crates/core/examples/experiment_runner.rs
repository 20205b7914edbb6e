//! Driving the batch runner from code: a flat config, a JSON config, and a
//! budget refusal.

use dyadic_lab::harness::{execute, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig::from_text("experiment=glukhov\np=2\nnmax=4\nsystem=kaczmarz\n").expect("valid");
    let artifact = execute(&cfg).expect("runs");
    print!("{}", String::from_utf8_lossy(&artifact.bytes));

    let cfg = ExperimentConfig::from_text(
        r#"{"experiment": "approximation", "params": {"resolution": 4, "n": 4}, "format": "json", "seed": 2}"#,
    )
    .expect("valid");
    let artifact = execute(&cfg).expect("runs");
    println!("{} bytes of JSON, digest {}", artifact.bytes.len(), cfg.digest());

    let cfg = ExperimentConfig::from_pairs(["experiment=glukhov", "p=3", "nmax=9", "budget.cells=4096"]).expect("valid");
    let err = execute(&cfg).unwrap_err();
    println!("exit {}: {}", err.exit_code(), err.to_json());
}
