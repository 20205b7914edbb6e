//! Exponential, general-gauge and block p-means of diagonal partial sums.

use dyadic_lab::phi::PhiSpec;
use dyadic_lab::random::{multiscale_2d, normalize_sup, stream};
use dyadic_lab::strong::{strong_p_mean_block, strong_phi_trace, exp_mean_report, SweepConfig};

fn main() -> dyadic_lab::Result<()> {
    let f = normalize_sup(&multiscale_2d(&mut stream(3, 0), 8, 0.5)?)?;
    let cfg = SweepConfig::default();
    let checkpoints = [8, 16, 32, 64, 128, 256];

    let report = exp_mean_report(&f, 1.0, &checkpoints, &cfg)?;
    println!("exp gauge, A=1: c fitted at n=8 is {:.4}", report.fitted_constant);
    for i in 0..report.n.len() {
        println!("  n={:>3}  sup={:.5}  rhs={:.5}  ratio={:.4}", report.n[i], report.sup[i], report.rhs[i], report.ratio[i]);
    }

    let phi = PhiSpec::parse("sqrt(u)*log1p(u)")?;
    let trace = strong_phi_trace(&f, &phi, &checkpoints, &cfg)?;
    println!("gauge {phi}:");
    for s in &trace.samples {
        println!("  n={:>3}  sup={:.5}", s.n, s.sup);
    }

    for row in strong_p_mean_block(&f, &[1.0, 2.0, 4.0, 8.0], 4, &cfg)? {
        println!("block A={} p={}: sup={:.5}, sup/(p+1)^2={:.5}", row.block, row.p, row.sup, row.ratio);
    }
    Ok(())
}
