//! The divergence construction at desk scale: decomposition terms per k, the
//! calibrated constant, and the tensor trace at the origin.

use dyadic_lab::counterexample::{
    build_f, calibrate_c_prime, evaluate_construction, tensor_divergence, CounterexampleSpec, DeskSchedule,
    MarkerPlacement,
};
use dyadic_lab::phi::PhiSpec;

fn main() -> dyadic_lab::Result<()> {
    let psi = PhiSpec::parse("u*log1p(u)")?;
    let cal = calibrate_c_prime(&psi, &[2, 5], MarkerPlacement::Tight)?;
    println!("calibration: c0={:.4}  J2/J1={:.4}  c'={:.4}", cal.c0, cal.j2_slack, cal.suggested_c_prime);

    for placement in [MarkerPlacement::Tight, MarkerPlacement::Literal] {
        let spec = CounterexampleSpec::desk_scale(psi.clone(), cal.suggested_c_prime, DeskSchedule::A(vec![2, 5]))
            .with_placement(placement);
        let built = build_f(&spec)?;
        let report = evaluate_construction(&spec, &built)?;
        println!("{placement:?}, resolution {}", report.resolution);
        for r in &report.records {
            println!(
                "  k={} A={} J1={:.5} J2={:.5} J3={} S={:.5} slack={} c0={:.4} log-trace={:.3}",
                r.k, r.a, r.j1, r.j2, r.j3, r.s, r.kernel_bound_min_slack, r.measured_c0, r.log_trace_lower
            );
        }
        if placement == MarkerPlacement::Tight {
            let phi = PhiSpec::parse("sqrt(u)*log1p(sqrt(u))")?;
            for t in tensor_divergence(&spec, &built, &phi)? {
                println!("  tensor k={} N={} log mean {:.5} comparator {:.3}", t.k, t.n, t.log_mean, t.log_comparator);
            }
        }
    }
    Ok(())
}
