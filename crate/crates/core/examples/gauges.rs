//! Parsing gauges and reading their growth against sqrt(u).

use dyadic_lab::phi::PhiSpec;

fn main() -> dyadic_lab::Result<()> {
    for src in ["sqrt", "3*sqrt(u)", "sqrt(u)*log1p(u)", "log1p(u)", "u^0.75", "expm1(sqrt(u))"] {
        let phi = PhiSpec::parse(src)?;
        let profile = phi.sqrt_ratio_profile();
        println!(
            "{phi:<20} phi(1)={:.4}  sup phi/sqrt={:.4e}  tail={:.4e}  unbounded-looking={}",
            phi.eval(1.0),
            profile.sup(),
            profile.tail(),
            profile.looks_unbounded(1.5)
        );
    }
    match PhiSpec::parse("1+u") {
        Ok(p) => println!("accepted {p}"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
