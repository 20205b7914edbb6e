//! Exact averaged kernel-product integrals and their factorial growth shapes.

use dyadic_lab::kernels::glukhov_integral;
use dyadic_lab::WalshSystem;

fn main() -> dyadic_lab::Result<()> {
    println!("system   p  n  numerator/2^d            value     value/shape");
    for system in WalshSystem::ALL {
        for p in 1..=3u32 {
            for n in 1..=(18 / p).min(7) {
                let g = glukhov_integral(p, n, system)?;
                println!(
                    "{system:<8} {p}  {n}  {:>12}/2^{:<3}  {:>12.6}  {:.6}",
                    g.numerator,
                    g.log2_denominator,
                    g.value(),
                    g.value() / g.bound_shape()
                );
            }
        }
    }
    Ok(())
}
