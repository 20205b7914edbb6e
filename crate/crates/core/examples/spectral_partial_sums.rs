//! Walsh coefficients, rectangular and diagonal partial sums of a 2D field.

use dyadic_lab::random::{normalize_sup, multiscale_2d, stream};
use dyadic_lab::spectral::{analyze_2d, diagonal_sums, partial_sum_2d, synthesize_2d};
use dyadic_lab::WalshSystem;

fn main() -> dyadic_lab::Result<()> {
    let f = normalize_sup(&multiscale_2d(&mut stream(1, 0), 6, 0.5)?)?;
    for system in WalshSystem::ALL {
        let s = analyze_2d(&f, system)?;
        let back = synthesize_2d(&s)?;
        println!(
            "{system}: energy {:.6} vs {:.6}, round trip error {:.1e}",
            s.sum_of_squares(),
            f.norm(2.0)?.powi(2),
            back.max_abs_diff(&f)?
        );
        let mut sums = diagonal_sums(&f, 64, system)?;
        while let Some((l, sll)) = sums.advance() {
            if l.is_power_of_two() || l == 48 {
                let rect = partial_sum_2d(&f, l as u64, l as u64, system)?;
                println!(
                    "  l={l:>2}  sup|S_ll - f| = {:.5}  (rectangular sum agrees to {:.1e})",
                    sll.max_abs_diff(&f)?,
                    sll.max_abs_diff(&rect)?
                );
            }
        }
    }
    Ok(())
}
