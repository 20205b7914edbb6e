//! Best uniform approximation by step functions and the comparison inequalities.

use dyadic_lab::approx::{check_b2, check_b4, ApproxProfile};
use dyadic_lab::random::{multiscale_2d, normalize_sup, stream};

fn main() -> dyadic_lab::Result<()> {
    let f = normalize_sup(&multiscale_2d(&mut stream(5, 0), 6, 0.6)?)?;
    for level in 0..=6 {
        let (dev, twice_e) = check_b4(&f, level)?;
        let (e, split) = check_b2(&f, level)?;
        println!("L={level}: |f - avg| {dev:.4} <= {twice_e:.4}   E {e:.4} <= {split:.4}");
    }
    let profile = ApproxProfile::new(&f)?;
    profile.write_csv(std::io::stdout().lock(), 16)?;
    Ok(())
}
