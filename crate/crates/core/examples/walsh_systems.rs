//! Paley and Kaczmarz enumerations of the Walsh characters at resolution 3.

use dyadic_lab::walsh::{kaczmarz_to_paley_index, walsh_signs};
use dyadic_lab::WalshSystem;

fn row(signs: &[i8]) -> String {
    signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

fn main() -> dyadic_lab::Result<()> {
    let resolution = 3;
    println!(" n  paley     kaczmarz  paley index of kappa_n");
    for n in 0..8u64 {
        let w = walsh_signs(WalshSystem::Paley, n, resolution)?;
        let k = walsh_signs(WalshSystem::Kaczmarz, n, resolution)?;
        println!("{n:>2}  {}  {}  {}", row(&w), row(&k), kaczmarz_to_paley_index(n));
    }
    Ok(())
}
