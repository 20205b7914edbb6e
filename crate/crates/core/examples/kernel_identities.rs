//! Dirichlet kernels from the closed-form identities, compared with direct sums.

use dyadic_lab::kernels::{dirichlet, fejer};
use dyadic_lab::reference::dirichlet_direct;
use dyadic_lab::WalshSystem;

fn main() -> dyadic_lab::Result<()> {
    let resolution = 4;
    for system in WalshSystem::ALL {
        for n in [1u64, 5, 8, 11, 16] {
            let fast = dirichlet(system, n, resolution)?;
            let direct = dirichlet_direct(system, n, resolution);
            assert_eq!(fast.values(), direct.as_slice());
            println!("{system:<8} D_{n:<2} = {:?}", fast.values());
        }
        let k = fejer(16, system, resolution)?;
        println!("{system:<8} K_16 at 0 = {}, integral = {}", k.values()[0], k.integrate());
    }
    Ok(())
}
