//! Dirichlet and Fejér kernels of both systems, and the averaged kernel
//! products over `G^p` that control strong means.
//!
//! Kernel values are integers and are kept as `i64` throughout.

use std::ops::Range;

use rayon::prelude::*;

use crate::dyadic::{reverse_bits, tau_index, GridFunction1D};
use crate::error::{Error, Result};
use crate::transform::fwht;
use crate::walsh::{paley_sign, DyadicIndex, WalshSystem};

/// Default cap on `p * n` (base-2 log of the number of cells swept) for the
/// kernel-product integrals.
pub const DEFAULT_CELL_BUDGET_LOG2: u32 = 21;

/// Integer values of a kernel on every resolution-`N` cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelValues {
    resolution: u32,
    values: Vec<i64>,
}

impl KernelValues {
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<i64> {
        self.values
    }

    pub fn to_grid(&self) -> GridFunction1D {
        GridFunction1D::new(self.resolution, self.values.iter().map(|&v| v as f64).collect())
            .expect("kernel values are finite")
    }
}

fn check_order(n: u64, resolution: u32) -> Result<()> {
    if resolution > crate::dyadic::MAX_GRID_RESOLUTION_1D {
        return Err(Error::Budget {
            what: "grid resolution",
            required: resolution as u128,
            limit: crate::dyadic::MAX_GRID_RESOLUTION_1D as u128,
        });
    }
    if n > 1u64 << resolution {
        return Err(Error::ResolutionExceeded {
            what: "kernel order",
            value: n,
            limit: 1u64 << resolution,
        });
    }
    Ok(())
}

/// `D_{2^n}`: equal to `2^n` on `I_n(0)` and zero elsewhere, in both systems.
pub fn dirichlet_dyadic(n: u32, resolution: u32) -> Result<KernelValues> {
    if n > resolution {
        return Err(Error::ResolutionExceeded {
            what: "dyadic kernel level",
            value: n as u64,
            limit: resolution as u64,
        });
    }
    check_order(0, resolution)?;
    let support = 1usize << (resolution - n);
    let values = (0..1usize << resolution)
        .map(|i| if i < support { 1i64 << n } else { 0 })
        .collect();
    Ok(KernelValues { resolution, values })
}

/// `D^w_n` at one cell, from the dyadic decomposition
/// `D_n = w_n Σ_j n_j w_{2^j} D_{2^j}`.
///
/// `w_n w_{2^j}` is folded into `w_{n - 2^j}`, which keeps every factor
/// cell-constant also for `n = 2^N`. `D_{2^j}` vanishes unless the first `j`
/// coordinates are zero, so only digits up to the leading-zero count survive.
#[inline]
fn paley_dirichlet_at(n: u64, coords: usize, resolution: u32) -> i64 {
    let zeros = if coords == 0 {
        resolution
    } else {
        coords.trailing_zeros()
    };
    let mut digits = if zeros >= 63 { n } else { n & ((1u64 << (zeros + 1)) - 1) };
    let mut sum = 0i64;
    while digits != 0 {
        let j = digits.trailing_zeros();
        digits &= digits - 1;
        sum += paley_sign(n ^ (1u64 << j), coords) as i64 * (1i64 << j);
    }
    sum
}

/// `D^w_n` on every cell.
pub fn dirichlet_paley(n: u64, resolution: u32) -> Result<KernelValues> {
    check_order(n, resolution)?;
    let values = (0..1usize << resolution)
        .map(|i| paley_dirichlet_at(n, reverse_bits(i, resolution), resolution))
        .collect();
    Ok(KernelValues { resolution, values })
}

/// `D^κ_n` on every cell, via `D^κ_{2^A+j} = D_{2^A} + r_A · (D^w_j ∘ τ_A)`.
pub fn dirichlet_kaczmarz(n: u64, resolution: u32) -> Result<KernelValues> {
    check_order(n, resolution)?;
    if n == 0 {
        return Ok(KernelValues {
            resolution,
            values: vec![0; 1usize << resolution],
        });
    }
    let a = DyadicIndex(n).order()?;
    let j = n - (1u64 << a);
    let block = dirichlet_dyadic(a, resolution)?;
    if j == 0 {
        return Ok(block);
    }
    let paley = dirichlet_paley(j, resolution)?;
    let shift = resolution - 1 - a;
    let values = (0..1usize << resolution)
        .map(|i| {
            let r_a = 1 - 2 * ((i >> shift) & 1) as i64;
            block.values[i] + r_a * paley.values[tau_index(a, i, resolution)]
        })
        .collect();
    Ok(KernelValues { resolution, values })
}

pub fn dirichlet(system: WalshSystem, n: u64, resolution: u32) -> Result<KernelValues> {
    match system {
        WalshSystem::Paley => dirichlet_paley(n, resolution),
        WalshSystem::Kaczmarz => dirichlet_kaczmarz(n, resolution),
    }
}

/// `K_n = (1/n) Σ_{k<n} D_k`.
pub fn fejer(n: u64, system: WalshSystem, resolution: u32) -> Result<GridFunction1D> {
    if n == 0 {
        return Err(Error::param("n", "the Fejér kernel needs n >= 1"));
    }
    let table = KernelTable::new(system, resolution, 0..n)?;
    let cells = 1usize << resolution;
    let mut acc = vec![0i64; cells];
    for l in 0..n {
        for (a, v) in acc.iter_mut().zip(table.row(l)) {
            *a += v;
        }
    }
    GridFunction1D::new(resolution, acc.into_iter().map(|v| v as f64 / n as f64).collect())
}

/// Dirichlet kernels `D_l` for a contiguous range of orders, one row per order.
#[derive(Clone, Debug)]
pub struct KernelTable {
    system: WalshSystem,
    resolution: u32,
    orders: Range<u64>,
    values: Vec<i64>,
}

impl KernelTable {
    /// Builds `D_lo` directly and the later rows by `D_{l+1} = D_l + α_l`.
    pub fn new(system: WalshSystem, resolution: u32, orders: Range<u64>) -> Result<Self> {
        if orders.end > 0 {
            check_order(orders.end - 1, resolution)?;
        }
        let cells = 1usize << resolution;
        let rows = orders.end.saturating_sub(orders.start) as usize;
        let mut values = Vec::with_capacity(rows * cells);
        if rows > 0 {
            let mut current = dirichlet(system, orders.start, resolution)?.into_values();
            for l in orders.clone() {
                values.extend_from_slice(&current);
                if l + 1 < orders.end {
                    let m = system.paley_index(l);
                    for (i, v) in current.iter_mut().enumerate() {
                        *v += paley_sign(m, reverse_bits(i, resolution)) as i64;
                    }
                }
            }
        }
        Ok(KernelTable {
            system,
            resolution,
            orders,
            values,
        })
    }

    pub fn system(&self) -> WalshSystem {
        self.system
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn orders(&self) -> Range<u64> {
        self.orders.clone()
    }

    /// `D_l` on all cells. Panics if `l` is outside the table.
    pub fn row(&self, l: u64) -> &[i64] {
        assert!(self.orders.contains(&l), "order {l} not in table {:?}", self.orders);
        let cells = 1usize << self.resolution;
        let r = (l - self.orders.start) as usize;
        &self.values[r * cells..(r + 1) * cells]
    }
}

/// Exact value of `(1/2^n) ∫_{G^p} |Σ_{l=2^{n-1}}^{2^n-1} Π_k D_l(x_k)| dμ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockKernelIntegral {
    pub p: u32,
    pub n: u32,
    pub system: WalshSystem,
    /// Integer numerator.
    pub numerator: u128,
    /// The value is `numerator / 2^log2_denominator`, with denominator exponent `p n + n`.
    pub log2_denominator: u32,
}

impl BlockKernelIntegral {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / 2f64.powi(self.log2_denominator as i32)
    }

    /// Growth shape of the bound: `p!` for Paley and `p! 2^p` for Kaczmarz.
    pub fn bound_shape(&self) -> f64 {
        bound_shape(self.p, self.system)
    }
}

/// `p!` (Paley) or `p! 2^p` (Kaczmarz).
pub fn bound_shape(p: u32, system: WalshSystem) -> f64 {
    let fact: f64 = (1..=p).map(f64::from).product();
    match system {
        WalshSystem::Paley => fact,
        WalshSystem::Kaczmarz => fact * 2f64.powi(p as i32),
    }
}

fn check_budget(p: u32, resolution: u32, budget_log2: u32) -> Result<()> {
    let required = p as u128 * resolution as u128;
    if required > budget_log2 as u128 {
        return Err(Error::Budget {
            what: "kernel-product cell sweep (log2 cells = p * n)",
            required,
            limit: budget_log2 as u128,
        });
    }
    Ok(())
}

/// Values of `Σ_l ω_l Π_{k=1}^p D_l(x_k)` on every tuple of resolution-`R` cells,
/// in bit-reversed cell order along each axis.
///
/// `suffix[m]` must hold `Σ_{l > m} ω_l`. Expanding `D_l = Σ_{m<l} α_m` turns
/// the sum into a `p`-dimensional Walsh synthesis whose coefficient at
/// `(m_1, ..., m_p)` is `suffix[max_k m_k]`, so one Hadamard transform over
/// `2^{pR}` entries replaces the per-cell sum over orders.
fn kernel_product_field<T>(suffix: &[T], p: u32, resolution: u32, system: WalshSystem) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + Send + Sync,
{
    let total_bits = p * resolution;
    let len = 1usize << total_bits;
    let mask = (1usize << resolution) - 1;
    let mut field: Vec<T> = (0..len)
        .into_par_iter()
        .map(|flat| {
            let mut max = 0usize;
            for k in 0..p {
                let m = (flat >> (k * resolution)) & mask;
                max = max.max(system.paley_index(m as u64) as usize);
            }
            suffix[max]
        })
        .collect();
    fwht(&mut field);
    field
}

/// The block kernel integral, computed exactly from the tensor synthesis.
pub fn glukhov_integral(p: u32, n: u32, system: WalshSystem) -> Result<BlockKernelIntegral> {
    glukhov_integral_with_budget(p, n, system, DEFAULT_CELL_BUDGET_LOG2)
}

pub fn glukhov_integral_with_budget(
    p: u32,
    n: u32,
    system: WalshSystem,
    budget_log2: u32,
) -> Result<BlockKernelIntegral> {
    if p == 0 {
        return Err(Error::param("p", "dimension must be >= 1"));
    }
    if n == 0 {
        return Err(Error::param("n", "block index must be >= 1"));
    }
    check_budget(p, n, budget_log2)?;
    let lo = 1i64 << (n - 1);
    let hi = 1i64 << n;
    // number of block orders l with l > m
    let suffix: Vec<i64> = (0..hi).map(|m| (hi - (m + 1).max(lo)).max(0)).collect();
    let field = kernel_product_field(&suffix, p, n, system);
    let numerator: u128 = field
        .par_chunks(1 << 12)
        .map(|c| c.iter().map(|v| v.unsigned_abs() as u128).sum::<u128>())
        .sum();
    Ok(BlockKernelIntegral {
        p,
        n,
        system,
        numerator,
        log2_denominator: p * n + n,
    })
}

/// The same integral by sweeping every tuple of cells against a precomputed
/// kernel table. Cost `2^{pn} · 2^{n-1} · p`; meant for small `p n`.
pub fn glukhov_integral_cell_sweep(
    p: u32,
    n: u32,
    system: WalshSystem,
    budget_log2: u32,
) -> Result<BlockKernelIntegral> {
    if p == 0 || n == 0 {
        return Err(Error::param("p, n", "dimension and block index must be >= 1"));
    }
    check_budget(p, n, budget_log2)?;
    let lo = 1u64 << (n - 1);
    let table = KernelTable::new(system, n, lo..1u64 << n)?;
    let cells = 1usize << n;
    let tuples = 1usize << (p * n);
    let numerator: u128 = (0..tuples)
        .into_par_iter()
        .map(|flat| {
            let mut s = 0i64;
            for l in table.orders() {
                let row = table.row(l);
                let mut prod = 1i64;
                for k in 0..p {
                    prod *= row[(flat >> (k * n)) & (cells - 1)];
                }
                s += prod;
            }
            s.unsigned_abs() as u128
        })
        .sum();
    Ok(BlockKernelIntegral {
        p,
        n,
        system,
        numerator,
        log2_denominator: p * n + n,
    })
}

/// Left side and scale of the weighted kernel-product inequality
/// `(1/n) ∫_{G^p} |Σ_{l=1}^n α_l Π_k D^w_l(x_k)| ≤ c n^{-1/q} (Σ |α_l|^q)^{1/q}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedKernelIntegral {
    pub lhs: f64,
    pub rhs_shape: f64,
}

impl WeightedKernelIntegral {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs_shape
        }
    }
}

/// `alphas[i]` is the weight of order `l = i + 1`.
pub fn glukhov_weighted(alphas: &[f64], p: u32, q: f64) -> Result<WeightedKernelIntegral> {
    glukhov_weighted_with(alphas, p, q, WalshSystem::Paley, DEFAULT_CELL_BUDGET_LOG2)
}

pub fn glukhov_weighted_with(
    alphas: &[f64],
    p: u32,
    q: f64,
    system: WalshSystem,
    budget_log2: u32,
) -> Result<WeightedKernelIntegral> {
    if !(q > 1.0 && q <= 2.0) {
        return Err(Error::param("q", format!("must lie in (1, 2], got {q}")));
    }
    if p == 0 {
        return Err(Error::param("p", "dimension must be >= 1"));
    }
    if alphas.is_empty() {
        return Err(Error::param("alphas", "need at least one weight"));
    }
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::param("alphas", "weights must be finite"));
    }
    let n = alphas.len();
    // D_l with l <= 2^R is constant on resolution-R cells
    let resolution = n.next_power_of_two().trailing_zeros();
    check_budget(p, resolution, budget_log2)?;
    let size = 1usize << resolution;
    let mut suffix = vec![0.0f64; size];
    let mut acc = 0.0;
    for m in (0..size).rev() {
        // orders l = m + 1 ..= n
        if m < n {
            acc += alphas[m];
        }
        suffix[m] = acc;
    }
    let field = kernel_product_field(&suffix, p, resolution, system);
    let total: f64 = field.iter().map(|v| v.abs()).sum();
    let lhs = total / (n as f64 * (1u64 << (p * resolution)) as f64);
    let lq: f64 = alphas.iter().map(|a| a.abs().powf(q)).sum::<f64>().powf(1.0 / q);
    let rhs_shape = lq / (n as f64).powf(1.0 / q);
    Ok(WeightedKernelIntegral { lhs, rhs_shape })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn dyadic_kernel_examples() {
        let d = dirichlet_dyadic(1, 4).unwrap();
        assert_eq!(d.values()[0], 2);
        let d0 = dirichlet_dyadic(0, 4).unwrap();
        assert!(d0.values().iter().all(|&v| v == 1));
        // x_0 = 1 lies outside I_1(0)
        assert_eq!(d.values()[8], 0);
        for n in 0..=6 {
            let d = dirichlet_dyadic(n, 6).unwrap();
            assert_eq!(d.values()[0], 1 << n);
            assert_eq!(d.to_grid().integrate(), 1.0);
        }
        assert!(dirichlet_dyadic(7, 6).is_err());
    }

    #[test]
    fn paley_kernel_examples() {
        assert!(dirichlet_paley(1, 5).unwrap().values().iter().all(|&v| v == 1));
        for n in 0..=32 {
            assert_eq!(dirichlet_paley(n, 5).unwrap().values()[0], n as i64);
        }
        assert_eq!(dirichlet_paley(5, 8).unwrap().into_values(), reference::dirichlet_direct(WalshSystem::Paley, 5, 8));
        assert!(dirichlet_paley(33, 5).is_err());
    }

    #[test]
    fn kaczmarz_kernel_examples() {
        for a in 0..=6 {
            assert_eq!(
                dirichlet_kaczmarz(1 << a, 6).unwrap(),
                dirichlet_paley(1 << a, 6).unwrap()
            );
        }
        for n in 0..=64 {
            assert_eq!(dirichlet_kaczmarz(n, 6).unwrap().values()[0], n as i64);
        }
        assert_eq!(
            dirichlet_kaczmarz(7, 8).unwrap().into_values(),
            reference::dirichlet_direct(WalshSystem::Kaczmarz, 7, 8)
        );
    }

    #[test]
    fn identities_match_direct_sums_resolution_7() {
        for system in WalshSystem::ALL {
            for n in 0..=128 {
                assert_eq!(
                    dirichlet(system, n, 7).unwrap().into_values(),
                    reference::dirichlet_direct(system, n, 7),
                    "{system} n={n}"
                );
            }
        }
    }

    #[test]
    fn kernels_are_bounded_by_order() {
        for system in WalshSystem::ALL {
            for n in 0..=64u64 {
                let d = dirichlet(system, n, 6).unwrap();
                assert!(d.values().iter().all(|v| v.unsigned_abs() <= n));
            }
        }
    }

    #[test]
    fn table_rows_match_direct() {
        let t = KernelTable::new(WalshSystem::Kaczmarz, 6, 5..40).unwrap();
        for l in [5, 17, 39] {
            assert_eq!(t.row(l), &reference::dirichlet_direct(WalshSystem::Kaczmarz, l, 6)[..]);
        }
    }

    #[test]
    fn fejer_examples() {
        for system in WalshSystem::ALL {
            assert!(fejer(1, system, 5).unwrap().values().iter().all(|&v| v == 0.0));
            for n in 1..=32u64 {
                let k = fejer(n, system, 5).unwrap();
                assert_eq!(k.values()[0], (n as f64 - 1.0) / 2.0);
                // each D_k with k >= 1 integrates to 1
                let expected = (n - 1) as f64 / n as f64;
                assert!((k.integrate() - expected).abs() < 1e-14);
            }
            assert!(fejer(0, system, 5).is_err());
        }
    }

    #[test]
    fn glukhov_small_values() {
        let g = glukhov_integral(1, 1, WalshSystem::Paley).unwrap();
        assert_eq!(g.value(), 0.5);
        // (1/4) ∫ |D_2 + D_3| over four cells: D_2 = (2,2,0,0), D_3 = (3,1,1,-1)
        let g = glukhov_integral(1, 2, WalshSystem::Paley).unwrap();
        assert_eq!((g.numerator, g.log2_denominator), (5 + 3 + 1 + 1, 4));
    }

    #[test]
    fn glukhov_routes_agree() {
        for system in WalshSystem::ALL {
            for (p, nmax) in [(1u32, 10u32), (2, 6), (3, 4), (4, 3)] {
                for n in 1..=nmax {
                    let fast = glukhov_integral(p, n, system).unwrap();
                    let sweep = glukhov_integral_cell_sweep(p, n, system, 14).unwrap();
                    assert_eq!(fast, sweep, "{system} p={p} n={n}");
                }
            }
        }
    }

    #[test]
    fn glukhov_budget() {
        assert!(matches!(
            glukhov_integral(3, 8, WalshSystem::Paley),
            Err(Error::Budget { required: 24, .. })
        ));
        assert!(glukhov_integral(0, 3, WalshSystem::Paley).is_err());
    }

    #[test]
    fn weighted_examples() {
        let w = glukhov_weighted(&[0.0; 10], 2, 2.0).unwrap();
        assert_eq!(w.lhs, 0.0);
        assert!(glukhov_weighted(&[1.0], 1, 1.0).is_err());
        assert!(glukhov_weighted(&[1.0], 1, 2.5).is_err());

        // indicator of the upper dyadic block reproduces the block integral
        for system in WalshSystem::ALL {
            for (p, n) in [(1u32, 5u32), (2, 4), (3, 3)] {
                let len = (1usize << n) - 1;
                let alphas: Vec<f64> = (1..=len)
                    .map(|l| if l >= 1 << (n - 1) { 1.0 } else { 0.0 })
                    .collect();
                let w = glukhov_weighted_with(&alphas, p, 2.0, system, 21).unwrap();
                let g = glukhov_integral(p, n, system).unwrap();
                let lhs_total = w.lhs * len as f64;
                assert!((lhs_total - g.value() * (1u64 << n) as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weighted_matches_brute_force() {
        let alphas = [0.5, -1.0, 2.0, 0.25, -0.75, 1.5];
        let w = glukhov_weighted(&alphas, 2, 1.5).unwrap();
        let brute = reference::weighted_kernel_integral(&alphas, 2, WalshSystem::Paley);
        assert!((w.lhs - brute).abs() < 1e-12, "{} vs {brute}", w.lhs);
    }
}
