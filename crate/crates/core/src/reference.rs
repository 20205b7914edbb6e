//! Brute-force reference evaluations.
//!
//! Everything here works straight from the definitions (Rademacher products,
//! direct sums, inner products over all cells) and shares no code with the
//! fast paths it is used to check. Costs are quadratic or worse.

use crate::dyadic::{BitPoint, GridFunction1D, GridFunction2D};
use crate::walsh::WalshSystem;

fn order(n: u64) -> u32 {
    63 - n.leading_zeros()
}

fn r(k: u32, x: &BitPoint) -> i64 {
    if x.bit(k) == 1 {
        -1
    } else {
        1
    }
}

/// `w_n(x) = Π_k r_k(x)^{n_k}`.
pub fn walsh_paley_product(n: u64, x: &BitPoint) -> i64 {
    (0..x.resolution())
        .filter(|&k| (n >> k) & 1 == 1)
        .map(|k| r(k, x))
        .product()
}

/// `κ_n(x) = r_{|n|}(x) Π_{k<|n|} r_{|n|-1-k}(x)^{n_k}`, `κ_0 = 1`.
pub fn walsh_kaczmarz_product(n: u64, x: &BitPoint) -> i64 {
    if n == 0 {
        return 1;
    }
    let a = order(n);
    let tail: i64 = (0..a)
        .filter(|&k| (n >> k) & 1 == 1)
        .map(|k| r(a - 1 - k, x))
        .product();
    r(a, x) * tail
}

/// `κ_n(x) = r_{|n|}(x) w_{n - 2^{|n|}}(τ_{|n|} x)` with `τ` applied bitwise.
pub fn walsh_kaczmarz_tau(n: u64, x: &BitPoint) -> i64 {
    if n == 0 {
        return 1;
    }
    let a = order(n);
    let mut bits = x.bits();
    bits[..a as usize].reverse();
    let t = BitPoint::from_bits(&bits).expect("same resolution");
    r(a, x) * walsh_paley_product(n - (1u64 << a), &t)
}

pub fn walsh_product(system: WalshSystem, n: u64, x: &BitPoint) -> i64 {
    match system {
        WalshSystem::Paley => walsh_paley_product(n, x),
        WalshSystem::Kaczmarz => walsh_kaczmarz_product(n, x),
    }
}

fn points(resolution: u32) -> Vec<BitPoint> {
    (0..1usize << resolution)
        .map(|i| BitPoint::from_index(i, resolution).unwrap())
        .collect()
}

/// `D_n = Σ_{k<n} α_k` by direct summation.
pub fn dirichlet_direct(system: WalshSystem, n: u64, resolution: u32) -> Vec<i64> {
    let pts = points(resolution);
    let mut acc = vec![0i64; pts.len()];
    for k in 0..n {
        for (a, x) in acc.iter_mut().zip(&pts) {
            *a += walsh_product(system, k, x);
        }
    }
    acc
}

/// Calls `visit(n, D_n)` for `n = 0..=nmax`, accumulating the direct sum.
pub fn for_each_dirichlet_direct(
    system: WalshSystem,
    nmax: u64,
    resolution: u32,
    mut visit: impl FnMut(u64, &[i64]),
) {
    let pts = points(resolution);
    let mut acc = vec![0i64; pts.len()];
    for n in 0..=nmax {
        visit(n, &acc);
        if n < nmax {
            for (a, x) in acc.iter_mut().zip(&pts) {
                *a += walsh_product(system, n, x);
            }
        }
    }
}

/// Fourier coefficients `∫ f α_n` by direct inner products.
pub fn coefficients_1d(f: &GridFunction1D, system: WalshSystem) -> Vec<f64> {
    let pts = points(f.resolution());
    let len = pts.len() as f64;
    (0..pts.len() as u64)
        .map(|n| {
            f.values()
                .iter()
                .zip(&pts)
                .map(|(v, x)| v * walsh_product(system, n, x) as f64)
                .sum::<f64>()
                / len
        })
        .collect()
}

/// `S_n f` in one variable, synthesized from direct coefficients.
pub fn partial_sum_1d(f: &GridFunction1D, n: u64, system: WalshSystem) -> Vec<f64> {
    let coeffs = coefficients_1d(f, system);
    let pts = points(f.resolution());
    pts.iter()
        .map(|x| {
            (0..n)
                .map(|k| coeffs[k as usize] * walsh_product(system, k, x) as f64)
                .sum()
        })
        .collect()
}

/// Average of `f` over each `I_L × I_L` rectangle, spread back onto the grid.
pub fn rectangle_average(f: &GridFunction2D, level: u32) -> Vec<f64> {
    let side = f.side();
    let block = side >> level;
    let mut out = vec![0.0; side * side];
    for bx in 0..1usize << level {
        for by in 0..1usize << level {
            let mut s = 0.0;
            for ix in bx * block..(bx + 1) * block {
                for iy in by * block..(by + 1) * block {
                    s += f.at(ix, iy);
                }
            }
            let avg = s / (block * block) as f64;
            for ix in bx * block..(bx + 1) * block {
                for iy in by * block..(by + 1) * block {
                    out[ix * side + iy] = avg;
                }
            }
        }
    }
    out
}

/// `(1/n) ∫_{G^p} |Σ_{l=1}^n α_l Π_k D_l(x_k)|`, summing over every cell tuple.
pub fn weighted_kernel_integral(alphas: &[f64], p: u32, system: WalshSystem) -> f64 {
    let n = alphas.len();
    let resolution = n.next_power_of_two().trailing_zeros().max(1);
    let kernels: Vec<Vec<i64>> = (1..=n as u64)
        .map(|l| dirichlet_direct(system, l, resolution))
        .collect();
    let cells = 1usize << resolution;
    let tuples = 1usize << (p * resolution);
    let mut total = 0.0;
    for flat in 0..tuples {
        let mut s = 0.0;
        for (alpha, d) in alphas.iter().zip(&kernels) {
            let mut prod = 1.0;
            for k in 0..p {
                prod *= d[(flat >> (k * resolution)) & (cells - 1)] as f64;
            }
            s += alpha * prod;
        }
        total += s.abs();
    }
    total / (tuples as f64 * n as f64)
}

/// Minimizes `max_i |v_i - c|` over constants `c` by ternary search.
pub fn best_constant_error(values: &[f64]) -> f64 {
    let err = |c: f64| values.iter().fold(0.0f64, |m, v| m.max((v - c).abs()));
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if err(m1) <= err(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    err((lo + hi) / 2.0)
}
