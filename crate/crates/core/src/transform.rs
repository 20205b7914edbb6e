//! In-place fast Walsh-Hadamard butterflies and the index permutations that
//! turn the natural Hadamard order into the Paley and Kaczmarz orders.

use std::ops::{Add, Sub};

use rayon::prelude::*;

use crate::dyadic::reverse_bits;
use crate::walsh::{kaczmarz_to_paley_index, WalshSystem};

/// Slices at least this long are transformed with parallel butterflies.
const PARALLEL_LEN: usize = 1 << 16;

/// Unnormalized Hadamard transform in natural order:
/// `out[a] = Σ_b (-1)^{popcount(a & b)} in[b]`.
///
/// Panics if the length is not a power of two.
pub fn fwht<T>(data: &mut [T])
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Send + Sync,
{
    let n = data.len();
    assert!(n.is_power_of_two(), "FWHT requires a power-of-two length, got {n}");
    let mut half = 1;
    while half < n {
        let step = half * 2;
        if n >= PARALLEL_LEN {
            data.par_chunks_mut(step).for_each(|chunk| butterfly(chunk, half));
        } else {
            data.chunks_mut(step).for_each(|chunk| butterfly(chunk, half));
        }
        half = step;
    }
}

#[inline(always)]
fn butterfly<T>(chunk: &mut [T], half: usize)
where
    T: Copy + Add<Output = T> + Sub<Output = T>,
{
    let (lo, hi) = chunk.split_at_mut(half);
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = u + v;
        *b = u - v;
    }
}

/// Applies the `bits`-bit reversal permutation in place.
pub fn bit_reverse_permute<T>(data: &mut [T]) {
    let n = data.len();
    assert!(n.is_power_of_two());
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = reverse_bits(i, bits);
        if j > i {
            data.swap(i, j);
        }
    }
}

/// Reorders coefficients in place between the Paley and Kaczmarz orders.
/// The map is an involution, so the same call converts both ways.
pub fn block_reverse_permute<T>(data: &mut [T]) {
    for i in 0..data.len() {
        let j = kaczmarz_to_paley_index(i as u64) as usize;
        if j > i {
            data.swap(i, j);
        }
    }
}

/// Converts a coefficient vector stored in `from` order into `to` order.
pub fn reorder_in_place<T>(data: &mut [T], from: WalshSystem, to: WalshSystem) {
    if from != to {
        block_reverse_permute(data);
    }
}

/// Synthesizes `Σ_n c_n α_n` on the grid for coefficients in `system` order.
/// The coefficient slice is consumed as workspace and holds the cell values on return.
pub fn synthesize_in_place<T>(data: &mut [T], system: WalshSystem)
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Send + Sync,
{
    reorder_in_place(data, system, WalshSystem::Paley);
    fwht(data);
    bit_reverse_permute(data);
}
