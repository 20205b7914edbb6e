//! Seeded test-function generators.
//!
//! Every generator takes an explicit `ChaCha8Rng`; [`stream`] derives
//! independent, reproducible generators from one seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{GridFunction1D, GridFunction2D};
use crate::error::Result;
use crate::transform::synthesize_in_place;
use crate::walsh::WalshSystem;

/// Generator number `label` for `seed`.
pub fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

/// Independent uniform values in `[-1, 1)` on every cell.
pub fn uniform_2d(rng: &mut ChaCha8Rng, resolution: u32) -> Result<GridFunction2D> {
    GridFunction2D::from_fn(resolution, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn uniform_1d(rng: &mut ChaCha8Rng, resolution: u32) -> Result<GridFunction1D> {
    GridFunction1D::from_fn(resolution, |_| rng.gen_range(-1.0..1.0))
}

/// `Σ_{L=0}^{N} decay^L g_L` where `g_L` is uniform in `[-1, 1)` and constant
/// on level-`L` rectangles. Smaller `decay` gives a smoother field.
pub fn multiscale_2d(rng: &mut ChaCha8Rng, resolution: u32, decay: f64) -> Result<GridFunction2D> {
    let side = 1usize << resolution;
    let mut values = vec![0.0; side * side];
    let mut amplitude = 1.0;
    for level in 0..=resolution {
        let blocks = 1usize << level;
        let shift = resolution - level;
        let step: Vec<f64> = (0..blocks * blocks).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (i, v) in values.iter_mut().enumerate() {
            let (ix, iy) = (i / side, i % side);
            *v += amplitude * step[(ix >> shift) * blocks + (iy >> shift)];
        }
        amplitude *= decay;
    }
    GridFunction2D::new(resolution, values)
}

/// `f / ‖f‖_∞`, or `f` itself when it vanishes.
pub fn normalize_sup(f: &GridFunction2D) -> Result<GridFunction2D> {
    let s = f.sup_norm();
    if s == 0.0 {
        return Ok(f.clone());
    }
    f.map(|v| v / s)
}

/// A polynomial `Σ_{n<deg_x, m<deg_y} c_{nm} α_n(x) α_m(y)` with integer
/// coefficients in `[-3, 3]`. Cell values are exact integers.
pub fn integer_polynomial_2d(
    rng: &mut ChaCha8Rng,
    resolution: u32,
    deg_x: usize,
    deg_y: usize,
    system: WalshSystem,
) -> Result<GridFunction2D> {
    let side = 1usize << resolution;
    let (deg_x, deg_y) = (deg_x.min(side), deg_y.min(side));
    let mut coeffs = vec![0i64; side * side];
    for n in 0..deg_x {
        for m in 0..deg_y {
            coeffs[n * side + m] = rng.gen_range(-3..=3);
        }
    }
    for row in coeffs.chunks_mut(side) {
        synthesize_in_place(row, system);
    }
    let mut t = vec![0i64; side * side];
    for i in 0..side {
        for j in 0..side {
            t[j * side + i] = coeffs[i * side + j];
        }
    }
    for row in t.chunks_mut(side) {
        synthesize_in_place(row, system);
    }
    let mut values = vec![0.0; side * side];
    for i in 0..side {
        for j in 0..side {
            values[i * side + j] = t[j * side + i] as f64;
        }
    }
    GridFunction2D::new(resolution, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::analyze_2d;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u32> = (0..4).map(|_| stream(7, 1).gen()).collect();
        let b: Vec<u32> = (0..4).map(|_| stream(7, 1).gen()).collect();
        assert_eq!(a, b);
        let mut s1 = stream(7, 1);
        let mut s2 = stream(7, 2);
        assert_ne!(s1.gen::<u64>(), s2.gen::<u64>());
    }

    #[test]
    fn polynomial_spectrum_is_supported_in_corner() {
        let mut rng = stream(1, 0);
        let f = integer_polynomial_2d(&mut rng, 4, 3, 5, WalshSystem::Kaczmarz).unwrap();
        assert!(f.values().iter().all(|v| v.fract() == 0.0));
        let s = analyze_2d(&f, WalshSystem::Kaczmarz).unwrap();
        for n in 0..16 {
            for m in 0..16 {
                if n >= 3 || m >= 5 {
                    assert_eq!(s.at(n, m), 0.0);
                }
            }
        }
    }

    #[test]
    fn multiscale_is_normalizable() {
        let mut rng = stream(3, 0);
        let f = normalize_sup(&multiscale_2d(&mut rng, 5, 0.5).unwrap()).unwrap();
        assert!((f.sup_norm() - 1.0).abs() < 1e-15);
    }
}
