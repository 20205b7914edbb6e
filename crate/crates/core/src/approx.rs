//! Best approximation by dyadic step functions in the sup norm.
//!
//! Polynomials of degree `< 2^L` in a variable are exactly the functions that
//! are constant on level-`L` dyadic intervals of that variable, so every best
//! approximation here is a Chebyshev-center problem: half the oscillation of
//! `f` over each constancy region, maximized over regions.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{GridFunction1D, GridFunction2D};
use crate::error::{Error, Result};

/// The variable in which a partial best approximation is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Polynomial in `x` with coefficients depending on `y`.
    X,
    /// Polynomial in `y` with coefficients depending on `x`.
    Y,
}

fn check_level(level: u32, resolution: u32) -> Result<()> {
    if level > resolution {
        return Err(Error::ResolutionExceeded {
            what: "approximation level",
            value: level as u64,
            limit: resolution as u64,
        });
    }
    Ok(())
}

fn half_oscillation(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (hi - lo) / 2.0
}

/// `E_{2^L}(g)` for a one-dimensional grid function.
pub fn best_dyadic_1d(g: &GridFunction1D, level: u32) -> Result<f64> {
    check_level(level, g.resolution())?;
    let block = g.len() >> level;
    Ok(g.values()
        .chunks(block)
        .map(|c| half_oscillation(c.iter().copied()))
        .fold(0.0, f64::max))
}

/// `E_{2^L,2^L}(f)`: the largest half-oscillation over level-`L` rectangles.
pub fn best_dyadic_2d(f: &GridFunction2D, level: u32) -> Result<f64> {
    check_level(level, f.resolution())?;
    let side = f.side();
    let block = side >> level;
    Ok((0..1usize << level)
        .into_par_iter()
        .map(|bx| {
            let rows = bx * block..(bx + 1) * block;
            (0..1usize << level)
                .map(|by| {
                    half_oscillation(
                        rows.clone()
                            .flat_map(|ix| f.row(ix)[by * block..(by + 1) * block].iter().copied()),
                    )
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// `E^{(1)}_{2^L}` (axis `X`) or `E^{(2)}_{2^L}` (axis `Y`): the approximant is
/// a step function of level `L` in one variable and arbitrary in the other.
pub fn partial_best(f: &GridFunction2D, level: u32, axis: Axis) -> Result<f64> {
    check_level(level, f.resolution())?;
    let side = f.side();
    let block = side >> level;
    Ok(match axis {
        Axis::Y => f
            .values()
            .par_chunks(side)
            .map(|row| {
                row.chunks(block)
                    .map(|c| half_oscillation(c.iter().copied()))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max),
        Axis::X => (0..side)
            .into_par_iter()
            .map(|iy| {
                (0..1usize << level)
                    .map(|bx| half_oscillation((bx * block..(bx + 1) * block).map(|ix| f.at(ix, iy))))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max),
    })
}

/// Level used for a non-dyadic order: `⌊log₂ l⌋`.
pub fn surrogate_level(l: u64) -> Result<u32> {
    if l == 0 {
        return Err(Error::param("l", "orders start at 1"));
    }
    Ok(63 - l.leading_zeros())
}

/// Which best-approximation functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxKind {
    PartialX,
    PartialY,
    Dyadic,
}

/// Upper bound for `E_l` at any order `1 ≤ l ≤ 2^N`: the exact value at the
/// dyadic floor `2^{⌊log₂ l⌋}`. Richer approximating classes can only lower it.
pub fn surrogate_e(f: &GridFunction2D, l: u64, kind: ApproxKind) -> Result<f64> {
    let side = f.side() as u64;
    if l > side {
        return Err(Error::ResolutionExceeded {
            what: "approximation order",
            value: l,
            limit: side,
        });
    }
    let level = surrogate_level(l)?;
    match kind {
        ApproxKind::PartialX => partial_best(f, level, Axis::X),
        ApproxKind::PartialY => partial_best(f, level, Axis::Y),
        ApproxKind::Dyadic => best_dyadic_2d(f, level),
    }
}

/// `‖f − S_{2^L,2^L} f‖_C` against `2 E_{2^L,2^L}(f)`. The partial sum is the
/// average over level-`L` rectangles.
pub fn check_b4(f: &GridFunction2D, level: u32) -> Result<(f64, f64)> {
    check_level(level, f.resolution())?;
    let side = f.side();
    let block = side >> level;
    let area = (block * block) as f64;
    let mut lhs = 0.0f64;
    for bx in 0..1usize << level {
        for by in 0..1usize << level {
            let cells = || {
                (bx * block..(bx + 1) * block)
                    .flat_map(move |ix| (by * block..(by + 1) * block).map(move |iy| (ix, iy)))
            };
            let avg = cells().map(|(ix, iy)| f.at(ix, iy)).sum::<f64>() / area;
            lhs = cells().fold(lhs, |m, (ix, iy)| m.max((f.at(ix, iy) - avg).abs()));
        }
    }
    Ok((lhs, 2.0 * best_dyadic_2d(f, level)?))
}

/// `E_{2^L,2^L}(f)` against `2E^{(1)}_{2^L}(f) + 2E^{(2)}_{2^L}(f)`.
pub fn check_b2(f: &GridFunction2D, level: u32) -> Result<(f64, f64)> {
    let lhs = best_dyadic_2d(f, level)?;
    let rhs = 2.0 * partial_best(f, level, Axis::X)? + 2.0 * partial_best(f, level, Axis::Y)?;
    Ok((lhs, rhs))
}

/// Best-approximation values at every dyadic level of one function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxProfile {
    pub resolution: u32,
    /// Index `L` holds `E^{(1)}_{2^L}`.
    pub partial_x: Vec<f64>,
    pub partial_y: Vec<f64>,
    pub dyadic: Vec<f64>,
}

impl ApproxProfile {
    pub fn new(f: &GridFunction2D) -> Result<Self> {
        let levels = 0..=f.resolution();
        Ok(ApproxProfile {
            resolution: f.resolution(),
            partial_x: levels.clone().map(|l| partial_best(f, l, Axis::X)).collect::<Result<_>>()?,
            partial_y: levels.clone().map(|l| partial_best(f, l, Axis::Y)).collect::<Result<_>>()?,
            dyadic: levels.map(|l| best_dyadic_2d(f, l)).collect::<Result<_>>()?,
        })
    }

    /// Surrogate values `(E1, E2, E_dyadic)` at order `l`.
    pub fn at_order(&self, l: u64) -> Result<(f64, f64, f64)> {
        let level = surrogate_level(l)?;
        if level > self.resolution {
            return Err(Error::ResolutionExceeded {
                what: "approximation order",
                value: l,
                limit: 1u64 << self.resolution,
            });
        }
        let i = level as usize;
        Ok((self.partial_x[i], self.partial_y[i], self.dyadic[i]))
    }

    /// CSV with columns `l,E1,E2,E_dyadic` for `l = 1..=n`.
    pub fn write_csv<W: Write>(&self, mut w: W, n: u64) -> Result<()> {
        writeln!(w, "l,E1,E2,E_dyadic")?;
        for l in 1..=n {
            let (a, b, c) = self.at_order(l)?;
            writeln!(w, "{l},{a:e},{b:e},{c:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::best_constant_error;
    use crate::spectral::partial_sum_2d;
    use crate::walsh::{walsh_function, WalshSystem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_2d(n: u32, seed: u64) -> GridFunction2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridFunction2D::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn constant_has_zero_error() {
        let f = GridFunction2D::constant(5, 2.5).unwrap();
        for l in 0..=5 {
            assert_eq!(best_dyadic_2d(&f, l).unwrap(), 0.0);
            assert_eq!(check_b4(&f, l).unwrap(), (0.0, 0.0));
        }
        assert!(best_dyadic_2d(&f, 6).is_err());
    }

    #[test]
    fn walsh_function_levels() {
        for level in 0..5 {
            let w = walsh_function(WalshSystem::Paley, 1 << level, 6).unwrap();
            let f = GridFunction2D::separable(&w, &GridFunction1D::constant(6, 1.0).unwrap()).unwrap();
            assert_eq!(best_dyadic_2d(&f, level).unwrap(), 1.0);
            assert_eq!(best_dyadic_2d(&f, level + 1).unwrap(), 0.0);
            assert_eq!(partial_best(&f, level, Axis::X).unwrap(), 1.0);
            assert_eq!(partial_best(&f, level, Axis::Y).unwrap(), 0.0);
        }
    }

    #[test]
    fn partial_of_separable_is_one_dimensional() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = GridFunction1D::from_fn(6, |_| rng.gen_range(-2.0..2.0)).unwrap();
        let h = GridFunction1D::from_fn(6, |_| rng.gen_range(0.5..1.0)).unwrap();
        let f = GridFunction2D::separable(&g, &GridFunction1D::constant(6, 1.0).unwrap()).unwrap();
        let t = GridFunction2D::separable(&h, &g).unwrap();
        for l in 0..=6 {
            let e = best_dyadic_1d(&g, l).unwrap();
            assert_eq!(partial_best(&f, l, Axis::X).unwrap(), e);
            let hmax = h.values().iter().copied().fold(0.0, f64::max);
            assert!((partial_best(&t, l, Axis::Y).unwrap() - hmax * e).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_ternary_search_oracle() {
        let f = random_2d(6, 21);
        for level in 0..=6 {
            let block = 64 >> level;
            let mut worst = 0.0f64;
            for bx in 0..1 << level {
                for by in 0..1 << level {
                    let vals: Vec<f64> = (bx * block..(bx + 1) * block)
                        .flat_map(|ix| (by * block..(by + 1) * block).map(move |iy| (ix, iy)))
                        .map(|(ix, iy)| f.at(ix, iy))
                        .collect();
                    worst = worst.max(best_constant_error(&vals));
                }
            }
            assert!((best_dyadic_2d(&f, level).unwrap() - worst).abs() < 1e-12);
        }
    }

    #[test]
    fn b4_residual_matches_spectral_partial_sum() {
        let f = random_2d(6, 4);
        for level in 0..=6 {
            let s = partial_sum_2d(&f, 1 << level, 1 << level, WalshSystem::Kaczmarz).unwrap();
            let direct = f.max_abs_diff(&s).unwrap();
            let (lhs, rhs) = check_b4(&f, level).unwrap();
            assert!((lhs - direct).abs() < 1e-12);
            assert!(lhs <= rhs);
        }
    }

    #[test]
    fn indicator_cell_b4() {
        let f = GridFunction2D::from_fn(5, |x, y| {
            if x.index() < 4 && y.index() < 4 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let (lhs, rhs) = check_b4(&f, 2).unwrap();
        assert_eq!(lhs, 0.75);
        assert_eq!(rhs, 1.0);
    }

    #[test]
    fn surrogate_floor_and_profile() {
        let f = random_2d(5, 2);
        let p = ApproxProfile::new(&f).unwrap();
        assert_eq!(surrogate_level(3).unwrap(), 1);
        assert_eq!(surrogate_e(&f, 3, ApproxKind::Dyadic).unwrap(), best_dyadic_2d(&f, 1).unwrap());
        let mut prev = f64::INFINITY;
        for l in 1..=32 {
            let (e1, e2, e) = p.at_order(l).unwrap();
            assert_eq!(e1, surrogate_e(&f, l, ApproxKind::PartialX).unwrap());
            assert_eq!(e2, surrogate_e(&f, l, ApproxKind::PartialY).unwrap());
            assert!(e <= prev);
            prev = e;
        }
        assert_eq!(p.at_order(32).unwrap(), (0.0, 0.0, 0.0));
        let mut out = Vec::new();
        p.write_csv(&mut out, 4).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("l,E1,E2,E_dyadic\n1,"));
    }
}
