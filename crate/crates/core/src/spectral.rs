//! Walsh-Fourier analysis and synthesis on dyadic grids, partial sums, and the
//! incremental diagonal partial sums `S_{l,l}` used by the strong means.
//!
//! Coefficients always travel with the ordering they were computed in. The
//! Kaczmarz transform is the Paley butterfly followed by the block
//! bit-reversal reindexing; nothing here evaluates the `O(4^N)` matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{GridFunction1D, GridFunction2D};
use crate::error::{Error, Result};
use crate::transform::{bit_reverse_permute, fwht, reorder_in_place, synthesize_in_place};
use crate::walsh::{walsh_signs, WalshSystem};

/// Resolution and cost caps for spectral work.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralBudget {
    pub max_resolution_1d: u32,
    pub max_resolution_2d: u32,
    /// Cap on `log2(n_max · 4^N)` for diagonal sweeps.
    pub diagonal_ops_log2: u32,
}

impl Default for SpectralBudget {
    fn default() -> Self {
        SpectralBudget {
            max_resolution_1d: 12,
            max_resolution_2d: 10,
            diagonal_ops_log2: 31,
        }
    }
}

fn over_budget(what: &'static str, required: u32, limit: u32) -> Error {
    Error::Budget {
        what,
        required: required as u128,
        limit: limit as u128,
    }
}

/// Coefficients `∫ f α_n` of a one-dimensional grid function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum1D {
    pub ordering: WalshSystem,
    pub resolution: u32,
    pub coefficients: Vec<f64>,
}

/// Coefficients `∫∫ f α_n(x) α_m(y)`, row-major in `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Spectrum2DRepr", into = "Spectrum2DRepr")]
pub struct Spectrum2D {
    pub ordering: WalshSystem,
    pub resolution: u32,
    pub coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Spectrum2DRepr {
    ordering: WalshSystem,
    resolution: u32,
    coefficients: Vec<Vec<f64>>,
}

impl TryFrom<Spectrum2DRepr> for Spectrum2D {
    type Error = Error;
    fn try_from(r: Spectrum2DRepr) -> Result<Self> {
        let side = 1usize << r.resolution.min(crate::dyadic::MAX_GRID_RESOLUTION_2D + 1);
        if r.coefficients.len() != side || r.coefficients.iter().any(|row| row.len() != side) {
            return Err(Error::param("coefficients", "rows must form a 2^N x 2^N matrix"));
        }
        Ok(Spectrum2D {
            ordering: r.ordering,
            resolution: r.resolution,
            coefficients: r.coefficients.into_iter().flatten().collect(),
        })
    }
}

impl From<Spectrum2D> for Spectrum2DRepr {
    fn from(s: Spectrum2D) -> Self {
        let side = s.side();
        Spectrum2DRepr {
            ordering: s.ordering,
            resolution: s.resolution,
            coefficients: s.coefficients.chunks(side).map(|c| c.to_vec()).collect(),
        }
    }
}

impl Spectrum1D {
    pub fn sum_of_squares(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// The same spectrum in `target` order.
    pub fn reorder(&self, target: WalshSystem) -> Spectrum1D {
        let mut coefficients = self.coefficients.clone();
        reorder_in_place(&mut coefficients, self.ordering, target);
        Spectrum1D {
            ordering: target,
            resolution: self.resolution,
            coefficients,
        }
    }
}

impl Spectrum2D {
    pub fn side(&self) -> usize {
        1usize << self.resolution
    }

    #[inline]
    pub fn at(&self, n: usize, m: usize) -> f64 {
        self.coefficients[n * self.side() + m]
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// The same spectrum in `target` order, permuting both axes.
    pub fn reorder(&self, target: WalshSystem) -> Spectrum2D {
        let mut coefficients = self.coefficients.clone();
        if self.ordering != target {
            let side = self.side();
            permute_axes(&mut coefficients, side, |row| reorder_in_place(row, self.ordering, target));
        }
        Spectrum2D {
            ordering: target,
            resolution: self.resolution,
            coefficients,
        }
    }
}

/// Applies `op` to every row and then to every column of a square matrix.
fn permute_axes(data: &mut [f64], side: usize, op: impl Fn(&mut [f64]) + Sync) {
    data.par_chunks_mut(side).for_each(&op);
    transpose(data, side);
    data.par_chunks_mut(side).for_each(&op);
    transpose(data, side);
}

fn transpose(data: &mut [f64], side: usize) {
    for i in 0..side {
        for j in i + 1..side {
            data.swap(i * side + j, j * side + i);
        }
    }
}

fn analyze_in_place(values: &mut [f64], system: WalshSystem) {
    let scale = 1.0 / values.len() as f64;
    bit_reverse_permute(values);
    fwht(values);
    for v in values.iter_mut() {
        *v *= scale;
    }
    reorder_in_place(values, WalshSystem::Paley, system);
}

pub fn analyze_1d(f: &GridFunction1D, system: WalshSystem) -> Result<Spectrum1D> {
    analyze_1d_with(f, system, &SpectralBudget::default())
}

pub fn analyze_1d_with(
    f: &GridFunction1D,
    system: WalshSystem,
    budget: &SpectralBudget,
) -> Result<Spectrum1D> {
    if f.resolution() > budget.max_resolution_1d {
        return Err(over_budget("1D transform resolution", f.resolution(), budget.max_resolution_1d));
    }
    let mut coefficients = f.values().to_vec();
    analyze_in_place(&mut coefficients, system);
    Ok(Spectrum1D {
        ordering: system,
        resolution: f.resolution(),
        coefficients,
    })
}

pub fn synthesize_1d(s: &Spectrum1D) -> Result<GridFunction1D> {
    let mut values = s.coefficients.clone();
    if values.len() != 1usize << s.resolution {
        return Err(Error::param("coefficients", "length must be 2^resolution"));
    }
    synthesize_in_place(&mut values, s.ordering);
    GridFunction1D::new(s.resolution, values)
}

/// `S_n f = Σ_{k<n} f̂(k) α_k`.
pub fn partial_sum_1d(f: &GridFunction1D, n: u64, system: WalshSystem) -> Result<GridFunction1D> {
    let len = f.len() as u64;
    if n > len {
        return Err(Error::ResolutionExceeded {
            what: "partial sum order",
            value: n,
            limit: len,
        });
    }
    let mut s = analyze_1d_with(f, system, &unbounded_1d())?;
    for c in &mut s.coefficients[n as usize..] {
        *c = 0.0;
    }
    synthesize_1d(&s)
}

fn unbounded_1d() -> SpectralBudget {
    SpectralBudget {
        max_resolution_1d: crate::dyadic::MAX_GRID_RESOLUTION_1D,
        ..SpectralBudget::default()
    }
}

pub fn analyze_2d(f: &GridFunction2D, system: WalshSystem) -> Result<Spectrum2D> {
    analyze_2d_with(f, system, &SpectralBudget::default())
}

pub fn analyze_2d_with(
    f: &GridFunction2D,
    system: WalshSystem,
    budget: &SpectralBudget,
) -> Result<Spectrum2D> {
    if f.resolution() > budget.max_resolution_2d {
        return Err(over_budget("2D transform resolution", f.resolution(), budget.max_resolution_2d));
    }
    let mut coefficients = f.values().to_vec();
    permute_axes(&mut coefficients, f.side(), |row| analyze_in_place(row, system));
    Ok(Spectrum2D {
        ordering: system,
        resolution: f.resolution(),
        coefficients,
    })
}

pub fn synthesize_2d(s: &Spectrum2D) -> Result<GridFunction2D> {
    let side = s.side();
    if s.coefficients.len() != side * side {
        return Err(Error::param("coefficients", "length must be 4^resolution"));
    }
    let mut values = s.coefficients.clone();
    let system = s.ordering;
    permute_axes(&mut values, side, |row| synthesize_in_place(row, system));
    GridFunction2D::new(s.resolution, values)
}

/// `S_{n,m} f`: the spectrum truncated to the `n × m` corner.
pub fn partial_sum_2d(f: &GridFunction2D, n: u64, m: u64, system: WalshSystem) -> Result<GridFunction2D> {
    let side = f.side() as u64;
    if n > side || m > side {
        return Err(Error::ResolutionExceeded {
            what: "partial sum order",
            value: n.max(m),
            limit: side,
        });
    }
    let mut s = analyze_2d(f, system)?;
    truncate_corner(&mut s, n as usize, m as usize);
    synthesize_2d(&s)
}

fn truncate_corner(s: &mut Spectrum2D, n: usize, m: usize) {
    let side = s.side();
    for (k, row) in s.coefficients.chunks_mut(side).enumerate() {
        if k >= n {
            row.fill(0.0);
        } else {
            row[m..].fill(0.0);
        }
    }
}

/// Incremental diagonal partial sums `S_{1,1}, S_{2,2}, ..., S_{n_max,n_max}`.
///
/// `S_{l+1,l+1} - S_{l,l} = α_l(x) g_l(y) + h_l(x) α_l(y)` with
/// `g_l = Σ_{i≤l} f̂(l,i) α_i` and `h_l = Σ_{k<l} f̂(k,l) α_k`; each border is
/// synthesized in `O(2^N N)` and the grid update costs `O(4^N)`.
pub struct DiagonalSums {
    spectrum: Spectrum2D,
    current: GridFunction2D,
    done: usize,
    n_max: usize,
}

pub fn diagonal_sums(f: &GridFunction2D, n_max: u64, system: WalshSystem) -> Result<DiagonalSums> {
    DiagonalSums::new(f, n_max, system, &SpectralBudget::default())
}

impl DiagonalSums {
    pub fn new(
        f: &GridFunction2D,
        n_max: u64,
        system: WalshSystem,
        budget: &SpectralBudget,
    ) -> Result<Self> {
        let side = f.side() as u64;
        if n_max > side {
            return Err(Error::ResolutionExceeded {
                what: "diagonal order",
                value: n_max,
                limit: side,
            });
        }
        let cost_log2 = 2 * f.resolution() + (64 - n_max.max(1).leading_zeros());
        if cost_log2 > budget.diagonal_ops_log2 + 1 {
            return Err(Error::Budget {
                what: "diagonal sweep (n_max * 4^N cell updates)",
                required: n_max as u128 * (side as u128 * side as u128),
                limit: 1u128 << budget.diagonal_ops_log2,
            });
        }
        let spectrum = analyze_2d_with(f, system, budget)?;
        Ok(DiagonalSums {
            current: GridFunction2D::from_raw(f.resolution(), vec![0.0; f.values().len()]),
            spectrum,
            done: 0,
            n_max: n_max as usize,
        })
    }

    pub fn system(&self) -> WalshSystem {
        self.spectrum.ordering
    }

    pub fn spectrum(&self) -> &Spectrum2D {
        &self.spectrum
    }

    /// Advances to the next diagonal order and borrows the new partial sum.
    pub fn advance(&mut self) -> Option<(usize, &GridFunction2D)> {
        if self.done >= self.n_max {
            return None;
        }
        let l = self.done;
        let side = self.spectrum.side();
        let system = self.spectrum.ordering;
        let resolution = self.spectrum.resolution;

        let alpha: Vec<f64> = walsh_signs(system, l as u64, resolution)
            .expect("order below 2^N")
            .into_iter()
            .map(f64::from)
            .collect();
        let mut g = vec![0.0; side];
        g[..=l].copy_from_slice(&self.spectrum.coefficients[l * side..l * side + l + 1]);
        synthesize_in_place(&mut g, system);
        let mut h = vec![0.0; side];
        for (k, slot) in h.iter_mut().enumerate().take(l) {
            *slot = self.spectrum.at(k, l);
        }
        synthesize_in_place(&mut h, system);

        let values = self.current.values_mut();
        values.par_chunks_mut(side).enumerate().for_each(|(ix, row)| {
            let (a, hx) = (alpha[ix], h[ix]);
            for (iy, v) in row.iter_mut().enumerate() {
                *v += a * g[iy] + hx * alpha[iy];
            }
        });
        self.done += 1;
        Some((self.done, &self.current))
    }
}

impl Iterator for DiagonalSums {
    type Item = (usize, GridFunction2D);

    fn next(&mut self) -> Option<Self::Item> {
        self.advance().map(|(l, s)| (l, s.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use crate::walsh::walsh_function;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_1d(n: u32, seed: u64) -> GridFunction1D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridFunction1D::from_fn(n, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn random_2d(n: u32, seed: u64) -> GridFunction2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridFunction2D::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn constant_has_delta_spectrum() {
        for system in WalshSystem::ALL {
            let s = analyze_1d(&GridFunction1D::constant(6, 1.0).unwrap(), system).unwrap();
            assert_eq!(s.coefficients[0], 1.0);
            assert!(s.coefficients[1..].iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn kaczmarz_five_is_paley_six() {
        let f = walsh_function(WalshSystem::Kaczmarz, 5, 8).unwrap();
        let k = analyze_1d(&f, WalshSystem::Kaczmarz).unwrap();
        let p = analyze_1d(&f, WalshSystem::Paley).unwrap();
        for i in 0..256 {
            assert_eq!(k.coefficients[i], if i == 5 { 1.0 } else { 0.0 });
            assert_eq!(p.coefficients[i], if i == 6 { 1.0 } else { 0.0 });
        }
        assert_eq!(k.reorder(WalshSystem::Paley), p);
        assert_eq!(p.reorder(WalshSystem::Paley), p);
    }

    #[test]
    fn analyze_matches_inner_products() {
        let f = random_1d(8, 3);
        for system in WalshSystem::ALL {
            let fast = analyze_1d(&f, system).unwrap();
            let slow = reference::coefficients_1d(&f, system);
            for (a, b) in fast.coefficients.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn integer_roundtrip_is_exact() {
        for n in 1..=10 {
            let f = GridFunction1D::from_fn(n, |x| ((x.index() * 2654435761) % 201) as f64 - 100.0).unwrap();
            for system in WalshSystem::ALL {
                let back = synthesize_1d(&analyze_1d(&f, system).unwrap()).unwrap();
                assert_eq!(back, f);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let f = GridFunction1D::constant(13, 0.0).unwrap();
        assert!(matches!(analyze_1d(&f, WalshSystem::Paley), Err(Error::Budget { .. })));
        let g = GridFunction2D::constant(11, 0.0).unwrap();
        assert!(matches!(analyze_2d(&g, WalshSystem::Paley), Err(Error::Budget { .. })));
    }

    #[test]
    fn two_dim_roundtrip_and_reorder() {
        let f = random_2d(5, 9);
        for system in WalshSystem::ALL {
            let s = analyze_2d(&f, system).unwrap();
            let back = synthesize_2d(&s).unwrap();
            assert!(back.max_abs_diff(&f).unwrap() < 1e-14);
            let other = s.reorder(WalshSystem::Paley).reorder(system);
            assert_eq!(other, s);
            let via = synthesize_2d(&s.reorder(WalshSystem::Paley)).unwrap();
            assert!(via.max_abs_diff(&back).unwrap() < 1e-14);
        }
    }

    #[test]
    fn partial_sum_edge_cases() {
        let f = random_2d(4, 1);
        for system in WalshSystem::ALL {
            let z = partial_sum_2d(&f, 0, 7, system).unwrap();
            assert!(z.values().iter().all(|&v| v == 0.0));
            let full = partial_sum_2d(&f, 16, 16, system).unwrap();
            assert!(full.max_abs_diff(&f).unwrap() < 1e-14);
            assert!(partial_sum_2d(&f, 17, 1, system).is_err());
        }
    }

    #[test]
    fn dyadic_partial_sum_is_rectangle_average() {
        let f = random_2d(8, 4);
        let avg = reference::rectangle_average(&f, 3);
        for system in WalshSystem::ALL {
            let s = partial_sum_2d(&f, 8, 8, system).unwrap();
            for (a, b) in s.values().iter().zip(&avg) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn polynomial_is_reproduced() {
        // f = κ_3(x) κ_5(y) - 2 κ_6(x): degree (7, 6)
        let a = walsh_function(WalshSystem::Kaczmarz, 3, 4).unwrap();
        let b = walsh_function(WalshSystem::Kaczmarz, 5, 4).unwrap();
        let c = walsh_function(WalshSystem::Kaczmarz, 6, 4).unwrap();
        let f = GridFunction2D::from_fn(4, |x, y| {
            a.values()[x.index()] * b.values()[y.index()] - 2.0 * c.values()[x.index()]
        })
        .unwrap();
        let s = partial_sum_2d(&f, 7, 6, WalshSystem::Kaczmarz).unwrap();
        assert_eq!(s, f);
        let s = partial_sum_2d(&f, 7, 5, WalshSystem::Kaczmarz).unwrap();
        assert_ne!(s, f);
    }

    #[test]
    fn diagonal_matches_truncation() {
        let f = random_2d(5, 12);
        for system in WalshSystem::ALL {
            let mut diag = diagonal_sums(&f, 32, system).unwrap();
            while let Some((l, s)) = diag.advance() {
                let direct = partial_sum_2d(&f, l as u64, l as u64, system).unwrap();
                assert!(s.max_abs_diff(&direct).unwrap() < 1e-12, "l={l}");
            }
        }
    }

    #[test]
    fn diagonal_of_constant_and_separable() {
        let c = GridFunction2D::constant(4, 3.0).unwrap();
        for (_, s) in diagonal_sums(&c, 16, WalshSystem::Kaczmarz).unwrap() {
            assert_eq!(s, c);
        }
        let g = random_1d(5, 5);
        let h = random_1d(5, 6);
        let f = GridFunction2D::separable(&g, &h).unwrap();
        for (l, s) in diagonal_sums(&f, 32, WalshSystem::Kaczmarz).unwrap() {
            let sg = partial_sum_1d(&g, l as u64, WalshSystem::Kaczmarz).unwrap();
            let sh = partial_sum_1d(&h, l as u64, WalshSystem::Kaczmarz).unwrap();
            let expect = GridFunction2D::separable(&sg, &sh).unwrap();
            assert!(s.max_abs_diff(&expect).unwrap() < 1e-12);
        }
    }

    #[test]
    fn diagonal_budget() {
        let f = GridFunction2D::constant(4, 0.0).unwrap();
        assert!(diagonal_sums(&f, 17, WalshSystem::Paley).is_err());
        let tight = SpectralBudget {
            diagonal_ops_log2: 8,
            ..SpectralBudget::default()
        };
        assert!(matches!(
            DiagonalSums::new(&f, 16, WalshSystem::Paley, &tight),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn spectrum_json_shape() {
        let s = analyze_1d(&GridFunction1D::constant(1, 2.0).unwrap(), WalshSystem::Kaczmarz).unwrap();
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"ordering":"kaczmarz","resolution":1,"coefficients":[2.0,0.0]}"#
        );
        let s2 = analyze_2d(&GridFunction2D::constant(1, 1.0).unwrap(), WalshSystem::Paley).unwrap();
        let json = serde_json::to_string(&s2).unwrap();
        assert_eq!(json, r#"{"ordering":"paley","resolution":1,"coefficients":[[1.0,0.0],[0.0,0.0]]}"#);
        assert_eq!(serde_json::from_str::<Spectrum2D>(&json).unwrap(), s2);
    }

    #[test]
    fn parseval() {
        let f = random_2d(6, 2);
        let energy = f.norm(2.0).unwrap().powi(2);
        for system in WalshSystem::ALL {
            let s = analyze_2d(&f, system).unwrap();
            assert!((s.sum_of_squares() - energy).abs() / energy < 1e-12);
        }
    }
}
