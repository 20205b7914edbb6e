//! Finite-resolution model of the Walsh group.
//!
//! A point is truncated to its first `N` binary coordinates `x_0, ..., x_{N-1}`.
//! The truncated point doubles as the address of a resolution-`N` cell: the
//! cell index is `Σ x_k 2^{N-1-k}`, so `x_0` is the most significant bit and
//! every dyadic interval `I_n(x)` is a contiguous run of cell indices.

use std::io::{BufRead, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest resolution accepted for a single point.
pub const MAX_POINT_RESOLUTION: u32 = 40;
/// Largest resolution for a materialized one-dimensional grid.
pub const MAX_GRID_RESOLUTION_1D: u32 = 26;
/// Largest per-axis resolution for a materialized two-dimensional grid.
pub const MAX_GRID_RESOLUTION_2D: u32 = 13;

/// Reverses the lowest `bits` bits of `value`.
#[inline]
pub fn reverse_bits(value: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        value.reverse_bits() >> (usize::BITS - bits)
    }
}

/// A point of the Walsh group truncated to `resolution` coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitPoint {
    index: usize,
    resolution: u32,
}

impl BitPoint {
    /// The point whose cell index is `index`.
    pub fn from_index(index: usize, resolution: u32) -> Result<Self> {
        check_point_resolution(resolution)?;
        if (index as u128) >> resolution != 0 {
            return Err(Error::ResolutionExceeded {
                what: "cell index",
                value: index as u64,
                limit: (1u64 << resolution) - 1,
            });
        }
        Ok(BitPoint { index, resolution })
    }

    /// Builds a point from its coordinates `x_0, x_1, ...`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let resolution = bits.len() as u32;
        check_point_resolution(resolution)?;
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(Error::param("bits", format!("coordinate {b} is not 0 or 1")));
            }
            index = (index << 1) | b as usize;
        }
        Ok(BitPoint { index, resolution })
    }

    /// The null element.
    pub fn zero(resolution: u32) -> Result<Self> {
        Self::from_index(0, resolution)
    }

    /// `e_n`: the point with a single 1 at coordinate `n`.
    pub fn unit(n: u32, resolution: u32) -> Result<Self> {
        if n >= resolution {
            return Err(Error::ResolutionExceeded {
                what: "coordinate",
                value: n as u64,
                limit: resolution.saturating_sub(1) as u64,
            });
        }
        Self::from_index(1usize << (resolution - 1 - n), resolution)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Coordinate `x_k`. Panics if `k >= resolution`.
    #[inline]
    pub fn bit(&self, k: u32) -> u8 {
        assert!(k < self.resolution, "coordinate {k} beyond resolution {}", self.resolution);
        ((self.index >> (self.resolution - 1 - k)) & 1) as u8
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.resolution).map(|k| self.bit(k)).collect()
    }

    /// Coordinates packed least-significant-first: bit `k` of the result is `x_k`.
    #[inline]
    pub fn coords(&self) -> usize {
        reverse_bits(self.index, self.resolution)
    }

    /// Cell-index range of the dyadic interval `I_n(x)`.
    pub fn interval_range(&self, n: u32) -> Result<Range<usize>> {
        if n > self.resolution {
            return Err(Error::ResolutionExceeded {
                what: "interval level",
                value: n as u64,
                limit: self.resolution as u64,
            });
        }
        let shift = self.resolution - n;
        let start = (self.index >> shift) << shift;
        Ok(start..start + (1usize << shift))
    }

    /// Number of leading zero coordinates: the largest `n` with `x ∈ I_n(0)`.
    #[inline]
    pub fn leading_zeros(&self) -> u32 {
        if self.index == 0 {
            self.resolution
        } else {
            self.resolution - (usize::BITS - self.index.leading_zeros())
        }
    }
}

fn check_point_resolution(resolution: u32) -> Result<()> {
    if resolution == 0 || resolution > MAX_POINT_RESOLUTION {
        return Err(Error::param(
            "resolution",
            format!("{resolution} is outside 1..={MAX_POINT_RESOLUTION}"),
        ));
    }
    Ok(())
}

/// Coordinate-wise addition modulo 2.
pub fn group_add(x: BitPoint, y: BitPoint) -> Result<BitPoint> {
    if x.resolution != y.resolution {
        return Err(Error::ResolutionMismatch {
            left: x.resolution,
            right: y.resolution,
        });
    }
    Ok(BitPoint {
        index: x.index ^ y.index,
        resolution: x.resolution,
    })
}

/// The Rademacher function `r_k(x) = (-1)^{x_k}`.
pub fn rademacher(k: u32, x: BitPoint) -> Result<i8> {
    if k >= x.resolution {
        return Err(Error::ResolutionExceeded {
            what: "Rademacher index",
            value: k as u64,
            limit: x.resolution as u64 - 1,
        });
    }
    Ok(1 - 2 * x.bit(k) as i8)
}

/// Cell-index form of `τ_A`: reverses the top `a` bits of a `resolution`-bit index.
#[inline]
pub fn tau_index(a: u32, index: usize, resolution: u32) -> usize {
    debug_assert!(a <= resolution);
    if a <= 1 {
        return index;
    }
    let low_bits = resolution - a;
    let low = index & ((1usize << low_bits) - 1);
    let top = index >> low_bits;
    (reverse_bits(top, a) << low_bits) | low
}

/// `τ_A(x) = (x_{A-1}, ..., x_0, x_A, x_{A+1}, ...)`.
pub fn tau(a: u32, x: BitPoint) -> Result<BitPoint> {
    if a > x.resolution {
        return Err(Error::ResolutionExceeded {
            what: "tau order",
            value: a as u64,
            limit: x.resolution as u64,
        });
    }
    Ok(BitPoint {
        index: tau_index(a, x.index, x.resolution),
        resolution: x.resolution,
    })
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::param("p", format!("norm exponent must be > 0, got {p}")));
    }
    Ok(())
}

fn lp_norm(values: &[f64], weight: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let sum: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    Ok((sum * weight).powf(1.0 / p))
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::param("values", format!("non-finite value at cell {pos}")));
    }
    Ok(())
}

/// A step function on `G` constant on every resolution-`N` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Grid1DRepr", into = "Grid1DRepr")]
pub struct GridFunction1D {
    resolution: u32,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Grid1DRepr {
    resolution: u32,
    values: Vec<f64>,
}

impl TryFrom<Grid1DRepr> for GridFunction1D {
    type Error = Error;
    fn try_from(r: Grid1DRepr) -> Result<Self> {
        GridFunction1D::new(r.resolution, r.values)
    }
}

impl From<GridFunction1D> for Grid1DRepr {
    fn from(g: GridFunction1D) -> Self {
        Grid1DRepr {
            resolution: g.resolution,
            values: g.values,
        }
    }
}

impl GridFunction1D {
    pub fn new(resolution: u32, values: Vec<f64>) -> Result<Self> {
        check_grid_resolution(resolution, MAX_GRID_RESOLUTION_1D)?;
        if values.len() != 1usize << resolution {
            return Err(Error::param(
                "values",
                format!("expected {} values, got {}", 1usize << resolution, values.len()),
            ));
        }
        check_finite(&values)?;
        Ok(GridFunction1D { resolution, values })
    }

    pub fn constant(resolution: u32, c: f64) -> Result<Self> {
        check_grid_resolution(resolution, MAX_GRID_RESOLUTION_1D)?;
        Self::new(resolution, vec![c; 1usize << resolution])
    }

    /// Samples `f` at every cell.
    pub fn from_fn(resolution: u32, mut f: impl FnMut(BitPoint) -> f64) -> Result<Self> {
        check_grid_resolution(resolution, MAX_GRID_RESOLUTION_1D)?;
        let values = (0..1usize << resolution)
            .map(|i| f(BitPoint { index: i, resolution }))
            .collect();
        Self::new(resolution, values)
    }

    /// Indicator of the dyadic interval `I_n(x)`.
    pub fn indicator(x: BitPoint, n: u32) -> Result<Self> {
        let range = x.interval_range(n)?;
        Self::from_fn(x.resolution, |p| if range.contains(&p.index) { 1.0 } else { 0.0 })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, x: BitPoint) -> Result<f64> {
        if x.resolution != self.resolution {
            return Err(Error::ResolutionMismatch {
                left: x.resolution,
                right: self.resolution,
            });
        }
        Ok(self.values[x.index])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `‖f‖_p`; pass `f64::INFINITY` for the sup-norm.
    pub fn norm(&self, p: f64) -> Result<f64> {
        lp_norm(&self.values, 1.0 / self.values.len() as f64, p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.resolution, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch {
                left: self.resolution,
                right: other.resolution,
            });
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.resolution, values)
    }

    /// `f ∘ τ_A`.
    pub fn compose_tau(&self, a: u32) -> Result<Self> {
        if a > self.resolution {
            return Err(Error::ResolutionExceeded {
                what: "tau order",
                value: a as u64,
                limit: self.resolution as u64,
            });
        }
        let values = (0..self.values.len())
            .map(|i| self.values[tau_index(a, i, self.resolution)])
            .collect();
        Ok(GridFunction1D {
            resolution: self.resolution,
            values,
        })
    }

    /// One value per line, in cell-index order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let values = read_csv_values(r)?;
        let resolution = resolution_from_len(values.len(), 1)?;
        Self::new(resolution, values)
    }
}

/// A step function on `G²`, constant on every product of resolution-`N` cells.
///
/// Values are stored row-major with the `x` cell index as the row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Grid2DRepr", into = "Grid2DRepr")]
pub struct GridFunction2D {
    resolution: u32,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Grid2DRepr {
    resolution: u32,
    values: Vec<Vec<f64>>,
}

impl TryFrom<Grid2DRepr> for GridFunction2D {
    type Error = Error;
    fn try_from(r: Grid2DRepr) -> Result<Self> {
        let side = 1usize << r.resolution.min(MAX_GRID_RESOLUTION_2D + 1);
        if r.values.len() != side || r.values.iter().any(|row| row.len() != side) {
            return Err(Error::param("values", "rows must form a 2^N x 2^N matrix"));
        }
        GridFunction2D::new(r.resolution, r.values.into_iter().flatten().collect())
    }
}

impl From<GridFunction2D> for Grid2DRepr {
    fn from(g: GridFunction2D) -> Self {
        let side = g.side();
        Grid2DRepr {
            resolution: g.resolution,
            values: g.values.chunks(side).map(|c| c.to_vec()).collect(),
        }
    }
}

impl GridFunction2D {
    pub fn new(resolution: u32, values: Vec<f64>) -> Result<Self> {
        check_grid_resolution(resolution, MAX_GRID_RESOLUTION_2D)?;
        let n = 1usize << (2 * resolution);
        if values.len() != n {
            return Err(Error::param(
                "values",
                format!("expected {n} values, got {}", values.len()),
            ));
        }
        check_finite(&values)?;
        Ok(GridFunction2D { resolution, values })
    }

    pub fn constant(resolution: u32, c: f64) -> Result<Self> {
        check_grid_resolution(resolution, MAX_GRID_RESOLUTION_2D)?;
        Self::new(resolution, vec![c; 1usize << (2 * resolution)])
    }

    pub fn from_fn(resolution: u32, mut f: impl FnMut(BitPoint, BitPoint) -> f64) -> Result<Self> {
        check_grid_resolution(resolution, MAX_GRID_RESOLUTION_2D)?;
        let side = 1usize << resolution;
        let mut values = Vec::with_capacity(side * side);
        for ix in 0..side {
            let x = BitPoint { index: ix, resolution };
            for iy in 0..side {
                values.push(f(x, BitPoint { index: iy, resolution }));
            }
        }
        Self::new(resolution, values)
    }

    /// `F(x, y) = g(x) h(y)`.
    pub fn separable(g: &GridFunction1D, h: &GridFunction1D) -> Result<Self> {
        if g.resolution != h.resolution {
            return Err(Error::ResolutionMismatch {
                left: g.resolution,
                right: h.resolution,
            });
        }
        check_grid_resolution(g.resolution, MAX_GRID_RESOLUTION_2D)?;
        let values = g
            .values
            .iter()
            .flat_map(|&a| h.values.iter().map(move |&b| a * b))
            .collect();
        Self::new(g.resolution, values)
    }

    pub(crate) fn from_raw(resolution: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), 1usize << (2 * resolution));
        GridFunction2D { resolution, values }
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Cells per axis.
    pub fn side(&self) -> usize {
        1usize << self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.side() + iy]
    }

    pub fn row(&self, ix: usize) -> &[f64] {
        let side = self.side();
        &self.values[ix * side..(ix + 1) * side]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn norm(&self, p: f64) -> Result<f64> {
        lp_norm(&self.values, 1.0 / self.values.len() as f64, p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.resolution, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch {
                left: self.resolution,
                right: other.resolution,
            });
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.resolution, values)
    }

    /// Largest absolute difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch {
                left: self.resolution,
                right: other.resolution,
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// One value per line, row-major cell-index order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let values = read_csv_values(r)?;
        let resolution = resolution_from_len(values.len(), 2)?;
        Self::new(resolution, values)
    }
}

fn check_grid_resolution(resolution: u32, max: u32) -> Result<()> {
    if resolution > max {
        return Err(Error::Budget {
            what: "grid resolution",
            required: resolution as u128,
            limit: max as u128,
        });
    }
    Ok(())
}

fn read_csv_values<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: `{t}` is not a number", lineno + 1)))?;
        values.push(v);
    }
    Ok(values)
}

fn resolution_from_len(len: usize, dims: u32) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() || !len.trailing_zeros().is_multiple_of(dims) {
        return Err(Error::Parse(format!(
            "{len} values do not form a {dims}-dimensional dyadic grid"
        )));
    }
    Ok(len.trailing_zeros() / dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(bits: &[u8]) -> BitPoint {
        BitPoint::from_bits(bits).unwrap()
    }

    #[test]
    fn group_add_examples() {
        let x = pt(&[1, 0, 1, 1, 0]);
        let zero = BitPoint::zero(5).unwrap();
        assert_eq!(group_add(x, zero).unwrap(), x);
        assert_eq!(group_add(x, x).unwrap(), zero);
        let e0 = BitPoint::unit(0, 5).unwrap();
        let e1 = BitPoint::unit(1, 5).unwrap();
        assert_eq!(group_add(e0, e1).unwrap().bits(), vec![1, 1, 0, 0, 0]);
        assert!(matches!(
            group_add(x, BitPoint::zero(4).unwrap()),
            Err(Error::ResolutionMismatch { .. })
        ));
    }

    #[test]
    fn group_add_is_abelian_exhaustive_small() {
        for n in 1..=4u32 {
            let all: Vec<_> = (0..1usize << n).map(|i| BitPoint::from_index(i, n).unwrap()).collect();
            for &a in &all {
                for &b in &all {
                    assert_eq!(group_add(a, b).unwrap(), group_add(b, a).unwrap());
                    for &c in &all {
                        let l = group_add(group_add(a, b).unwrap(), c).unwrap();
                        let r = group_add(a, group_add(b, c).unwrap()).unwrap();
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn rademacher_examples() {
        assert_eq!(rademacher(0, BitPoint::zero(4).unwrap()).unwrap(), 1);
        assert_eq!(rademacher(1, BitPoint::unit(1, 4).unwrap()).unwrap(), -1);
        assert_eq!(rademacher(2, pt(&[0, 0, 1, 0])).unwrap(), -1);
        assert!(rademacher(4, pt(&[0, 0, 1, 0])).is_err());
    }

    #[test]
    fn tau_examples() {
        let x = pt(&[1, 0, 1, 1, 0, 1]);
        assert_eq!(tau(1, x).unwrap(), x);
        assert_eq!(tau(0, x).unwrap(), x);
        assert_eq!(tau(2, pt(&[1, 0, 0, 0])).unwrap().bits(), vec![0, 1, 0, 0]);
        assert_eq!(tau(3, pt(&[1, 1, 0, 0, 0])).unwrap().bits(), vec![0, 1, 1, 0, 0]);
        assert!(tau(7, x).is_err());
        for a in 0..=6 {
            assert_eq!(tau(a, tau(a, x).unwrap()).unwrap(), x);
        }
    }

    #[test]
    fn tau_is_a_cell_permutation() {
        let n = 7;
        for a in 0..=n {
            let mut seen = vec![false; 1 << n];
            for i in 0..1usize << n {
                let j = tau_index(a, i, n);
                assert!(!seen[j]);
                seen[j] = true;
            }
        }
    }

    #[test]
    fn intervals_nest_and_have_dyadic_measure() {
        let x = pt(&[1, 0, 1, 1, 0, 0, 1]);
        let mut prev = x.interval_range(0).unwrap();
        assert_eq!(prev, 0..128);
        for n in 1..=7 {
            let r = x.interval_range(n).unwrap();
            assert!(prev.start <= r.start && r.end <= prev.end);
            assert!(r.contains(&x.index()));
            assert_eq!(r.len(), 1 << (7 - n));
            prev = r;
        }
        assert!(x.interval_range(8).is_err());
    }

    #[test]
    fn bits_roundtrip_and_coords() {
        for i in 0..64usize {
            let p = BitPoint::from_index(i, 6).unwrap();
            assert_eq!(BitPoint::from_bits(&p.bits()).unwrap(), p);
            let c = p.coords();
            for k in 0..6 {
                assert_eq!((c >> k) & 1, p.bit(k) as usize);
            }
        }
        assert_eq!(BitPoint::unit(2, 5).unwrap().leading_zeros(), 2);
        assert_eq!(BitPoint::zero(5).unwrap().leading_zeros(), 5);
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(GridFunction1D::constant(6, 1.0).unwrap().integrate(), 1.0);
        for n in 0..=6 {
            let ind = GridFunction1D::indicator(BitPoint::zero(6).unwrap(), n).unwrap();
            assert_eq!(ind.integrate(), 2f64.powi(-(n as i32)));
        }
        let g = GridFunction2D::constant(3, 2.5).unwrap();
        assert_eq!(g.integrate(), 2.5);
    }

    #[test]
    fn norm_examples() {
        let one = GridFunction1D::constant(5, 1.0).unwrap();
        for p in [0.5, 1.0, 2.0, 7.0, f64::INFINITY] {
            assert_eq!(one.norm(p).unwrap(), 1.0);
        }
        let ind = GridFunction1D::indicator(BitPoint::zero(5).unwrap(), 2).unwrap();
        assert_eq!(ind.norm(1.0).unwrap(), 0.25);
        assert!(ind.norm(0.0).is_err());
        assert!(ind.norm(-1.0).is_err());
        assert!(ind.norm(f64::NAN).is_err());
    }

    #[test]
    fn tau_preserves_integrals() {
        let f = GridFunction1D::from_fn(8, |x| ((x.index() * 37 + 11) % 17) as f64 - 8.0).unwrap();
        for a in 0..=8 {
            assert_eq!(f.compose_tau(a).unwrap().integrate(), f.integrate());
        }
    }

    #[test]
    fn grid_serialization() {
        let f = GridFunction1D::from_fn(3, |x| x.index() as f64 * 0.5).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(GridFunction1D::read_csv(&buf[..]).unwrap(), f);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.starts_with("{\"resolution\":3,\"values\":[0.0,0.5"));
        assert_eq!(serde_json::from_str::<GridFunction1D>(&json).unwrap(), f);
        assert!(serde_json::from_str::<GridFunction1D>("{\"resolution\":2,\"values\":[1,2]}").is_err());

        let g = GridFunction2D::from_fn(2, |x, y| (x.index() * 4 + y.index()) as f64).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<GridFunction2D>(&json).unwrap(), g);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(GridFunction2D::read_csv(&buf[..]).unwrap(), g);
        assert!(GridFunction2D::read_csv(&b"1\n2\n"[..]).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridFunction1D::new(3, vec![0.0; 7]).is_err());
        assert!(GridFunction1D::new(1, vec![0.0, f64::NAN]).is_err());
        assert!(matches!(
            GridFunction2D::constant(MAX_GRID_RESOLUTION_2D + 1, 0.0),
            Err(Error::Budget { .. })
        ));
    }
}
