//! Walsh-Paley and Walsh-Kaczmarz systems.
//!
//! Both systems contain the same characters; within every dyadic block
//! `[2^A, 2^{A+1})` the Kaczmarz enumeration is the Paley one with the low `A`
//! index bits reversed. Kaczmarz functions are evaluated through that
//! permutation so all transforms can share the Paley butterfly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dyadic::{reverse_bits, BitPoint, GridFunction1D};
use crate::error::{Error, Result};

/// Which enumeration of the Walsh characters a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalshSystem {
    Paley,
    Kaczmarz,
}

impl WalshSystem {
    pub const ALL: [WalshSystem; 2] = [WalshSystem::Paley, WalshSystem::Kaczmarz];

    pub fn name(self) -> &'static str {
        match self {
            WalshSystem::Paley => "paley",
            WalshSystem::Kaczmarz => "kaczmarz",
        }
    }

    /// Paley index of the `n`-th function of this system.
    #[inline]
    pub fn paley_index(self, n: u64) -> u64 {
        match self {
            WalshSystem::Paley => n,
            WalshSystem::Kaczmarz => kaczmarz_to_paley_index(n),
        }
    }
}

impl fmt::Display for WalshSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for WalshSystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paley" | "w" => Ok(WalshSystem::Paley),
            "kaczmarz" | "kappa" => Ok(WalshSystem::Kaczmarz),
            other => Err(Error::Parse(format!("unknown Walsh system `{other}`"))),
        }
    }
}

/// A nonnegative index together with its binary structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicIndex(pub u64);

impl DyadicIndex {
    /// Binary digit `n_i`.
    pub fn digit(self, i: u32) -> u8 {
        if i >= 64 {
            0
        } else {
            ((self.0 >> i) & 1) as u8
        }
    }

    /// `|n|`, the position of the leading binary digit. Undefined for zero.
    pub fn order(self) -> Result<u32> {
        if self.0 == 0 {
            return Err(Error::param("n", "the order |n| is undefined for n = 0"));
        }
        Ok(63 - self.0.leading_zeros())
    }
}

impl From<u64> for DyadicIndex {
    fn from(n: u64) -> Self {
        DyadicIndex(n)
    }
}

/// Maps a Kaczmarz index to the Paley index of the same function.
///
/// `2^A + j ↦ 2^A + rev_A(j)`. An involution that fixes `0` and every dyadic block.
#[inline]
pub fn kaczmarz_to_paley_index(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let a = 63 - n.leading_zeros();
    let j = n - (1u64 << a);
    (1u64 << a) | reverse_bits(j as usize, a) as u64
}

/// `(-1)^{popcount(n & coords)}` where `coords` packs `x_k` at bit `k`.
#[inline(always)]
pub(crate) fn paley_sign(n: u64, coords: usize) -> i8 {
    if (n & coords as u64).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

fn check_index(n: u64, resolution: u32) -> Result<()> {
    if resolution < 64 && n >> resolution != 0 {
        return Err(Error::ResolutionExceeded {
            what: "Walsh index",
            value: n,
            limit: (1u64 << resolution) - 1,
        });
    }
    Ok(())
}

/// `w_n(x) = Π r_k(x)^{n_k}`.
pub fn walsh_paley(n: u64, x: BitPoint) -> Result<i8> {
    check_index(n, x.resolution())?;
    Ok(paley_sign(n, x.coords()))
}

/// `κ_n(x)`, evaluated as the Paley function with the block-reversed index.
pub fn walsh_kaczmarz(n: u64, x: BitPoint) -> Result<i8> {
    check_index(n, x.resolution())?;
    Ok(paley_sign(kaczmarz_to_paley_index(n), x.coords()))
}

pub fn walsh(system: WalshSystem, n: u64, x: BitPoint) -> Result<i8> {
    match system {
        WalshSystem::Paley => walsh_paley(n, x),
        WalshSystem::Kaczmarz => walsh_kaczmarz(n, x),
    }
}

/// Signs of the `n`-th function of `system` on every resolution-`N` cell.
pub fn walsh_signs(system: WalshSystem, n: u64, resolution: u32) -> Result<Vec<i8>> {
    check_index(n, resolution)?;
    let m = system.paley_index(n);
    Ok((0..1usize << resolution)
        .map(|i| paley_sign(m, reverse_bits(i, resolution)))
        .collect())
}

/// The `n`-th function of `system` as a grid function.
pub fn walsh_function(system: WalshSystem, n: u64, resolution: u32) -> Result<GridFunction1D> {
    let signs = walsh_signs(system, n, resolution)?;
    GridFunction1D::new(resolution, signs.into_iter().map(f64::from).collect())
}
