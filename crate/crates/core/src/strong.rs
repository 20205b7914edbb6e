//! Strong (Marcinkiewicz-type) means of two-dimensional diagonal partial sums.
//!
//! All means are accumulated in one pass over the incremental diagonal sums
//! `S_{l,l} f`, cell by cell. Exponential gauges keep a log-sum-exp beside the
//! plain sum so an overflowing mean is still reported (as a logarithm) and
//! flagged instead of saturating silently.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::approx::ApproxProfile;
use crate::dyadic::GridFunction2D;
use crate::error::{Error, Result};
use crate::phi::PhiSpec;
use crate::spectral::{DiagonalSums, SpectralBudget};
use crate::walsh::WalshSystem;

/// Walsh system and cost caps for a diagonal sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepConfig {
    pub system: WalshSystem,
    pub budget: SpectralBudget,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            system: WalshSystem::Kaczmarz,
            budget: SpectralBudget::default(),
        }
    }
}

impl SweepConfig {
    pub fn with_system(system: WalshSystem) -> Self {
        SweepConfig {
            system,
            ..SweepConfig::default()
        }
    }
}

/// Runs `visit(l, S_{l,l} f)` for `l = 1..=n_max`.
fn sweep(
    f: &GridFunction2D,
    n_max: u64,
    cfg: &SweepConfig,
    mut visit: impl FnMut(u64, &GridFunction2D),
) -> Result<()> {
    let mut sums = DiagonalSums::new(f, n_max, cfg.system, &cfg.budget)?;
    while let Some((l, s)) = sums.advance() {
        visit(l as u64, s);
    }
    Ok(())
}

fn log_expm1(e: f64) -> f64 {
    if e <= 0.0 {
        f64::NEG_INFINITY
    } else if e < 30.0 {
        e.exp_m1().ln()
    } else {
        e + (-(-e).exp()).ln_1p()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// Sup norm of a strong mean at one order `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSample {
    pub n: u64,
    /// `+∞` when the mean overflowed on some cell.
    pub sup: f64,
    /// `ln sup`; finite whenever some term is nonzero, even after overflow.
    pub log_sup: f64,
    pub overflow: bool,
}

/// Samples of one strong-mean sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongTrace {
    pub samples: Vec<MeanSample>,
    /// Largest `l` whose term is nonzero on some cell (0 if none).
    pub last_nonzero_term: u64,
    /// Pointwise mean at the last checkpoint (may contain `+∞`).
    pub final_mean: Vec<f64>,
}

/// `(1/n) Σ_{l=1}^n (e^{g(|S_{l,l} f − f|)} − 1)` at every checkpoint, where
/// `g` is the exponent gauge.
pub fn exp_gauge_trace(
    f: &GridFunction2D,
    exponent: impl Fn(f64) -> f64 + Sync,
    checkpoints: &[u64],
    cfg: &SweepConfig,
) -> Result<StrongTrace> {
    check_checkpoints(f, checkpoints)?;
    let n_max = *checkpoints.last().unwrap();
    let cells = f.values().len();
    let mut sum = vec![0.0f64; cells];
    let mut lse = vec![f64::NEG_INFINITY; cells];
    let mut samples = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let mut last_nonzero_term = 0;
    sweep(f, n_max, cfg, |l, s| {
        let any_nonzero = sum
            .par_iter_mut()
            .zip(lse.par_iter_mut())
            .zip(s.values().par_iter().zip(f.values().par_iter()))
            .map(|((acc, log_acc), (&sv, &fv))| {
                let e = exponent((sv - fv).abs());
                if e == 0.0 {
                    return false;
                }
                *acc += e.exp_m1();
                *log_acc = log_add_exp(*log_acc, log_expm1(e));
                true
            })
            .reduce(|| false, |a, b| a || b);
        if any_nonzero {
            last_nonzero_term = l;
        }
        if l == checkpoints[next] {
            samples.push(sample_means(l, &sum, &lse));
            next += 1;
        }
    })?;
    let n = n_max as f64;
    Ok(StrongTrace {
        samples,
        last_nonzero_term,
        final_mean: sum.iter().map(|v| v / n).collect(),
    })
}

fn sample_means(n: u64, sum: &[f64], lse: &[f64]) -> MeanSample {
    let overflow = sum.iter().any(|v| !v.is_finite());
    let sup = if overflow {
        f64::INFINITY
    } else {
        sum.iter().fold(0.0f64, |m, &v| m.max(v)) / n as f64
    };
    let log_sup = lse.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - (n as f64).ln();
    MeanSample {
        n,
        sup,
        log_sup,
        overflow,
    }
}

fn check_checkpoints(f: &GridFunction2D, checkpoints: &[u64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::param("n", "at least one order is required"));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("n", "orders must be positive and strictly increasing"));
    }
    let side = f.side() as u64;
    let last = *checkpoints.last().unwrap();
    if last > side {
        return Err(Error::ResolutionExceeded {
            what: "strong mean order",
            value: last,
            limit: side,
        });
    }
    Ok(())
}

/// `(1/n) Σ_{l=1}^n (e^{A|S_{l,l} f − f|^{1/2}} − 1)` at each checkpoint.
pub fn strong_exp_trace(f: &GridFunction2D, a: f64, checkpoints: &[u64], cfg: &SweepConfig) -> Result<StrongTrace> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("A", format!("must be positive, got {a}")));
    }
    exp_gauge_trace(f, |d| a * d.sqrt(), checkpoints, cfg)
}

/// The exponential strong mean at order `n` and its sup norm.
pub fn strong_exp_mean(f: &GridFunction2D, a: f64, n: u64, system: WalshSystem) -> Result<(Vec<f64>, MeanSample)> {
    let t = strong_exp_trace(f, a, &[n], &SweepConfig::with_system(system))?;
    Ok((t.final_mean, t.samples[0]))
}

/// `(1/n) Σ_{l=1}^n (e^{φ(|S_{l,l} f − f|)} − 1)` for the Kaczmarz system.
pub fn strong_phi_trace(f: &GridFunction2D, phi: &PhiSpec, checkpoints: &[u64], cfg: &SweepConfig) -> Result<StrongTrace> {
    exp_gauge_trace(f, |d| phi.eval(d), checkpoints, cfg)
}

pub fn strong_phi_mean(f: &GridFunction2D, phi: &PhiSpec, n: u64) -> Result<MeanSample> {
    Ok(strong_phi_trace(f, phi, &[n], &SweepConfig::default())?.samples[0])
}

/// `(1/n) Σ_{l=1}^n (√E^{(1)}_l + √E^{(2)}_l)` with dyadic-floor surrogates.
pub fn approximation_comparator(profile: &ApproxProfile, n: u64) -> Result<f64> {
    let mut total = 0.0;
    for l in 1..=n {
        let (e1, e2, _) = profile.at_order(l)?;
        total += e1.sqrt() + e2.sqrt();
    }
    Ok(total / n as f64)
}

fn safe_ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Strong-mean samples against comparators, with a constant fitted at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongMeanReport {
    pub mode: String,
    pub system: WalshSystem,
    pub parameter: String,
    pub n: Vec<u64>,
    pub sup: Vec<f64>,
    pub log_sup: Vec<f64>,
    pub overflow: Vec<bool>,
    pub rhs: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Order at which the constant was fitted.
    pub fit_n: u64,
    pub fitted_constant: f64,
    /// Orders after the fit where `sup > fitted_constant · rhs`.
    pub violations: Vec<u64>,
}

impl StrongMeanReport {
    /// Builds the report, fitting `c = sup/rhs` at `fit_n`.
    pub fn fit(
        mode: &str,
        system: WalshSystem,
        parameter: String,
        samples: &[MeanSample],
        rhs: Vec<f64>,
        fit_n: u64,
    ) -> Result<Self> {
        if samples.len() != rhs.len() {
            return Err(Error::param("rhs", "one comparator per sample is required"));
        }
        let ratio: Vec<f64> = samples.iter().zip(&rhs).map(|(s, &r)| safe_ratio(s.sup, r)).collect();
        let fit_at = samples
            .iter()
            .position(|s| s.n == fit_n)
            .ok_or_else(|| Error::param("fit_n", format!("{fit_n} is not a sampled order")))?;
        let fitted_constant = ratio[fit_at];
        let violations = samples
            .iter()
            .zip(&rhs)
            .skip(fit_at + 1)
            .filter(|(s, &r)| !matches!(s.sup.partial_cmp(&(fitted_constant * r)), Some(Ordering::Less | Ordering::Equal)))
            .map(|(s, _)| s.n)
            .collect();
        Ok(StrongMeanReport {
            mode: mode.to_string(),
            system,
            parameter,
            n: samples.iter().map(|s| s.n).collect(),
            sup: samples.iter().map(|s| s.sup).collect(),
            log_sup: samples.iter().map(|s| s.log_sup).collect(),
            overflow: samples.iter().map(|s| s.overflow).collect(),
            rhs,
            ratio,
            fit_n,
            fitted_constant,
            violations,
        })
    }
}

/// Exponential strong means at `checkpoints` against the best-approximation
/// comparator, with `c(f, A)` fitted at the first checkpoint.
pub fn exp_mean_report(f: &GridFunction2D, a: f64, checkpoints: &[u64], cfg: &SweepConfig) -> Result<StrongMeanReport> {
    let trace = strong_exp_trace(f, a, checkpoints, cfg)?;
    let profile = ApproxProfile::new(f)?;
    let rhs = checkpoints.iter().map(|&n| approximation_comparator(&profile, n)).collect::<Result<Vec<_>>>()?;
    StrongMeanReport::fit("exp", cfg.system, format!("A={a}"), &trace.samples, rhs, checkpoints[0])
}

/// Sup over the grid of `{2^{-A} Σ_{l=2^A}^{2^{A+1}-1} |S_{l,l} f|^p}^{1/p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockMean {
    pub p: f64,
    pub block: u32,
    pub sup: f64,
    pub f_sup_norm: f64,
    /// `sup / (‖f‖_∞ (p+1)²)`.
    pub ratio: f64,
}

/// Block `p`-means for several exponents from one sweep.
pub fn strong_p_mean_block(f: &GridFunction2D, ps: &[f64], block: u32, cfg: &SweepConfig) -> Result<Vec<BlockMean>> {
    if let Some(&p) = ps.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::param("p", format!("exponent must be positive, got {p}")));
    }
    if block + 1 > f.resolution() {
        return Err(Error::ResolutionExceeded {
            what: "block index A (needs 2^{A+1} <= 2^N)",
            value: block as u64,
            limit: f.resolution().saturating_sub(1) as u64,
        });
    }
    let lo = 1u64 << block;
    let hi = 2 * lo - 1;
    let cells = f.values().len();
    let mut acc = vec![vec![0.0f64; cells]; ps.len()];
    sweep(f, hi, cfg, |l, s| {
        if l < lo {
            return;
        }
        for (sums, &p) in acc.iter_mut().zip(ps) {
            sums.par_iter_mut()
                .zip(s.values().par_iter())
                .for_each(|(a, &v)| *a += v.abs().powf(p));
        }
    })?;
    let norm = f.sup_norm();
    Ok(ps
        .iter()
        .zip(&acc)
        .map(|(&p, sums)| {
            let sup = sums.iter().fold(0.0f64, |m, &v| m.max(v)) / lo as f64;
            let sup = sup.powf(1.0 / p);
            BlockMean {
                p,
                block,
                sup,
                f_sup_norm: norm,
                ratio: safe_ratio(sup, norm * (p + 1.0).powi(2)),
            }
        })
        .collect())
}

/// `sup (1/n) Σ_{l=1}^n |S_{l,l} f − f|^p` against
/// `(p+1)^{2p} ((1/n) Σ (E^{(1)}_l)^p + (1/n) Σ (E^{(2)}_l)^p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerDeviationCheck {
    pub p: f64,
    pub n: u64,
    pub lhs: f64,
    pub rhs_shape: f64,
    pub ratio: f64,
}

pub fn power_deviation_check(f: &GridFunction2D, ps: &[f64], n: u64, cfg: &SweepConfig) -> Result<Vec<PowerDeviationCheck>> {
    if let Some(&p) = ps.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::param("p", format!("exponent must be positive, got {p}")));
    }
    check_checkpoints(f, &[n])?;
    let cells = f.values().len();
    let mut acc = vec![vec![0.0f64; cells]; ps.len()];
    sweep(f, n, cfg, |_, s| {
        for (sums, &p) in acc.iter_mut().zip(ps) {
            sums.par_iter_mut()
                .zip(s.values().par_iter().zip(f.values().par_iter()))
                .for_each(|(a, (&sv, &fv))| *a += (sv - fv).abs().powf(p));
        }
    })?;
    let profile = ApproxProfile::new(f)?;
    let orders = (1..=n).map(|l| profile.at_order(l)).collect::<Result<Vec<_>>>()?;
    Ok(ps
        .iter()
        .zip(&acc)
        .map(|(&p, sums)| {
            let lhs = sums.iter().fold(0.0f64, |m, &v| m.max(v)) / n as f64;
            let e_sum: f64 = orders.iter().map(|(e1, e2, _)| e1.powf(p) + e2.powf(p)).sum();
            let rhs_shape = (p + 1.0).powf(2.0 * p) * e_sum / n as f64;
            PowerDeviationCheck {
                p,
                n,
                lhs,
                rhs_shape,
                ratio: safe_ratio(lhs, rhs_shape),
            }
        })
        .collect())
}
