//! The divergence construction for gauges growing faster than `√u`.
//!
//! A schedule `A_1 < A_2 < …` fixes the orders `N_A = 4^A + 4^{A-1} + … + 1`.
//! Component `f_j` places `sgn D^κ_{N_{A_j}}` on a family of dyadic intervals
//! where that kernel is large, scaled by `1/(j+1)`; `f = Σ f_j` vanishes at
//! `0`, and `S^κ_{N_{A_k}}(f; 0) = ∫ f D^κ_{N_{A_k}}` splits by component into
//! the diagonal term `J₁` (`j = k`), the tail `J₂` (`j > k`) and the head `J₃`
//! (`j < k`, identically zero). Every integral is an exact integer cell sum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::GridFunction1D;
use crate::error::{Error, Result};
use crate::kernels::dirichlet_kaczmarz;
use crate::phi::PhiSpec;
use crate::spectral::{analyze_1d_with, SpectralBudget};
use crate::walsh::WalshSystem;

/// Largest grid resolution a construction may use.
pub const MAX_CONSTRUCTION_RESOLUTION: u32 = 24;

/// Default cap for the linear search for `B_k`.
pub const DEFAULT_SEARCH_CAP: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `B_k` minimal with `B_k > 2B_{k-1}` and `ψ(B_k)/B_k > 5k/c′`.
    Faithful,
    /// The schedule is supplied directly.
    DeskScale,
}

/// Where the marker bit of each interval of `f_j` sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerPlacement {
    /// Marker at coordinate `2A − 2l − 1` after `2A − 2l − 1` free
    /// coordinates. On these intervals `|D^κ_{N_A}| = 4^l − (4^l − 1)/3`.
    Tight,
    /// Marker at coordinate `2A − 2l` after `2A − 2l` free coordinates. On
    /// these intervals `|D^κ_{N_A}| = (4^l − 1)/3` for `l ≥ 1`.
    Literal,
}

impl MarkerPlacement {
    fn marker(self, a: u32, l: u32) -> u32 {
        match self {
            MarkerPlacement::Tight => 2 * a - 2 * l - 1,
            MarkerPlacement::Literal => 2 * a - 2 * l,
        }
    }
}

/// A user-supplied schedule for [`Mode::DeskScale`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeskSchedule {
    /// `B_1, …, B_kmax`; `A_k = ⌊k B_k / c′⌋`.
    B(Vec<u64>),
    /// `A_1, …, A_kmax` directly.
    A(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub psi: PhiSpec,
    pub c_prime: f64,
    pub k_max: usize,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<DeskSchedule>,
    #[serde(default = "default_placement")]
    pub placement: MarkerPlacement,
    #[serde(default = "default_cap")]
    pub search_cap: u64,
}

fn default_placement() -> MarkerPlacement {
    MarkerPlacement::Tight
}

fn default_cap() -> u64 {
    DEFAULT_SEARCH_CAP
}

impl CounterexampleSpec {
    pub fn faithful(psi: PhiSpec, c_prime: f64, k_max: usize) -> Self {
        CounterexampleSpec {
            psi,
            c_prime,
            k_max,
            mode: Mode::Faithful,
            schedule: None,
            placement: MarkerPlacement::Tight,
            search_cap: DEFAULT_SEARCH_CAP,
        }
    }

    pub fn desk_scale(psi: PhiSpec, c_prime: f64, schedule: DeskSchedule) -> Self {
        let k_max = match &schedule {
            DeskSchedule::A(a) => a.len(),
            DeskSchedule::B(b) => b.len(),
        };
        CounterexampleSpec {
            psi,
            c_prime,
            k_max,
            mode: Mode::DeskScale,
            schedule: Some(schedule),
            placement: MarkerPlacement::Tight,
            search_cap: DEFAULT_SEARCH_CAP,
        }
    }

    pub fn with_placement(mut self, placement: MarkerPlacement) -> Self {
        self.placement = placement;
        self
    }
}

/// `N_A = (4^{A+1} − 1)/3`, or `None` when it does not fit in 128 bits.
pub fn n_of(a: u32) -> Option<u128> {
    if a > 62 {
        return None;
    }
    Some(((1u128 << (2 * a + 2)) - 1) / 3)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sequences {
    /// `B_k`, absent when the schedule gives `A_k` directly.
    pub b: Vec<Option<u64>>,
    pub a: Vec<u32>,
    pub n: Vec<Option<u128>>,
}

impl Sequences {
    pub fn k_max(&self) -> usize {
        self.a.len()
    }

    /// `A_{k-1}` with `A_0 = 0`.
    fn prev_a(&self, k: usize) -> u32 {
        if k == 1 {
            0
        } else {
            self.a[k - 2]
        }
    }
}

fn a_from_b(k: usize, b: u64, c_prime: f64) -> Result<u32> {
    let a = (k as f64 * b as f64 / c_prime).floor();
    if a > u32::MAX as f64 {
        return Err(Error::Schedule(format!("A_{k} = ⌊{k}·{b}/{}⌋ is out of range", c_prime)));
    }
    Ok(a as u32)
}

/// `B_k`, `A_k`, `N_{A_k}` for `k = 1..=k_max`.
pub fn build_sequences(spec: &CounterexampleSpec) -> Result<Sequences> {
    if !(spec.c_prime > 0.0 && spec.c_prime.is_finite()) {
        return Err(Error::param("c_prime", format!("must be positive, got {}", spec.c_prime)));
    }
    if spec.k_max == 0 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    let (b, a): (Vec<Option<u64>>, Vec<u32>) = match (spec.mode, &spec.schedule) {
        (Mode::Faithful, _) => {
            if !spec.psi.linear_ratio_profile().looks_unbounded(2.0) {
                return Err(Error::param(
                    "psi",
                    format!("`{}` does not show ψ(u)/u → ∞ on the sampling grid", spec.psi),
                ));
            }
            let mut b = Vec::with_capacity(spec.k_max);
            let mut prev = 0u64;
            for k in 1..=spec.k_max {
                let target = 5.0 * k as f64 / spec.c_prime;
                let start = 2 * prev + 1;
                let found = (start..=spec.search_cap.max(start))
                    .take_while(|&c| c <= spec.search_cap)
                    .find(|&c| spec.psi.eval(c as f64) / c as f64 > target)
                    .ok_or(Error::SearchCap {
                        k,
                        cap: spec.search_cap,
                    })?;
                b.push(found);
                prev = found;
            }
            let a = b
                .iter()
                .enumerate()
                .map(|(i, &bk)| a_from_b(i + 1, bk, spec.c_prime))
                .collect::<Result<_>>()?;
            (b.into_iter().map(Some).collect(), a)
        }
        (Mode::DeskScale, Some(DeskSchedule::B(b))) => {
            let mut prev = 0u64;
            for (i, &bk) in b.iter().enumerate() {
                if bk <= 2 * prev {
                    return Err(Error::Schedule(format!("B_{} = {bk} must exceed 2·B_{} = {}", i + 1, i, 2 * prev)));
                }
                prev = bk;
            }
            let a = b
                .iter()
                .enumerate()
                .map(|(i, &bk)| a_from_b(i + 1, bk, spec.c_prime))
                .collect::<Result<_>>()?;
            (b.iter().map(|&x| Some(x)).collect(), a)
        }
        (Mode::DeskScale, Some(DeskSchedule::A(a))) => (vec![None; a.len()], a.clone()),
        (Mode::DeskScale, None) => {
            return Err(Error::Schedule("desk-scale mode needs a B or A schedule".into()));
        }
    };
    if a.len() != spec.k_max {
        return Err(Error::Schedule(format!("schedule has {} entries, k_max is {}", a.len(), spec.k_max)));
    }
    let mut prev = 0;
    for (i, &ak) in a.iter().enumerate() {
        if ak <= prev {
            return Err(Error::Schedule(format!(
                "A_{} = {ak} must exceed A_{} = {prev} (an empty block)",
                i + 1,
                i
            )));
        }
        prev = ak;
    }
    let n = a.iter().map(|&ak| n_of(ak)).collect();
    Ok(Sequences { b, a, n })
}

/// One interval of a component: the free prefix `pattern` of length
/// `marker`, then a one, then zeros up to the component resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub l: u32,
    pub marker: u32,
    pub pattern: u64,
    /// Cell range at the construction resolution.
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub j: usize,
    pub a: u32,
    /// `sgn D^κ_{N_{A_j}}` on the support of `f_j`, `0` elsewhere.
    pub signs: Vec<i8>,
    pub intervals: Vec<Interval>,
    pub supports_disjoint: bool,
}

impl Component {
    pub fn scale(&self) -> f64 {
        1.0 / (self.j as f64 + 1.0)
    }

    pub fn sup_norm(&self) -> f64 {
        if self.signs.iter().any(|&s| s != 0) {
            self.scale()
        } else {
            0.0
        }
    }
}

/// The assembled function `f = Σ f_j` and its components.
#[derive(Clone, Debug, PartialEq)]
pub struct Construction {
    pub resolution: u32,
    pub placement: MarkerPlacement,
    pub sequences: Sequences,
    pub components: Vec<Component>,
    pub f: GridFunction1D,
}

/// Resolution `2A_kmax + 2` needed to represent every component exactly.
pub fn required_resolution(seq: &Sequences) -> u64 {
    2 * *seq.a.last().expect("nonempty schedule") as u64 + 2
}

pub fn build_f(spec: &CounterexampleSpec) -> Result<Construction> {
    let sequences = build_sequences(spec)?;
    let required = required_resolution(&sequences);
    if required > MAX_CONSTRUCTION_RESOLUTION as u64 {
        return Err(Error::Budget {
            what: "construction resolution 2A_kmax + 2",
            required: required as u128,
            limit: MAX_CONSTRUCTION_RESOLUTION as u128,
        });
    }
    let resolution = required as u32;
    let cells = 1usize << resolution;
    let mut components = Vec::with_capacity(sequences.k_max());
    for j in 1..=sequences.k_max() {
        let a = sequences.a[j - 1];
        let own = 2 * a + 2;
        let kernel = dirichlet_kaczmarz(sequences.n[j - 1].expect("a <= 11") as u64, own)?;
        let spread = resolution - own;
        let mut signs = vec![0i8; cells];
        let mut intervals = Vec::new();
        let mut supports_disjoint = true;
        for l in sequences.prev_a(j)..a {
            let marker = spec.placement.marker(a, l);
            for pattern in 0..1u64 << marker {
                let own_index = ((pattern as usize) << (own - marker)) | (1usize << (own - 1 - marker));
                let sign = kernel.values()[own_index].signum() as i8;
                let start = own_index << spread;
                let len = 1usize << spread;
                for s in &mut signs[start..start + len] {
                    if *s != 0 {
                        supports_disjoint = false;
                    }
                    *s = sign;
                }
                intervals.push(Interval {
                    l,
                    marker,
                    pattern,
                    start,
                    len,
                });
            }
        }
        components.push(Component {
            j,
            a,
            signs,
            intervals,
            supports_disjoint,
        });
    }
    let mut values = vec![0.0; cells];
    for c in &components {
        let scale = c.scale();
        for (v, &s) in values.iter_mut().zip(&c.signs) {
            *v += s as f64 * scale;
        }
    }
    Ok(Construction {
        resolution,
        placement: spec.placement,
        sequences,
        components,
        f: GridFunction1D::new(resolution, values)?,
    })
}

/// Per-`k` record of the decomposition at `0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KRecord {
    pub k: usize,
    pub a: u32,
    pub n: u128,
    /// `∫ f_j D^κ_{N_{A_k}}` as an exact numerator over `(j+1)·2^R`, per `j`.
    pub component_numerators: Vec<i128>,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub j3_exact_zero: bool,
    /// `S^κ_{N_{A_k}}(f; 0)` from the exact component integrals.
    pub s: f64,
    /// The same value as `Σ_{n<N} f̂(n)` from the Kaczmarz spectrum.
    pub s_via_coefficients: f64,
    pub s_dominates_lower_bound: bool,
    pub sign_aligned: bool,
    /// Smallest `|D| − (4^l − (4^l − 1)/3)` over the intervals of `f_k`.
    pub kernel_bound_min_slack: i64,
    /// `J₁ k / A_k`.
    pub measured_c0: f64,
    /// `ψ(|S|) − ln N_{A_k}`, the log of `e^{ψ(|S|)}/N_{A_k}`.
    pub log_ratio: f64,
    /// `ψ(|S|) − 2A_k ln 2`.
    pub log_trace_lower: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub psi: String,
    pub c_prime: f64,
    pub mode: Mode,
    pub placement: MarkerPlacement,
    pub resolution: u32,
    pub b: Vec<Option<u64>>,
    pub a: Vec<u32>,
    pub f_at_zero: f64,
    pub component_sup_norms: Vec<f64>,
    pub supports_disjoint: bool,
    pub records: Vec<KRecord>,
}

fn kernel_lower_bound(l: u32) -> i64 {
    let p = 1i64 << (2 * l);
    p - (p - 1) / 3
}

/// Builds `f` and evaluates the decomposition at every `k`.
pub fn evaluate_at_zero(spec: &CounterexampleSpec) -> Result<CounterexampleReport> {
    let built = build_f(spec)?;
    evaluate_construction(spec, &built)
}

pub fn evaluate_construction(spec: &CounterexampleSpec, built: &Construction) -> Result<CounterexampleReport> {
    let r = built.resolution;
    let denom = (r as f64).exp2();
    let budget = SpectralBudget {
        max_resolution_1d: MAX_CONSTRUCTION_RESOLUTION,
        ..SpectralBudget::default()
    };
    let spectrum = analyze_1d_with(&built.f, WalshSystem::Kaczmarz, &budget)?;
    let mut records = Vec::with_capacity(built.components.len());
    for k in 1..=built.components.len() {
        let a = built.sequences.a[k - 1];
        let n = built.sequences.n[k - 1].expect("bounded by resolution");
        let kernel = dirichlet_kaczmarz(n as u64, r)?;
        let d = kernel.values();
        let numerators: Vec<i128> = built
            .components
            .iter()
            .map(|c| {
                c.signs
                    .par_iter()
                    .zip(d.par_iter())
                    .map(|(&s, &v)| s as i128 * v as i128)
                    .sum()
            })
            .collect();
        let value = |j: usize| numerators[j - 1] as f64 / ((j as f64 + 1.0) * denom);
        let j1 = value(k);
        let j2 = (k + 1..=built.components.len()).fold(0.0, |acc, j| acc + value(j).abs());
        let j3 = (1..k).fold(0.0, |acc, j| acc + value(j).abs());
        let j3_exact_zero = numerators[..k - 1].iter().all(|&x| x == 0);
        let s = (1..=built.components.len()).fold(0.0, |acc, j| acc + value(j));
        let s_via_coefficients = spectrum.coefficients[..n as usize].iter().fold(0.0, |acc, c| acc + c);

        let fk = &built.components[k - 1];
        let sign_aligned = fk
            .intervals
            .iter()
            .all(|iv| (iv.start..iv.start + iv.len).all(|c| fk.signs[c] as i64 * d[c] >= 0));
        let kernel_bound_min_slack = fk
            .intervals
            .iter()
            .flat_map(|iv| (iv.start..iv.start + iv.len).map(move |c| (iv.l, c)))
            .map(|(l, c)| d[c].abs() - kernel_lower_bound(l))
            .min()
            .unwrap_or(0);
        let psi_s = spec.psi.eval(s.abs());
        records.push(KRecord {
            k,
            a,
            n,
            component_numerators: numerators.clone(),
            j1,
            j2,
            j3,
            j3_exact_zero,
            s,
            s_via_coefficients,
            s_dominates_lower_bound: s.abs() >= j1 - j2 - j3,
            sign_aligned,
            kernel_bound_min_slack,
            measured_c0: j1 * k as f64 / a as f64,
            log_ratio: psi_s - (n as f64).ln(),
            log_trace_lower: psi_s - 2.0 * a as f64 * std::f64::consts::LN_2,
        });
    }
    Ok(CounterexampleReport {
        psi: spec.psi.to_string(),
        c_prime: spec.c_prime,
        mode: spec.mode,
        placement: built.placement,
        resolution: r,
        b: built.sequences.b.clone(),
        a: built.sequences.a.clone(),
        f_at_zero: built.f.values()[0],
        component_sup_norms: built.components.iter().map(Component::sup_norm).collect(),
        supports_disjoint: built.components.iter().all(|c| c.supports_disjoint),
        records,
    })
}

/// Suggested `c′` from a desk-scale run: `c₀ (1 − J₂/J₁)` measured at `k = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub c0: f64,
    pub j2_slack: f64,
    pub suggested_c_prime: f64,
}

pub fn calibrate_c_prime(psi: &PhiSpec, schedule: &[u32], placement: MarkerPlacement) -> Result<Calibration> {
    let spec = CounterexampleSpec::desk_scale(psi.clone(), 1.0, DeskSchedule::A(schedule.to_vec()))
        .with_placement(placement);
    let report = evaluate_at_zero(&spec)?;
    let first = &report.records[0];
    let j2_slack = if first.j1 > 0.0 { first.j2 / first.j1 } else { 1.0 };
    Ok(Calibration {
        c0: first.measured_c0,
        j2_slack,
        suggested_c_prime: first.measured_c0 * (1.0 - j2_slack),
    })
}

/// Growth of the two-dimensional mean at `(0, 0)` for `F(x, y) = f(x) f(y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorPoint {
    pub k: usize,
    pub n: u128,
    /// `S_{N,N}(F; 0, 0) = S_N(f; 0)²`.
    pub s_tensor: f64,
    /// `φ(|S_{N,N}|) − ln N`: log of the largest single term of the mean over `N`.
    pub log_last_term: f64,
    /// `ln((1/N) Σ_{i=1}^N e^{φ(|S_{i,i}(F;0,0)|)})`.
    pub log_mean: f64,
    /// `ψ(|S_N(f; 0)|) − 2A_k ln 2`.
    pub log_comparator: f64,
    pub overflow: bool,
}

/// Checks `φ(u²) = ψ(u)` on the sampling grid.
pub fn gauges_consistent(psi: &PhiSpec, phi: &PhiSpec) -> bool {
    crate::phi::log_grid()
        .into_iter()
        .filter(|&u| u <= 1e6)
        .all(|u| {
            let (a, b) = (phi.eval(u * u), psi.eval(u));
            (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
        })
}

/// The two-dimensional trace at `(0, 0)` computed from one-dimensional
/// partial sums: `S_{i,i}(F; 0, 0) = S_i(f; 0)²`.
pub fn tensor_divergence(spec: &CounterexampleSpec, built: &Construction, phi: &PhiSpec) -> Result<Vec<TensorPoint>> {
    if !gauges_consistent(&spec.psi, phi) {
        return Err(Error::param("phi", format!("φ(u²) ≠ ψ(u) for φ = `{phi}`, ψ = `{}`", spec.psi)));
    }
    let budget = SpectralBudget {
        max_resolution_1d: MAX_CONSTRUCTION_RESOLUTION,
        ..SpectralBudget::default()
    };
    let spectrum = analyze_1d_with(&built.f, WalshSystem::Kaczmarz, &budget)?;
    let mut out = Vec::new();
    for (k, (&a, n)) in built.sequences.a.iter().zip(&built.sequences.n).enumerate() {
        let n = n.expect("bounded by resolution");
        let mut partial = 0.0;
        let mut lse = f64::NEG_INFINITY;
        for i in 1..=n as usize {
            partial += spectrum.coefficients[i - 1];
            let e = phi.eval(partial * partial);
            let m = lse.max(e);
            lse = if m == f64::NEG_INFINITY {
                e
            } else {
                m + ((lse - m).exp() + (e - m).exp()).ln()
            };
        }
        let s = partial;
        let s_tensor = s * s;
        let ln_n = (n as f64).ln();
        let log_last_term = phi.eval(s_tensor) - ln_n;
        out.push(TensorPoint {
            k: k + 1,
            n,
            s_tensor,
            log_last_term,
            log_mean: lse - ln_n,
            log_comparator: spec.psi.eval(s.abs()) - 2.0 * a as f64 * std::f64::consts::LN_2,
            overflow: lse - ln_n > f64::MAX.ln(),
        });
    }
    Ok(out)
}
