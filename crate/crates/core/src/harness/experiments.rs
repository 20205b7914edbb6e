use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::Value;

use super::table::{json_envelope, Cell, ColumnKind as K, Table};
use super::{Artifact, ExperimentConfig, ExperimentKind, HarnessError, OutputFormat};
use crate::acceptance::{self, AcceptanceReport, CRITERIA};
use crate::approx::ApproxProfile;
use crate::counterexample::{
    build_f, evaluate_construction, required_resolution, tensor_divergence, CounterexampleSpec, DeskSchedule,
    MarkerPlacement, Mode, DEFAULT_SEARCH_CAP,
};
use crate::dyadic::{GridFunction1D, GridFunction2D};
use crate::kernels::{bound_shape, dirichlet, fejer, glukhov_integral_with_budget};
use crate::phi::PhiSpec;
use crate::random::{multiscale_2d, normalize_sup, stream, uniform_1d, uniform_2d};
use crate::reference::for_each_dirichlet_direct;
use crate::spectral::{analyze_1d, analyze_2d, synthesize_1d, synthesize_2d};
use crate::strong::{strong_p_mean_block, strong_phi_trace, exp_mean_report, approximation_comparator, StrongMeanReport, SweepConfig};
use crate::walsh::WalshSystem;

type Res<T> = std::result::Result<T, HarnessError>;

/// Typed access to the parameter map; anything never read is rejected by
/// [`Params::finish`].
struct Params<'a> {
    map: &'a BTreeMap<String, String>,
    read: RefCell<BTreeSet<&'a str>>,
}

impl<'a> Params<'a> {
    fn new(map: &'a BTreeMap<String, String>) -> Self {
        Params {
            map,
            read: RefCell::new(BTreeSet::new()),
        }
    }

    fn raw(&self, key: &'a str) -> Option<&'a str> {
        self.read.borrow_mut().insert(key);
        self.map.get(key).map(String::as_str)
    }

    fn opt<T: FromStr>(&self, key: &'a str) -> Res<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| HarnessError::Config(format!("param `{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn get<T: FromStr>(&self, key: &'a str, default: T) -> Res<T> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &'a str) -> Res<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim()
                            .parse()
                            .map_err(|_| HarnessError::Config(format!("param `{key}`: cannot parse `{item}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn systems(&self, default: &str) -> Res<Vec<WalshSystem>> {
        let v = self.raw("system").unwrap_or(default);
        match v {
            "both" => Ok(WalshSystem::ALL.to_vec()),
            s => s
                .parse()
                .map(|s| vec![s])
                .map_err(|_| HarnessError::Config(format!("param `system`: `{s}` is not paley, kaczmarz or both"))),
        }
    }

    fn system(&self, default: WalshSystem) -> Res<WalshSystem> {
        match self.raw("system") {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| HarnessError::Config(format!("param `system`: `{s}` is not paley or kaczmarz"))),
        }
    }

    fn finish(&self) -> Res<()> {
        let read = self.read.borrow();
        let unknown: Vec<&str> = self
            .map
            .keys()
            .map(String::as_str)
            .filter(|k| !read.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("unknown parameter(s): {}", unknown.join(", "))))
        }
    }
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(key: &str, v: T) -> Res<T> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(HarnessError::Config(format!("param `{key}` must be positive, got {v}")))
    }
}

pub(super) fn dispatch(cfg: &ExperimentConfig) -> Res<Artifact> {
    let p = Params::new(&cfg.params);
    match cfg.experiment {
        ExperimentKind::Kernels => kernels(cfg, p),
        ExperimentKind::Glukhov => {
            let table = glukhov_table(cfg, &p)?;
            emit(cfg, table, None, &[])
        }
        ExperimentKind::Transforms => transforms(cfg, p),
        ExperimentKind::StrongMeans => strong_means(cfg, p),
        ExperimentKind::Approximation => approximation(cfg, p),
        ExperimentKind::Counterexample => counterexample(cfg, p),
        ExperimentKind::Acceptance => acceptance_run(cfg, p),
    }
}

fn emit(cfg: &ExperimentConfig, table: Table, extra: Option<Value>, notes: &[String]) -> Res<Artifact> {
    let text = match cfg.format {
        OutputFormat::Csv => table.to_csv(cfg, notes),
        OutputFormat::Json => json_envelope(cfg, Some(&table), extra),
    };
    Ok(Artifact {
        bytes: text.into_bytes(),
        passed: true,
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn kernels(cfg: &ExperimentConfig, p: Params) -> Res<Artifact> {
    let op = p.raw("op").unwrap_or("dirichlet");
    let table = match op {
        "glukhov" => glukhov_table(cfg, &p)?,
        "dirichlet" | "fejer" => {
            let resolution = p.get("resolution", 6u32)?;
            let n = p.get("n", 16u64)?;
            let systems = p.systems("both")?;
            p.finish()?;
            cfg.budgets.check_resolution("kernel grid", resolution)?;
            cfg.budgets
                .check_cells("kernel grid", (systems.len() as u128) << resolution, 64)?;
            let exact = op == "dirichlet";
            let mut t = Table::new(&[
                ("system", K::Label),
                ("n", K::ExactInteger),
                ("cell", K::ExactInteger),
                ("value", if exact { K::ExactInteger } else { K::Float }),
            ]);
            for system in systems {
                let values: Vec<Cell> = if exact {
                    dirichlet(system, n, resolution)?.values().iter().map(|&v| v.into()).collect()
                } else {
                    fejer(n, system, resolution)?.values().iter().map(|&v| v.into()).collect()
                };
                for (cell, v) in values.into_iter().enumerate() {
                    t.push(vec![system.name().into(), n.into(), cell.into(), v]);
                }
            }
            t
        }
        "identity" => {
            let resolution = p.get("resolution", 10u32)?;
            let nmax = p.get("nmax", 1u64 << resolution.min(10))?;
            let systems = p.systems("both")?;
            p.finish()?;
            cfg.budgets.check_resolution("kernel grid", resolution)?;
            cfg.budgets.check_cells(
                "direct kernel sums",
                (nmax as u128 + 1) << resolution,
                0,
            )?;
            if nmax > 1u64 << resolution {
                return Err(HarnessError::Config(format!(
                    "param `nmax`: {nmax} exceeds 2^{resolution}"
                )));
            }
            let mut t = Table::new(&[
                ("system", K::Label),
                ("n", K::ExactInteger),
                ("equals_direct_sum", K::Boolean),
            ]);
            for system in systems {
                let mut rows = Vec::new();
                let mut failure = None;
                for_each_dirichlet_direct(system, nmax, resolution, |n, direct| {
                    match dirichlet(system, n, resolution) {
                        Ok(k) => rows.push((n, k.values() == direct)),
                        Err(e) => failure = Some(e),
                    }
                });
                if let Some(e) = failure {
                    return Err(e.into());
                }
                for (n, ok) in rows {
                    t.push(vec![system.name().into(), n.into(), ok.into()]);
                }
            }
            t
        }
        other => {
            return Err(HarnessError::Config(format!(
                "param `op`: `{other}` is not dirichlet, fejer, glukhov or identity"
            )))
        }
    };
    emit(cfg, table, None, &[])
}

fn glukhov_table(cfg: &ExperimentConfig, p: &Params) -> Res<Table> {
    let order = positive("p", p.get("p", 2u32)?)?;
    let nmax = positive("nmax", p.get("nmax", 8u32)?)?;
    let systems = p.systems("both")?;
    p.finish()?;
    let budget = cfg.budgets.cells_log2();
    let required = order as u128 * nmax as u128;
    if required > budget as u128 {
        return Err(HarnessError::Budget(format!(
            "kernel-product sweep needs 2^{required} cells, budget is 2^{budget}"
        )));
    }
    cfg.budgets.check_cells("kernel-product sweep", 1u128 << required, 16)?;
    let mut t = Table::new(&[
        ("p", K::ExactInteger),
        ("n", K::ExactInteger),
        ("system", K::Label),
        ("value", K::ExactDyadic),
        ("bound_shape", K::ExactInteger),
        ("ratio", K::Float),
    ]);
    for system in systems {
        for n in 1..=nmax {
            let v = glukhov_integral_with_budget(order, n, system, budget)?;
            let shape = bound_shape(order, system);
            t.push(vec![
                order.into(),
                n.into(),
                system.name().into(),
                v.value().into(),
                Cell::Int(shape as i128),
                (v.value() / shape).into(),
            ]);
        }
    }
    Ok(t)
}

fn transforms(cfg: &ExperimentConfig, p: Params) -> Res<Artifact> {
    let dim = p.get("dim", 1u32)?;
    let resolution = p.get("resolution", 6u32)?;
    let system = p.system(WalshSystem::Paley)?;
    let input: Option<PathBuf> = p.opt("input")?;
    p.finish()?;
    if dim != 1 && dim != 2 {
        return Err(HarnessError::Config(format!("param `dim`: {dim} is not 1 or 2")));
    }
    let read = |path: &PathBuf| {
        std::fs::File::open(path)
            .map(std::io::BufReader::new)
            .map_err(|e| HarnessError::Config(format!("param `input`: {}: {e}", path.display())))
    };
    let mut rng = stream(cfg.seed, 0);
    if dim == 1 {
        let f = match &input {
            Some(path) => GridFunction1D::read_csv(read(path)?)?,
            None => {
                cfg.budgets.check_resolution("transform grid", resolution)?;
                cfg.budgets.check_cells("transform grid", 1u128 << resolution, 24)?;
                uniform_1d(&mut rng, resolution)?
            }
        };
        cfg.budgets.check_resolution("transform grid", f.resolution())?;
        let s = analyze_1d(&f, system)?;
        let back = synthesize_1d(&s)?;
        let err = max_diff(f.values(), back.values());
        let mut t = Table::new(&[("n", K::ExactInteger), ("coefficient", K::Float)]);
        for (n, &c) in s.coefficients.iter().enumerate() {
            t.push(vec![n.into(), c.into()]);
        }
        let summary = serde_json::json!({"spectrum": s, "roundtrip_max_error": err, "parseval_relative_error": parseval(f.values(), s.sum_of_squares())});
        let notes = [format!("ordering: {system}"), format!("roundtrip-max-error: {err:e}")];
        emit(cfg, t, Some(summary), &notes)
    } else {
        let f = match &input {
            Some(path) => GridFunction2D::read_csv(read(path)?)?,
            None => {
                cfg.budgets.check_resolution("transform grid", resolution)?;
                cfg.budgets.check_cells("transform grid", 1u128 << (2 * resolution), 24)?;
                uniform_2d(&mut rng, resolution)?
            }
        };
        cfg.budgets.check_resolution("transform grid", f.resolution())?;
        let s = analyze_2d(&f, system)?;
        let back = synthesize_2d(&s)?;
        let err = max_diff(f.values(), back.values());
        let side = s.side();
        let mut t = Table::new(&[("n", K::ExactInteger), ("m", K::ExactInteger), ("coefficient", K::Float)]);
        for n in 0..side {
            for m in 0..side {
                t.push(vec![n.into(), m.into(), s.at(n, m).into()]);
            }
        }
        let summary = serde_json::json!({"spectrum": s, "roundtrip_max_error": err, "parseval_relative_error": parseval(f.values(), s.sum_of_squares())});
        let notes = [format!("ordering: {system}"), format!("roundtrip-max-error: {err:e}")];
        emit(cfg, t, Some(summary), &notes)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn parseval(values: &[f64], coefficient_energy: f64) -> f64 {
    let energy = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
    if energy == 0.0 {
        coefficient_energy
    } else {
        (energy - coefficient_energy).abs() / energy
    }
}

/// Normalized multiscale field or a CSV input.
fn field_2d(cfg: &ExperimentConfig, p: &Params, default_resolution: u32) -> Res<GridFunction2D> {
    let resolution = p.get("resolution", default_resolution)?;
    let decay = p.get("decay", 0.5f64)?;
    let input: Option<PathBuf> = p.opt("input")?;
    let f = match input {
        Some(path) => {
            let file = std::fs::File::open(&path)
                .map_err(|e| HarnessError::Config(format!("param `input`: {}: {e}", path.display())))?;
            GridFunction2D::read_csv(std::io::BufReader::new(file))?
        }
        None => {
            if !(decay.is_finite() && decay >= 0.0) {
                return Err(HarnessError::Config(format!("param `decay`: {decay} is not a finite nonnegative number")));
            }
            cfg.budgets.check_resolution("field", resolution)?;
            cfg.budgets.check_cells("field", 1u128 << (2 * resolution), 8)?;
            normalize_sup(&multiscale_2d(&mut stream(cfg.seed, 0), resolution, decay)?)?
        }
    };
    cfg.budgets.check_resolution("field", f.resolution())?;
    // Diagonal sweeps hold the field, the running sums and the accumulators.
    cfg.budgets.check_cells("diagonal sweep", 1u128 << (2 * f.resolution()), 48)?;
    Ok(f)
}

fn checkpoints(n: u64) -> Vec<u64> {
    let mut cps: Vec<u64> = (0..64)
        .map(|k| 1u64 << k)
        .skip_while(|&c| c < 8.min(n))
        .take_while(|&c| c <= n)
        .collect();
    if cps.last() != Some(&n) {
        cps.push(n);
    }
    cps
}

fn strong_means(cfg: &ExperimentConfig, p: Params) -> Res<Artifact> {
    let mode = p.raw("mode").unwrap_or("exp");
    let system = p.system(WalshSystem::Kaczmarz)?;
    let sweep = SweepConfig::with_system(system);
    match mode {
        "exp" | "phi" => {
            let a: f64 = p.get("A", 1.0)?;
            let phi: Option<PhiSpec> = if mode == "phi" {
                Some(p.opt::<PhiSpec>("phi")?.unwrap_or_else(PhiSpec::sqrt))
            } else {
                None
            };
            let n = positive("n", p.get("n", 256u64)?)?;
            let f = field_2d(cfg, &p, 8)?;
            p.finish()?;
            if n > 1u64 << f.resolution() {
                return Err(HarnessError::Budget(format!(
                    "n = {n} exceeds 2^{} diagonal sums at this resolution",
                    f.resolution()
                )));
            }
            let cps = checkpoints(n);
            let report: StrongMeanReport = match &phi {
                None => {
                    if !(a.is_finite() && a > 0.0) {
                        return Err(HarnessError::Config(format!("param `A`: {a} is not positive")));
                    }
                    exp_mean_report(&f, a, &cps, &sweep)?
                }
                Some(phi) => {
                    let trace = strong_phi_trace(&f, phi, &cps, &sweep)?;
                    let profile = ApproxProfile::new(&f)?;
                    let rhs = cps
                        .iter()
                        .map(|&n| approximation_comparator(&profile, n))
                        .collect::<crate::Result<Vec<_>>>()?;
                    StrongMeanReport::fit("phi", system, format!("phi={phi}"), &trace.samples, rhs, cps[0])?
                }
            };
            let mut t = Table::new(&[
                ("n", K::ExactInteger),
                ("sup", K::Float),
                ("log_sup", K::Float),
                ("overflow", K::Boolean),
                ("rhs", K::Float),
                ("ratio", K::Float),
            ]);
            for i in 0..report.n.len() {
                t.push(vec![
                    report.n[i].into(),
                    report.sup[i].into(),
                    report.log_sup[i].into(),
                    report.overflow[i].into(),
                    report.rhs[i].into(),
                    report.ratio[i].into(),
                ]);
            }
            let notes = [
                format!("system: {system}"),
                format!("parameter: {}", report.parameter),
                format!("fitted-constant: {} at n={}", report.fitted_constant, report.fit_n),
                format!("violations: {:?}", report.violations),
            ];
            emit(cfg, t, Some(to_json(&report)), &notes)
        }
        "pblock" => {
            let ps: Vec<f64> = p.list("p")?.unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]);
            let block = p.get("A", 4u32)?;
            let f = field_2d(cfg, &p, 8)?;
            p.finish()?;
            if ps.iter().any(|&q| !(q.is_finite() && q >= 1.0)) {
                return Err(HarnessError::Config("param `p`: every exponent must be at least 1".into()));
            }
            let rows = strong_p_mean_block(&f, &ps, block, &sweep)?;
            let mut t = Table::new(&[
                ("p", K::Float),
                ("A", K::ExactInteger),
                ("sup", K::Float),
                ("f_sup_norm", K::Float),
                ("ratio", K::Float),
            ]);
            for r in &rows {
                t.push(vec![r.p.into(), r.block.into(), r.sup.into(), r.f_sup_norm.into(), r.ratio.into()]);
            }
            emit(cfg, t, Some(to_json(&rows)), &[format!("system: {system}")])
        }
        other => Err(HarnessError::Config(format!("param `mode`: `{other}` is not exp, phi or pblock"))),
    }
}

fn approximation(cfg: &ExperimentConfig, p: Params) -> Res<Artifact> {
    let f = field_2d(cfg, &p, 8)?;
    let n = p.get("n", 1u64 << f.resolution())?;
    p.finish()?;
    let profile = ApproxProfile::new(&f)?;
    let mut t = Table::new(&[
        ("l", K::ExactInteger),
        ("E1", K::Float),
        ("E2", K::Float),
        ("E_dyadic", K::Float),
    ]);
    for l in 1..=n {
        let (e1, e2, e) = profile.at_order(l)?;
        t.push(vec![l.into(), e1.into(), e2.into(), e.into()]);
    }
    emit(cfg, t, Some(to_json(&profile)), &[])
}

fn counterexample(cfg: &ExperimentConfig, p: Params) -> Res<Artifact> {
    let psi: PhiSpec = p.opt("psi")?.unwrap_or(PhiSpec::parse("u*log1p(u)")?);
    let c_prime: f64 = p.get("cprime", 0.5)?;
    let mode = p.raw("mode").unwrap_or("faithful");
    let a_list: Option<Vec<u32>> = p.list("a")?;
    let b_list: Option<Vec<u64>> = p.list("b")?;
    let k_max: Option<usize> = p.opt("kmax")?;
    let placement = match p.raw("placement").unwrap_or("tight") {
        "tight" => MarkerPlacement::Tight,
        "literal" => MarkerPlacement::Literal,
        other => return Err(HarnessError::Config(format!("param `placement`: `{other}` is not tight or literal"))),
    };
    let search_cap = p.get("search_cap", DEFAULT_SEARCH_CAP)?;
    let phi: Option<PhiSpec> = p.opt("phi")?;
    p.finish()?;
    if !(c_prime.is_finite() && c_prime > 0.0) {
        return Err(HarnessError::Config(format!("param `cprime`: {c_prime} is not positive")));
    }
    let mut spec = match mode {
        "faithful" => {
            if a_list.is_some() || b_list.is_some() {
                return Err(HarnessError::Config("faithful mode derives the schedule; drop `a`/`b`".into()));
            }
            CounterexampleSpec::faithful(psi, c_prime, k_max.unwrap_or(2))
        }
        "desk" | "desk-scale" | "deskscale" => {
            let schedule = match (a_list, b_list) {
                (Some(a), None) => DeskSchedule::A(a),
                (None, Some(b)) => DeskSchedule::B(b),
                _ => return Err(HarnessError::Config("desk-scale mode needs exactly one of `a` or `b`".into())),
            };
            let spec = CounterexampleSpec::desk_scale(psi, c_prime, schedule);
            if k_max.is_some_and(|k| k != spec.k_max) {
                return Err(HarnessError::Config("param `kmax` disagrees with the schedule length".into()));
            }
            spec
        }
        other => return Err(HarnessError::Config(format!("param `mode`: `{other}` is not faithful or desk-scale"))),
    };
    spec.placement = placement;
    spec.search_cap = search_cap;
    debug_assert!(matches!(spec.mode, Mode::Faithful | Mode::DeskScale));
    let seq = crate::counterexample::build_sequences(&spec)?;
    let resolution = required_resolution(&seq);
    if resolution > cfg.budgets.resolution as u64 {
        return Err(HarnessError::Budget(format!(
            "construction needs resolution {resolution}, budget is {}",
            cfg.budgets.resolution
        )));
    }
    cfg.budgets.check_cells("construction grid", 1u128 << resolution, 32)?;
    let built = build_f(&spec)?;
    let report = evaluate_construction(&spec, &built)?;
    let tensor = phi.map(|phi| tensor_divergence(&spec, &built, &phi)).transpose()?;
    let mut t = Table::new(&[
        ("k", K::ExactInteger),
        ("A", K::ExactInteger),
        ("N", K::ExactInteger),
        ("J1", K::ExactDyadic),
        ("J2", K::ExactDyadic),
        ("J3", K::ExactDyadic),
        ("J3_exact_zero", K::Boolean),
        ("S", K::ExactDyadic),
        ("S_via_coefficients", K::Float),
        ("sign_aligned", K::Boolean),
        ("kernel_bound_min_slack", K::ExactInteger),
        ("measured_c0", K::Float),
        ("log_ratio", K::Float),
        ("log_trace_lower", K::Float),
    ]);
    for r in &report.records {
        t.push(vec![
            r.k.into(),
            r.a.into(),
            r.n.into(),
            r.j1.into(),
            r.j2.into(),
            r.j3.into(),
            r.j3_exact_zero.into(),
            r.s.into(),
            r.s_via_coefficients.into(),
            r.sign_aligned.into(),
            r.kernel_bound_min_slack.into(),
            r.measured_c0.into(),
            r.log_ratio.into(),
            r.log_trace_lower.into(),
        ]);
    }
    let mut notes = vec![
        format!("psi: {}", report.psi),
        format!("cprime: {}", report.c_prime),
        format!("resolution: {}", report.resolution),
    ];
    if let Some(tp) = &tensor {
        for point in tp {
            notes.push(format!(
                "tensor k={} N={} log_mean={} log_last_term={} log_comparator={}",
                point.k, point.n, point.log_mean, point.log_last_term, point.log_comparator
            ));
        }
    }
    let extra = serde_json::json!({"report": report, "tensor": tensor});
    emit(cfg, t, Some(extra), &notes)
}

fn acceptance_run(cfg: &ExperimentConfig, p: Params) -> Res<Artifact> {
    let only: Option<Vec<u32>> = p.list("criteria")?;
    p.finish()?;
    let report = match only {
        None => acceptance::run_all(cfg.seed)?,
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|&&id| !CRITERIA.iter().any(|(c, _)| *c == id)) {
                return Err(HarnessError::Config(format!("param `criteria`: no criterion {bad}")));
            }
            let outcomes = ids
                .iter()
                .map(|&id| acceptance::run_criterion(id, cfg.seed))
                .collect::<crate::Result<Vec<_>>>()?;
            AcceptanceReport {
                seed: cfg.seed,
                outcomes,
            }
        }
    };
    let mut t = Table::new(&[
        ("id", K::ExactInteger),
        ("name", K::Label),
        ("passed", K::Boolean),
        ("detail", K::Label),
    ]);
    for o in &report.outcomes {
        t.push(vec![o.id.into(), o.name.into(), o.passed.into(), o.detail.clone().into()]);
    }
    let mut artifact = emit(cfg, t, Some(to_json(&report)), &[])?;
    artifact.passed = report.all_passed();
    Ok(artifact)
}

#[cfg(test)]
mod tests {
    use super::super::execute;
    use super::*;

    fn csv_rows(text: &str) -> Vec<&str> {
        text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
    }

    #[test]
    fn glukhov_table_has_one_row_per_system_and_block() {
        let cfg = ExperimentConfig::from_pairs(["experiment=glukhov", "p=2", "nmax=8", "system=both"]).unwrap();
        let out = String::from_utf8(execute(&cfg).unwrap().bytes).unwrap();
        assert_eq!(csv_rows(&out).len(), 16);
        assert!(out.contains("p,n,system,value,bound_shape,ratio\n"));
    }

    #[test]
    fn unknown_parameters_are_rejected() {
        let cfg = ExperimentConfig::from_pairs(["experiment=glukhov", "p=2", "nmx=8"]).unwrap();
        let e = execute(&cfg).unwrap_err();
        assert!(matches!(e, HarnessError::Config(ref m) if m.contains("nmx")), "{e}");
    }

    #[test]
    fn budget_violations_are_budget_errors() {
        let cfg = ExperimentConfig::from_pairs(["experiment=glukhov", "p=3", "nmax=9", "budget.cells=1048576"]).unwrap();
        assert!(matches!(execute(&cfg).unwrap_err(), HarnessError::Budget(_)));
        let cfg = ExperimentConfig::from_pairs(["experiment=approximation", "resolution=9", "budget.resolution=8"]).unwrap();
        assert!(matches!(execute(&cfg).unwrap_err(), HarnessError::Budget(_)));
    }

    #[test]
    fn every_experiment_runs_small_in_both_formats() {
        let cases: &[&[&str]] = &[
            &["experiment=kernels", "op=dirichlet", "n=5", "resolution=3"],
            &["experiment=kernels", "op=fejer", "n=5", "resolution=3", "system=paley"],
            &["experiment=kernels", "op=identity", "resolution=4"],
            &["experiment=transforms", "dim=2", "resolution=3"],
            &["experiment=strong-means", "mode=exp", "resolution=4", "n=16"],
            &["experiment=strong-means", "mode=phi", "phi=sqrt", "resolution=4", "n=16"],
            &["experiment=strong-means", "mode=pblock", "resolution=4", "A=2", "p=1,2"],
            &["experiment=approximation", "resolution=4"],
            &["experiment=counterexample", "mode=desk-scale", "a=2,5", "cprime=0.05", "phi=sqrt(u)*log1p(sqrt(u))", "psi=u*log1p(u)"],
            &["experiment=acceptance", "criteria=4,8"],
        ];
        for pairs in cases {
            for format in ["csv", "json"] {
                let mut cfg = ExperimentConfig::from_pairs(pairs.iter().copied()).unwrap();
                cfg.format = format.parse().unwrap();
                let artifact = execute(&cfg).unwrap_or_else(|e| panic!("{pairs:?}: {e}"));
                let text = String::from_utf8(artifact.bytes).unwrap();
                assert!(text.contains(&cfg.digest()), "{pairs:?}");
                if format == "json" {
                    let v: Value = serde_json::from_str(&text).unwrap();
                    assert_eq!(v["seed"], 0);
                }
            }
        }
    }

    #[test]
    fn identity_rows_all_match() {
        let cfg = ExperimentConfig::from_pairs(["experiment=kernels", "op=identity", "resolution=5"]).unwrap();
        let out = String::from_utf8(execute(&cfg).unwrap().bytes).unwrap();
        let rows = csv_rows(&out);
        assert_eq!(rows.len(), 2 * 33);
        assert!(rows.iter().all(|r| r.ends_with(",true")));
    }

    #[test]
    fn checkpoints_are_powers_of_two_then_n() {
        assert_eq!(checkpoints(256), vec![8, 16, 32, 64, 128, 256]);
        assert_eq!(checkpoints(100), vec![8, 16, 32, 64, 100]);
        assert_eq!(checkpoints(4), vec![4]);
    }
}
