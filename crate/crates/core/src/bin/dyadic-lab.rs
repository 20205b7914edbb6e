use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyadic_lab::harness::{self, exit, ExperimentConfig, ExperimentKind, HarnessError, OutputFormat};

#[derive(Parser)]
#[command(name = "dyadic-lab", version, about = "Walsh-Paley and Walsh-Kaczmarz experiments on the dyadic group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file and/or key=value pairs.
    Run(RunArgs),
    /// Dirichlet, Fejér, identity and kernel-product tables.
    Kernels(KernelArgs),
    /// Strong means of diagonal partial sums of a seeded random field.
    StrongMeans(StrongArgs),
    /// The one-dimensional divergence construction evaluated at 0.
    Counterexample(CounterexampleArgs),
}

#[derive(Args)]
struct Common {
    /// Output format.
    #[arg(long = "out", default_value = "csv")]
    format: OutputFormat,
    /// Destination file (standard output when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    budget_cells: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment kind; may also come from the config.
    experiment_kind: Option<String>,
    /// Parameter overrides, `key=value`.
    pairs: Vec<String>,
    #[arg(long)]
    experiment: Option<String>,
    /// Config file: flat `key=value` text or JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Destination file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    budget_cells: Option<u64>,
}

#[derive(Args)]
struct KernelArgs {
    /// dirichlet, fejer, identity or glukhov.
    #[arg(long, default_value = "dirichlet")]
    op: String,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    nmax: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    resolution: Option<u32>,
    /// paley, kaczmarz or both.
    #[arg(long)]
    system: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct StrongArgs {
    /// exp, phi or pblock.
    #[arg(long, default_value = "exp")]
    mode: String,
    /// Exponent scale for `exp`, block order for `pblock`.
    #[arg(long = "A")]
    a: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    phi: Option<String>,
    /// Comma-separated exponents for `pblock`.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    resolution: Option<u32>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    system: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    cprime: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    /// faithful or desk-scale.
    #[arg(long, default_value = "faithful")]
    mode: String,
    /// Desk-scale A schedule, comma-separated.
    #[arg(long)]
    a: Option<String>,
    /// Desk-scale B schedule, comma-separated.
    #[arg(long)]
    b: Option<String>,
    /// tight or literal.
    #[arg(long)]
    placement: Option<String>,
    /// Two-dimensional gauge for the tensor trace.
    #[arg(long)]
    phi: Option<String>,
    #[command(flatten)]
    common: Common,
}

fn with_common(mut cfg: ExperimentConfig, c: Common, params: Vec<(&str, Option<String>)>) -> ExperimentConfig {
    for (k, v) in params {
        if let Some(v) = v {
            cfg.params.insert(k.to_string(), v);
        }
    }
    cfg.format = c.format;
    cfg.out = c.output;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    if let Some(cells) = c.budget_cells {
        cfg.budgets.cells = cells;
    }
    cfg
}

fn s<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|v| v.to_string())
}

fn from_run(mut args: RunArgs) -> Result<ExperimentConfig, HarnessError> {
    if let Some(first) = args.experiment_kind.take_if(|k| k.contains('=')) {
        args.pairs.insert(0, first);
    }
    let mut cfg = match &args.config {
        Some(path) => Some(ExperimentConfig::from_path(path)?),
        None => None,
    };
    let kind = match (&args.experiment, &args.experiment_kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(HarnessError::Config(format!("experiment given twice: `{a}` and `{b}`")));
        }
        (Some(k), _) | (None, Some(k)) => Some(k.parse::<ExperimentKind>()?),
        (None, None) => None,
    };
    let mut cfg = match (cfg.take(), kind) {
        (Some(mut c), Some(k)) => {
            c.experiment = k;
            c
        }
        (Some(c), None) => c,
        (None, Some(k)) => ExperimentConfig::new(k),
        (None, None) => ExperimentConfig::from_pairs(args.pairs.iter().map(String::as_str))?,
    };
    if args.config.is_some() || args.experiment.is_some() || args.experiment_kind.is_some() {
        for pair in &args.pairs {
            cfg.set(pair)?;
        }
    }
    if let Some(out) = args.out {
        cfg.out = Some(out);
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if let Some(cells) = args.budget_cells {
        cfg.budgets.cells = cells;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn config(command: Command) -> Result<ExperimentConfig, HarnessError> {
    match command {
        Command::Run(args) => from_run(args),
        Command::Kernels(k) => {
            let base = ExperimentConfig::new(ExperimentKind::Kernels);
            let params = vec![
                ("op", Some(k.op)),
                ("p", s(k.p)),
                ("nmax", s(k.nmax)),
                ("n", s(k.n)),
                ("resolution", s(k.resolution)),
                ("system", k.system),
            ];
            Ok(with_common(base, k.common, params))
        }
        Command::StrongMeans(m) => {
            let base = ExperimentConfig::new(ExperimentKind::StrongMeans);
            let params = vec![
                ("mode", Some(m.mode)),
                ("A", m.a),
                ("n", s(m.n)),
                ("phi", m.phi),
                ("p", m.p),
                ("resolution", s(m.resolution)),
                ("decay", s(m.decay)),
                ("system", m.system),
            ];
            Ok(with_common(base, m.common, params))
        }
        Command::Counterexample(c) => {
            let base = ExperimentConfig::new(ExperimentKind::Counterexample);
            let params = vec![
                ("psi", c.psi),
                ("cprime", s(c.cprime)),
                ("kmax", s(c.kmax)),
                ("mode", Some(c.mode)),
                ("a", c.a),
                ("b", c.b),
                ("placement", c.placement),
                ("phi", c.phi),
            ];
            Ok(with_common(base, c.common, params))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let err = HarnessError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(exit::CONFIG as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let code = match config(cli.command) {
        Ok(cfg) => harness::run(&cfg),
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
