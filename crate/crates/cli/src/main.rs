//! Experiment runner: kernel norm sweeps, collapse searches on the torus and
//! the line, and the property battery. Every run writes a manifest, JSON
//! reports and CSV tables under `<out>/<command>-<config hash>/`.

mod checks;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kcollapse::bandlimited::{nonperiodic_collapse_traced, LambdaProbe, LineInput, LineLimits, NonPeriodicCollapseConfig};
use kcollapse::collapse::{collapse_search, CollapseConfig, CollapseReport, Probe, SearchLimits, TestFunction};
use kcollapse::symbols::make_vallee;
use kcollapse::torus::quasi_norm_default;
use kcollapse::{CutoffProfile, Error, ExponentPair, HomogeneousSymbol};
use serde::{Deserialize, Serialize};

use crate::run::Run;

#[derive(Parser)]
#[command(name = "kcollapse", version, about = "Certify the collapse of L_p K-functionals for 0 < p < 1")]
struct Cli {
    /// Cap on worker threads for the parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Root directory for run outputs.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep ‖V_n‖_p over dyadic n and fit the log-log slope.
    KernelNorms(KernelNormsArgs),
    /// Search for a collapse certificate on the torus.
    Collapse(CollapseArgs),
    /// Search for a collapse certificate on the line.
    Bandlimited(BandlimitedArgs),
    /// Run the quadrature and sampling property battery.
    Checks(ChecksArgs),
}

#[derive(Args)]
struct KernelNormsArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Exponents; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    p: Vec<f64>,
    /// Dyadic range LO..HI of n.
    #[arg(long, default_value = "16..1024")]
    n: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymbolArg {
    /// (iξ)^α, d = 1.
    Weyl,
    /// |ξ|^α.
    Laplacian,
}

fn make_symbol(kind: SymbolArg, alpha: f64) -> kcollapse::Result<HomogeneousSymbol> {
    match kind {
        SymbolArg::Weyl => HomogeneousSymbol::weyl(alpha),
        SymbolArg::Laplacian => HomogeneousSymbol::fractional_laplacian(alpha),
    }
}

#[derive(Args)]
struct CollapseArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_enum)]
    symbol: Option<SymbolArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    max_m: Option<u32>,
    #[arg(long)]
    max_n: Option<u32>,
    /// Use f = Σ_{j≤L} 2^{-j} cos(2^j x) with L levels.
    #[arg(long)]
    lacunary: Option<u32>,
    /// Run the p = 1 control instead, where no collapse is expected.
    #[arg(long)]
    contrast_p1: bool,
}

#[derive(Args)]
struct BandlimitedArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    input: Option<InputArg>,
    #[arg(long)]
    mu: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    max_m: Option<u32>,
    #[arg(long)]
    max_n: Option<u32>,
    #[arg(long)]
    max_lambda: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputArg {
    Bump,
    Annulus,
}

#[derive(Args)]
struct ChecksArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "default")]
    sizes: checks::Sizes,
}

/// A failure together with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::NotInClass(_) | Error::OriginEvaluation => 2,
            Error::NonConvergedQuadrature { .. } => 3,
            Error::BudgetExhausted { .. } => 4,
            Error::TailNotNegligible { .. } => 5,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: format!("i/o error: {e}"),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("bad config {}: {e}", path.display())))
}

fn parse_range(s: &str) -> Result<(usize, usize), Failure> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| invalid(format!("expected LO..HI, got {s}")))?;
    let lo: usize = lo.trim().parse().map_err(|_| invalid(format!("bad range start {lo}")))?;
    let hi: usize = hi.trim().parse().map_err(|_| invalid(format!("bad range end {hi}")))?;
    if lo == 0 || lo > hi || !lo.is_power_of_two() || !hi.is_power_of_two() {
        return Err(invalid("range ends must be powers of two with LO ≤ HI"));
    }
    Ok((lo, hi))
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

#[derive(Serialize)]
struct KernelNormsConfig {
    d: usize,
    p: Vec<f64>,
    n_lo: usize,
    n_hi: usize,
}

#[derive(Serialize)]
struct NormRow {
    config_hash: String,
    d: usize,
    p: f64,
    n: usize,
    norm: f64,
    slope: f64,
}

fn kernel_norms(args: KernelNormsArgs, root: &PathBuf) -> Result<(), Failure> {
    let (n_lo, n_hi) = parse_range(&args.n)?;
    if args.d != 1 && args.d != 2 {
        return Err(invalid("d must be 1 or 2"));
    }
    if args.p.iter().any(|&p| !(p > 0.0) || p.is_infinite()) {
        return Err(invalid("every p must lie in (0, ∞)"));
    }
    let cfg = KernelNormsConfig {
        d: args.d,
        p: args.p.clone(),
        n_lo,
        n_hi,
    };
    let mut run = Run::create(root, "kernel-norms", &cfg)?;
    let ns: Vec<usize> = std::iter::successors(Some(n_lo), |&n| (n < n_hi).then_some(2 * n)).collect();
    let logn: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
    let v = CutoffProfile;
    let mut rows = Vec::new();
    for &p in &cfg.p {
        let norms: Vec<f64> = ns
            .iter()
            .map(|&n| quasi_norm_default(&make_vallee(n, &v, cfg.d)?, p))
            .collect::<kcollapse::Result<_>>()?;
        let s = slope(&logn, &norms.iter().map(|x| x.log2()).collect::<Vec<_>>());
        println!("d={} p={p}: fitted slope {s:.4} (rate d(1-1/p) = {:.4})", cfg.d, cfg.d as f64 * (1.0 - 1.0 / p));
        for (&n, &norm) in ns.iter().zip(&norms) {
            rows.push(NormRow {
                config_hash: run.hash().to_string(),
                d: cfg.d,
                p,
                n,
                norm,
                slope: s,
            });
        }
    }
    run.write_csv("norms.csv", &rows)?;
    let dir = run.finish()?;
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct ProbeRow {
    config_hash: String,
    domain: String,
    mu: usize,
    lambda: Option<u32>,
    m: u32,
    n: u32,
    i1: f64,
    i2: f64,
    k_upper: f64,
    theory_i1: f64,
    theory_i2: f64,
    accepted: bool,
}

fn probe_rows(hash: &str, domain: &str, probes: &[Probe]) -> Vec<ProbeRow> {
    probes
        .iter()
        .map(|p| ProbeRow {
            config_hash: hash.to_string(),
            domain: domain.to_string(),
            mu: p.mu,
            lambda: p.lambda,
            m: p.m,
            n: p.n,
            i1: p.i1,
            i2: p.i2,
            k_upper: p.k_upper,
            theory_i1: p.theory_i1,
            theory_i2: p.theory_i2,
            accepted: p.accepted,
        })
        .collect()
}

fn default_collapse_config() -> CollapseConfig {
    CollapseConfig {
        d: 1,
        f: TestFunction::Lacunary { levels: 6 },
        exponents: ExponentPair { p: 0.5, q: 1.0 },
        symbol: HomogeneousSymbol::weyl(0.5).expect("valid order"),
        delta: 1.0,
        epsilon: 1e-2,
        mu: 16,
        limits: SearchLimits {
            max_m: 12,
            max_n: 16,
            max_mu: 4096,
        },
        contrast: false,
    }
}

fn collapse_config(args: &CollapseArgs) -> Result<CollapseConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => load_json(path)?,
        None => default_collapse_config(),
    };
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if let Some(p) = args.p {
        cfg.exponents.p = p;
    }
    if let Some(q) = args.q {
        cfg.exponents.q = q;
    }
    if args.symbol.is_some() || args.alpha.is_some() {
        let kind = args.symbol.unwrap_or(SymbolArg::Weyl);
        cfg.symbol = make_symbol(kind, args.alpha.unwrap_or(cfg.symbol.alpha()))?;
    }
    if let Some(x) = args.delta {
        cfg.delta = x;
    }
    if let Some(x) = args.epsilon {
        cfg.epsilon = x;
    }
    if let Some(x) = args.mu {
        cfg.mu = x;
    }
    if let Some(x) = args.max_m {
        cfg.limits.max_m = x;
    }
    if let Some(x) = args.max_n {
        cfg.limits.max_n = x;
    }
    if let Some(levels) = args.lacunary {
        cfg.f = TestFunction::Lacunary { levels };
    }
    if args.contrast_p1 {
        cfg.exponents.p = 1.0;
        cfg.contrast = true;
    }
    ExponentPair::new(cfg.exponents.p, cfg.exponents.q)?;
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(r: &CollapseReport) {
    println!(
        "domain {}: {} K ≤ {:.4e} (ε = {:.1e}) at μ={} m={} n={} M={}",
        r.domain,
        if r.certified { "certified," } else { "not certified, best" },
        r.k_upper,
        r.epsilon,
        r.mu,
        r.m,
        r.n,
        r.big_m
    );
    println!("  I1 = {:.4e}, I2 = {:.4e}, approximation error = {:.4e}", r.i1, r.i2, r.approx_err);
    if let (Some(l), Some(j1), Some(j2)) = (r.lambda, r.j1, r.j2) {
        println!("  λ = {l}, J1 = {j1:.4e}, J2 = {j2:.4e}");
    }
    println!("  identity deviation {:.2e}, {} probes", r.identity_deviation, r.probes.len());
}

/// Writes the report and probe table whether or not the search certified.
fn finish_search(mut run: Run, result: kcollapse::Result<CollapseReport>, extra: Option<&[LambdaProbe]>) -> Result<(), Failure> {
    let (report, failure) = match result {
        Ok(r) => (r, None),
        Err(Error::BudgetExhausted { leg, report }) => {
            let message = format!("search budget exhausted on the {leg} leg");
            (*report, Some(Failure { code: 4, message }))
        }
        Err(e) => return Err(e.into()),
    };
    print_report(&report);
    run.write_json("report.json", &report)?;
    let rows = probe_rows(run.hash(), &report.domain, &report.probes);
    run.write_csv("probes.csv", &rows)?;
    if let Some(sweep) = extra {
        #[derive(Serialize)]
        struct LambdaRow {
            config_hash: String,
            lambda: u32,
            j2: f64,
        }
        let rows: Vec<LambdaRow> = sweep
            .iter()
            .map(|l| LambdaRow {
                config_hash: run.hash().to_string(),
                lambda: l.lambda,
                j2: l.j2,
            })
            .collect();
        run.write_csv("lambda.csv", &rows)?;
    }
    let dir = run.finish()?;
    println!("wrote {}", dir.display());
    failure.map_or(Ok(()), Err)
}

fn collapse(args: CollapseArgs, root: &PathBuf) -> Result<(), Failure> {
    let cfg = collapse_config(&args)?;
    let run = Run::create(root, "collapse", &cfg)?;
    finish_search(run, collapse_search(&cfg), None)
}

fn bandlimited_config(args: &BandlimitedArgs) -> Result<NonPeriodicCollapseConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => load_json(path)?,
        None => NonPeriodicCollapseConfig {
            input: LineInput::Annulus,
            mu: 2,
            exponents: ExponentPair { p: 0.5, q: 1.0 },
            symbol: HomogeneousSymbol::fractional_laplacian(1.1)?,
            delta: 1.0,
            epsilon: 0.1,
            window: kcollapse::bandlimited::DEFAULT_WINDOW,
            lambda_start: None,
            m_start: None,
            limits: LineLimits {
                max_m: 10,
                max_n: 14,
                max_lambda: 12,
            },
        },
    };
    if let Some(i) = args.input {
        cfg.input = match i {
            InputArg::Bump => LineInput::Bump,
            InputArg::Annulus => LineInput::Annulus,
        };
    }
    if let Some(x) = args.mu {
        cfg.mu = x;
    }
    if let Some(x) = args.p {
        cfg.exponents.p = x;
    }
    if let Some(x) = args.q {
        cfg.exponents.q = x;
    }
    if let Some(a) = args.alpha {
        cfg.symbol = HomogeneousSymbol::fractional_laplacian(a)?;
    }
    if let Some(x) = args.delta {
        cfg.delta = x;
    }
    if let Some(x) = args.epsilon {
        cfg.epsilon = x;
    }
    if let Some(x) = args.window {
        cfg.window = x;
    }
    if let Some(x) = args.max_m {
        cfg.limits.max_m = x;
    }
    if let Some(x) = args.max_n {
        cfg.limits.max_n = x;
    }
    if let Some(x) = args.max_lambda {
        cfg.limits.max_lambda = x;
    }
    ExponentPair::new(cfg.exponents.p, cfg.exponents.q)?;
    cfg.validate()?;
    Ok(cfg)
}

fn bandlimited(args: BandlimitedArgs, root: &PathBuf) -> Result<(), Failure> {
    let cfg = bandlimited_config(&args)?;
    let run = Run::create(root, "bandlimited", &cfg)?;
    match nonperiodic_collapse_traced(&cfg) {
        Ok((report, sweep)) => finish_search(run, Ok(report), Some(&sweep)),
        Err(e) => finish_search(run, Err(e), None),
    }
}

fn run_checks(args: ChecksArgs, root: &PathBuf) -> Result<(), Failure> {
    let cfg = checks::ChecksConfig {
        seed: args.seed,
        sizes: args.sizes,
    };
    let mut run = Run::create(root, "checks", &cfg)?;
    let results = checks::run(&cfg, run.hash())?;
    println!("{:<20} {:>6} {:>12} {:>10}  detail", "check", "result", "value", "limit");
    for r in &results {
        println!(
            "{:<20} {:>6} {:>12.4e} {:>10.1e}  {}",
            r.check,
            if r.passed { "pass" } else { "FAIL" },
            r.value,
            r.limit,
            r.detail
        );
    }
    run.write_json("checks.json", &results)?;
    run.write_csv("checks.csv", &results)?;
    let dir = run.finish()?;
    println!("wrote {}", dir.display());
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} checks failed"),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::KernelNorms(a) => kernel_norms(a, &cli.out),
        Command::Collapse(a) => collapse(a, &cli.out),
        Command::Bandlimited(a) => bandlimited(a, &cli.out),
        Command::Checks(a) => run_checks(a, &cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
