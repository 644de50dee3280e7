mod output;
mod parse;
mod tables;

use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ks2_core::approximations::{relative_errors, ApproxBundle};
use ks2_core::equal_sample::dkwm_margin;
use ks2_core::lattice::{
    inside_pvalue_k, nearest_achievable, oracle_pvalue, two_sided_pvalue_k, upper_bound_k,
    PValueOptions,
};
use ks2_core::scan::{r_max_scan, ScanConfig, DKWM_EQUAL_THRESHOLD};
use ks2_core::{Method, PValue, Policy, Precision, SamplePair};
use num_rational::Ratio;

use output::{Format, OutputRow};
use tables::{TableArgs, TableName};

#[derive(Parser)]
#[command(name = "ks2", version, about = "Exact two-sample Kolmogorov-Smirnov tail probabilities and DKWM checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pr(D_{m,n} >= d) with the DKWM bound and asymptotic approximations.
    Pvalue {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
        /// Lattice index: d = k / lcm(m, n).
        #[arg(long, conflicts_with = "d", required_unless_present = "d")]
        k: Option<u64>,
        /// Statistic as p/q or a decimal (read exactly).
        #[arg(long, value_parser = parse::statistic)]
        d: Option<Ratio<u64>>,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = PrecisionArg::Auto)]
        precision: PrecisionArg,
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
    /// Reproduce one of the tables.
    Table {
        #[arg(value_enum)]
        name: TableName,
        /// Range of m, as lo..hi (inclusive) or a single value.
        #[arg(long, value_parser = parse::range)]
        m: Option<RangeInclusive<u64>>,
        /// Range of n, as lo..hi (inclusive) or a single value.
        #[arg(long, value_parser = parse::range)]
        n: Option<RangeInclusive<u64>>,
        /// Largest partner size for the best-n tables.
        #[arg(long, default_value_t = 200)]
        n_max: u64,
        /// Explicit rows: comma-separated values (or m:n:k triples for approx).
        #[arg(long, value_parser = parse::rows)]
        rows: Option<parse::RowList>,
        /// Allow scans beyond desk scale.
        #[arg(long)]
        long: bool,
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
    /// Check the DKWM inequality against the known regions.
    CheckDkwm {
        /// Equal sample sizes, as lo..hi or a single value.
        #[arg(long, value_parser = parse::range, required_unless_present = "pairs", conflicts_with = "pairs")]
        n: Option<RangeInclusive<u64>>,
        /// Unequal pairs, e.g. 1:2,1:3,2:3.
        #[arg(long, value_parser = parse::pairs)]
        pairs: Option<parse::PairList>,
        #[arg(long)]
        long: bool,
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Inside,
    Outside,
    Gk,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecisionArg {
    Auto,
    Exact,
    Float,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NotAchievable(String),
    Resource(String),
    Contradiction(String),
    Io(io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::NotAchievable(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Contradiction(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s)
            | CliError::NotAchievable(s)
            | CliError::Resource(s)
            | CliError::Contradiction(s) => f.write_str(s),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ks2_core::Error> for CliError {
    fn from(e: ks2_core::Error) -> Self {
        match e {
            ks2_core::Error::Domain(s) => CliError::Usage(s),
            ks2_core::Error::Resource(s) => CliError::Resource(s),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

pub fn not_achievable(pair: &SamplePair, k: u64) -> CliError {
    let (lo, hi) = nearest_achievable(pair, k);
    let near: Vec<String> = [lo, hi].iter().flatten().map(|k| k.to_string()).collect();
    CliError::NotAchievable(format!(
        "k = {k} is not an achievable value of D*L for {pair} (L = {}); nearest achievable k: {}",
        pair.lcm(),
        near.join(", ")
    ))
}

fn emit(rows: &[OutputRow], format: Format) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    output::write_rows(&mut lock, rows, format)?;
    lock.flush()?;
    Ok(())
}

fn cmd_pvalue(
    m: u64,
    n: u64,
    k: Option<u64>,
    d: Option<Ratio<u64>>,
    method: MethodArg,
    precision: PrecisionArg,
) -> Result<OutputRow, CliError> {
    let pair = SamplePair::new(m, n)?;
    let k = match (k, d) {
        (Some(k), _) => k,
        (None, Some(d)) => {
            let k = pair.index_for(d)?;
            if Ratio::new(k, pair.lcm()) != d {
                eprintln!("note: d = {d} is not a multiple of 1/{}; using k = {k}", pair.lcm());
            }
            k
        }
        (None, None) => unreachable!("clap requires --k or --d"),
    };
    if k == 0 || k > pair.lcm() {
        return Err(CliError::Usage(format!("k = {k} must lie in 1..={}", pair.lcm())));
    }
    if !pair.is_achievable(k) {
        return Err(not_achievable(&pair, k));
    }
    let precision = match precision {
        PrecisionArg::Auto => Precision::auto_for(&pair),
        PrecisionArg::Exact => Precision::Exact,
        PrecisionArg::Float => Precision::Float,
    };
    let opts = |policy| PValueOptions {
        policy,
        precision: Some(precision),
        ..Default::default()
    };
    let pv = match method {
        MethodArg::Auto => two_sided_pvalue_k(&pair, k, &opts(Policy::Auto))?,
        MethodArg::Inside => two_sided_pvalue_k(&pair, k, &opts(Policy::ForceInside))?,
        MethodArg::Outside => two_sided_pvalue_k(&pair, k, &opts(Policy::ForceOutside))?,
        MethodArg::Gk => two_sided_pvalue_k(&pair, k, &opts(Policy::ForceGk))?,
        MethodArg::Oracle => oracle_pvalue(&pair, Ratio::new(k, pair.lcm()))?,
    };
    let alternate = alternate(&pair, k, &pv, precision);
    let bundle = ApproxBundle::new(&pair, k)?;
    let errs = relative_errors(&pair, k, &pv, alternate.as_ref().map(PValue::value)).ok();
    Ok(OutputRow::new()
        .int("m", m)
        .int("n", n)
        .int("k", k)
        .ratio("d", Ratio::new(k, pair.lcm()))
        .num("M", bundle.m_stat)
        .text("method", pv.method().as_str())
        .text("precision", if pv.exact().is_some() { "exact" } else { "float" })
        .prob("pv", &pv)
        .num("dkwm", bundle.dkwm)
        .num("beta", bundle.beta)
        .num("spli", bundle.s_pli)
        .opt_num("reler_dkwm", errs.map(|e| e.reler_dkwm))
        .opt_num("reler_spli", errs.map(|e| e.reler_spli))
        .text("alt_method", alternate.as_ref().map_or("NA", |a| a.method().as_str()))
        .opt_num("reler_methods", errs.and_then(|e| e.reler_methods)))
}

/// A second, independent evaluation of the same probability when one is
/// available.
fn alternate(pair: &SamplePair, k: u64, pv: &PValue, precision: Precision) -> Option<PValue> {
    match pv.method() {
        Method::UpperBound => None,
        Method::Inside if 2 * k > pair.lcm() => Some(upper_bound_k(pair, k, precision)),
        Method::Inside if pair.m() == pair.n() => {
            two_sided_pvalue_k(pair, k, &PValueOptions { policy: Policy::ForceGk, ..Default::default() }).ok()
        }
        Method::Inside => None,
        Method::Outside | Method::Gk | Method::Oracle => Some(inside_pvalue_k(pair, k, precision)),
    }
}

fn cmd_check(
    n: Option<RangeInclusive<u64>>,
    pairs: Option<Vec<(u64, u64)>>,
    long: bool,
    cfg: &ScanConfig,
) -> Result<(Vec<OutputRow>, Vec<String>), CliError> {
    let mut rows = Vec::new();
    let mut contradictions = Vec::new();
    if let Some(r) = n {
        if *r.start() == 0 {
            return Err(CliError::Usage("n must be positive".into()));
        }
        let cost: f64 = r.clone().map(|n| (n as f64).powi(3)).sum();
        tables::guard(cost, long, "m = n check")?;
        let ns: Vec<u64> = r.collect();
        for rec in cfg.parallelism.map(&ns, |&n| dkwm_margin(n)) {
            let expected_hold = rec.n >= DKWM_EQUAL_THRESHOLD;
            if rec.holds_dkwm != expected_hold {
                contradictions.push(format!("n = {}", rec.n));
            }
            let m_stat = rec.k_max as f64 / (2.0 * rec.n as f64).sqrt();
            rows.push(
                OutputRow::new()
                    .int("m", rec.n)
                    .int("n", rec.n)
                    .int("k_max", rec.k_max)
                    .ratio("d_max", Ratio::new(rec.k_max, rec.n))
                    .num("M", m_stat)
                    .num("r_max", 1.0 + rec.delta_n)
                    .num("margin", rec.delta_n)
                    .text("verdict", verdict(rec.holds_dkwm))
                    .text("expected", verdict(expected_hold)),
            );
        }
    }
    for (m, n) in pairs.unwrap_or_default() {
        let pair = SamplePair::new(m, n)?;
        tables::guard(tables::pair_cost(m, n), long, "pair check")?;
        let s = r_max_scan(&pair, cfg);
        let holds = s.holds_dkwm();
        let expected = expected_pair(m, n);
        if expected.is_some_and(|e| e != holds) {
            contradictions.push(format!("({m},{n})"));
        }
        let r = &s.record;
        rows.push(
            OutputRow::new()
                .int("m", m)
                .int("n", n)
                .int("k_max", r.k_max)
                .ratio("d_max", r.d_max())
                .num("M", pair.m_statistic(r.k_max))
                .num("r_max", r.r_max)
                .num("margin", r.r_max - 1.0)
                .text("verdict", verdict(holds))
                .text("expected", expected.map_or("unknown", verdict)),
        );
    }
    Ok((rows, contradictions))
}

fn verdict(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "fails"
    }
}

/// Known DKWM status of a pair: `m = n` fails below 458; for unequal sizes
/// up to 200 it fails only for (1,2), (1,3), (2,3); it holds for n = 2m up to
/// m = 300.
fn expected_pair(m: u64, n: u64) -> Option<bool> {
    let (a, b) = (m.min(n), m.max(n));
    if a == b {
        Some(a >= DKWM_EQUAL_THRESHOLD)
    } else if b <= 200 {
        Some(!matches!((a, b), (1, 2) | (1, 3) | (2, 3)))
    } else if b == 2 * a && a <= 300 {
        Some(true)
    } else {
        None
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("KS2_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| CliError::Usage(format!("KS2_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = ScanConfig::default();
    match cli.command {
        Command::Pvalue { m, n, k, d, method, precision, format } => {
            let row = cmd_pvalue(m, n, k, d, method, precision)?;
            emit(&[row], format)
        }
        Command::Table { name, m, n, n_max, rows, long, format } => {
            let args = TableArgs { m, n, n_max, rows: rows.map(|r| r.0), long };
            emit(&tables::build(name, &args, &cfg)?, format)
        }
        Command::CheckDkwm { n, pairs, long, format } => {
            let (rows, contradictions) = cmd_check(n, pairs.map(|p| p.0), long, &cfg)?;
            emit(&rows, format)?;
            if contradictions.is_empty() {
                Ok(())
            } else {
                Err(CliError::Contradiction(format!(
                    "verdict contradicts the known region for {}",
                    contradictions.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
