//! Builders for the `table` subcommand.

use std::ops::RangeInclusive;

use clap::ValueEnum;
use ks2_core::approximations::{relative_errors, ApproxBundle};
use ks2_core::lattice::{two_sided_pvalue_k, PValueOptions};
use ks2_core::scan::{
    asympt_study, best_n_scan, delta_table, double_table, guarded_round5, pvo_study,
    record_setting, PairScan, ScanConfig,
};
use ks2_core::SamplePair;
use num_rational::Ratio;

use crate::output::OutputRow;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableName {
    /// Inside vs outside method at n = 2m, d = (m+1)/n.
    Pvo,
    /// Exact p-values against the DKWM bound and the plug-in approximation.
    Approx,
    /// DKWM relative error at the 0.05 critical value, m = n - 1.
    Asympt,
    /// Suffix maxima of the m = n margin, with guarded rounding.
    #[value(name = "deltaN")]
    DeltaN,
    /// The m = n margin for small n.
    Deltasmall,
    /// Best partner n for each m (small m).
    D1,
    /// Best partner n for each m (large m), with screening ratios.
    Hth,
    /// r_max at n = 2m with the screened band.
    D2,
}

/// Work estimate above which a scan needs `--long` (roughly ten seconds on
/// one core).
pub const DESK_BUDGET: f64 = 2e9;

#[derive(Debug, Clone, Default)]
pub struct TableArgs {
    pub m: Option<RangeInclusive<u64>>,
    pub n: Option<RangeInclusive<u64>>,
    pub n_max: u64,
    pub rows: Option<Vec<Vec<u64>>>,
    pub long: bool,
}

/// Rough cost of one `r_max` scan: lattice cells times lattice values.
pub fn pair_cost(m: u64, n: u64) -> f64 {
    let p = SamplePair::new(m, n).expect("positive sizes");
    m as f64 * n as f64 * p.lcm() as f64 / 2.0
}

pub fn guard(cost: f64, long: bool, what: &str) -> Result<(), CliError> {
    if cost > DESK_BUDGET && !long {
        return Err(CliError::Resource(format!(
            "{what} is beyond desk scale (estimated work {cost:.1e} > {DESK_BUDGET:.0e}); \
             narrow the range or pass --long"
        )));
    }
    Ok(())
}

const APPROX_ROWS: [(u64, u64, u64); 32] = [
    (40, 40, 12),
    (40, 40, 13),
    (40, 40, 14),
    (40, 40, 15),
    (200, 200, 27),
    (200, 200, 28),
    (200, 200, 32),
    (200, 200, 33),
    (25, 50, 16),
    (25, 50, 17),
    (25, 50, 19),
    (25, 50, 20),
    (39, 40, 456),
    (39, 40, 457),
    (39, 40, 541),
    (39, 40, 542),
    (20, 500, 150),
    (20, 500, 151),
    (20, 500, 179),
    (20, 500, 180),
    (21, 500, 3074),
    (21, 500, 3076),
    (21, 500, 3686),
    (21, 500, 3687),
    (100, 500, 73),
    (100, 500, 74),
    (100, 500, 88),
    (100, 500, 89),
    (400, 600, 104),
    (400, 600, 105),
    (400, 600, 125),
    (400, 600, 126),
];

fn single_column(rows: &Option<Vec<Vec<u64>>>, what: &str) -> Result<Option<Vec<u64>>, CliError> {
    match rows {
        None => Ok(None),
        Some(rows) => rows
            .iter()
            .map(|r| match r.as_slice() {
                [v] => Ok(*v),
                _ => Err(CliError::Usage(format!("--rows for {what} takes single values"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
    }
}

fn pair(m: u64, n: u64) -> Result<SamplePair, CliError> {
    SamplePair::new(m, n).map_err(CliError::from)
}

pub fn build(name: TableName, args: &TableArgs, cfg: &ScanConfig) -> Result<Vec<OutputRow>, CliError> {
    match name {
        TableName::Pvo => pvo(args, cfg),
        TableName::Approx => approx(args),
        TableName::Asympt => asympt(args, cfg),
        TableName::DeltaN => delta_big(args, cfg),
        TableName::Deltasmall => delta_small(args, cfg),
        TableName::D1 => best_n(args, cfg, 3..=99, false),
        TableName::Hth => best_n(args, cfg, 100..=199, true),
        TableName::D2 => doubles(args, cfg),
    }
}

fn pvo(args: &TableArgs, cfg: &ScanConfig) -> Result<Vec<OutputRow>, CliError> {
    let explicit = single_column(&args.rows, "pvo")?;
    let ms: Vec<u64> = match &explicit {
        Some(ms) => ms.clone(),
        None => args.m.clone().unwrap_or(1..=120).collect(),
    };
    if ms.contains(&0) {
        return Err(CliError::Usage("m must be positive".into()));
    }
    guard(ms.iter().map(|&m| 4.0 * (m as f64).powi(3)).sum(), args.long, "pvo table")?;
    let mut rows = pvo_study(&ms, cfg);
    if explicit.is_none() {
        rows = record_setting(&rows);
    }
    Ok(rows
        .iter()
        .map(|r| {
            OutputRow::new()
                .int("m", r.m)
                .int("n", r.n)
                .int("k", r.k)
                .num("pvi", r.pvi)
                .prob("pvo", &r.pvo)
                .num("reler", r.reler)
        })
        .collect())
}

fn approx(args: &TableArgs) -> Result<Vec<OutputRow>, CliError> {
    let specs: Vec<(u64, u64, u64)> = match &args.rows {
        None => APPROX_ROWS.to_vec(),
        Some(rows) => rows
            .iter()
            .map(|r| match r.as_slice() {
                [m, n, k] => Ok((*m, *n, *k)),
                _ => Err(CliError::Usage("--rows for approx takes m:n:k triples".into())),
            })
            .collect::<Result<_, _>>()?,
    };
    let mut out = Vec::new();
    for (m, n, k) in specs {
        let p = pair(m, n)?;
        guard(pair_cost(m, n) / p.lcm() as f64, args.long, "approx row")?;
        if !p.is_achievable(k) {
            return Err(crate::not_achievable(&p, k));
        }
        let pv = two_sided_pvalue_k(&p, k, &PValueOptions::default())?;
        let b = ApproxBundle::new(&p, k)?;
        let e = relative_errors(&p, k, &pv, None).ok();
        out.push(
            OutputRow::new()
                .int("m", m)
                .int("n", n)
                .num("Ne", b.n_e)
                .int("k", k)
                .ratio("d", Ratio::new(k, p.lcm()))
                .prob("pv", &pv)
                .text("method", pv.method().as_str())
                .num("dkwm", b.dkwm)
                .opt_num("reler_dkwm", e.map(|e| e.reler_dkwm))
                .num("spli", b.s_pli)
                .opt_num("reler_spli", e.map(|e| e.reler_spli)),
        );
    }
    Ok(out)
}

fn asympt(args: &TableArgs, cfg: &ScanConfig) -> Result<Vec<OutputRow>, CliError> {
    let ns: Vec<u64> = match single_column(&args.rows, "asympt")? {
        Some(ns) => ns,
        None => match &args.n {
            Some(r) => r.clone().collect(),
            None => vec![40, 100, 200, 300, 400, 500, 600],
        },
    };
    if ns.iter().any(|&n| n < 2) {
        return Err(CliError::Usage("asympt needs n >= 2".into()));
    }
    let cost: f64 = ns.iter().map(|&n| 200.0 * (n as f64).powi(2)).sum();
    guard(cost, args.long, "asympt table")?;
    Ok(asympt_study(&ns, 0.05, cfg)
        .iter()
        .map(|r| {
            OutputRow::new()
                .int("n", r.n)
                .int("m", r.m)
                .int("k", r.k)
                .num("pv", r.pv)
                .num("reler", r.reler)
                .num("sqrt_n_reler", r.sqrt_n_reler)
        })
        .collect())
}

fn delta_range(args: &TableArgs, default: RangeInclusive<u64>) -> Result<RangeInclusive<u64>, CliError> {
    let r = args.n.clone().unwrap_or(default);
    if *r.start() == 0 {
        return Err(CliError::Usage("n must be positive".into()));
    }
    let cost: f64 = (*r.end().max(&457) as f64).powi(3);
    guard(cost, args.long, "delta table")?;
    Ok(r)
}

fn delta_big(args: &TableArgs, cfg: &ScanConfig) -> Result<Vec<OutputRow>, CliError> {
    let r = delta_range(args, 1..=457)?;
    let selected = single_column(&args.rows, "deltaN")?;
    let t = delta_table(*r.start(), *r.end(), cfg);
    Ok(t.suffix_maxima
        .iter()
        .filter(|(n, _)| selected.as_ref().is_none_or(|s| s.contains(n)))
        .map(|&(n, d)| {
            OutputRow::new()
                .int("N", n)
                .num("Delta_N", guarded_round5(d))
                .num("Delta_N_raw", d)
        })
        .collect())
}

fn delta_small(args: &TableArgs, cfg: &ScanConfig) -> Result<Vec<OutputRow>, CliError> {
    let r = delta_range(args, 1..=11)?;
    let t = delta_table(*r.start(), *r.end(), cfg);
    Ok(t.records
        .iter()
        .map(|rec| {
            OutputRow::new()
                .int("n", rec.n)
                .int("k_max", rec.k_max)
                .num("delta_n", rec.delta_n)
                .text("dkwm", if rec.holds_dkwm { "holds" } else { "fails" })
        })
        .collect())
}

fn record_columns(row: OutputRow, s: &PairScan) -> OutputRow {
    let r = &s.record;
    row.num("r_max", r.r_max)
        .int("k_max", r.k_max)
        .prob("pvatmax", &r.pv_at_max)
        .ratio("d_max", r.d_max())
}

fn opt_ratio(row: OutputRow, name: &str, r: Option<Ratio<u64>>) -> OutputRow {
    match r {
        Some(r) => row.ratio(name, r),
        None => row.text(name, "NA"),
    }
}

fn best_n(
    args: &TableArgs,
    cfg: &ScanConfig,
    default: RangeInclusive<u64>,
    screening: bool,
) -> Result<Vec<OutputRow>, CliError> {
    let ms: Vec<u64> = args.m.clone().unwrap_or(default).collect();
    let n_max = args.n_max;
    if ms.iter().any(|&m| m == 0 || m >= n_max) {
        return Err(CliError::Usage(format!("need 1 <= m < n_max = {n_max}")));
    }
    let cost: f64 = ms
        .iter()
        .flat_map(|&m| (m + 1..=n_max).map(move |n| pair_cost(m, n)))
        .sum();
    guard(cost, args.long, "best-n scan")?;
    let mut out = Vec::new();
    for m in ms {
        let b = best_n_scan(m, m + 1..=n_max, cfg);
        let row = OutputRow::new().int("m", m).int("n_max", b.n_best());
        let mut row = record_columns(row, &b.best);
        if screening {
            let at_cap = b.scans.iter().find(|s| s.record.pair.n() == n_max);
            row = opt_ratio(row, "d_0_at_cap", at_cap.and_then(|s| s.screening.d_0));
            row = row.opt_num("mrmr", b.mrmr);
        }
        out.push(row);
    }
    Ok(out)
}

fn doubles(args: &TableArgs, cfg: &ScanConfig) -> Result<Vec<OutputRow>, CliError> {
    let ms = args.m.clone().unwrap_or(95..=300);
    if *ms.start() == 0 {
        return Err(CliError::Usage("m must be positive".into()));
    }
    let cost: f64 = ms.clone().map(|m| pair_cost(m, 2 * m)).sum();
    guard(cost, args.long, "n = 2m table")?;
    Ok(double_table(ms, cfg)
        .iter()
        .map(|s| {
            let p = s.record.pair;
            let row = OutputRow::new().int("m", p.m()).int("n", p.n());
            let row = record_columns(row, s);
            opt_ratio(row, "d_0", s.screening.d_0).opt_num("rbd_max", s.screening.rub_max)
        })
        .collect())
}
