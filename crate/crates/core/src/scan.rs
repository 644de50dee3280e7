//! Searches over lattice values and sample sizes: `r_max` per pair, the
//! best `n` for a given `m`, the `δ_n` / `Δ_N` tables, the `n = 2m`
//! sequence, and the two relative-error studies.
//!
//! Every scan is a map over independent units (pairs, `n`, or lattice
//! indices) run through [`Parallelism`]; results are collected in key order
//! so output never depends on scheduling.

use std::f64::consts::LN_2;
use std::ops::RangeInclusive;

use num_rational::Ratio;

use crate::approximations::dkwm_bound;
use crate::combinatorics::LogProb;
use crate::equal_sample::{dkwm_margin, DeltaRecord, GkRow};
use crate::exec::Parallelism;
use crate::lattice::{
    achievable_ks, inside_probability_float, outside_log_probability, outside_one_sided_k, Method,
    PValue, Precision, SamplePair, SMALL_PVALUE_THRESHOLD,
};

/// Smallest `n` for which the DKWM inequality holds for every `M` when
/// `m = n`.
pub const DKWM_EQUAL_THRESHOLD: u64 = 458;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub parallelism: Parallelism,
    pub small_pvalue_threshold: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            parallelism: Parallelism::default(),
            small_pvalue_threshold: SMALL_PVALUE_THRESHOLD,
        }
    }
}

impl ScanConfig {
    pub fn sequential() -> Self {
        ScanConfig {
            parallelism: Parallelism::Sequential,
            ..Default::default()
        }
    }
}

/// The largest ratio `pv / (2e^{−2M²})` over the lattice values of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRecord {
    pub pair: SamplePair,
    pub k_max: u64,
    pub pv_at_max: PValue,
    pub r_max: f64,
}

impl RatioRecord {
    pub fn d_max(&self) -> Ratio<u64> {
        Ratio::new(self.k_max, self.pair.lcm())
    }

    pub fn d_max_f64(&self) -> f64 {
        self.k_max as f64 / self.pair.lcm() as f64
    }
}

/// Upper-bound screening of the band `[d_0, 1/2]` where double-precision
/// inside values are too small to trust.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Screening {
    pub d_0: Option<Ratio<u64>>,
    /// Largest `r_ub = 2·pv_os / (2e^{−2M²})` over the band.
    pub rub_max: Option<f64>,
    pub screened: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScan {
    pub record: RatioRecord,
    pub screening: Screening,
}

impl PairScan {
    pub fn holds_dkwm(&self) -> bool {
        self.record.r_max <= 1.0
    }
}

fn log_bound(pair: &SamplePair, k: u64) -> f64 {
    let m = pair.m_statistic(k);
    LN_2 - 2.0 * m * m
}

/// Two-sided p-value in double precision: doubled one-sided value above
/// `d = 1/2`, inside method otherwise. No screening.
pub fn two_sided_float(pair: &SamplePair, k: u64) -> PValue {
    if 2 * k > pair.lcm() {
        PValue::from_log(
            Method::Outside,
            LogProb::new(outside_log_probability(pair, k).ln() + LN_2),
        )
    } else {
        PValue::from_float(Method::Inside, 1.0 - inside_probability_float(pair, k))
    }
}

fn better(best: &Option<(u64, f64)>, log_r: f64) -> bool {
    match best {
        None => true,
        Some((_, b)) => log_r > *b,
    }
}

/// `r_max(m, n)` and its arg-max.
///
/// For `m = n` every ratio uses the exact closed form. Otherwise, lattice
/// values above `1/2` use the exact identity `P = 2·pv_os`; values up to
/// `1/2` use the double-precision inside method until its result first drops
/// below the small-p threshold at `d_0`, after which the band `[d_0, 1/2]`
/// is screened with the upper bound `2·pv_os` and kept out of the arg-max.
/// Ties go to the smallest `k`.
pub fn r_max_scan(pair: &SamplePair, cfg: &ScanConfig) -> PairScan {
    if pair.m() == pair.n() {
        return equal_r_max(pair, cfg);
    }
    let ks = achievable_ks(pair);
    let split = ks.partition_point(|&k| 2 * k <= pair.lcm());
    let (low, high) = ks.split_at(split);

    let inside: Vec<f64> = cfg
        .parallelism
        .map(low, |&k| 1.0 - inside_probability_float(pair, k));
    let cut = inside
        .iter()
        .position(|&p| p < cfg.small_pvalue_threshold)
        .unwrap_or(low.len());

    let mut best: Option<(u64, f64)> = None;
    let mut best_pv = None;
    for (&k, &p) in low[..cut].iter().zip(&inside[..cut]) {
        let log_r = p.ln() - log_bound(pair, k);
        if better(&best, log_r) {
            best = Some((k, log_r));
            best_pv = Some(PValue::from_float(Method::Inside, p));
        }
    }

    let screened = &low[cut..];
    let rub: Vec<f64> = cfg.parallelism.map(screened, |&k| {
        outside_log_probability(pair, k).ln() + LN_2 - log_bound(pair, k)
    });
    let screening = Screening {
        d_0: screened.first().map(|&k| Ratio::new(k, pair.lcm())),
        rub_max: rub.iter().cloned().reduce(f64::max).map(f64::exp),
        screened: screened.len(),
    };

    let upper: Vec<PValue> = cfg.parallelism.map(high, |&k| two_sided_float(pair, k));
    for (&k, pv) in high.iter().zip(upper) {
        let log_r = pv.log_value() - log_bound(pair, k);
        if better(&best, log_r) {
            best = Some((k, log_r));
            best_pv = Some(pv);
        }
    }

    let (k_max, log_r) = best.expect("every pair has k = L achievable");
    PairScan {
        record: RatioRecord {
            pair: *pair,
            k_max,
            pv_at_max: best_pv.expect("set with best"),
            r_max: log_r.exp(),
        },
        screening,
    }
}

fn equal_r_max(pair: &SamplePair, cfg: &ScanConfig) -> PairScan {
    let n = pair.n();
    let row = GkRow::new(n);
    let ks: Vec<u64> = (1..=n).collect();
    let logs = cfg.parallelism.map(&ks, |&k| row.log_dkwm_ratio(k));
    let (idx, log_r) =
        logs.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |b, (i, &l)| if l > b.1 { (i, l) } else { b },
        );
    let k_max = ks[idx];
    PairScan {
        record: RatioRecord {
            pair: *pair,
            k_max,
            pv_at_max: PValue::from_exact(Method::Gk, row.pvalue(k_max)),
            r_max: log_r.exp(),
        },
        screening: Screening::default(),
    }
}

/// Result of searching `n` for a fixed `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BestN {
    pub m: u64,
    pub best: PairScan,
    /// Largest `rub_max / r_max(m, n)` over the `n` that needed screening.
    pub mrmr: Option<f64>,
    pub scans: Vec<PairScan>,
}

impl BestN {
    pub fn n_best(&self) -> u64 {
        self.best.record.pair.n()
    }
}

/// Maximizes `r_max(m, n)` over `n` in `ns` (first maximizer wins).
pub fn best_n_scan(m: u64, ns: RangeInclusive<u64>, cfg: &ScanConfig) -> BestN {
    let ns: Vec<u64> = ns.collect();
    assert!(!ns.is_empty(), "empty n range");
    let scans = cfg.parallelism.map(&ns, |&n| {
        r_max_scan(&SamplePair::new(m, n).expect("positive sizes"), cfg)
    });
    let best = scans
        .iter()
        .fold(None::<&PairScan>, |b, s| match b {
            Some(b) if b.record.r_max >= s.record.r_max => Some(b),
            _ => Some(s),
        })
        .expect("non-empty")
        .clone();
    let mrmr = scans
        .iter()
        .filter_map(|s| s.screening.rub_max.map(|r| r / s.record.r_max))
        .reduce(f64::max);
    BestN {
        m,
        best,
        mrmr,
        scans,
    }
}

/// `r_max` for every pair `1 <= m < n <= n_cap`, ordered by `(m, n)`.
pub fn pair_grid_scan(n_cap: u64, cfg: &ScanConfig) -> Vec<PairScan> {
    let pairs: Vec<SamplePair> = (1..n_cap)
        .flat_map(|m| (m + 1..=n_cap).map(move |n| SamplePair::new(m, n).unwrap()))
        .collect();
    cfg.parallelism.map(&pairs, |p| r_max_scan(p, cfg))
}

/// `r_max(m, 2m)` for `m` in range.
pub fn double_table(ms: RangeInclusive<u64>, cfg: &ScanConfig) -> Vec<PairScan> {
    let pairs: Vec<SamplePair> = ms.map(|m| SamplePair::new(m, 2 * m).unwrap()).collect();
    cfg.parallelism.map(&pairs, |p| r_max_scan(p, cfg))
}

/// `δ_n` records plus suffix maxima `Δ_N = max{δ_n : N <= n <= 457}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    pub records: Vec<DeltaRecord>,
    /// `(N, Δ_N)` for `N` in the requested range with `N <= 457`.
    pub suffix_maxima: Vec<(u64, f64)>,
}

/// Computes `δ_n` for `n_lo..=n_hi`. Suffix maxima need every `δ_n` up to
/// 457, so the missing tail is computed as well (but not returned).
pub fn delta_table(n_lo: u64, n_hi: u64, cfg: &ScanConfig) -> DeltaTable {
    assert!(1 <= n_lo && n_lo <= n_hi, "need 1 <= n_lo <= n_hi");
    let last = DKWM_EQUAL_THRESHOLD - 1;
    let upto = n_hi.max(last);
    let ns: Vec<u64> = (n_lo..=upto).collect();
    let all = cfg.parallelism.map(&ns, |&n| dkwm_margin(n));

    let mut suffix = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for rec in all.iter().rev().filter(|r| r.n <= last) {
        running = running.max(rec.delta_n);
        if rec.n <= n_hi {
            suffix.push((rec.n, running));
        }
    }
    suffix.reverse();
    let records = all.into_iter().filter(|r| r.n <= n_hi).collect();
    DeltaTable {
        records,
        suffix_maxima: suffix,
    }
}

/// Rounds to 5 decimals and adds `0.00001`, turning a value into a
/// published-style upper bound.
pub fn guarded_round5(x: f64) -> f64 {
    (x * 1e5).round() / 1e5 + 1e-5
}

/// Inside-versus-outside comparison at `n = 2m`, `d = (m+1)/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PvoRow {
    pub m: u64,
    pub n: u64,
    pub k: u64,
    /// Double-precision inside result (raw, may be off by its full size).
    pub pvi: f64,
    /// Exact doubled one-sided value.
    pub pvo: PValue,
    pub reler: f64,
}

pub fn pvo_study(ms: &[u64], cfg: &ScanConfig) -> Vec<PvoRow> {
    cfg.parallelism.map(ms, |&m| {
        let pair = SamplePair::new(m, 2 * m).unwrap();
        // L = 2m, so d = (m+1)/2m is k = m + 1.
        let k = m + 1;
        let pvi = 1.0 - inside_probability_float(&pair, k);
        let pvo = outside_one_sided_k(&pair, k, Precision::Exact).doubled(Method::Outside);
        let reler = (pvi / pvo.value() - 1.0).abs();
        PvoRow {
            m,
            n: 2 * m,
            k,
            pvi,
            pvo,
            reler,
        }
    })
}

/// Rows whose relative error exceeds that of every earlier row.
pub fn record_setting(rows: &[PvoRow]) -> Vec<PvoRow> {
    let mut out = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for r in rows {
        if r.reler > best {
            best = r.reler;
            out.push(r.clone());
        }
    }
    out
}

/// Behaviour of the DKWM relative error at the `alpha`-level critical value
/// for `m = n − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptRow {
    pub n: u64,
    pub m: u64,
    pub k: u64,
    pub pv: f64,
    pub reler: f64,
    pub sqrt_n_reler: f64,
}

/// Smallest achievable `k` with `Pr(D >= k/L) <= alpha`, and that p-value.
pub fn critical_index(pair: &SamplePair, alpha: f64) -> Option<(u64, PValue)> {
    let ks = achievable_ks(pair);
    let idx = ks.partition_point(|&k| two_sided_float(pair, k).value() > alpha);
    ks.get(idx).map(|&k| (k, two_sided_float(pair, k)))
}

pub fn asympt_study(ns: &[u64], alpha: f64, cfg: &ScanConfig) -> Vec<AsymptRow> {
    cfg.parallelism.map(ns, |&n| {
        let pair = SamplePair::new(n - 1, n).unwrap();
        let (k, pv) = critical_index(&pair, alpha).expect("alpha reachable");
        let reler = dkwm_bound(pair.m_statistic(k)) / pv.value() - 1.0;
        AsymptRow {
            n,
            m: n - 1,
            k,
            pv: pv.value(),
            reler,
            sqrt_n_reler: (n as f64).sqrt() * reler,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_pairs_fail() {
        let cfg = ScanConfig::default();
        for (m, n, r) in [(1, 2, 1.264556), (1, 3, 1.120422), (2, 3, 1.102318)] {
            let s = r_max_scan(&SamplePair::new(m, n).unwrap(), &cfg);
            assert!(
                (s.record.r_max - r).abs() < 5e-7,
                "{m} {n}: {}",
                s.record.r_max
            );
            assert_eq!(s.record.d_max(), Ratio::new(1, 1));
            assert!(!s.holds_dkwm());
        }
    }

    #[test]
    fn equal_pair_matches_margin() {
        let cfg = ScanConfig::default();
        for n in [1, 5, 30] {
            let s = r_max_scan(&SamplePair::new(n, n).unwrap(), &cfg);
            let d = dkwm_margin(n);
            assert_eq!(s.record.k_max, d.k_max);
            assert!((s.record.r_max - 1.0 - d.delta_n).abs() < 1e-14);
            assert_eq!(s.record.pv_at_max.method(), Method::Gk);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let p = SamplePair::new(7, 12).unwrap();
        let a = r_max_scan(&p, &ScanConfig::sequential());
        let b = r_max_scan(&p, &ScanConfig::default());
        assert_eq!(a, b);
    }

    #[test]
    fn guarded_rounding() {
        assert!((guarded_round5(0.359140914) - 0.35915).abs() < 1e-12);
        assert!((guarded_round5(2.627e-6) - 0.00001).abs() < 1e-12);
    }

    #[test]
    fn record_setting_keeps_increasing_rows() {
        let mk = |m, reler| PvoRow {
            m,
            n: 2 * m,
            k: m + 1,
            pvi: 0.0,
            pvo: PValue::from_float(Method::Outside, 1.0),
            reler,
        };
        let rows = vec![mk(1, 0.0), mk(2, 1e-16), mk(3, 1e-17), mk(4, 1e-15)];
        let kept: Vec<u64> = record_setting(&rows).iter().map(|r| r.m).collect();
        assert_eq!(kept, vec![1, 2, 4]);
    }

    #[test]
    fn pvo_tiny_lattice_is_exact() {
        let rows = pvo_study(&[1], &ScanConfig::default());
        // (1, 2) at d = 1: both methods give 2/3 up to rounding.
        assert!((rows[0].pvo.value() - 2.0 / 3.0).abs() < 1e-16);
        assert!(rows[0].reler < 1e-15);
    }
}
