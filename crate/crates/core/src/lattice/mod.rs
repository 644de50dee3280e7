//! Exact two-sample KS p-values for general `(m, n)`.
//!
//! A pair of samples corresponds to a monotone lattice path from `(0,0)` to
//! `(m,n)`; after `i` points of the first sample and `j` of the second,
//! `F_m − G_n = (i·n_red − j·m_red) / L`. All band and boundary tests are
//! done on that integer numerator, so there are no floating-point ties.

mod inside;
mod oracle;
mod outside;

pub use inside::{inside_path_count, inside_probability_float};
pub use oracle::{OracleDistribution, ORACLE_MAX_TOTAL};
pub use outside::{outside_log_probability, outside_path_count};

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::One;

use crate::combinatorics::{binomial, gcd, ratio, ratio_to_f64, LogProb};
use crate::equal_sample::{gk_pvalue, GkQuery};
use crate::error::{domain, Result};

/// Inside p-values below this are replaced by the `2·pv_os` upper bound when
/// computed in double precision.
pub const SMALL_PVALUE_THRESHOLD: f64 = 1e-14;

/// `Precision::Exact` is the automatic choice up to this `m + n`.
pub const EXACT_AUTO_LIMIT: u64 = 1000;

/// Sample sizes `(m, n)` with their gcd and lcm.
///
/// The order is kept as given: `m` is the size of the sample whose steps
/// move along `i`. Most callers construct pairs with `m <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SamplePair {
    m: u64,
    n: u64,
    g: u64,
}

impl SamplePair {
    pub fn new(m: u64, n: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return domain(format!("sample sizes must be positive, got ({m}, {n})"));
        }
        Ok(SamplePair { m, n, g: gcd(m, n) })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn gcd(&self) -> u64 {
        self.g
    }

    /// Least common multiple `L`; achievable statistics are `k / L`.
    pub fn lcm(&self) -> u64 {
        self.m / self.g * self.n
    }

    pub fn m_red(&self) -> u64 {
        self.m / self.g
    }

    pub fn n_red(&self) -> u64 {
        self.n / self.g
    }

    /// `N_e = mn / (m + n)` as an exact rational.
    pub fn effective_size(&self) -> Ratio<u64> {
        Ratio::new(self.m * self.n, self.m + self.n)
    }

    pub fn effective_size_f64(&self) -> f64 {
        (self.m * self.n) as f64 / (self.m + self.n) as f64
    }

    pub fn swapped(&self) -> SamplePair {
        SamplePair {
            m: self.n,
            n: self.m,
            g: self.g,
        }
    }

    /// Smallest lattice index `k` with `k / L >= d`.
    pub fn index_for(&self, d: Ratio<u64>) -> Result<u64> {
        if *d.numer() == 0 || d > Ratio::one() {
            return domain(format!("statistic d = {d} must lie in (0, 1]"));
        }
        let l = self.lcm() as u128;
        let (p, q) = (*d.numer() as u128, *d.denom() as u128);
        Ok(Integer::div_ceil(&(p * l), &q) as u64)
    }

    /// `M = sqrt(N_e) · k / L`.
    pub fn m_statistic(&self, k: u64) -> f64 {
        self.effective_size_f64().sqrt() * k as f64 / self.lcm() as f64
    }

    /// Whether some lattice point has `|i·n_red − j·m_red| = k`.
    pub fn is_achievable(&self, k: u64) -> bool {
        if k == 0 || k > self.lcm() {
            return false;
        }
        let (a, b) = (self.n_red(), self.m_red());
        (0..=self.m).any(|i| {
            let x = i * a;
            let hit = |v: u64| v.is_multiple_of(b) && v / b <= self.n;
            (x >= k && hit(x - k)) || hit(x + k)
        })
    }

    pub fn statistic(&self, k: u64) -> Result<StatisticValue> {
        if k == 0 || k > self.lcm() {
            return domain(format!("k = {k} must lie in [1, {}]", self.lcm()));
        }
        Ok(StatisticValue {
            pair: *self,
            k,
            achievable: self.is_achievable(k),
        })
    }
}

impl fmt::Display for SamplePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.n)
    }
}

/// A lattice value `d = k / L` of `D_{m,n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatisticValue {
    pub pair: SamplePair,
    pub k: u64,
    pub achievable: bool,
}

impl StatisticValue {
    pub fn d(&self) -> Ratio<u64> {
        Ratio::new(self.k, self.pair.lcm())
    }

    pub fn d_f64(&self) -> f64 {
        self.k as f64 / self.pair.lcm() as f64
    }

    /// The normalized statistic `M = sqrt(N_e)·d`.
    pub fn m_statistic(&self) -> f64 {
        self.pair.m_statistic(self.k)
    }
}

/// Every `k` in `[1, L]` attained as `|i·n_red − j·m_red|`, ascending.
pub fn achievable_ks(pair: &SamplePair) -> Vec<u64> {
    let l = pair.lcm() as usize;
    let (a, b) = (pair.n_red() as i64, pair.m_red() as i64);
    let mut hit = vec![false; l + 1];
    for i in 0..=pair.m() as i64 {
        for j in 0..=pair.n() as i64 {
            hit[(i * a - j * b).unsigned_abs() as usize] = true;
        }
    }
    (1..=l as u64).filter(|&k| hit[k as usize]).collect()
}

pub fn achievable_values(pair: &SamplePair) -> Vec<StatisticValue> {
    achievable_ks(pair)
        .into_iter()
        .map(|k| StatisticValue {
            pair: *pair,
            k,
            achievable: true,
        })
        .collect()
}

/// Closest achievable indices strictly below and strictly above `k`.
pub fn nearest_achievable(pair: &SamplePair, k: u64) -> (Option<u64>, Option<u64>) {
    let below = (1..k.min(pair.lcm() + 1))
        .rev()
        .find(|&c| pair.is_achievable(c));
    let above = (k + 1..=pair.lcm()).find(|&c| pair.is_achievable(c));
    (below, above)
}

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Inside,
    Outside,
    Gk,
    Oracle,
    /// `2·pv_os`, an upper bound on the two-sided p-value.
    UpperBound,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Inside => "inside",
            Method::Outside => "outside",
            Method::Gk => "gk",
            Method::Oracle => "oracle",
            Method::UpperBound => "upper_bound",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A probability (or upper bound) tagged with the method that produced it.
///
/// `value` is the double-precision reading. For the float inside method it
/// is the raw `1 − Pr(inside)`, which can be slightly negative once the
/// true p-value drops below machine epsilon; it is not clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct PValue {
    method: Method,
    value: f64,
    log: LogProb,
    exact: Option<BigRational>,
}

impl PValue {
    pub(crate) fn from_exact(method: Method, r: BigRational) -> Self {
        PValue {
            method,
            value: ratio_to_f64(&r),
            log: LogProb::from_ratio(&r),
            exact: Some(r),
        }
    }

    pub(crate) fn from_float(method: Method, value: f64) -> Self {
        let log = if value > 0.0 {
            LogProb::unclamped(value.ln())
        } else {
            LogProb::ZERO
        };
        PValue {
            method,
            value,
            log,
            exact: None,
        }
    }

    pub(crate) fn from_log(method: Method, log: LogProb) -> Self {
        PValue {
            method,
            value: log.exp(),
            log,
            exact: None,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Natural log of the value; `-inf` when the value is zero or negative.
    pub fn log_value(&self) -> f64 {
        self.log.ln()
    }

    pub fn log_prob(&self) -> LogProb {
        self.log
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn is_upper_bound(&self) -> bool {
        self.method == Method::UpperBound
    }

    /// `2 · self`, relabelled.
    pub(crate) fn doubled(&self, method: Method) -> PValue {
        match &self.exact {
            Some(r) => PValue::from_exact(method, r * BigRational::from_integer(2.into())),
            None => PValue::from_log(
                method,
                LogProb::unclamped(self.log.ln() + std::f64::consts::LN_2),
            ),
        }
    }
}

/// Arithmetic used for a lattice evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    /// Big-integer path counts, exact rational result.
    Exact,
    /// Double precision (normalized recursions, log-space sums).
    Float,
}

impl Precision {
    /// Exact up to `m + n = EXACT_AUTO_LIMIT`, float beyond.
    pub fn auto_for(pair: &SamplePair) -> Precision {
        if pair.m() + pair.n() <= EXACT_AUTO_LIMIT {
            Precision::Exact
        } else {
            Precision::Float
        }
    }
}

/// Method selection for [`two_sided_pvalue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Policy {
    #[default]
    Auto,
    ForceInside,
    ForceOutside,
    ForceGk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValueOptions {
    pub policy: Policy,
    /// `None` picks [`Precision::auto_for`].
    pub precision: Option<Precision>,
    pub small_pvalue_threshold: f64,
}

impl Default for PValueOptions {
    fn default() -> Self {
        PValueOptions {
            policy: Policy::Auto,
            precision: None,
            small_pvalue_threshold: SMALL_PVALUE_THRESHOLD,
        }
    }
}

fn total_paths(pair: &SamplePair) -> BigUint {
    binomial(pair.m() + pair.n(), pair.m())
}

/// `Pr(D_{m,n} >= k/L)` as `1 − Pr(every lattice point has |v| <= k − 1)`.
pub fn inside_pvalue_k(pair: &SamplePair, k: u64, precision: Precision) -> PValue {
    match precision {
        Precision::Exact => {
            let total = total_paths(pair);
            let outside = &total - inside_path_count(pair, k);
            PValue::from_exact(Method::Inside, ratio(outside, total))
        }
        Precision::Float => {
            PValue::from_float(Method::Inside, 1.0 - inside_probability_float(pair, k))
        }
    }
}

pub fn inside_pvalue(pair: &SamplePair, d: Ratio<u64>, precision: Precision) -> Result<PValue> {
    Ok(inside_pvalue_k(pair, pair.index_for(d)?, precision))
}

/// One-sided `pv_os = Pr(sup (F_m − G_n) >= k/L)`.
pub fn outside_one_sided_k(pair: &SamplePair, k: u64, precision: Precision) -> PValue {
    match precision {
        Precision::Exact => PValue::from_exact(
            Method::Outside,
            ratio(outside_path_count(pair, k), total_paths(pair)),
        ),
        Precision::Float => PValue::from_log(Method::Outside, outside_log_probability(pair, k)),
    }
}

pub fn outside_one_sided(pair: &SamplePair, d: Ratio<u64>, precision: Precision) -> Result<PValue> {
    Ok(outside_one_sided_k(pair, pair.index_for(d)?, precision))
}

/// `pv_ub = 2·pv_os`. Equal to the two-sided p-value when `2k > L`,
/// otherwise an upper bound.
pub fn upper_bound_k(pair: &SamplePair, k: u64, precision: Precision) -> PValue {
    let method = if 2 * k > pair.lcm() {
        Method::Outside
    } else {
        Method::UpperBound
    };
    outside_one_sided_k(pair, k, precision).doubled(method)
}

/// Two-sided `P(m, n; d) = Pr(D_{m,n} >= d)` with default options.
pub fn two_sided_pvalue(pair: &SamplePair, d: Ratio<u64>, policy: Policy) -> Result<PValue> {
    two_sided_pvalue_with(
        pair,
        d,
        &PValueOptions {
            policy,
            ..PValueOptions::default()
        },
    )
}

pub fn two_sided_pvalue_with(
    pair: &SamplePair,
    d: Ratio<u64>,
    opts: &PValueOptions,
) -> Result<PValue> {
    let k = pair.index_for(d)?;
    two_sided_pvalue_k(pair, k, opts)
}

/// Two-sided p-value at lattice index `k`.
///
/// `Auto`: above `d = 1/2` the doubled one-sided value is exact; for `m = n`
/// the closed form is used; otherwise the inside method, and when that is
/// evaluated in double precision and falls below the small-p threshold the
/// result is replaced by the `2·pv_os` upper bound.
pub fn two_sided_pvalue_k(pair: &SamplePair, k: u64, opts: &PValueOptions) -> Result<PValue> {
    if k == 0 || k > pair.lcm() {
        return domain(format!("k = {k} must lie in [1, {}]", pair.lcm()));
    }
    let precision = opts.precision.unwrap_or_else(|| Precision::auto_for(pair));
    match opts.policy {
        Policy::ForceInside => Ok(inside_pvalue_k(pair, k, precision)),
        Policy::ForceOutside => Ok(upper_bound_k(pair, k, precision)),
        Policy::ForceGk => {
            if pair.m() != pair.n() {
                return domain(format!("closed form requires m = n, got {pair}"));
            }
            gk_pvalue(GkQuery::new(pair.n(), k)?)
        }
        Policy::Auto => {
            if 2 * k > pair.lcm() {
                Ok(upper_bound_k(pair, k, precision))
            } else if pair.m() == pair.n() {
                gk_pvalue(GkQuery::new(pair.n(), k)?)
            } else {
                let pv = inside_pvalue_k(pair, k, precision);
                if precision == Precision::Float && pv.value() < opts.small_pvalue_threshold {
                    Ok(upper_bound_k(pair, k, Precision::Float))
                } else {
                    Ok(pv)
                }
            }
        }
    }
}

/// Exact `Pr(D_{m,n} >= d)` by enumerating every ordering.
pub fn oracle_pvalue(pair: &SamplePair, d: Ratio<u64>) -> Result<PValue> {
    pair.index_for(d)?;
    let dist = OracleDistribution::enumerate(pair)?;
    Ok(PValue::from_exact(
        Method::Oracle,
        dist.probability_at_least(d),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn r(p: u64, q: u64) -> Ratio<u64> {
        Ratio::new(p, q)
    }

    #[test]
    fn pair_bookkeeping() {
        let p = SamplePair::new(21, 500).unwrap();
        assert_eq!(p.gcd(), 1);
        assert_eq!(p.lcm(), 10500);
        let q = SamplePair::new(40, 60).unwrap();
        assert_eq!(q.gcd() * q.lcm(), 40 * 60);
        assert_eq!(q.m_red().gcd(&q.n_red()), 1);
        assert_eq!(q.effective_size(), Ratio::new(24, 1));
        assert!(SamplePair::new(0, 3).is_err());
    }

    #[test]
    fn index_rounds_up_to_lattice() {
        let p = SamplePair::new(40, 40).unwrap();
        assert_eq!(p.index_for(r(3, 10)).unwrap(), 12);
        assert_eq!(p.index_for(r(301, 1000)).unwrap(), 13);
        assert!(p.index_for(r(0, 1)).is_err());
        assert!(p.index_for(r(11, 10)).is_err());
    }

    #[test]
    fn achievable_equal_sizes() {
        let p = SamplePair::new(5, 5).unwrap();
        assert_eq!(achievable_ks(&p), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn achievable_21_500() {
        let p = SamplePair::new(21, 500).unwrap();
        let ks = achievable_ks(&p);
        assert!(ks.binary_search(&3074).is_ok());
        assert!(ks.binary_search(&3076).is_ok());
        assert!(ks.binary_search(&3075).is_err());
        assert!(!p.is_achievable(3075));
        assert_eq!(nearest_achievable(&p, 3075), (Some(3074), Some(3076)));
    }

    #[test]
    fn achievable_matches_point_check() {
        for (m, n) in [(2, 3), (3, 4), (4, 6), (7, 5), (1, 9)] {
            let p = SamplePair::new(m, n).unwrap();
            let ks = achievable_ks(&p);
            for k in 1..=p.lcm() {
                assert_eq!(ks.contains(&k), p.is_achievable(k), "{m} {n} {k}");
            }
        }
    }

    #[test]
    fn trivial_values() {
        let p = SamplePair::new(1, 1).unwrap();
        let one = BigRational::one();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(
            inside_pvalue(&p, r(1, 1), Precision::Exact)
                .unwrap()
                .exact(),
            Some(&one)
        );
        assert_eq!(
            inside_pvalue(&p, r(1, 1), Precision::Float)
                .unwrap()
                .value(),
            1.0
        );
        assert_eq!(
            outside_one_sided(&p, r(1, 1), Precision::Exact)
                .unwrap()
                .exact(),
            Some(&half)
        );
        assert_eq!(oracle_pvalue(&p, r(1, 1)).unwrap().exact(), Some(&one));
        assert_eq!(
            two_sided_pvalue(&p, r(1, 1), Policy::Auto).unwrap().exact(),
            Some(&one)
        );
    }

    #[test]
    fn two_three_at_one() {
        // Pr(D = 1) needs all of one sample below all of the other: 2 of 10.
        let p = SamplePair::new(2, 3).unwrap();
        let pv = two_sided_pvalue(&p, r(1, 1), Policy::Auto).unwrap();
        assert_eq!(pv.method(), Method::Outside);
        assert_eq!(pv.exact(), Some(&BigRational::new(1.into(), 5.into())));
        assert_eq!(pv.exact(), oracle_pvalue(&p, r(1, 1)).unwrap().exact());
    }

    #[test]
    fn three_four_against_enumeration() {
        let p = SamplePair::new(3, 4).unwrap();
        let dist = OracleDistribution::enumerate(&p).unwrap();
        assert_eq!(dist.total(), 35);
        for k in achievable_ks(&p) {
            let d = r(k, p.lcm());
            let inside = inside_pvalue(&p, d, Precision::Exact).unwrap();
            assert_eq!(inside.exact().unwrap(), &dist.probability_at_least(d));
        }
    }

    #[test]
    fn force_gk_needs_equal_sizes() {
        let p = SamplePair::new(2, 3).unwrap();
        assert!(two_sided_pvalue(&p, r(1, 2), Policy::ForceGk).is_err());
        let q = SamplePair::new(2, 2).unwrap();
        let gk = two_sided_pvalue(&q, r(1, 2), Policy::ForceGk).unwrap();
        assert_eq!(gk.exact(), oracle_pvalue(&q, r(1, 2)).unwrap().exact());
    }

    #[test]
    fn oracle_resource_guard() {
        let p = SamplePair::new(12, 11).unwrap();
        assert!(matches!(
            oracle_pvalue(&p, r(1, 2)),
            Err(crate::Error::Resource(_))
        ));
    }

    #[test]
    fn float_screening_switches_to_upper_bound() {
        let p = SamplePair::new(100, 200).unwrap();
        let opts = PValueOptions {
            precision: Some(Precision::Float),
            ..Default::default()
        };
        // d = 99/200 < 1/2 has a true p-value far below 1e-14.
        let pv = two_sided_pvalue_with(&p, r(99, 200), &opts).unwrap();
        assert_eq!(pv.method(), Method::UpperBound);
        assert!(pv.value() > 0.0);
        let exact = two_sided_pvalue(&p, r(99, 200), Policy::Auto).unwrap();
        assert_eq!(exact.method(), Method::Inside);
        assert!(exact.value() <= pv.value() * (1.0 + 1e-12));
    }

    #[test]
    fn upper_bound_one_sided_zero_beyond_reach() {
        let p = SamplePair::new(3, 3).unwrap();
        assert!(outside_path_count(&p, 4).is_zero());
    }
}
