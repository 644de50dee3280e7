//! Exact big-integer binomials and log-space helpers shared by the
//! lattice, closed-form and scan modules.
//!
//! Everything in here is a pure function. Exact values use [`BigUint`] /
//! [`BigRational`]; magnitudes far below `f64::MIN_POSITIVE` are carried as
//! natural logarithms in [`LogProb`].

use std::f64::consts::LN_2;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// `binom(n, k)` together with its arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigBinomial {
    pub n: u64,
    pub k: u64,
    pub value: BigUint,
}

/// Exact `binom(n, k)`. Fails when `k` is negative or larger than `n`.
pub fn exact_binomial(n: u64, k: i64) -> Result<BigBinomial> {
    if k < 0 || k as u64 > n {
        return domain(format!("binomial({n}, {k}): k must lie in [0, n]"));
    }
    let k = k as u64;
    Ok(BigBinomial {
        n,
        k,
        value: binomial(n, k),
    })
}

/// `binom(n, k)` with the convention that it is zero outside `0 <= k <= n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    // acc = binom(n - k + i, i) after step i; each division is exact.
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// The full row `binom(n, 0), ..., binom(n, n)`.
pub fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut cur = BigUint::one();
    row.push(cur.clone());
    for k in 1..=n {
        cur = cur * (n - k + 1) / k;
        row.push(cur.clone());
    }
    row
}

/// Exact sum of signed big-integer terms, returned as a rational.
pub fn alternating_sum_exact(terms: &[BigInt]) -> BigRational {
    let total: BigInt = terms.iter().sum();
    BigRational::from_integer(total)
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of `k!` for small integers, computed from the exact
/// factorial (exactly representable in `f64` up to 22!).
fn ln_small_factorial(k: u64) -> f64 {
    debug_assert!(k <= 22);
    let f: f64 = (1..=k).map(|i| i as f64).product();
    f.ln()
}

/// Stirling remainder `ln Γ(x+1) - [(x+1/2) ln x - x + ln sqrt(2π)]`.
fn stirling_remainder(x: f64) -> f64 {
    if x >= 15.0 {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        // 1/12x - 1/360x^3 + 1/1260x^5 - 1/1680x^7 + 1/1188x^9
        inv * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
    } else {
        let lgamma = if x.fract() == 0.0 {
            ln_small_factorial(x as u64)
        } else {
            statrs::function::gamma::ln_gamma(x + 1.0)
        };
        lgamma - (x + 0.5) * x.ln() + x - HALF_LN_2PI
    }
}

/// `ln binom(n, k) = ln Γ(n+1) - ln Γ(k+1) - ln Γ(n-k+1)` for real
/// `0 <= k <= n`.
///
/// The leading Stirling terms are combined before evaluation so that the
/// large `n ln n` pieces cancel analytically; the result keeps close to full
/// relative precision even when `n` is in the millions.
pub fn log_binomial(n: f64, k: f64) -> Result<f64> {
    if !(n >= 0.0 && k >= 0.0 && k <= n) || !n.is_finite() {
        return domain(format!("log_binomial({n}, {k}): need 0 <= k <= n"));
    }
    let k = if k > n - k { n - k } else { k };
    if k == 0.0 {
        return Ok(0.0);
    }
    let rest = n - k;
    let p = k / n;
    let entropy = -k * p.ln() - rest * (-p).ln_1p();
    let prefactor = 0.5 * (n / (k * rest)).ln() - HALF_LN_2PI;
    Ok(entropy + prefactor + stirling_remainder(n)
        - stirling_remainder(k)
        - stirling_remainder(rest))
}

/// `ln x` for a big unsigned integer; `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_f64().expect("64-bit value fits f64");
    top.ln() + shift as f64 * LN_2
}

fn scale_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// `num / den ≈ q · 2^exp` with ~64 significant bits in `q`.
fn quotient_mantissa(num: &BigUint, den: &BigUint) -> (f64, i64) {
    let shift = 64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    (q.to_f64().expect("quotient fits f64"), -shift)
}

fn ratio_mantissa(r: &BigRational) -> Option<(f64, i64)> {
    if r.is_zero() {
        return None;
    }
    Some(quotient_mantissa(
        r.numer().magnitude(),
        r.denom().magnitude(),
    ))
}

/// Correctly scaled conversion of an exact rational to `f64`. Values below
/// the subnormal range come back as zero; use [`LogProb::from_ratio`] to
/// keep their magnitude.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    match ratio_mantissa(r) {
        None => 0.0,
        Some((q, e)) => {
            let v = scale_pow2(q, e);
            if r.is_negative() {
                -v
            } else {
                v
            }
        }
    }
}

/// Natural log of a positive rational (`-inf` for zero).
pub fn ln_ratio(r: &BigRational) -> f64 {
    match ratio_mantissa(r) {
        None => f64::NEG_INFINITY,
        Some((q, e)) => ln_scaled(q, e),
    }
}

/// `ln(num / den)` without reducing the fraction first.
pub fn ln_quotient(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (q, e) = quotient_mantissa(num, den);
    ln_scaled(q, e)
}

/// `ln(q · 2^e)` with `q` brought near 1 first so that quotients close to 1
/// keep full relative accuracy.
fn ln_scaled(q: f64, e: i64) -> f64 {
    let (frac, exp) = (q * 2f64.powi(-64), e + 64);
    frac.ln() + exp as f64 * LN_2
}

/// Natural log of a probability. `-inf` encodes an exact zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log value. Values slightly above zero (rounding) are clamped.
    pub fn new(log_value: f64) -> Self {
        debug_assert!(!log_value.is_nan());
        LogProb(log_value.min(0.0))
    }

    /// Wraps a log value that may exceed zero, e.g. the log of an upper bound
    /// such as `2 * pv_os`.
    pub(crate) fn unclamped(log_value: f64) -> Self {
        LogProb(log_value)
    }

    pub fn from_prob(p: f64) -> Self {
        LogProb::new(p.ln())
    }

    pub fn from_ratio(r: &BigRational) -> Self {
        LogProb::unclamped(ln_ratio(r))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    /// Base-10 exponent and mantissa, valid far below `f64` range.
    pub fn to_sci(self) -> (f64, i64) {
        if self.0 == f64::NEG_INFINITY {
            return (0.0, 0);
        }
        let log10 = self.0 / std::f64::consts::LN_10;
        let mut e = log10.floor();
        let mut mant = 10f64.powf(log10 - e);
        if mant >= 10.0 {
            mant /= 10.0;
            e += 1.0;
        }
        (mant, e as i64)
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, e) = self.to_sci();
        write!(f, "{m:.12}e{e}")
    }
}

/// Streaming log-sum-exp over positive terms given by their logs.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSum {
    pub fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.max {
            self.scaled += (log_term - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        }
    }

    pub fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `a / b` as a reduced rational from unsigned big integers.
pub(crate) fn ratio(a: BigUint, b: BigUint) -> BigRational {
    BigRational::new(BigInt::from_biguint(Sign::Plus, a), BigInt::from(b))
}

/// `gcd` on `u64`, re-exported for the pair bookkeeping.
pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pascal(n: usize) -> Vec<Vec<BigUint>> {
        let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for r in 1..=n {
            let prev = &rows[r - 1];
            let mut row = vec![BigUint::one(); r + 1];
            for k in 1..r {
                row[k] = &prev[k - 1] + &prev[k];
            }
            rows.push(row);
        }
        rows
    }

    #[test]
    fn small_binomials() {
        assert_eq!(exact_binomial(2, 1).unwrap().value, BigUint::from(2u32));
        assert_eq!(exact_binomial(10, 4).unwrap().value, BigUint::from(210u32));
        assert_eq!(exact_binomial(7, 0).unwrap().value, BigUint::one());
        assert!(exact_binomial(3, 4).is_err());
        assert!(exact_binomial(3, -1).is_err());
    }

    #[test]
    fn matches_pascal_triangle() {
        let tri = pascal(60);
        for n in 0..=60u64 {
            let row = binomial_row(n);
            for k in 0..=n {
                assert_eq!(binomial(n, k), tri[n as usize][k as usize]);
                assert_eq!(row[k as usize], tri[n as usize][k as usize]);
            }
            let sum: BigUint = row.iter().sum();
            assert_eq!(sum, BigUint::one() << n as usize);
        }
    }

    #[test]
    fn binomial_900_300() {
        let b = binomial(900, 300);
        let two_over = ratio(BigUint::from(2u32), b);
        let v = ratio_to_f64(&two_over);
        assert!((v / 1.147212371856e-247 - 1.0).abs() < 5e-13, "{v:e}");
    }

    #[test]
    fn log_binomial_small_cases() {
        assert!((log_binomial(2.0, 1.0).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(log_binomial(5.0, 0.0).unwrap(), 0.0);
        assert_eq!(log_binomial(5.0, 5.0).unwrap(), 0.0);
        assert!(log_binomial(100.0, 37.5).unwrap().is_finite());
        assert!(log_binomial(-1.0, 0.0).is_err());
        assert!(log_binomial(4.0, 5.0).is_err());
    }

    #[test]
    fn log_binomial_agrees_with_exact() {
        for n in 1..=200u64 {
            for k in 0..=n {
                let exact = ln_biguint(&binomial(n, k));
                let approx = log_binomial(n as f64, k as f64).unwrap();
                assert!(
                    (approx - exact).abs() <= 1e-12 + 1e-10 * exact.abs(),
                    "n={n} k={k}: {approx} vs {exact}"
                );
                assert!((approx - exact).abs() <= 1e-12, "abs n={n} k={k}");
            }
        }
        let exact = ln_biguint(&binomial(900, 300));
        let approx = log_binomial(900.0, 300.0).unwrap();
        assert!((approx / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn log_binomial_large_n_stays_accurate() {
        // Compare against the exact value for n well beyond factorial range.
        for &(n, k) in &[(5000u64, 1234u64), (20000, 10000), (20000, 3)] {
            let exact = ln_biguint(&binomial(n, k));
            let approx = log_binomial(n as f64, k as f64).unwrap();
            assert!((approx / exact - 1.0).abs() < 1e-14, "{n} {k}");
        }
    }

    #[test]
    fn ratio_conversions() {
        let r = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert_eq!(ratio_to_f64(&r), 1.0 / 3.0);
        assert!((ln_ratio(&r) + 3f64.ln()).abs() < 1e-15);
        let neg = BigRational::new(BigInt::from(-5), BigInt::from(2));
        assert_eq!(ratio_to_f64(&neg), -2.5);
        let tiny = ratio(BigUint::one(), binomial(1200, 600));
        assert_eq!(ratio_to_f64(&tiny), 0.0);
        let lp = LogProb::from_ratio(&tiny);
        assert!((lp.ln() + ln_biguint(&binomial(1200, 600))).abs() < 1e-10);
    }

    #[test]
    fn alternating_sums() {
        let t = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(alternating_sum_exact(&t(&[2, -1])), BigRational::one());
        assert_eq!(
            alternating_sum_exact(&t(&[5])),
            BigRational::from_integer(BigInt::from(5))
        );
    }

    #[test]
    fn log_sum_matches_direct() {
        let mut s = LogSum::default();
        for x in [0.1f64, 0.02, 0.5, 1e-3] {
            s.add(x.ln());
        }
        assert!((s.ln().exp() - 0.621).abs() < 1e-15);
        let mut tiny = LogSum::default();
        tiny.add(-800.0);
        tiny.add(-800.0);
        assert!((tiny.ln() - (-800.0 + LN_2)).abs() < 1e-12);
    }

    #[test]
    fn sci_notation() {
        let lp = LogProb::new((1.5e-250f64).ln());
        let (m, e) = LogProb::from_ratio(&ratio(
            BigUint::from(3u32),
            BigUint::from(2u32) * BigUint::from(10u32).pow(250),
        ))
        .to_sci();
        assert_eq!(e, -250);
        assert!((m - 1.5).abs() < 1e-12);
        assert!(lp.ln() < 0.0);
    }
}
