//! The `m = n` case: the Gnedenko–Korolyuk closed form, the `PH`/`DPH`
//! auxiliary functions, the two reflection bounds, and the DKWM margin
//! `δ_n`.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::Zero;

use crate::combinatorics::{
    alternating_sum_exact, binomial, binomial_row, ln_quotient, log_binomial, ratio,
};
use crate::error::{domain, Result};
use crate::lattice::{Method, PValue};

/// Parameters `(n, k)` of `Pr(KS_{n,n} >= k / sqrt(2n))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GkQuery {
    pub n: u64,
    pub k: u64,
}

impl GkQuery {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return domain(format!("closed form needs 1 <= k <= n, got n={n}, k={k}"));
        }
        Ok(GkQuery { n, k })
    }

    /// `M = k / sqrt(2n)`.
    pub fn m_statistic(&self) -> f64 {
        self.k as f64 / (2.0 * self.n as f64).sqrt()
    }
}

/// Exact `Pr(D_{n,n} >= k/n) = 2/binom(2n,n) · Σ_{i>=1} (−1)^{i−1} binom(2n, n+ik)`.
pub fn gk_pvalue(q: GkQuery) -> Result<PValue> {
    let GkQuery { n, k } = q;
    let terms: Vec<BigInt> = (1..=n / k)
        .map(|i| {
            let b = BigInt::from_biguint(Sign::Plus, binomial(2 * n, n + i * k));
            if i % 2 == 1 {
                b
            } else {
                -b
            }
        })
        .collect();
    let sum = alternating_sum_exact(&terms);
    let scale = BigRational::new(BigInt::from(2), BigInt::from(binomial(2 * n, n)));
    Ok(PValue::from_exact(Method::Gk, sum * scale))
}

/// Row of `binom(2n, ·)` reused for every `k` at a fixed `n`.
#[derive(Debug, Clone)]
pub struct GkRow {
    n: u64,
    row: Vec<BigUint>,
}

impl GkRow {
    pub fn new(n: u64) -> Self {
        GkRow {
            n,
            row: binomial_row(2 * n),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `Σ_{i>=1} (−1)^{i−1} binom(2n, n+ik)`; positive because the terms
    /// alternate and shrink.
    pub fn alternating_sum(&self, k: u64) -> BigUint {
        let n = self.n as usize;
        let k = k as usize;
        let mut pos = BigUint::zero();
        let mut neg = BigUint::zero();
        for i in 1..=n / k {
            let t = &self.row[n + i * k];
            if i % 2 == 1 {
                pos += t;
            } else {
                neg += t;
            }
        }
        pos - neg
    }

    pub fn central(&self) -> &BigUint {
        &self.row[self.n as usize]
    }

    pub fn pvalue(&self, k: u64) -> BigRational {
        ratio(self.alternating_sum(k) << 1u32, self.central().clone())
    }

    /// `ln( P_{n,n,M} / (2 e^{−2M²}) )` with `M = k/sqrt(2n)`.
    pub fn log_dkwm_ratio(&self, k: u64) -> f64 {
        ln_quotient(&self.alternating_sum(k), self.central()) + (k * k) as f64 / self.n as f64
    }
}

/// `PH(n,k) = ln binom(2n, n+k) − ln binom(2n, n) + k²/n` for real `k`.
/// `PH <= 0` exactly when the single-reflection bound already implies the
/// DKWM inequality at `(n, k)`.
pub fn ph(n: f64, k: f64) -> Result<f64> {
    if !(n > 0.0 && k >= 0.0 && k <= n) {
        return domain(format!("PH({n}, {k}): need 0 <= k <= n"));
    }
    Ok(log_binomial(2.0 * n, n + k)? - log_binomial(2.0 * n, n)? + k * k / n)
}

/// `DPH(n,k) = PH(n,k) − PH(n,k−1) = ln((n−k+1)/(n+k)) + (2k−1)/n`.
pub fn dph(n: f64, k: f64) -> Result<f64> {
    if !(n > 0.0 && k > 0.0 && k <= n) {
        return domain(format!("DPH({n}, {k}): need 0 < k <= n"));
    }
    Ok(((n - k + 1.0) / (n + k)).ln() + (2.0 * k - 1.0) / n)
}

/// Largest excess of the exact `m = n` tail over the DKWM bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRecord {
    pub n: u64,
    pub k_max: u64,
    /// `max_k P_{n,n,k/sqrt(2n)} / (2 e^{−k²/n}) − 1`.
    pub delta_n: f64,
    pub holds_dkwm: bool,
}

/// Scans every `k` in `1..=n` with the exact closed form and reports the
/// maximizing `k` (smallest on ties) and `δ_n`.
pub fn dkwm_margin(n: u64) -> DeltaRecord {
    assert!(n >= 1, "dkwm_margin needs n >= 1");
    let row = GkRow::new(n);
    let (k_max, log_ratio) =
        (1..=n)
            .map(|k| (k, row.log_dkwm_ratio(k)))
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
    let delta_n = log_ratio.exp_m1();
    DeltaRecord {
        n,
        k_max,
        delta_n,
        holds_dkwm: delta_n <= 0.0,
    }
}

/// The one- and two-reflection upper bounds on `P_{n,n,k/sqrt(2n)}`:
/// `2·binom(2n,n+k)/binom(2n,n)` and
/// `(2·binom(2n,n+k) − binom(2n,n+2k))/binom(2n,n)`.
pub fn lemma_bounds(n: u64, k: u64) -> Result<(BigRational, BigRational)> {
    GkQuery::new(n, k)?;
    let central = binomial(2 * n, n);
    let once = binomial(2 * n, n + k) << 1u32;
    let twice = binomial(2 * n, n + 2 * k);
    Ok((
        ratio(once.clone(), central.clone()),
        ratio(once - twice, central),
    ))
}

/// `ln binom(2n, n+2k) − ln binom(2n, n+k) + 3t² + 0.05` with `t = k/sqrt(n)`;
/// positive when the binomial-ratio inequality used for large `n` holds at
/// `(n, k)`.
pub fn binomial_ratio_margin(n: u64, k: u64) -> Result<f64> {
    if 2 * k > n {
        return domain(format!("need 2k <= n, got n={n}, k={k}"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let t2 = kf * kf / nf;
    Ok(log_binomial(2.0 * nf, nf + 2.0 * kf)? - log_binomial(2.0 * nf, nf + kf)? + 3.0 * t2 + 0.05)
}
