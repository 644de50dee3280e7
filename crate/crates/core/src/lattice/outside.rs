//! First-passage ("outside") computation of the one-sided probability
//! `Pr(sup (F_m − G_n) >= k/L)`.
//!
//! A path crosses the upper boundary the first time it steps into the set
//! `B = {(i,j) : i·n_red − j·m_red >= k}`. Because a `j` step only lowers the
//! lattice value, every entry into `B` is an `i` step from a cell outside
//! `B`. Summing, over entry cells, the number of `B`-avoiding paths to the
//! cell before entry times the number of free paths from the entry cell to
//! `(m,n)` uses additions and multiplications only.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::inside::ceil_div;
use super::SamplePair;
use crate::combinatorics::{binomial, log_binomial, LogProb, LogSum};

/// First column of row `i` that lies outside `B`.
fn first_free_column(pair: &SamplePair, i: u64, k: u64) -> i64 {
    let a = pair.n_red() as i64;
    let b = pair.m_red() as i64;
    ceil_div(i as i64 * a - (k as i64 - 1), b).max(0)
}

/// Exact number of paths from `(0,0)` to `(m,n)` that reach `B`.
pub fn outside_path_count(pair: &SamplePair, k: u64) -> BigUint {
    let (m, n) = (pair.m(), pair.n());
    if k == 0 {
        return binomial(m + n, m);
    }
    let mut g = vec![BigUint::zero(); n as usize + 1];
    let mut total = BigUint::zero();
    let mut prev_lo = 0usize;
    for i in 0..=m {
        let lo = first_free_column(pair, i, k) as usize;
        if i > 0 {
            #[allow(clippy::needless_range_loop)]
            for j in prev_lo..lo.min(n as usize + 1) {
                if g[j].is_zero() {
                    continue;
                }
                let rest = binomial(m - i + n - j as u64, m - i);
                total += &g[j] * rest;
            }
        }
        if lo > n as usize {
            break;
        }
        for cell in &mut g[prev_lo..lo] {
            *cell = BigUint::zero();
        }
        for j in lo..=n as usize {
            if i == 0 && j == 0 {
                g[0] = BigUint::one();
                continue;
            }
            if j > lo {
                let (head, tail) = g.split_at_mut(j);
                tail[0] += &head[j - 1];
            }
        }
        prev_lo = lo;
    }
    total
}

/// One-sided crossing probability in log space. The avoidance probabilities
/// are propagated in normalized form (all in `[0,1]`); each entry term is
/// assembled as a log and accumulated with log-sum-exp, so results far
/// below `f64::MIN_POSITIVE` keep their magnitude.
pub fn outside_log_probability(pair: &SamplePair, k: u64) -> LogProb {
    let (m, n) = (pair.m(), pair.n());
    if k == 0 {
        return LogProb::ONE;
    }
    let log_total = log_binomial((m + n) as f64, m as f64).expect("valid binomial");
    let mut v = vec![0f64; n as usize + 1];
    let mut acc = LogSum::default();
    let mut prev_lo = 0usize;
    for i in 0..=m {
        let lo = first_free_column(pair, i, k) as usize;
        if i > 0 {
            #[allow(clippy::needless_range_loop)]
            for j in prev_lo..lo.min(n as usize + 1) {
                if v[j] == 0.0 {
                    continue;
                }
                let before = (i - 1 + j as u64) as f64;
                let after = (m - i + n - j as u64) as f64;
                let log_term = v[j].ln()
                    + log_binomial(before, j as f64).expect("valid binomial")
                    + log_binomial(after, (m - i) as f64).expect("valid binomial")
                    - log_total;
                acc.add(log_term);
            }
        }
        if lo > n as usize {
            break;
        }
        v[prev_lo..lo].fill(0.0);
        let fi = i as f64;
        for j in lo..=n as usize {
            if i == 0 && j == 0 {
                v[0] = 1.0;
                continue;
            }
            let left = if j > lo { v[j - 1] } else { 0.0 };
            let s = fi + j as f64;
            v[j] = v[j] * (fi / s) + left * (j as f64 / s);
        }
        prev_lo = lo;
    }
    LogProb::new(acc.ln())
}
