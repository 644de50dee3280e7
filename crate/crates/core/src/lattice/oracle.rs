//! Brute-force reference: enumerate every interleaving of the two samples
//! and record `max_t |i_t·n − j_t·m|` for each one.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::Ratio;

use super::SamplePair;
use crate::error::{Error, Result};

/// Largest `m + n` the enumeration accepts (`binom(22, 11) = 705432`).
pub const ORACLE_MAX_TOTAL: u64 = 22;

/// Histogram of `max |i·n − j·m|` over all `binom(m+n, m)` orderings.
#[derive(Debug, Clone)]
pub struct OracleDistribution {
    m: u64,
    n: u64,
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl OracleDistribution {
    pub fn enumerate(pair: &SamplePair) -> Result<Self> {
        let (m, n) = (pair.m(), pair.n());
        if m + n > ORACLE_MAX_TOTAL {
            return Err(Error::Resource(format!(
                "enumeration oracle needs m + n <= {ORACLE_MAX_TOTAL}, got {}",
                m + n
            )));
        }
        let mut counts = BTreeMap::new();
        let mut total = 0;
        walk(m as i64, n as i64, 0, 0, 0, &mut counts, &mut total);
        Ok(OracleDistribution {
            m,
            n,
            counts,
            total,
        })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of orderings with `sup |F_m − G_n| >= d`.
    pub fn count_at_least(&self, d: Ratio<u64>) -> u64 {
        // max/(mn) >= p/q  <=>  max·q >= p·m·n
        let threshold = *d.numer() as u128 * (self.m * self.n) as u128;
        self.counts
            .iter()
            .filter(|(&max, _)| max as u128 * *d.denom() as u128 >= threshold)
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn probability_at_least(&self, d: Ratio<u64>) -> num_rational::BigRational {
        crate::combinatorics::ratio(
            BigUint::from(self.count_at_least(d)),
            BigUint::from(self.total),
        )
    }
}

fn walk(
    m: i64,
    n: i64,
    i: i64,
    j: i64,
    max: u64,
    counts: &mut BTreeMap<u64, u64>,
    total: &mut u64,
) {
    if i == m && j == n {
        *counts.entry(max).or_insert(0) += 1;
        *total += 1;
        return;
    }
    if i < m {
        let v = ((i + 1) * n - j * m).unsigned_abs();
        walk(m, n, i + 1, j, max.max(v), counts, total);
    }
    if j < n {
        let v = (i * n - (j + 1) * m).unsigned_abs();
        walk(m, n, i, j + 1, max.max(v), counts, total);
    }
}
