//! Band-counting ("inside") recursion: probability that a uniformly random
//! path from `(0,0)` to `(m,n)` never leaves `|i·n_red − j·m_red| < k`.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::SamplePair;

/// Column range `[lo, hi]` of row `i` inside the band `|v| <= k - 1`.
fn band_row(pair: &SamplePair, i: u64, k: u64) -> (i64, i64) {
    let a = pair.n_red() as i64;
    let b = pair.m_red() as i64;
    let slack = k as i64 - 1;
    let x = i as i64 * a;
    let lo = ceil_div(x - slack, b).max(0);
    let hi = (x + slack).div_euclid(b).min(pair.n() as i64);
    (lo, hi)
}

pub(crate) fn ceil_div(x: i64, b: i64) -> i64 {
    -((-x).div_euclid(b))
}

/// `Pr(all lattice points strictly inside the band)` in double precision,
/// using the normalized recursion
/// `u(i,j) = u(i-1,j)·i/(i+j) + u(i,j-1)·j/(i+j)`, which keeps every value in
/// `[0, 1]`.
pub fn inside_probability_float(pair: &SamplePair, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let n = pair.n() as usize;
    let mut u = vec![0f64; n + 1];
    let mut prev_lo = 0usize;
    for i in 0..=pair.m() {
        let (lo, hi) = band_row(pair, i, k);
        if lo > hi {
            return 0.0;
        }
        let (lo, hi) = (lo as usize, hi as usize);
        u[prev_lo..lo].fill(0.0);
        let fi = i as f64;
        for j in lo..=hi {
            if i == 0 && j == 0 {
                u[0] = 1.0;
                continue;
            }
            let left = if j > lo { u[j - 1] } else { 0.0 };
            let s = fi + j as f64;
            u[j] = u[j] * (fi / s) + left * (j as f64 / s);
        }
        prev_lo = lo;
    }
    u[n]
}

/// Number of monotone paths from `(0,0)` to `(m,n)` staying strictly inside
/// the band. Dividing by `binom(m+n, m)` gives the exact probability.
pub fn inside_path_count(pair: &SamplePair, k: u64) -> BigUint {
    if k == 0 {
        return BigUint::zero();
    }
    let n = pair.n() as usize;
    let mut c = vec![BigUint::zero(); n + 1];
    let mut prev_lo = 0usize;
    for i in 0..=pair.m() {
        let (lo, hi) = band_row(pair, i, k);
        if lo > hi {
            return BigUint::zero();
        }
        let (lo, hi) = (lo as usize, hi as usize);
        for cell in &mut c[prev_lo..lo] {
            *cell = BigUint::zero();
        }
        for j in lo..=hi {
            if i == 0 && j == 0 {
                c[0] = BigUint::one();
                continue;
            }
            if j > lo {
                let (head, tail) = c.split_at_mut(j);
                tail[0] += &head[j - 1];
            }
        }
        prev_lo = lo;
    }
    std::mem::take(&mut c[n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observations() {
        let p = SamplePair::new(1, 1).unwrap();
        assert_eq!(inside_probability_float(&p, 1), 0.0);
        assert_eq!(inside_path_count(&p, 1), BigUint::zero());
        // k = 2 exceeds every attainable value, so both paths stay inside.
        assert_eq!(inside_path_count(&p, 2), BigUint::from(2u32));
        assert_eq!(inside_probability_float(&p, 2), 1.0);
    }

    #[test]
    fn float_and_exact_agree_on_small_grid() {
        for m in 1..=9u64 {
            for n in 1..=9u64 {
                let p = SamplePair::new(m, n).unwrap();
                let total = crate::combinatorics::binomial(m + n, m);
                for k in 1..=p.lcm() + 1 {
                    let exact =
                        crate::combinatorics::ratio(inside_path_count(&p, k), total.clone());
                    let exact = crate::combinatorics::ratio_to_f64(&exact);
                    let float = inside_probability_float(&p, k);
                    assert!((exact - float).abs() < 1e-14, "{m} {n} {k}");
                }
            }
        }
    }
}
