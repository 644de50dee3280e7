//! Closed-form tail approximations: the DKWM bound `2e^{−2M²}`, the
//! Brownian-bridge limit `β(M)`, and the Stephens-style plug-in `β(F·d)`.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::lattice::{PValue, SamplePair};

pub const DEFAULT_SERIES_TOL: f64 = 1e-18;

/// `2·exp(−2M²)`. Not capped at 1.
pub fn dkwm_bound(m_stat: f64) -> f64 {
    2.0 * (-2.0 * m_stat * m_stat).exp()
}

/// `M_α` with `2·exp(−2M_α²) = α`.
pub fn critical_m(alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / 2.0).sqrt()
}

/// `β(M) = Pr(sup |B_t| > M) = 2 Σ_{j>=1} (−1)^{j−1} exp(−2j²M²)`.
///
/// The alternating series is cut once the next term drops below `tol`
/// times the partial sum, so the relative truncation error is at most `tol`
/// even far in the tail. For `M < 0.5` that series converges slowly and the
/// equivalent Jacobi form `1 − (sqrt(2π)/M) Σ exp(−(2j−1)²π²/(8M²))` is
/// summed instead (there the result is at least 0.96, and `tol` bounds the
/// absolute error).
pub fn beta_series(m_stat: f64, tol: f64) -> Result<f64> {
    if m_stat.is_nan() || m_stat <= 0.0 {
        return domain(format!("beta series needs M > 0, got {m_stat}"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    if m_stat < 0.5 {
        let scale = (2.0 * PI).sqrt() / m_stat;
        let mut sum = 0.0;
        for j in 1u32.. {
            let odd = (2 * j - 1) as f64;
            let term = scale * (-odd * odd * PI * PI / (8.0 * m_stat * m_stat)).exp();
            sum += term;
            if term < tol {
                break;
            }
        }
        return Ok(1.0 - sum);
    }
    let a = 2.0 * m_stat * m_stat;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1u32.. {
        let jf = j as f64;
        let term = 2.0 * (-a * jf * jf).exp();
        if j > 1 && term < tol * sum {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    Ok(sum)
}

/// `F = sqrt(N_e) + 0.12 + 0.11/sqrt(N_e)`.
pub fn f_factor(pair: &SamplePair) -> f64 {
    let root = pair.effective_size_f64().sqrt();
    root + 0.12 + 0.11 / root
}

/// Plug-in approximation `S_pli = β(F·d)`.
pub fn stephens_pli(pair: &SamplePair, d: f64) -> Result<f64> {
    if !(d > 0.0 && d <= 1.0) {
        return domain(format!("d = {d} must lie in (0, 1]"));
    }
    beta_series(f_factor(pair) * d, DEFAULT_SERIES_TOL)
}

/// All closed-form quantities at one lattice value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxBundle {
    pub m_stat: f64,
    pub dkwm: f64,
    pub beta: f64,
    pub s_pli: f64,
    pub n_e: f64,
    pub f_factor: f64,
}

impl ApproxBundle {
    pub fn new(pair: &SamplePair, k: u64) -> Result<Self> {
        let d = k as f64 / pair.lcm() as f64;
        let m_stat = pair.m_statistic(k);
        Ok(ApproxBundle {
            m_stat,
            dkwm: dkwm_bound(m_stat),
            beta: beta_series(m_stat, DEFAULT_SERIES_TOL)?,
            s_pli: stephens_pli(pair, d)?,
            n_e: pair.effective_size_f64(),
            f_factor: f_factor(pair),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeErrors {
    /// `2e^{−2M²}/pv − 1`; negative where the DKWM inequality fails.
    pub reler_dkwm: f64,
    /// `|S_pli/pv − 1|`.
    pub reler_spli: f64,
    /// `|alternate/pv − 1|` when a second evaluation was supplied.
    pub reler_methods: Option<f64>,
}

fn rel(approx: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        f64::INFINITY
    } else {
        approx / reference - 1.0
    }
}

/// Relative errors of the two approximations (and optionally of a second
/// evaluation method) against the p-value `pv` at lattice index `k`.
pub fn relative_errors(
    pair: &SamplePair,
    k: u64,
    pv: &PValue,
    alternate: Option<f64>,
) -> Result<RelativeErrors> {
    if pv.is_upper_bound() {
        return domain("relative errors need a p-value, not an upper bound");
    }
    let bundle = ApproxBundle::new(pair, k)?;
    let p = pv.value();
    Ok(RelativeErrors {
        reler_dkwm: rel(bundle.dkwm, p),
        reler_spli: rel(bundle.s_pli, p).abs(),
        reler_methods: alternate.map(|a| rel(a, p).abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dkwm_values() {
        assert_eq!(dkwm_bound(0.0), 2.0);
        let m = 20f64.sqrt() * 0.3;
        assert!((dkwm_bound(m) - 0.05465).abs() < 5e-6);
        let m = 240f64.sqrt() * 104.0 / 1200.0;
        assert!((dkwm_bound(m) - 0.0543568).abs() < 5e-8);
    }

    #[test]
    fn remark_values() {
        let b05 = beta_series(critical_m(0.05), 1e-18).unwrap();
        assert!((b05 - 0.04999922).abs() < 5e-9, "{b05}");
        let b01 = beta_series(critical_m(0.01), 1e-18).unwrap();
        assert!((b01 - 0.009999999).abs() < 5e-10, "{b01}");
    }

    #[test]
    fn large_m_collapses_to_first_term() {
        for m in [5.0, 6.5, 8.0, 14.0] {
            let b = beta_series(m, DEFAULT_SERIES_TOL).unwrap();
            assert!(b > 0.0);
            assert!((b / dkwm_bound(m) - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn both_series_forms_agree_near_switch() {
        for m in [0.3, 0.45, 0.5, 0.55, 0.8] {
            let a = beta_series(m, 1e-18).unwrap();
            // Reference: long alternating sum.
            let b: f64 = (1..2000)
                .map(|j| {
                    let s = if j % 2 == 1 { 2.0 } else { -2.0 };
                    s * (-2.0 * (j * j) as f64 * m * m).exp()
                })
                .sum();
            assert!((a - b).abs() < 1e-13, "{m}: {a} vs {b}");
        }
    }

    #[test]
    fn domain_checks() {
        assert!(beta_series(0.0, 1e-18).is_err());
        assert!(beta_series(1.0, 0.0).is_err());
        let p = SamplePair::new(3, 4).unwrap();
        assert!(stephens_pli(&p, 0.0).is_err());
    }

    #[test]
    fn plug_in_values() {
        let p = SamplePair::new(40, 40).unwrap();
        assert!((stephens_pli(&p, 0.3).unwrap() - 0.04313).abs() < 5e-6);
        let p = SamplePair::new(20, 500).unwrap();
        assert!((stephens_pli(&p, 0.36).unwrap() - 0.009787).abs() < 5e-7);
    }

    #[test]
    fn reler_zero_when_pv_equals_bound() {
        let p = SamplePair::new(40, 40).unwrap();
        let b = ApproxBundle::new(&p, 12).unwrap();
        let pv = PValue::from_float(crate::lattice::Method::Inside, b.dkwm);
        let e = relative_errors(&p, 12, &pv, None).unwrap();
        assert_eq!(e.reler_dkwm, 0.0);
        let zero = PValue::from_float(crate::lattice::Method::Inside, 0.0);
        assert!(relative_errors(&p, 12, &zero, None)
            .unwrap()
            .reler_dkwm
            .is_infinite());
    }
}
