use ks2_core::approximations::{beta_series, dkwm_bound, stephens_pli};
use ks2_core::combinatorics::{binomial, ln_biguint, log_binomial, LogSum};
use ks2_core::lattice::{
    achievable_ks, inside_pvalue_k, oracle_pvalue, outside_one_sided_k, two_sided_pvalue_k,
    upper_bound_k, Method, PValueOptions,
};
use ks2_core::{Precision, SamplePair};
use num_rational::{BigRational, Ratio};
use proptest::prelude::*;

fn pair_and_k(max: u64) -> impl Strategy<Value = (SamplePair, u64)> {
    (1..=max, 1..=max).prop_flat_map(|(m, n)| {
        let p = SamplePair::new(m, n).unwrap();
        let ks = achievable_ks(&p);
        (Just(p), proptest::sample::select(ks))
    })
}

fn exact(pv: ks2_core::PValue) -> BigRational {
    pv.exact().expect("exact precision").clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn one_sided_sandwich((p, k) in pair_and_k(30)) {
        let pv = exact(inside_pvalue_k(&p, k, Precision::Exact));
        let os = exact(outside_one_sided_k(&p, k, Precision::Exact));
        prop_assert!(os <= pv);
        prop_assert!(pv <= &os + &os);
        if 2 * k > p.lcm() {
            prop_assert_eq!(pv, &os + &os);
        }
    }

    #[test]
    fn symmetric_in_sample_sizes((p, k) in pair_and_k(30)) {
        let a = exact(inside_pvalue_k(&p, k, Precision::Exact));
        let b = exact(inside_pvalue_k(&p.swapped(), k, Precision::Exact));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn monotone_in_d((p, k) in pair_and_k(30)) {
        let a = exact(inside_pvalue_k(&p, k, Precision::Exact));
        if k < p.lcm() {
            let b = exact(inside_pvalue_k(&p, k + 1, Precision::Exact));
            prop_assert!(b <= a);
        }
    }

    #[test]
    fn matches_enumeration((p, k) in pair_and_k(9)) {
        let d = Ratio::new(k, p.lcm());
        let want = oracle_pvalue(&p, d).unwrap();
        let got = two_sided_pvalue_k(&p, k, &PValueOptions::default()).unwrap();
        prop_assert_eq!(got.exact(), want.exact());
    }

    #[test]
    fn float_paths_track_exact((p, k) in pair_and_k(40)) {
        let e = inside_pvalue_k(&p, k, Precision::Exact).value();
        let f = inside_pvalue_k(&p, k, Precision::Float).value();
        prop_assert!((e - f).abs() <= 1e-13, "{} vs {}", e, f);
        let oe = outside_one_sided_k(&p, k, Precision::Exact);
        let of = outside_one_sided_k(&p, k, Precision::Float);
        if oe.value() > 0.0 {
            prop_assert!((of.log_value() - oe.log_value()).abs() <= 1e-11);
        } else {
            prop_assert_eq!(of.value(), 0.0);
        }
    }

    #[test]
    fn auto_never_exceeds_upper_bound((p, k) in pair_and_k(40)) {
        let opts = PValueOptions { precision: Some(Precision::Float), ..Default::default() };
        let pv = two_sided_pvalue_k(&p, k, &opts).unwrap();
        let ub = upper_bound_k(&p, k, Precision::Float);
        prop_assert!(pv.value() <= ub.value() * (1.0 + 1e-12) + 1e-15);
        if pv.method() == Method::UpperBound {
            prop_assert!(2 * k <= p.lcm());
        }
    }

    #[test]
    fn index_rounds_up(m in 1u64..200, n in 1u64..200, num in 1u64..1000, den in 1u64..1000) {
        prop_assume!(num <= den);
        let p = SamplePair::new(m, n).unwrap();
        let d = Ratio::new(num, den);
        let k = p.index_for(d).unwrap();
        prop_assert!(Ratio::new(k, p.lcm()) >= d);
        prop_assert!(Ratio::new(k - 1, p.lcm()) < d);
    }

    #[test]
    fn log_binomial_matches_big_integers(n in 0u64..3000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let want = ln_biguint(&binomial(n, k));
        let got = log_binomial(n as f64, k as f64).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{} {}", got, want);
    }

    #[test]
    fn log_sum_matches_naive(xs in proptest::collection::vec(-30.0f64..0.0, 1..40)) {
        let mut acc = LogSum::default();
        for &x in &xs {
            acc.add(x);
        }
        let naive: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((acc.ln() - naive).abs() <= 1e-13);
    }

    #[test]
    fn approximation_ordering(m_stat in 0.05f64..6.0) {
        let beta = beta_series(m_stat, 1e-18).unwrap();
        prop_assert!(beta <= dkwm_bound(m_stat) * (1.0 + 1e-15));
        prop_assert!((0.0..=1.0 + 1e-15).contains(&beta));
    }

    #[test]
    fn plug_in_below_limit((p, k) in pair_and_k(60)) {
        let d = k as f64 / p.lcm() as f64;
        let s = stephens_pli(&p, d).unwrap();
        let beta = beta_series(p.m_statistic(k), 1e-18).unwrap();
        prop_assert!(s <= beta * (1.0 + 1e-15) + 1e-18);
    }
}
