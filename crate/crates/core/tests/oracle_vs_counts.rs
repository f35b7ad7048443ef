use num_bigint::BigUint;
use proptest::prelude::*;
use sylow_stats::class_stats::xi_pmf;
use sylow_stats::element::zeta_exact_cdf;
use sylow_stats::oracle::census::*;
use sylow_stats::{ExactRatio, HTable, PrimeParam, WreathElement};

const CASES: [(u32, usize); 6] = [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2)];

#[test]
fn census_rows_equal_recurrence() {
    for (p, n) in CASES {
        let p = PrimeParam::new(p).unwrap();
        let c = enumerate_classes(p, n, false).unwrap();
        let t = HTable::build(p, n).unwrap();
        let h: Vec<BigUint> = census_to_h(&c).into_iter().map(BigUint::from).collect();
        assert_eq!(h.as_slice(), t.row(n).unwrap());
        assert!(c.class_equation_holds());
        assert!(classify_kinds(&c, &t).unwrap().matches());
    }
}

#[test]
fn element_histograms_equal_dp() {
    for (p, n) in CASES {
        let pp = PrimeParam::new(p).unwrap();
        let c = enumerate_classes(pp, n, false).unwrap();
        let total = c.group_size();
        let hist = c.element_order_histogram();
        let cdf = zeta_exact_cdf::<ExactRatio>(pp, n);
        let mut acc = 0u64;
        for (k, count) in hist.iter().enumerate().take(n + 1) {
            acc += count;
            assert_eq!(cdf.q[k], ExactRatio::new(acc.into(), total.into()), "p={p} n={n} k={k}");
        }
    }
}

#[test]
fn class_pmf_equals_census_histogram() {
    for (p, n) in [(2u32, 3usize), (3, 2)] {
        let pp = PrimeParam::new(p).unwrap();
        let c = enumerate_classes(pp, n, false).unwrap();
        let count = c.classes.len() as u64;
        let t = HTable::build(pp, n).unwrap();
        let dist = xi_pmf::<f64>(&t, n).unwrap();
        for k in 0..=n {
            let hits = c.classes.iter().filter(|x| x.order_exponent as usize == k).count() as u64;
            assert_eq!(dist.ratio(k).unwrap(), ExactRatio::new(hits.into(), count.into()));
        }
    }
}

#[test]
fn slow_case_five() {
    let p = PrimeParam::new(5).unwrap();
    let c = enumerate_classes(p, 2, true).unwrap();
    assert_eq!(cross_check(&c).unwrap(), "649 classes, h = [1,633,649], kinds OK");
}

fn element(p: u32, level: usize) -> impl Strategy<Value = WreathElement> {
    let size = WreathElement::group_size(p, level).unwrap();
    (0..size).prop_map(move |i| WreathElement::from_index(p, level, i))
}

proptest! {
    #[test]
    fn associativity_p2(a in element(2, 3), b in element(2, 3), c in element(2, 3)) {
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
    }

    #[test]
    fn associativity_p3(a in element(3, 2), b in element(3, 2), c in element(3, 2)) {
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
    }

    #[test]
    fn conjugation_preserves_order(a in element(2, 4), g in element(2, 4)) {
        prop_assert_eq!(a.conjugate_by(&g).unwrap().order_exponent(), a.order_exponent());
    }

    #[test]
    fn order_rule_matches_powering(a in element(3, 3)) {
        prop_assert_eq!(a.order_exponent(), a.order_exponent_by_powering());
    }

    #[test]
    fn canonical_form_is_injective(a in element(2, 3), b in element(2, 3)) {
        prop_assert_eq!(a == b, a.canonical_string() == b.canonical_string());
    }
}
