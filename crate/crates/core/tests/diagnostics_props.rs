use proptest::prelude::*;
use sylow_stats::diagnostics::*;
use sylow_stats::{ExactRatio, Float256, HTable, LogHTable256, PrimeParam};

fn prime() -> impl Strategy<Value = PrimeParam> {
    prop::sample::select(vec![2u32, 3, 5]).prop_map(|p| PrimeParam::new(p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn beta_forms_agree(p in prime(), depth in 1usize..8) {
        let t = HTable::build(p, depth).unwrap();
        for n in 1..=depth {
            for k in 1..=n {
                prop_assert!(beta(&t, n, k).is_ok());
            }
            prop_assert!(gap_identities_hold(&t, n).unwrap());
        }
    }

    #[test]
    fn alpha_monotone_and_bounded(p in prime(), depth in 1usize..8) {
        let t = HTable::build(p, depth).unwrap();
        for n in 1..=depth {
            let alphas: Vec<ExactRatio> = (1..=n + 1).map(|k| alpha(&t, n, k).unwrap()).collect();
            prop_assert!(alphas.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(is_one(alphas.last().unwrap()));
        }
    }

    #[test]
    fn product_identity_small(p in prime(), depth in 1usize..6) {
        let t = HTable::build(p, depth).unwrap();
        prop_assert!(check_alpha_products(&t, depth).unwrap().is_empty());
        for n in 1..=depth {
            for k in 1..=n {
                prop_assert!(check_alpha_product(&t, n, k).unwrap());
            }
        }
    }

    #[test]
    fn median_exact_equals_log(p in prime(), depth in 1usize..14) {
        let depth = if p.get() == 5 { depth.min(9) } else { depth };
        let t = HTable::build(p, depth).unwrap();
        let log = LogHTable256::build(p, depth).unwrap();
        for n in 1..=depth {
            prop_assert_eq!(median_k0(&t, n).unwrap(), median_k0(&log, n).unwrap());
        }
    }
}

#[test]
fn gamma_intervals_nest_to_twenty() {
    let t = HTable::build(PrimeParam::new(2).unwrap(), 20).unwrap();
    let g = gamma_estimate::<Float256>(&t).unwrap();
    assert!(g.consistent);
    let w = g.widths();
    assert!(w.windows(2).all(|x| x[1] < x[0]));
    let (lo5, hi5) = (g.per_level[4].lo.clone(), g.per_level[4].hi.clone());
    assert!(lo5 <= g.point && g.point < hi5);
}

#[test]
fn gamma_log_contains_exact() {
    let p = PrimeParam::new(3).unwrap();
    let t = HTable::build(p, 8).unwrap();
    let ex = gamma_estimate::<Float256>(&t).unwrap();
    let lg = gamma_estimate_log(&LogHTable256::build(p, 8).unwrap()).unwrap();
    for (a, b) in ex.per_level.iter().zip(&lg.per_level) {
        assert!(b.lo <= a.lo && a.hi <= b.hi);
    }
}

#[test]
fn beta_bound_below_p_squared_plus_p() {
    for p in [2u32, 3, 5] {
        let t = HTable::build(PrimeParam::new(p).unwrap(), 8).unwrap();
        for n in 2..=8 {
            for k in 1..=n {
                let v = check_beta_bound(&t, n, k).unwrap();
                assert!(v <= (p * p + p) as f64, "p={p} n={n} k={k} v={v}");
            }
        }
    }
}
