use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;
use sylow_stats::recurrence::{next_row, RowStream};
use sylow_stats::{Float256, HTable, LogHTable256, PrimeParam, Real};

fn prime() -> impl Strategy<Value = PrimeParam> {
    prop::sample::select(vec![2u32, 3, 5, 7]).prop_map(|p| PrimeParam::new(p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn table_invariants(p in prime(), depth in 1usize..9) {
        let t = HTable::build(p, depth).unwrap();
        let pu = p.get();
        for n in 0..=depth {
            let row = t.row(n).unwrap();
            prop_assert!(row[0].is_one());
            prop_assert!(row.windows(2).all(|w| w[0] <= w[1]));
            for x in row {
                prop_assert!(((x.pow(pu) - x) % pu).is_zero());
            }
            if n >= 1 {
                let prev = t.row(n - 1).unwrap();
                for (k, x) in row.iter().enumerate().take(n) {
                    prop_assert!(t.lookup(n - 1, k as i64).unwrap() <= x);
                }
                prop_assert_eq!(&row[n] - &row[n - 1], BigUint::from(pu - 1).pow(n as u32));
                prop_assert_eq!(next_row(p, prev).unwrap(), row.to_vec());
            }
        }
    }

    #[test]
    fn lookup_clamps(p in prime(), n in 0usize..6, k in -3i64..12) {
        let t = HTable::build(p, 6).unwrap();
        let got = t.lookup(n, k).unwrap();
        if k < 0 {
            prop_assert!(got.is_zero());
        } else {
            prop_assert_eq!(got, &t.row(n).unwrap()[(k as usize).min(n)]);
        }
    }

    #[test]
    fn log_table_brackets_exact(p in prime(), depth in 1usize..9) {
        let t = HTable::build(p, depth).unwrap();
        let log = LogHTable256::build(p, depth).unwrap();
        for n in 0..=depth {
            for k in 0..=n {
                let exact: Float256 = sylow_stats::scalar::ln_biguint(&t.row(n).unwrap()[k]);
                let got = log.ln_h(n, k).unwrap();
                let bound = log.err_bound(n, k).unwrap() + Float256::epsilon() * Float256::from_u(64) * (exact.abs() + Float256::from_u(1));
                prop_assert!((got - exact).abs() <= bound, "n={} k={}", n, k);
            }
        }
    }
}

#[test]
fn stream_matches_table() {
    let p = PrimeParam::new(2).unwrap();
    let t = HTable::build(p, 12).unwrap();
    let rows: Vec<_> = RowStream::new(p).take(13).map(|r| r.unwrap()).collect();
    assert_eq!(rows.as_slice(), t.rows());
}

#[test]
fn log_monotone_deep() {
    let p = PrimeParam::new(2).unwrap();
    let log = LogHTable256::build(p, 400).unwrap();
    for n in 1..=400 {
        for k in 1..=n {
            assert!(log.ln_h(n, k - 1).unwrap() <= log.ln_h(n, k).unwrap());
        }
        assert!(log.ln_h(n - 1, n - 1).unwrap() <= log.ln_h(n, n).unwrap());
    }
}
