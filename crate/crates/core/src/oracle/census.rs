//! Brute-force conjugacy classes of `P_n` by orbit search under conjugation
//! by a generating set.

use std::collections::VecDeque;

use num_bigint::BigUint;
use serde::Serialize;

use super::wreath::WreathElement;
use crate::error::{Error, Result};
use crate::prime::PrimeParam;
use crate::recurrence::HTable;

/// Largest group enumerated without the slow flag.
pub const FAST_CENSUS_MAX: u64 = 1 << 15;
/// Largest group enumerated at all.
pub const SLOW_CENSUS_MAX: u64 = 1 << 24;

#[derive(Clone, Debug)]
pub struct ClassRecord {
    pub representative: WreathElement,
    pub size: u64,
    pub order_exponent: u32,
    /// 1: diagonal in the base group, 2: in the base group but not diagonal,
    /// 3: outside the base group. `None` at level 0.
    pub kind: Option<u8>,
}

#[derive(Clone, Debug)]
pub struct ClassCensus {
    pub p: PrimeParam,
    pub n: usize,
    pub classes: Vec<ClassRecord>,
    /// Class id of every element, by portrait index.
    class_of: Vec<u32>,
}

/// Refuses groups above the size limit; level 2 and up for `p >= 5` also
/// needs `slow`.
pub fn check_census_budget(p: PrimeParam, n: usize, slow: bool) -> Result<u64> {
    let size = WreathElement::group_size(p.get(), n);
    let limit = if slow { SLOW_CENSUS_MAX } else { FAST_CENSUS_MAX };
    match size {
        Some(s) if s <= limit && (slow || p.get() < 5 || n < 2) => Ok(s),
        Some(s) if s <= SLOW_CENSUS_MAX => Err(Error::Budget(format!(
            "P_{n} for p = {p} has {s} elements; rerun with --slow"
        ))),
        _ => Err(Error::Budget(format!(
            "P_{n} for p = {p} has p^{} elements, above the enumeration limit of {SLOW_CENSUS_MAX}",
            super::wreath::portrait_len(p.get(), n)
        ))),
    }
}

/// All conjugacy classes of `P_n`, ordered by smallest member index.
pub fn enumerate_classes(p: PrimeParam, n: usize, slow: bool) -> Result<ClassCensus> {
    let size = check_census_budget(p, n, slow)?;
    let sub = if n >= 1 { Some(enumerate_classes(p, n - 1, slow)?) } else { None };
    let pu = p.get();
    let gens = WreathElement::generators(pu, n);
    let gens_inv: Vec<_> = gens.iter().map(WreathElement::inverse).collect();
    let mut class_of = vec![u32::MAX; size as usize];
    let mut classes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..size {
        if class_of[start as usize] != u32::MAX {
            continue;
        }
        let id = classes.len() as u32;
        class_of[start as usize] = id;
        queue.push_back(start);
        let mut members = 0u64;
        while let Some(idx) = queue.pop_front() {
            members += 1;
            let x = WreathElement::from_index(pu, n, idx);
            for (g, gi) in gens.iter().zip(&gens_inv) {
                let y = g.mul(&x)?.mul(gi)?.to_index();
                if class_of[y as usize] == u32::MAX {
                    class_of[y as usize] = id;
                    queue.push_back(y);
                }
            }
        }
        let rep = WreathElement::from_index(pu, n, start);
        let kind = sub.as_ref().map(|s| kind_of(&rep, s));
        classes.push(ClassRecord { order_exponent: rep.order_exponent(), representative: rep, size: members, kind });
    }
    Ok(ClassCensus { p, n, classes, class_of })
}

fn kind_of(x: &WreathElement, sub: &ClassCensus) -> u8 {
    if x.shift() != 0 {
        return 3;
    }
    let ids: Vec<u32> = x.children().iter().map(|c| sub.class_id(c)).collect();
    if ids.iter().all(|&i| i == ids[0]) {
        1
    } else {
        2
    }
}

impl ClassCensus {
    pub fn class_id(&self, x: &WreathElement) -> u32 {
        self.class_of[x.to_index() as usize]
    }

    pub fn group_size(&self) -> u64 {
        self.class_of.len() as u64
    }

    /// Class sizes sum to the group order and each divides it.
    pub fn class_equation_holds(&self) -> bool {
        let total = self.group_size();
        self.classes.iter().map(|c| c.size).sum::<u64>() == total
            && self.classes.iter().all(|c| total.is_multiple_of(c.size))
    }

    /// `counts[k]` = number of elements of order exactly `p^k`.
    pub fn element_order_histogram(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n + 1];
        for c in &self.classes {
            counts[c.order_exponent as usize] += c.size;
        }
        counts
    }

    pub fn to_record(&self) -> CensusRecord {
        CensusRecord {
            p: self.p.get(),
            n: self.n,
            classes: self
                .classes
                .iter()
                .map(|c| ClassEntry {
                    size: c.size,
                    order_exponent: c.order_exponent,
                    kind: c.kind,
                    repr: c.representative.canonical_string(),
                })
                .collect(),
        }
    }
}

/// `h[k]` = number of classes with order at most `p^k`.
pub fn census_to_h(census: &ClassCensus) -> Vec<u64> {
    let mut h = vec![0u64; census.n + 1];
    for c in &census.classes {
        h[c.order_exponent as usize] += 1;
    }
    for k in 1..h.len() {
        h[k] += h[k - 1];
    }
    h
}

/// Cumulative per-kind class counts against the three terms of the recurrence.
#[derive(Clone, Debug)]
pub struct KindCheck {
    /// `observed[k]` = classes of kinds 1, 2, 3 with order at most `p^k`.
    pub observed: Vec<[u64; 3]>,
    pub expected: Vec<[BigUint; 3]>,
}

impl KindCheck {
    pub fn matches(&self) -> bool {
        self.observed
            .iter()
            .zip(&self.expected)
            .all(|(o, e)| o.iter().zip(e).all(|(a, b)| BigUint::from(*a) == *b))
    }

    /// Totals of each kind.
    pub fn totals(&self) -> [u64; 3] {
        *self.observed.last().expect("at least one level")
    }
}

/// Classifies the classes of `P_n` (`n >= 1`) and compares with row `n - 1`
/// of `table`: `h(k)`, `(h(k)^p - h(k))/p` and `(p-1) h(k-1)`.
pub fn classify_kinds(census: &ClassCensus, table: &HTable) -> Result<KindCheck> {
    let n = census.n;
    if n == 0 {
        return Err(Error::Argument("kinds are defined from level 1 on".into()));
    }
    if table.p() != census.p || table.depth() + 1 < n {
        return Err(Error::Argument(format!("table does not reach level {}", n - 1)));
    }
    let p = census.p.get();
    let mut observed = vec![[0u64; 3]; n + 1];
    for c in &census.classes {
        let kind = c.kind.expect("level >= 1") as usize - 1;
        for row in observed.iter_mut().skip(c.order_exponent as usize) {
            row[kind] += 1;
        }
    }
    let expected = (0..=n as i64)
        .map(|k| {
            let h = table.lookup(n - 1, k)?;
            let below = table.lookup(n - 1, k - 1)?;
            Ok([h.clone(), (h.pow(p) - h) / p, below * (p - 1)])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KindCheck { observed, expected })
}

/// Every cross-check the oracle can make against the recurrence. Returns
/// a one-line summary or a falsification error.
pub fn cross_check(census: &ClassCensus) -> Result<String> {
    let n = census.n;
    let table = HTable::build(census.p, n)?;
    let h = census_to_h(census);
    if !census.class_equation_holds() {
        return Err(Error::Falsified(format!("class sizes of P_{n} do not add up to the group order")));
    }
    let row = table.row(n).expect("built to n");
    if h.len() != row.len() || h.iter().zip(row).any(|(a, b)| BigUint::from(*a) != *b) {
        return Err(Error::Falsified(format!("census h-vector {h:?} differs from the recurrence")));
    }
    let kinds = if n >= 1 {
        let check = classify_kinds(census, &table)?;
        if !check.matches() {
            return Err(Error::Falsified(format!(
                "kind counts {:?} differ from the three-term split",
                check.observed
            )));
        }
        ", kinds OK"
    } else {
        ""
    };
    let hs: Vec<String> = h.iter().map(u64::to_string).collect();
    Ok(format!("{} classes, h = [{}]{kinds}", census.classes.len(), hs.join(",")))
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassEntry {
    pub size: u64,
    #[serde(rename = "orderExponent")]
    pub order_exponent: u32,
    pub kind: Option<u8>,
    pub repr: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusRecord {
    pub p: u32,
    pub n: usize,
    pub classes: Vec<ClassEntry>,
}
