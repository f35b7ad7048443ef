//! Elements of `P_n = P_{n-1} wr C_p` stored as flat portraits.
//!
//! A level-`n` element is `(f, s)`: a shift `s` in `Z/p` and `p` children of
//! level `n - 1`. The portrait is the preorder list of shifts, so it has
//! `(p^n - 1)/(p - 1)` entries and child `j` starts at `1 + j * size(n-1)`.
//!
//! Product: `(f, s)(g, t) = (j -> f(j) g(j - s), s + t)`.
//! With this rule `g (f, s) g^-1` for `g = (x at i, id)` gives
//! `h(i) = x f(i)` and `h(i+1) = f(i+1) x^-1` when `s = 1`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Number of portrait entries at `level`.
pub fn portrait_len(p: u32, level: usize) -> usize {
    let mut len = 0usize;
    for _ in 0..level {
        len = 1 + p as usize * len;
    }
    len
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WreathElement {
    p: u32,
    level: usize,
    portrait: Vec<u8>,
}

fn mul_into(p: u32, sub: usize, a: &[u8], b: &[u8], out: &mut [u8]) {
    if a.is_empty() {
        return;
    }
    let s = a[0] as u32;
    out[0] = ((s + b[0] as u32) % p) as u8;
    let next = (sub.saturating_sub(1)) / p as usize;
    for j in 0..p as usize {
        let jb = (j + p as usize - s as usize) % p as usize;
        let (ra, rb, ro) = (1 + j * sub, 1 + jb * sub, 1 + j * sub);
        mul_into(p, next, &a[ra..ra + sub], &b[rb..rb + sub], &mut out[ro..ro + sub]);
    }
}

fn inverse_into(p: u32, sub: usize, a: &[u8], out: &mut [u8]) {
    if a.is_empty() {
        return;
    }
    let s = a[0] as usize;
    out[0] = ((p as usize - s) % p as usize) as u8;
    let next = (sub.saturating_sub(1)) / p as usize;
    // g(j) = f(j + s)^-1
    for j in 0..p as usize {
        let src = (j + s) % p as usize;
        let (ra, ro) = (1 + src * sub, 1 + j * sub);
        inverse_into(p, next, &a[ra..ra + sub], &mut out[ro..ro + sub]);
    }
}

fn order_exponent_of(p: u32, sub: usize, a: &[u8]) -> u32 {
    if a.is_empty() {
        return 0;
    }
    let next = (sub.saturating_sub(1)) / p as usize;
    let child = |j: usize| &a[1 + j * sub..1 + (j + 1) * sub];
    let s = a[0] as usize;
    if s == 0 {
        return (0..p as usize).map(|j| order_exponent_of(p, next, child(j))).max().unwrap_or(0);
    }
    // x^p has f(0) f(-s) f(-2s) ... at coordinate 0
    let mut acc = child(0).to_vec();
    let mut tmp = vec![0u8; sub];
    for m in 1..p as usize {
        let j = (p as usize * m - m * s) % p as usize;
        mul_into(p, next, &acc, child(j), &mut tmp);
        std::mem::swap(&mut acc, &mut tmp);
    }
    1 + order_exponent_of(p, next, &acc)
}

impl WreathElement {
    pub fn identity(p: u32, level: usize) -> Self {
        WreathElement { p, level, portrait: vec![0; portrait_len(p, level)] }
    }

    pub fn from_portrait(p: u32, level: usize, portrait: Vec<u8>) -> Result<Self> {
        if portrait.len() != portrait_len(p, level) {
            return Err(Error::Argument(format!(
                "portrait of length {} does not fit level {level}",
                portrait.len()
            )));
        }
        if portrait.iter().any(|&s| s as u32 >= p) {
            return Err(Error::Argument(format!("portrait entry not reduced mod {p}")));
        }
        Ok(WreathElement { p, level, portrait })
    }

    /// `(children, shift)` with all children at one level.
    pub fn from_parts(children: &[WreathElement], shift: u32) -> Result<Self> {
        let first = children.first().ok_or_else(|| Error::Argument("no children".into()))?;
        let p = first.p;
        if children.len() != p as usize {
            return Err(Error::Argument(format!("need {p} children, got {}", children.len())));
        }
        if children.iter().any(|c| c.p != p || c.level != first.level) {
            return Err(Error::Argument("children differ in level or prime".into()));
        }
        let mut portrait = vec![(shift % p) as u8];
        for c in children {
            portrait.extend_from_slice(&c.portrait);
        }
        Ok(WreathElement { p, level: first.level + 1, portrait })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn portrait(&self) -> &[u8] {
        &self.portrait
    }

    /// Top shift; 0 at level 0.
    pub fn shift(&self) -> u32 {
        self.portrait.first().map_or(0, |&s| s as u32)
    }

    pub fn child(&self, j: usize) -> WreathElement {
        let sub = portrait_len(self.p, self.level - 1);
        let start = 1 + j * sub;
        WreathElement { p: self.p, level: self.level - 1, portrait: self.portrait[start..start + sub].to_vec() }
    }

    pub fn children(&self) -> Vec<WreathElement> {
        (0..self.p as usize).map(|j| self.child(j)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.portrait.iter().all(|&s| s == 0)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.p != other.p || self.level != other.level {
            Err(Error::Argument(format!(
                "cannot combine level {} (p = {}) with level {} (p = {})",
                self.level, self.p, other.level, other.p
            )))
        } else {
            Ok(())
        }
    }

    fn sub_len(&self) -> usize {
        portrait_len(self.p, self.level.saturating_sub(1))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = vec![0u8; self.portrait.len()];
        mul_into(self.p, self.sub_len(), &self.portrait, &other.portrait, &mut out);
        Ok(WreathElement { p: self.p, level: self.level, portrait: out })
    }

    pub fn inverse(&self) -> Self {
        let mut out = vec![0u8; self.portrait.len()];
        inverse_into(self.p, self.sub_len(), &self.portrait, &mut out);
        WreathElement { p: self.p, level: self.level, portrait: out }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = WreathElement::identity(self.p, self.level);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same group");
            }
            base = base.mul(&base).expect("same group");
            e >>= 1;
        }
        acc
    }

    /// `g self g^-1`.
    pub fn conjugate_by(&self, g: &Self) -> Result<Self> {
        g.mul(self)?.mul(&g.inverse())
    }

    /// `k` with order `p^k`, by the wreath rule.
    pub fn order_exponent(&self) -> u32 {
        order_exponent_of(self.p, self.sub_len(), &self.portrait)
    }

    /// Same as [`order_exponent`](Self::order_exponent) by repeated `p`-th powers.
    pub fn order_exponent_by_powering(&self) -> u32 {
        let mut x = self.clone();
        let mut k = 0;
        while !x.is_identity() {
            x = x.pow(self.p as u64);
            k += 1;
        }
        k
    }

    /// Position in `0..p^len`, reading the portrait as base-`p` digits.
    pub fn to_index(&self) -> u64 {
        self.portrait.iter().fold(0u64, |acc, &d| acc * self.p as u64 + d as u64)
    }

    pub fn from_index(p: u32, level: usize, mut index: u64) -> Self {
        let len = portrait_len(p, level);
        let mut portrait = vec![0u8; len];
        for slot in portrait.iter_mut().rev() {
            *slot = (index % p as u64) as u8;
            index /= p as u64;
        }
        WreathElement { p, level, portrait }
    }

    /// `p^k` elements at level `k`, with `k` the portrait length.
    pub fn group_size(p: u32, level: usize) -> Option<u64> {
        (p as u64).checked_pow(portrait_len(p, level) as u32)
    }

    pub fn random(p: u32, level: usize, rng: &mut RngStream) -> Self {
        let portrait = (0..portrait_len(p, level)).map(|_| rng.gen_range(0..p) as u8).collect();
        WreathElement { p, level, portrait }
    }

    /// A generating set: a single `p`-cycle at the leftmost vertex of each depth.
    pub fn generators(p: u32, level: usize) -> Vec<Self> {
        let mut out = Vec::with_capacity(level);
        let mut pos = 0usize;
        for depth in 0..level {
            let mut g = WreathElement::identity(p, level);
            g.portrait[pos] = 1;
            out.push(g);
            // leftmost child of this vertex
            if depth + 1 < level {
                pos += 1;
            }
        }
        out
    }

    /// Injective text form: `1` at level 0, else `(c_0,...,c_{p-1};s)`.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        self.write_canonical(&mut s);
        s
    }

    fn write_canonical(&self, out: &mut String) {
        if self.level == 0 {
            out.push('1');
            return;
        }
        out.push('(');
        for (j, c) in self.children().iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            c.write_canonical(out);
        }
        out.push(';');
        out.push_str(&self.shift().to_string());
        out.push(')');
    }
}

impl fmt::Debug for WreathElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;

    #[test]
    fn c2_group_table() {
        let e = WreathElement::identity(2, 1);
        let a = WreathElement::from_index(2, 1, 1);
        assert_eq!(a.mul(&a).unwrap(), e);
        assert_eq!(a.mul(&e).unwrap(), a);
        assert_eq!(e.mul(&a).unwrap(), a);
        assert_eq!(a.inverse(), a);
    }

    #[test]
    fn axioms_on_random_elements() {
        let mut rng = rng_stream(3, 0);
        for (p, level) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)] {
            let e = WreathElement::identity(p, level);
            for _ in 0..200 {
                let a = WreathElement::random(p, level, &mut rng);
                let b = WreathElement::random(p, level, &mut rng);
                let c = WreathElement::random(p, level, &mut rng);
                assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
                assert_eq!(a.mul(&a.inverse()).unwrap(), e);
                assert_eq!(a.inverse().mul(&a).unwrap(), e);
                assert_eq!(e.mul(&a).unwrap(), a);
            }
        }
    }

    #[test]
    fn conjugation_formula_literal() {
        let mut rng = rng_stream(5, 0);
        for (p, level) in [(2usize, 2usize), (2, 3), (3, 2), (3, 3)] {
            for _ in 0..50 {
                let x = WreathElement::random(p as u32, level - 1, &mut rng);
                let f: Vec<_> = (0..p).map(|_| WreathElement::random(p as u32, level - 1, &mut rng)).collect();
                let a = WreathElement::from_parts(&f, 1).unwrap();
                for i in 0..p - 1 {
                    let mut g = vec![WreathElement::identity(p as u32, level - 1); p];
                    g[i] = x.clone();
                    let g = WreathElement::from_parts(&g, 0).unwrap();
                    let h = a.conjugate_by(&g).unwrap();
                    assert_eq!(h.shift(), 1);
                    for j in 0..p {
                        let want = if j == i {
                            x.mul(&f[i]).unwrap()
                        } else if j == i + 1 {
                            f[i + 1].mul(&x.inverse()).unwrap()
                        } else {
                            f[j].clone()
                        };
                        assert_eq!(h.child(j), want);
                    }
                }
            }
        }
    }

    #[test]
    fn order_by_rule_matches_powering() {
        for (p, level) in [(2u32, 1usize), (2, 2), (2, 3), (3, 1), (3, 2)] {
            let size = WreathElement::group_size(p, level).unwrap();
            for i in 0..size {
                let x = WreathElement::from_index(p, level, i);
                assert_eq!(x.order_exponent(), x.order_exponent_by_powering(), "{x:?}");
            }
        }
    }

    #[test]
    fn d8_orders() {
        let orders: Vec<u32> = (0..8).map(|i| WreathElement::from_index(2, 2, i).order_exponent()).collect();
        assert_eq!(orders.iter().filter(|&&k| k == 2).count(), 2);
        assert_eq!(orders.iter().filter(|&&k| k <= 1).count(), 6);
        assert_eq!(orders.iter().filter(|&&k| k == 0).count(), 1);
        assert!(WreathElement::identity(2, 4).order_exponent() == 0);
        for i in 1..3 {
            assert_eq!(WreathElement::from_index(3, 1, i).order_exponent(), 1);
        }
    }

    #[test]
    fn index_round_trip_and_strings() {
        for i in 0..128 {
            let x = WreathElement::from_index(2, 3, i);
            assert_eq!(x.to_index(), i);
        }
        let x = WreathElement::from_index(2, 2, 0b101);
        assert_eq!(x.canonical_string(), "((1,1;0),(1,1;1);1)");
        assert_eq!(WreathElement::identity(3, 0).canonical_string(), "1");
        let a = WreathElement::identity(2, 2);
        let b = WreathElement::identity(2, 3);
        assert!(matches!(a.mul(&b), Err(Error::Argument(_))));
    }
}
