//! Ratios derived from the class-count table and the checks built on them.
//!
//! * `alpha_n(k) = h_n(k-1) / h_n(n)`: fraction of classes with order below `p^k`.
//! * `beta_n(k) = (h_n(k-1)/h_n(k)) * (h_{n-1}(k)/h_{n-1}(k-1))^p`: one-level
//!   step ratio.
//!
//! Exact variants work on [`HTable`] and compare rationals by
//! cross-multiplication, which keeps the identities exact without reducing
//! multi-megabit fractions. Log-domain variants work on [`LogHTable`] and
//! carry its error bounds into every comparison.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use rug::integer::Order;
use rug::ops::Pow;
use rug::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prime::PrimeParam;
use crate::recurrence::{HTable, LogHTable};
use crate::scalar::{ln_biguint, Real};
use crate::ExactRatio;

/// Upper limit on operand size for [`check_alpha_product`].
pub const PRODUCT_CHECK_MAX_BITS: u64 = 1 << 28;

/// An unreduced fraction `num / den`, both positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub num: BigUint,
    pub den: BigUint,
}

impl Fraction {
    pub fn same_value(&self, other: &Fraction) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }

    pub fn reduced(&self) -> ExactRatio {
        ExactRatio::new(BigInt::from(self.num.clone()), BigInt::from(self.den.clone()))
    }
}

fn require_level(table: &HTable, n: usize) -> Result<()> {
    if n > table.depth() {
        Err(Error::Argument(format!("level {n} outside table of depth {}", table.depth())))
    } else {
        Ok(())
    }
}

/// `alpha_n(k)` for `1 <= k <= n + 1`.
pub fn alpha(table: &HTable, n: usize, k: usize) -> Result<ExactRatio> {
    require_level(table, n)?;
    if k == 0 || k > n + 1 {
        return Err(Error::Argument(format!("alpha_{n}({k}) needs 1 <= k <= {}", n + 1)));
    }
    let num = table.h(n, k as i64 - 1);
    let den = table.h(n, n as i64);
    Ok(ExactRatio::new(BigInt::from(num.clone()), BigInt::from(den.clone())))
}

fn require_beta_range(table: &HTable, n: usize, k: usize) -> Result<()> {
    require_level(table, n)?;
    if n == 0 || k == 0 || k > n {
        return Err(Error::Argument(format!("beta_{n}({k}) needs 1 <= k <= n")));
    }
    Ok(())
}

/// `beta_n(k)` straight from its definition, unreduced.
pub fn beta_definitional(table: &HTable, n: usize, k: usize) -> Result<Fraction> {
    require_beta_range(table, n, k)?;
    let p = table.p().get();
    let k = k as i64;
    let lower_pow = table.h(n - 1, k).pow(p);
    let upper_pow = table.h(n - 1, k - 1).pow(p);
    Ok(Fraction { num: table.h(n, k - 1) * lower_pow, den: table.h(n, k) * upper_pow })
}

/// `beta_n(k)` from row `n - 1` alone, through the expanded form
///
/// ```text
/// 1 + (p-1) a^(1-p) + p(p-1) c a^(-p)
/// -----------------------------------,  a = h_{n-1}(k-1), b = h_{n-1}(k), c = h_{n-1}(k-2)
/// 1 + (p-1) b^(1-p) + p(p-1) a b^(-p)
/// ```
pub fn beta_expanded(table: &HTable, n: usize, k: usize) -> Result<Fraction> {
    require_beta_range(table, n, k)?;
    let p = table.p().get();
    let k = k as i64;
    let a = table.h(n - 1, k - 1);
    let b = table.h(n - 1, k);
    let c = table.h(n - 1, k - 2);
    let a_p = a.pow(p);
    let b_p = b.pow(p);
    let w = p * (p - 1);
    let top = &a_p + a * (p - 1) + c * w;
    let bottom = &b_p + b * (p - 1) + a * w;
    Ok(Fraction { num: top * b_p, den: bottom * a_p })
}

/// `beta_n(k)` in lowest terms, after confirming both forms agree.
pub fn beta(table: &HTable, n: usize, k: usize) -> Result<ExactRatio> {
    let def = beta_definitional(table, n, k)?;
    let alt = beta_expanded(table, n, k)?;
    if !def.same_value(&alt) {
        return Err(Error::Falsified(format!(
            "beta_{n}({k}): definition and expanded form differ"
        )));
    }
    Ok(def.reduced())
}

/// `1 - beta_n(n) = (p-1)^n / h_n(n)` and `h_n(n) - h_n(n-1) = (p-1)^n`.
pub fn gap_identities_hold(table: &HTable, n: usize) -> Result<bool> {
    require_level(table, n)?;
    if n == 0 {
        return Ok(true);
    }
    let p = table.p().get();
    let gap = BigUint::from(p - 1).pow(n as u32);
    let top = table.h(n, n as i64);
    let below = table.h(n, n as i64 - 1);
    let first = top - below == gap;
    let b = beta_definitional(table, n, n)?;
    // (den - num) / den == gap / top
    let second = b.den >= b.num && (&b.den - &b.num) * top == &b.den * &gap;
    Ok(first && second)
}

/// `|log beta_n(k)| * h_{n-1}(k-1)^(p-1)`.
pub fn check_beta_bound(table: &HTable, n: usize, k: usize) -> Result<f64> {
    let b = beta_definitional(table, n, k)?;
    if n < 2 {
        return Err(Error::Argument("beta bound check needs n >= 2".into()));
    }
    let p = table.p().get();
    let scale = table.h(n - 1, k as i64 - 1).pow(p - 1);
    let num = BigInt::from(b.num.clone());
    let den = BigInt::from(b.den.clone());
    let diff = &num - &den;
    if diff.is_zero() {
        return Ok(0.0);
    }
    // x = beta - 1, scaled = x * h^(p-1), |log(1+x)| = |x| * |log1p(x)/x|
    let x = ExactRatio::new(diff.clone(), den.clone()).to_f64().unwrap_or(0.0);
    let scaled = ExactRatio::new(diff * BigInt::from(scale), den).to_f64().unwrap_or(f64::INFINITY);
    let factor = if x == 0.0 { 1.0 } else { x.ln_1p() / x };
    Ok((scaled * factor).abs())
}

fn ipow(x: &Integer, e: u32) -> Integer {
    Integer::from(x.pow(e))
}

fn to_gmp(x: &BigUint) -> Integer {
    Integer::from_digits(&x.to_u64_digits(), Order::Lsf)
}

/// Checks `alpha_n(k) = prod_{m=k..n} (beta_m(k) ... beta_m(m))^(p^(n-m))`
/// exactly, using the definitional betas.
pub fn check_alpha_product(table: &HTable, n: usize, k: usize) -> Result<bool> {
    require_level(table, n)?;
    if k == 0 || k > n {
        return Err(Error::Argument(format!("product identity needs 1 <= k <= n, got k = {k}")));
    }
    let p = table.p().get();
    let mut estimate: u64 = 0;
    for m in k..=n {
        let factor_bits: u64 = (k..=m)
            .map(|j| table.h(m, j as i64 - 1).bits() + u64::from(p) * table.h(m - 1, j as i64).bits())
            .sum();
        let weight = (u64::from(p)).checked_pow((n - m) as u32).unwrap_or(u64::MAX);
        estimate = estimate.saturating_add(weight.saturating_mul(factor_bits));
    }
    if estimate > PRODUCT_CHECK_MAX_BITS {
        return Err(Error::Budget(format!(
            "exact product for alpha_{n}({k}) needs about {estimate} bits; \
             use check_alpha_product_log"
        )));
    }
    let rows: Vec<Vec<Integer>> =
        table.rows()[..=n].iter().map(|row| row.iter().map(to_gmp).collect()).collect();
    let h = |m: usize, j: usize| -> &Integer {
        let row = &rows[m];
        &row[j.min(row.len() - 1)]
    };
    // Horner in the exponent: acc <- acc^p * prod_j beta_m(j)
    let mut num = Integer::from(1);
    let mut den = Integer::from(1);
    for m in k..=n {
        let mut level_num = Integer::from(1);
        let mut level_den = Integer::from(1);
        for j in k..=m {
            level_num *= h(m, j - 1);
            level_num *= ipow(h(m - 1, j), p);
            level_den *= h(m, j);
            level_den *= ipow(h(m - 1, j - 1), p);
        }
        num = num.pow(p) * level_num;
        den = den.pow(p) * level_den;
    }
    Ok(Integer::from(h(n, k - 1) * &den) == Integer::from(&num * h(n, n)))
}

/// [`check_alpha_product`] over every `1 <= k <= n <= depth` with
/// `n - k <= max_gap`. Returns the failing cells.
///
/// For fixed `n` the right-hand sides are built from the top down,
/// `R(k) = R(k+1) * prod_{m=k..n} beta_m(k)^(p^(n-m))`, so each cell costs one
/// column product instead of a full double product.
pub fn check_alpha_products(table: &HTable, max_gap: usize) -> Result<Vec<(usize, usize)>> {
    let p = table.p().get();
    let rows: Vec<Vec<Integer>> = table.rows().iter().map(|row| row.iter().map(to_gmp).collect()).collect();
    let h = |m: usize, j: usize| -> &Integer {
        let row = &rows[m];
        &row[j.min(row.len() - 1)]
    };
    let mut failures = Vec::new();
    for n in 1..=table.depth() {
        let lowest = n.saturating_sub(max_gap).max(1);
        let mut num = Integer::from(1);
        let mut den = Integer::from(1);
        for k in (lowest..=n).rev() {
            let mut col_num = Integer::from(1);
            let mut col_den = Integer::from(1);
            for m in k..=n {
                col_num = col_num.pow(p) * h(m, k - 1) * ipow(h(m - 1, k), p);
                col_den = col_den.pow(p) * h(m, k) * ipow(h(m - 1, k - 1), p);
            }
            num *= col_num;
            den *= col_den;
            if Integer::from(h(n, k - 1) * &den) != Integer::from(&num * h(n, n)) {
                failures.push((n, k));
            }
        }
    }
    Ok(failures)
}

/// [`beta_definitional`] against [`beta_expanded`] over every cell of the
/// table, in GMP. Returns the failing cells.
///
/// Both fractions carry the factor `b^p / a^p`, so after cross-multiplying
/// the test is `h_n(k-1) * (b^p + (p-1) b + p(p-1) a) = h_n(k) * (a^p + (p-1) a + p(p-1) c)`.
pub fn check_beta_forms(table: &HTable) -> Result<Vec<(usize, usize)>> {
    let p = table.p().get();
    let w = p * (p - 1);
    let rows: Vec<Vec<Integer>> = table.rows().iter().map(|row| row.iter().map(to_gmp).collect()).collect();
    let zero = Integer::new();
    let h = |m: usize, j: i64| -> &Integer {
        let row = &rows[m];
        if j < 0 {
            &zero
        } else {
            &row[(j as usize).min(row.len() - 1)]
        }
    };
    let mut failures = Vec::new();
    for n in 1..=table.depth() {
        for k in 1..=n as i64 {
            let a = h(n - 1, k - 1);
            let b = h(n - 1, k);
            let c = h(n - 1, k - 2);
            let bottom = ipow(b, p) + Integer::from(b * (p - 1)) + Integer::from(a * w);
            let top = ipow(a, p) + Integer::from(a * (p - 1)) + Integer::from(c * w);
            if Integer::from(h(n, k - 1) * &bottom) != Integer::from(h(n, k) * &top) {
                failures.push((n, k as usize));
            }
        }
    }
    Ok(failures)
}

/// Log-domain residual `|ln alpha_n(k) - sum_m p^(n-m) sum_j ln beta_m(j)|`
/// together with the error bound it should stay under.
pub fn check_alpha_product_log<T: Real>(table: &LogHTable<T>, n: usize, k: usize) -> Result<(T, T)> {
    if k == 0 || k > n || n > table.depth() {
        return Err(Error::Argument("product identity needs 1 <= k <= n <= depth".to_string()));
    }
    let p = T::from_u(table.p().as_u64());
    let rel = |m: usize, j: usize| -> Result<(T, T)> {
        let (v, e) = table.ln_ratio(m, j)?;
        Ok((v.clone(), e.clone()))
    };
    let mut acc = T::zero();
    let mut acc_err = T::zero();
    for m in k..=n {
        acc = acc * p.clone();
        acc_err = acc_err * p.clone();
        for j in k..=m {
            let (a, ea) = rel(m, j - 1)?;
            let (b, eb) = rel(m, j)?;
            let (c, ec) = rel(m - 1, j)?;
            let (d, ed) = rel(m - 1, j - 1)?;
            acc = acc + a - b + p.clone() * (c - d);
            acc_err = acc_err + ea + eb + p.clone() * (ec + ed);
        }
    }
    let (lhs, lhs_err) = rel(n, k - 1)?;
    let residual = (lhs - acc.clone()).abs();
    let slack = acc.abs() * T::epsilon() * T::from_u(4 * (n as u64 + 1) * (n as u64 + 1));
    Ok((residual, acc_err + lhs_err + slack))
}

/// Something that can say which side of 1/2 `alpha_n(k)` is on.
pub trait AlphaProvider {
    fn p(&self) -> PrimeParam;
    fn depth(&self) -> usize;
    /// Ordering of `alpha_n(k)` against 1/2, for `1 <= k <= n + 1`.
    fn alpha_vs_half(&self, n: usize, k: usize) -> Result<Ordering>;
}

impl AlphaProvider for HTable {
    fn p(&self) -> PrimeParam {
        HTable::p(self)
    }
    fn depth(&self) -> usize {
        HTable::depth(self)
    }
    fn alpha_vs_half(&self, n: usize, k: usize) -> Result<Ordering> {
        require_level(self, n)?;
        let twice = self.h(n, k as i64 - 1) * 2u32;
        Ok(twice.cmp(self.h(n, n as i64)))
    }
}

impl<T: Real> AlphaProvider for LogHTable<T> {
    fn p(&self) -> PrimeParam {
        LogHTable::p(self)
    }
    fn depth(&self) -> usize {
        LogHTable::depth(self)
    }
    fn alpha_vs_half(&self, n: usize, k: usize) -> Result<Ordering> {
        if k == 0 {
            return Ok(Ordering::Less);
        }
        let (v, e) = self.ln_ratio(n, k - 1)?;
        let ln_half = -T::ln2();
        let margin = e.clone() + T::ln2() * T::epsilon() * T::from_u(4);
        let diff = v.clone() - ln_half;
        if diff.abs() <= margin {
            // Small levels: the entries are recoverable as exact integers.
            let (ln_top, _) = self.ln_total(n)?;
            if ln_top.to_f64() < 40.0 * std::f64::consts::LN_2 && T::MANTISSA_BITS >= 53 {
                let top = ln_top.exp().to_f64().round();
                let below = (ln_top.clone() + v.clone()).exp().to_f64().round();
                return Ok((2.0 * below).partial_cmp(&top).expect("finite"));
            }
            return Err(Error::Precision(format!(
                "alpha_{n}({k}) is within the error bound of 1/2; raise the precision"
            )));
        }
        Ok(if diff > T::zero() { Ordering::Greater } else { Ordering::Less })
    }
}

/// The unique `k0` with `alpha_n(k0) <= 1/2 < alpha_n(k0 + 1)`.
pub fn median_k0<A: AlphaProvider + ?Sized>(alphas: &A, n: usize) -> Result<usize> {
    if n == 0 || n > alphas.depth() {
        return Err(Error::Argument(format!(
            "k0 needs 1 <= n <= {}, got {n}",
            alphas.depth()
        )));
    }
    for k in 1..=n {
        if alphas.alpha_vs_half(n, k + 1)? == Ordering::Greater {
            if alphas.alpha_vs_half(n, k)? == Ordering::Greater {
                return Err(Error::Falsified(format!("alpha_{n} exceeds 1/2 already at k = {k}")));
            }
            return Ok(k);
        }
    }
    Err(Error::Falsified(format!("alpha_{n}(n+1) is not above 1/2")))
}

/// Admissible `gamma` values at one level, `[lo, hi)`.
#[derive(Clone, Debug, Serialize)]
pub struct GammaInterval<T> {
    pub n: usize,
    pub lo: T,
    pub hi: T,
    /// `hi - lo`, computed without cancellation.
    pub width: T,
}

#[derive(Clone, Debug)]
pub struct GammaEstimate<T> {
    pub p: PrimeParam,
    pub per_level: Vec<GammaInterval<T>>,
    /// Intersection of all per-level intervals, as floats.
    pub running: (T, T),
    /// Midpoint of the deepest interval.
    pub point: T,
    /// Whether the intersection is non-empty, decided exactly where the exact
    /// table was available.
    pub consistent: bool,
}

impl<T: Real> GammaEstimate<T> {
    pub fn deepest(&self) -> &GammaInterval<T> {
        self.per_level.last().expect("at least one level")
    }

    /// Interval widths, deepest last.
    pub fn widths(&self) -> Vec<T> {
        self.per_level.iter().map(|iv| iv.width.clone()).collect()
    }
}

/// `delta_p`: 1 for `p = 2`, 0 otherwise.
pub fn delta(p: PrimeParam) -> u32 {
    u32::from(p.get() == 2)
}

/// Solves `h + delta <= p^((1 + gamma p^n)/(p-1)) < h + delta + 1` for gamma.
/// Returns `(lo, hi, width)`; the width is `ln(1 + 1/(h + delta))` scaled.
fn gamma_bounds<T: Real>(p: PrimeParam, n: usize, ln_lower: T) -> (T, T, T) {
    let pt = T::from_u(p.as_u64());
    let ln_p = pt.ln();
    let pm1 = T::from_u(p.as_u64() - 1);
    let scale = num_traits::pow(pt, n);
    let step = (-ln_lower.clone()).exp().ln_1p();
    let factor = pm1 / (ln_p * scale);
    let lo = factor.clone() * ln_lower - T::one() / num_traits::pow(T::from_u(p.as_u64()), n);
    let width = factor * step;
    (lo.clone(), lo + width.clone(), width)
}

/// Per-level intervals for `gamma` from the exact table (levels `1..=depth`),
/// with the non-emptiness of their intersection decided exactly.
pub fn gamma_estimate<T: Real>(table: &HTable) -> Result<GammaEstimate<T>> {
    let depth = table.depth();
    if depth < 3 {
        return Err(Error::Argument("gamma estimate needs table depth >= 3".into()));
    }
    let p = table.p();
    let d = delta(p);
    let per_level: Vec<GammaInterval<T>> = (1..=depth)
        .map(|n| {
            let h = table.h(n, n as i64);
            let (lo, hi, width) = gamma_bounds::<T>(p, n, ln_biguint(&(h + d)));
            GammaInterval { n, lo, hi, width }
        })
        .collect();
    let consistent = gamma_intersection_exact(table)?;
    Ok(assemble_gamma(p, per_level, consistent))
}

fn assemble_gamma<T: Real>(p: PrimeParam, per_level: Vec<GammaInterval<T>>, consistent: bool) -> GammaEstimate<T> {
    let mut lo = per_level[0].lo.clone();
    let mut hi = per_level[0].hi.clone();
    for iv in &per_level[1..] {
        lo = lo.max_of(iv.lo.clone());
        if iv.hi < hi {
            hi = iv.hi.clone();
        }
    }
    let last = per_level.last().expect("non-empty");
    let point = (last.lo.clone() + last.hi.clone()) / T::from_u(2);
    GammaEstimate { p, per_level, running: (lo, hi), point, consistent }
}

/// Exact test that `max_a lo_a < min_b hi_b` over levels `1..=depth`.
///
/// With `A = h_a + delta`, `B = h_b + delta + 1` and `d = |b - a|`,
/// `lo_a < hi_b` is equivalent to
/// `A^((p-1) p^d) * p < B^(p-1) * p^(p^d)` when `a <= b`, and to
/// `A^(p-1) * p^(p^d) < B^((p-1) p^d) * p` when `a > b`.
pub fn gamma_intersection_exact(table: &HTable) -> Result<bool> {
    let p = table.p();
    let pu = p.get();
    let d = delta(p);
    let depth = table.depth();
    let lowers: Vec<Integer> = (1..=depth).map(|n| to_gmp(table.h(n, n as i64)) + d).collect();
    let uppers: Vec<Integer> = lowers.iter().map(|x| Integer::from(x + 1u32)).collect();
    let pairs: Vec<(usize, usize)> =
        (0..depth).flat_map(|a| (0..depth).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
    let ok = pairs.par_iter().all(|&(a, b)| {
        let dist = a.abs_diff(b) as u32;
        let spread = pu.pow(dist);
        let pb = Integer::from(pu);
        if a < b {
            let left = ipow(&lowers[a], (pu - 1) * spread) * &pb;
            let right = ipow(&uppers[b], pu - 1) * ipow(&pb, spread);
            left < right
        } else {
            let left = ipow(&lowers[a], pu - 1) * ipow(&pb, spread);
            let right = ipow(&uppers[b], (pu - 1) * spread) * &pb;
            left < right
        }
    });
    Ok(ok)
}

/// Gamma intervals from a log-domain table, widened by its error bounds.
pub fn gamma_estimate_log<T: Real>(table: &LogHTable<T>) -> Result<GammaEstimate<T>> {
    let depth = table.depth();
    if depth < 3 {
        return Err(Error::Argument("gamma estimate needs table depth >= 3".into()));
    }
    let p = table.p();
    let d = T::from_u(u64::from(delta(p)));
    let pm1 = T::from_u(p.as_u64() - 1);
    let ln_p = T::from_u(p.as_u64()).ln();
    let per_level: Vec<GammaInterval<T>> = (1..=depth)
        .map(|n| {
            let (ln_h, err) = table.ln_total(n).expect("level in range");
            let inv = (-ln_h.clone()).exp();
            let ln_lower = ln_h.clone() + (d.clone() * inv).ln_1p();
            let (lo, hi, width) = gamma_bounds::<T>(p, n, ln_lower);
            let pn = num_traits::pow(T::from_u(p.as_u64()), n);
            let widen = pm1.clone() * err.clone() / (ln_p.clone() * pn);
            GammaInterval { n, lo: lo - widen.clone(), hi: hi + widen.clone(), width: width + widen.clone() + widen }
        })
        .collect();
    let running_ok = {
        let lo = per_level.iter().map(|iv| iv.lo.clone()).fold(per_level[0].lo.clone(), T::max_of);
        let hi = per_level
            .iter()
            .map(|iv| iv.hi.clone())
            .fold(per_level[0].hi.clone(), |a, b| if b < a { b } else { a });
        lo <= hi
    };
    Ok(assemble_gamma(p, per_level, running_ok))
}

/// `log alpha_n(k) / (-p^(n-k) (p-1)^k / h_k(k))`, which tends to 1.
#[derive(Clone, Debug)]
pub struct AsymptoticRatio<T> {
    pub ratio: T,
    /// First-order relative error bound of `ratio`.
    pub rel_err: f64,
}

pub fn check_alpha_asymptotic<T: Real>(table: &LogHTable<T>, n: usize, k: usize) -> Result<AsymptoticRatio<T>> {
    if k < 3 || n < k {
        return Err(Error::Argument(format!("asymptotic ratio needs 3 <= k <= n, got n = {n}, k = {k}")));
    }
    let pu = table.p().as_u64();
    let (ln_alpha, ln_alpha_err) = table.ln_ratio(n, k - 1)?;
    let (ln_hk, ln_hk_err) = table.ln_total(k)?;
    if ln_alpha.is_zero() {
        return Err(Error::Precision(format!(
            "log alpha_{n}({k}) underflowed at {} bits",
            T::MANTISSA_BITS
        )));
    }
    let ln_ref = T::from_u((n - k) as u64) * T::from_u(pu).ln()
        + T::from_u(k as u64) * T::from_u(pu - 1).ln()
        - ln_hk.clone();
    let reference = ln_ref.exp();
    if reference.is_zero() || !reference.is_finite() {
        return Err(Error::Precision(format!(
            "reference p^(n-k)(p-1)^k/h_k(k) out of range at n = {n}, k = {k}"
        )));
    }
    let ratio = ln_alpha.clone() / -reference;
    let rel = (ln_alpha_err.clone() / ln_alpha.abs()).to_f64()
        + ln_hk_err.to_f64()
        + (ln_ref.abs() * T::epsilon()).to_f64() * 4.0;
    Ok(AsymptoticRatio { ratio, rel_err: rel })
}

/// Smallest `K` such that `alpha_n(k)^2 > alpha_n(k-1)` for every
/// `K <= k <= n + 1` at every level of the table, plus the violations below it.
#[derive(Clone, Debug, Serialize)]
pub struct SquaredLogReport {
    pub threshold: usize,
    pub violations: Vec<(usize, usize)>,
}

pub fn squared_log_threshold(table: &HTable) -> SquaredLogReport {
    let mut violations = Vec::new();
    for n in 1..=table.depth() {
        let top = table.h(n, n as i64);
        for k in 2..=n + 1 {
            let a = table.h(n, k as i64 - 1);
            let b = table.h(n, k as i64 - 2);
            // (a/top)^2 > b/top  <=>  a^2 > b * top
            if a * a <= b * top {
                violations.push((n, k));
            }
        }
    }
    let threshold = violations.iter().map(|&(_, k)| k + 1).max().unwrap_or(2);
    SquaredLogReport { threshold, violations }
}

/// Formats a rational as `"num/den"`, always with both parts.
pub fn ratio_string(r: &ExactRatio) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `"num/den"` in lowest terms, reducing with GMP so that multi-megabit
/// fractions stay cheap.
pub fn fraction_string(num: &BigUint, den: &BigUint) -> String {
    let (a, b) = (to_gmp(num), to_gmp(den));
    let g = Integer::from(a.gcd_ref(&b));
    if g == 0 {
        return format!("{a}/{b}");
    }
    format!("{}/{}", Integer::from(a.div_exact_ref(&g)), Integer::from(b.div_exact_ref(&g)))
}

/// One `(n, k)` line of the diagnostics report.
#[derive(Clone, Debug, Serialize)]
pub struct CellRecord {
    pub n: usize,
    pub k: usize,
    pub alpha: String,
    pub beta: String,
    #[serde(rename = "betaBoundRatio")]
    pub beta_bound_ratio: Option<f64>,
    #[serde(rename = "asymptoticRatio")]
    pub asymptotic_ratio: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaRecord {
    pub n: usize,
    pub lo: String,
    pub hi: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub records: Vec<CellRecord>,
    #[serde(rename = "k0PerN")]
    pub k0_per_n: Vec<(usize, usize)>,
    #[serde(rename = "gammaIntervals")]
    pub gamma_intervals: Vec<GammaRecord>,
    #[serde(rename = "gammaPoint")]
    pub gamma_point: Option<String>,
    #[serde(rename = "gammaConsistent")]
    pub gamma_consistent: Option<bool>,
    #[serde(rename = "squaredLogThreshold")]
    pub squared_log_threshold: usize,
    #[serde(rename = "betaBoundSup")]
    pub beta_bound_sup: f64,
    /// Every cell where one of the exact identities failed.
    pub falsified: Vec<String>,
}

/// Runs every exact check over the table; asymptotic ratios come from `log`.
pub fn diagnostics_report<T: Real>(table: &HTable, log: &LogHTable<T>) -> Result<DiagnosticsReport> {
    let depth = table.depth();
    let mut falsified = Vec::new();
    let mut records = Vec::new();
    let mut beta_bound_sup = 0.0f64;
    for n in 1..=depth {
        if !gap_identities_hold(table, n)? {
            falsified.push(format!("gap identity at n = {n}"));
        }
        for k in 1..=n {
            let a = alpha(table, n, k)?;
            let b = match beta(table, n, k) {
                Ok(b) => b,
                Err(Error::Falsified(msg)) => {
                    falsified.push(msg);
                    beta_definitional(table, n, k)?.reduced()
                }
                Err(e) => return Err(e),
            };
            let bound = if n >= 2 { Some(check_beta_bound(table, n, k)?) } else { None };
            if let Some(v) = bound {
                beta_bound_sup = beta_bound_sup.max(v);
            }
            let asym = if k >= 3 && n <= log.depth() {
                match check_alpha_asymptotic(log, n, k) {
                    Ok(r) => Some(r.ratio.to_sci(20)),
                    Err(Error::Precision(_)) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            records.push(CellRecord {
                n,
                k,
                alpha: ratio_string(&a),
                beta: ratio_string(&b),
                beta_bound_ratio: bound,
                asymptotic_ratio: asym,
            });
        }
    }
    let k0_per_n = (1..=depth).map(|n| median_k0(table, n).map(|k0| (n, k0))).collect::<Result<Vec<_>>>()?;
    let (gamma_intervals, gamma_point, gamma_consistent) = if depth >= 3 {
        let g = gamma_estimate::<T>(table)?;
        if !g.consistent {
            falsified.push("gamma intervals have empty intersection".into());
        }
        (
            g.per_level
                .iter()
                .map(|iv| GammaRecord { n: iv.n, lo: iv.lo.to_sci(20), hi: iv.hi.to_sci(20) })
                .collect(),
            Some(g.point.to_sci(20)),
            Some(g.consistent),
        )
    } else {
        (Vec::new(), None, None)
    };
    let sq = squared_log_threshold(table);
    Ok(DiagnosticsReport {
        records,
        k0_per_n,
        gamma_intervals,
        gamma_point,
        gamma_consistent,
        squared_log_threshold: sq.threshold,
        beta_bound_sup,
        falsified,
    })
}

/// Convenience: is `BigUint` one? Used by callers comparing ratios to 1.
pub fn is_one(r: &ExactRatio) -> bool {
    r.numer() == r.denom() && !r.denom().is_zero() && r.numer().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Float256, LogHTable256};

    fn table(p: u32, n: usize) -> HTable {
        HTable::build(PrimeParam::new(p).unwrap(), n).unwrap()
    }

    fn q(a: i64, b: i64) -> ExactRatio {
        ExactRatio::new(a.into(), b.into())
    }

    #[test]
    fn beta_forms_gmp_matches_bigint() {
        for p in [2, 3, 5] {
            let t = table(p, 6);
            assert!(check_beta_forms(&t).unwrap().is_empty());
            for n in 1..=6 {
                for k in 1..=n {
                    let a = beta_definitional(&t, n, k).unwrap();
                    assert!(a.same_value(&beta_expanded(&t, n, k).unwrap()));
                }
            }
        }
        let mut rows = table(3, 5).rows().to_vec();
        rows[4][2] += 1u32;
        let bad = HTable::from_rows_unchecked(PrimeParam::new(3).unwrap(), rows);
        let failures = check_beta_forms(&bad).unwrap();
        assert!(failures.contains(&(4, 2)) && failures.contains(&(5, 2)), "{failures:?}");
    }

    #[test]
    fn alpha_examples() {
        let t = table(2, 3);
        assert_eq!(alpha(&t, 3, 1).unwrap(), q(1, 20));
        assert_eq!(alpha(&t, 3, 4).unwrap(), q(1, 1));
        assert_eq!(alpha(&t, 3, 2).unwrap(), q(11, 20));
        assert!(matches!(alpha(&t, 4, 1), Err(Error::Argument(_))));
        assert!(matches!(alpha(&t, 3, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn beta_examples() {
        let t = table(2, 3);
        assert_eq!(beta(&t, 3, 2).unwrap(), q(275, 304));
        assert_eq!(beta(&t, 3, 3).unwrap(), q(19, 20));
        let t3 = table(3, 2);
        assert_eq!(beta(&t3, 2, 2).unwrap(), q(13, 17));
        assert_eq!(beta(&t3, 2, 2).unwrap(), q(1, 1) - q(4, 17));
    }

    #[test]
    fn beta_forms_agree_literal_example() {
        let t = table(2, 3);
        let def = beta_definitional(&t, 3, 2).unwrap();
        let alt = beta_expanded(&t, 3, 2).unwrap();
        assert_eq!(def.reduced(), q(275, 304));
        assert_eq!(alt.reduced(), q(275, 304));
    }

    #[test]
    fn median_examples() {
        let t = table(2, 3);
        assert_eq!(median_k0(&t, 3).unwrap(), 1);
        assert_eq!(median_k0(&t, 1).unwrap(), 1);
        let log = LogHTable256::build(PrimeParam::new(2).unwrap(), 64).unwrap();
        let k0 = median_k0(&log, 64).unwrap();
        assert!(k0.abs_diff(6) <= 3, "k0 = {k0}");
    }

    #[test]
    fn median_exact_and_log_agree() {
        let p = PrimeParam::new(2).unwrap();
        let t = HTable::build(p, 16).unwrap();
        let log = LogHTable256::build(p, 16).unwrap();
        for n in 1..=16 {
            assert_eq!(median_k0(&t, n).unwrap(), median_k0(&log, n).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn gamma_examples() {
        let t = table(2, 5);
        let g = gamma_estimate::<Float256>(&t).unwrap();
        let iv = |n: usize| (g.per_level[n - 1].lo.to_f64(), g.per_level[n - 1].hi.to_f64());
        let (lo1, hi1) = iv(1);
        assert!((lo1 - (3f64.log2() - 1.0) / 2.0).abs() < 1e-15);
        assert!((hi1 - 0.5).abs() < 1e-15);
        let (lo4, hi4) = iv(4);
        assert!((lo4 - 0.42823).abs() < 1e-5 && (hi4 - 0.42863).abs() < 1e-5, "{lo4} {hi4}");
        // h_5(5) = 26795: 26796 <= 2^(32 gamma + 1) < 26797
        let (lo5, hi5) = iv(5);
        assert!((lo5 - ((26796f64).log2() - 1.0) / 32.0).abs() < 1e-15);
        assert!((hi5 - ((26797f64).log2() - 1.0) / 32.0).abs() < 1e-15);
        assert!(lo4 <= lo5 && hi5 <= hi4);
        assert!(g.consistent);
    }

    #[test]
    fn beta_bound_examples() {
        let t = table(2, 3);
        let v = check_beta_bound(&t, 3, 2).unwrap();
        assert!((v - 4.0 * (304f64 / 275.0).ln()).abs() < 1e-12, "{v}");
        let v = check_beta_bound(&t, 3, 3).unwrap();
        assert!((v - 5.0 * (20f64 / 19.0).ln()).abs() < 1e-12, "{v}");
        // beta_2(1) = 1 for p = 2: (1/4) * 2^2
        assert_eq!(beta(&t, 2, 1).unwrap(), q(1, 1));
        assert_eq!(check_beta_bound(&t, 2, 1).unwrap(), 0.0);
    }

    #[test]
    fn alpha_product_examples() {
        let t = table(2, 3);
        assert!(check_alpha_product(&t, 3, 3).unwrap());
        assert!(check_alpha_product(&t, 3, 2).unwrap());
        let expected = q(4, 5) * q(4, 5) * q(275, 304) * q(19, 20);
        assert_eq!(expected, q(11, 20));
        assert!(check_alpha_product(&table(3, 2), 2, 1).unwrap());
    }

    #[test]
    fn alpha_product_refuses_oversized() {
        let t = table(2, 22);
        assert!(matches!(check_alpha_product(&t, 22, 1), Err(Error::Budget(_))));
    }

    #[test]
    fn alpha_product_log_residual_small() {
        let log = LogHTable256::build(PrimeParam::new(3).unwrap(), 40).unwrap();
        for (n, k) in [(40, 3), (40, 20), (10, 10)] {
            let (res, bound) = check_alpha_product_log(&log, n, k).unwrap();
            assert!(res <= bound, "n={n} k={k}");
        }
    }

    #[test]
    fn asymptotic_examples() {
        let log = LogHTable256::build(PrimeParam::new(2).unwrap(), 20).unwrap();
        let r12 = check_alpha_asymptotic(&log, 12, 6).unwrap().ratio.to_f64();
        assert!((0.8..=1.2).contains(&r12), "{r12}");
        let r20 = check_alpha_asymptotic(&log, 20, 10).unwrap().ratio.to_f64();
        assert!((r20 - 1.0).abs() < (r12 - 1.0).abs());
        // n = k: log(1 - x) / -x -> 1
        let dev: Vec<f64> =
            (3..=12).map(|k| (check_alpha_asymptotic(&log, k, k).unwrap().ratio.to_f64() - 1.0).abs()).collect();
        assert!(dev.windows(2).all(|w| w[1] <= w[0]), "{dev:?}");
        assert!(matches!(check_alpha_asymptotic(&log, 5, 2), Err(Error::Argument(_))));
    }

    #[test]
    fn squared_log_small_table() {
        let rep = squared_log_threshold(&table(2, 12));
        assert!(rep.threshold <= 13);
        for (n, k) in &rep.violations {
            assert!(*k < rep.threshold && *k <= n + 1);
        }
    }

    #[test]
    fn report_has_no_falsifications() {
        let p = PrimeParam::new(3).unwrap();
        let t = HTable::build(p, 5).unwrap();
        let log = LogHTable256::build(p, 5).unwrap();
        let rep = diagnostics_report(&t, &log).unwrap();
        assert!(rep.falsified.is_empty(), "{:?}", rep.falsified);
        assert_eq!(rep.records.len(), 15);
        assert_eq!(rep.records[0].alpha, "1/3");
        assert_eq!(rep.gamma_consistent, Some(true));
        assert!(rep.beta_bound_sup <= 12.0);
    }

    #[test]
    fn ratio_strings_always_have_denominator() {
        assert_eq!(ratio_string(&q(1, 1)), "1/1");
        assert_eq!(ratio_string(&q(2, 4)), "1/2");
        assert!(is_one(&q(3, 3)));
        assert_eq!(fraction_string(&BigUint::from(10u32), &BigUint::from(20u32)), "1/2");
        assert_eq!(fraction_string(&BigUint::from(0u32), &BigUint::from(7u32)), "0/1");
    }
}
