//! Class counts `h_n(k)` of the Sylow p-subgroup `P_n` of `S_{p^n}`.
//!
//! `h_n(k)` is the number of conjugacy classes of `P_n` whose elements have
//! order at most `p^k`. Row `n + 1` follows from row `n` by
//!
//! ```text
//! h_{n+1}(k) = (h_n(k)^p - h_n(k)) / p + h_n(k) + (p - 1) h_n(k - 1)
//! ```
//!
//! with the conventions `h_n(k) = h_n(n)` for `k > n`, `h_n(0) = 1` and
//! `h_n(-1) = 0`. Row 0 is `[1]` (trivial group) and row 1 is `[1, p]`
//! (cyclic group of order `p`).
//!
//! [`HTable`] keeps the exact integers. [`LogHTable`] runs the same recurrence
//! on logarithms, which is the only way to reach `n` in the hundreds or
//! thousands since the entries have about `0.43 * 2^n` bits for `p = 2`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prime::PrimeParam;
use crate::scalar::Real;

/// Largest entry, in bits, that [`HTable::build`] will produce by default.
/// Caps `p = 2` at depth 24.
pub const DEFAULT_MAX_ENTRY_BITS: u64 = 1 << 23;

/// Above this size exact mode is refused outright.
pub const HARD_MAX_ENTRY_BITS: u64 = 100_000_000;

/// Refusal threshold for the log-domain ratio error.
pub const LOG_TABLE_MAX_ERROR: f64 = 1e-6;

static ZERO: BigUint = BigUint::ZERO;

/// Exact triangle `h[n][k]`, `0 <= k <= n <= depth`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HTable {
    p: PrimeParam,
    rows: Vec<Vec<BigUint>>,
}

/// Computes row `n + 1` from row `n`.
pub fn next_row(p: PrimeParam, prev: &[BigUint]) -> Result<Vec<BigUint>> {
    let n = prev.len() - 1;
    let pu = p.get();
    let pb = BigUint::from(pu);
    let clamp = |k: usize| &prev[k.min(n)];
    let tail: Vec<BigUint> = (1..=n + 1)
        .into_par_iter()
        .map(|k| {
            let h = clamp(k);
            let (quot, rem) = (h.pow(pu) - h).div_rem(&pb);
            if !rem.is_zero() {
                return Err(Error::Invariant(format!(
                    "p = {pu} does not divide h^p - h at row {}, k = {k}",
                    n + 1
                )));
            }
            Ok(quot + h + clamp(k - 1) * (pu - 1))
        })
        .collect::<Result<_>>()?;
    let mut row = Vec::with_capacity(n + 2);
    row.push(BigUint::one());
    row.extend(tail);
    Ok(row)
}

/// Streaming access to the rows, keeping only the latest one in memory.
pub struct RowStream {
    p: PrimeParam,
    current: Option<Vec<BigUint>>,
    level: usize,
    max_entry_bits: u64,
}

impl RowStream {
    pub fn new(p: PrimeParam) -> Self {
        RowStream { p, current: None, level: 0, max_entry_bits: DEFAULT_MAX_ENTRY_BITS }
    }

    pub fn with_max_entry_bits(mut self, bits: u64) -> Self {
        self.max_entry_bits = bits;
        self
    }

    /// Level of the row the next call to [`Iterator::next`] yields.
    pub fn level(&self) -> usize {
        self.level
    }
}

impl Iterator for RowStream {
    type Item = Result<Vec<BigUint>>;

    fn next(&mut self) -> Option<Self::Item> {
        let row = match self.current.take() {
            None => vec![BigUint::one()],
            Some(prev) if prev.len() == 1 => vec![BigUint::one(), BigUint::from(self.p.get())],
            Some(prev) => {
                let predicted = prev[prev.len() - 1].bits() * self.p.as_u64() + 1;
                if predicted > self.max_entry_bits {
                    return Some(Err(exact_budget_error(self.p, self.level, predicted)));
                }
                match next_row(self.p, &prev) {
                    Ok(row) => row,
                    Err(e) => return Some(Err(e)),
                }
            }
        };
        self.level += 1;
        self.current = Some(row.clone());
        Some(Ok(row))
    }
}

fn exact_budget_error(p: PrimeParam, level: usize, predicted: u64) -> Error {
    Error::Budget(format!(
        "row {level} for p = {p} needs entries of about {predicted} bits; \
         use the log-domain table for this depth"
    ))
}

impl HTable {
    /// Builds rows `0..=depth` under [`DEFAULT_MAX_ENTRY_BITS`].
    pub fn build(p: PrimeParam, depth: usize) -> Result<Self> {
        Self::build_with_budget(p, depth, DEFAULT_MAX_ENTRY_BITS)
    }

    pub fn build_with_budget(p: PrimeParam, depth: usize, max_entry_bits: u64) -> Result<Self> {
        let max_entry_bits = max_entry_bits.min(HARD_MAX_ENTRY_BITS);
        let rows = RowStream::new(p)
            .with_max_entry_bits(max_entry_bits)
            .take(depth + 1)
            .collect::<Result<Vec<_>>>()?;
        Ok(HTable { p, rows })
    }

    /// Wraps rows that were produced elsewhere, checking the recurrence.
    pub fn from_rows(p: PrimeParam, rows: Vec<Vec<BigUint>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Argument("table needs at least row 0".into()));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != n + 1 {
                return Err(Error::Argument(format!("row {n} has {} entries", row.len())));
            }
        }
        let rebuilt = HTable::build_with_budget(p, rows.len() - 1, HARD_MAX_ENTRY_BITS)?;
        if rebuilt.rows != rows {
            return Err(Error::Falsified("rows do not satisfy the recurrence".into()));
        }
        Ok(rebuilt)
    }

    #[cfg(test)]
    pub(crate) fn from_rows_unchecked(p: PrimeParam, rows: Vec<Vec<BigUint>>) -> Self {
        HTable { p, rows }
    }

    pub fn p(&self) -> PrimeParam {
        self.p
    }

    /// Deepest level `N` held by the table.
    pub fn depth(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, n: usize) -> Option<&[BigUint]> {
        self.rows.get(n).map(Vec::as_slice)
    }

    pub fn rows(&self) -> &[Vec<BigUint>] {
        &self.rows
    }

    /// `h_n(k)` with clamping: `h_n(n)` for `k > n`, zero for `k < 0`.
    pub fn lookup(&self, n: usize, k: i64) -> Result<&BigUint> {
        let row = self.rows.get(n).ok_or_else(|| {
            Error::Argument(format!("level {n} outside table of depth {}", self.depth()))
        })?;
        Ok(clamped(row, k))
    }

    /// Total class count `h_n(n)`.
    pub fn total(&self, n: usize) -> Result<&BigUint> {
        self.lookup(n, n as i64)
    }

    /// Unchecked clamped access for internal use.
    pub(crate) fn h(&self, n: usize, k: i64) -> &BigUint {
        clamped(&self.rows[n], k)
    }

    pub fn to_record(&self) -> HTableRecord {
        HTableRecord {
            p: self.p.get(),
            depth: self.depth(),
            h: self
                .rows
                .iter()
                .map(|row| row.iter().map(|x| x.to_str_radix(10)).collect())
                .collect(),
        }
    }

    pub fn from_record(record: &HTableRecord) -> Result<Self> {
        let p = PrimeParam::new(record.p)?;
        if record.h.len() != record.depth + 1 {
            return Err(Error::Argument(format!(
                "N = {} but {} rows given",
                record.depth,
                record.h.len()
            )));
        }
        let rows = record
            .h
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| {
                        BigUint::parse_bytes(s.as_bytes(), 10)
                            .ok_or_else(|| Error::Argument(format!("not a decimal integer: {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        HTable::from_rows(p, rows)
    }
}

fn clamped(row: &[BigUint], k: i64) -> &BigUint {
    if k < 0 {
        &ZERO
    } else {
        &row[(k as usize).min(row.len() - 1)]
    }
}

/// JSON form of an [`HTable`]; integers are decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HTableRecord {
    pub p: u32,
    #[serde(rename = "N")]
    pub depth: usize,
    pub h: Vec<Vec<String>>,
}

/// `|P_n| = p^((p^n - 1)/(p - 1))`.
pub fn group_order(p: PrimeParam, n: usize) -> Result<BigUint> {
    let exponent = group_order_exponent(p, n)?;
    let exponent = exponent
        .to_u32()
        .ok_or_else(|| Error::Budget(format!("|P_{n}| for p = {p} is too large to materialise")))?;
    Ok(BigUint::from(p.get()).pow(exponent))
}

/// `log_p |P_n| = 1 + p + ... + p^(n-1)`.
pub fn group_order_exponent(p: PrimeParam, n: usize) -> Result<BigUint> {
    let pb = BigUint::from(p.get());
    let n32 = u32::try_from(n).map_err(|_| Error::Argument(format!("level {n} too large")))?;
    Ok((pb.pow(n32) - 1u32) / (p.get() - 1))
}

/// Log-domain triangle.
///
/// Entries are stored as `ln h_n(n)` per row plus the relative logs
/// `ln(h_n(k) / h_n(n)) <= 0`. The relative logs are advanced by their own
/// recurrence, so ratios close to one and ratios like `exp(-10^300)` keep full
/// relative accuracy even where `ln h_n(n)` itself is astronomically large.
/// Every stored value carries an absolute error bound, propagated to first
/// order with four units of roundoff per operation plus an underflow floor.
#[derive(Clone, Debug)]
pub struct LogHTable<T> {
    p: PrimeParam,
    log_top: Vec<T>,
    log_top_err: Vec<T>,
    rel: Vec<Vec<T>>,
    rel_err: Vec<Vec<T>>,
}

impl<T: Real> LogHTable<T> {
    /// Builds rows `0..=depth`, refusing if the ratio error bound exceeds
    /// [`LOG_TABLE_MAX_ERROR`].
    pub fn build(p: PrimeParam, depth: usize) -> Result<Self> {
        let table = Self::build_unchecked(p, depth)?;
        let worst = table.max_alpha_error();
        if !(worst <= LOG_TABLE_MAX_ERROR) {
            return Err(Error::Precision(format!(
                "{}-bit arithmetic reaches an error bound of {worst:e} by depth {depth} \
                 (limit {LOG_TABLE_MAX_ERROR:e}); raise the precision",
                T::MANTISSA_BITS
            )));
        }
        Ok(table)
    }

    /// Builds without the final error gate; non-finite values still refuse.
    pub fn build_unchecked(p: PrimeParam, depth: usize) -> Result<Self> {
        let mut table = LogHTable {
            p,
            log_top: vec![T::zero()],
            log_top_err: vec![T::zero()],
            rel: vec![vec![T::zero()]],
            rel_err: vec![vec![T::zero()]],
        };
        if depth >= 1 {
            let ln_p = T::from_u(p.as_u64()).ln();
            let err = ln_p.clone() * T::epsilon();
            table.log_top.push(ln_p.clone());
            table.log_top_err.push(err.clone());
            table.rel.push(vec![-ln_p, T::zero()]);
            table.rel_err.push(vec![err, T::zero()]);
        }
        for n in 1..depth {
            table.extend_row(n)?;
        }
        Ok(table)
    }

    fn extend_row(&mut self, n: usize) -> Result<()> {
        let c = T::from_u(4);
        let u = T::epsilon();
        let tiny = T::min_positive();
        let ln_tiny = tiny.ln();
        let pu = self.p.as_u64();
        let p = T::from_u(pu);
        let pm1 = T::from_u(pu - 1);
        let ln_p = p.ln();

        let big_l = self.log_top[n].clone();
        let e_l = self.log_top_err[n].clone();

        // E = h_n(n)^(1-p)
        let z0 = -(pm1.clone() * big_l.clone());
        let dz0 = pm1.clone() * e_l.clone() + z0.abs() * u.clone();
        let big_e = if z0 < ln_tiny { T::zero() } else { z0.exp() };

        let eps_top = (p.clone() * p.clone() - T::one()) * big_e.clone();
        let eps_top_err = eps_top.clone() * (dz0.clone() + c.clone() * u.clone())
            + (p.clone() * p.clone()) * tiny.clone();
        let new_top = p.clone() * big_l.clone() - ln_p.clone() + eps_top.ln_1p();
        let new_top_err = p.clone() * e_l.clone()
            + c.clone() * u.clone() * (p.clone() * big_l.abs() + ln_p + new_top.abs())
            + T::from_u(2) * eps_top_err.clone();
        if !new_top.is_finite() {
            return Err(Error::Precision(format!(
                "ln h_{}({}) leaves the exponent range of {}-bit floats",
                n + 1,
                n + 1,
                T::MANTISSA_BITS
            )));
        }

        let prev = &self.rel[n];
        let prev_err = &self.rel_err[n];
        let one = T::one();
        let params = (&p, &pm1, &c, &u, &tiny, &ln_tiny, &z0, &dz0, &big_e, &eps_top, &eps_top_err);
        let mid: Vec<(T, T)> = (1..=n)
            .into_par_iter()
            .map(|k| {
                let (p, pm1, c, u, tiny, ln_tiny, z0, dz0, big_e, eps_top, eps_top_err) = params;
                let uk = &prev[k];
                let ek = &prev_err[k];
                let ukm1 = &prev[k - 1];
                let ekm1 = &prev_err[k - 1];

                // A = (p-1) (h_n(k)^(1-p) - E)
                let x = -(pm1.clone() * uk.clone());
                let dx = pm1.clone() * ek.clone() + x.abs() * u.clone();
                let (a, a_err) = exp_difference(z0, dz0, &x, &dx, big_e, c, u, ln_tiny);
                let a = pm1.clone() * a;
                let a_err = pm1.clone() * a_err;

                // B = p(p-1) (h_n(k-1) h_n(k)^(-p) h_n(n)^(p-1) * E - E)
                let y = ukm1.clone() - p.clone() * uk.clone();
                let dy = ekm1.clone() + p.clone() * ek.clone() + y.abs() * u.clone();
                let (b, b_err) = exp_difference(z0, dz0, &y, &dy, big_e, c, u, ln_tiny);
                let w = p.clone() * pm1.clone();
                let b = w.clone() * b;
                let b_err = w * b_err;

                let d = a + b;
                let d_err = a_err + b_err + d.abs() * c.clone() * u.clone()
                    + T::from_u(4) * tiny.clone();
                let denom = one.clone() + eps_top.clone();
                let t = (d.clone() / denom.clone()).ln_1p();
                let t_err = T::from_u(4) * (d_err + d.abs() * eps_top_err.clone())
                    + t.abs() * c.clone() * u.clone();

                let value = p.clone() * uk.clone() + t;
                let err = p.clone() * ek.clone()
                    + t_err
                    + c.clone() * u.clone() * (p.clone() * uk.abs() + value.abs())
                    + tiny.clone();
                // ratios never exceed one
                let value = if value > T::zero() { T::zero() } else { value };
                (value, err)
            })
            .collect();

        let mut row = Vec::with_capacity(n + 2);
        let mut row_err = Vec::with_capacity(n + 2);
        row.push(-new_top.clone());
        row_err.push(new_top_err.clone());
        for (v, e) in mid {
            row.push(v);
            row_err.push(e);
        }
        row.push(T::zero());
        row_err.push(T::zero());
        self.log_top.push(new_top);
        self.log_top_err.push(new_top_err);
        self.rel.push(row);
        self.rel_err.push(row_err);
        Ok(())
    }

    pub fn p(&self) -> PrimeParam {
        self.p
    }

    pub fn depth(&self) -> usize {
        self.rel.len() - 1
    }

    pub fn precision_bits(&self) -> u32 {
        T::MANTISSA_BITS
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.depth() {
            Err(Error::Argument(format!(
                "level {n} outside log table of depth {}",
                self.depth()
            )))
        } else {
            Ok(())
        }
    }

    /// `ln h_n(n)` and its absolute error bound.
    pub fn ln_total(&self, n: usize) -> Result<(&T, &T)> {
        self.check_level(n)?;
        Ok((&self.log_top[n], &self.log_top_err[n]))
    }

    /// `ln(h_n(k) / h_n(n))` for `k >= 0` (clamped above), with its absolute
    /// error bound.
    pub fn ln_ratio(&self, n: usize, k: usize) -> Result<(&T, &T)> {
        self.check_level(n)?;
        let k = k.min(n);
        Ok((&self.rel[n][k], &self.rel_err[n][k]))
    }

    /// `ln h_n(k)`, i.e. `L[n][k]`.
    pub fn ln_h(&self, n: usize, k: usize) -> Result<T> {
        let (top, _) = self.ln_total(n)?;
        let (rel, _) = self.ln_ratio(n, k)?;
        Ok(top.clone() + rel.clone())
    }

    /// Bound on `|exp(L[n][k]) - h_n(k)| / h_n(k)`, first order.
    pub fn err_bound(&self, n: usize, k: usize) -> Result<T> {
        let (_, top_err) = self.ln_total(n)?;
        let (_, rel_err) = self.ln_ratio(n, k)?;
        Ok(top_err.clone() + rel_err.clone())
    }

    /// Largest absolute error of any `h_n(k)/h_n(n)` in the table.
    pub fn max_alpha_error(&self) -> f64 {
        self.rel
            .iter()
            .zip(&self.rel_err)
            .flat_map(|(row, errs)| row.iter().zip(errs))
            .map(|(v, e)| alpha_abs_error(v, e))
            .fold(0.0, f64::max)
    }

    /// Largest ratio error per row.
    pub fn row_alpha_errors(&self) -> Vec<f64> {
        self.rel
            .iter()
            .zip(&self.rel_err)
            .map(|(row, errs)| {
                row.iter().zip(errs).map(|(v, e)| alpha_abs_error(v, e)).fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn to_record(&self) -> LogHTableRecord {
        let depth = self.depth();
        let mut ln_h = Vec::with_capacity(depth + 1);
        let mut err = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            ln_h.push(
                (0..=n)
                    .map(|k| (self.log_top[n].clone() + self.rel[n][k].clone()).to_sci(40))
                    .collect(),
            );
            err.push(
                (0..=n)
                    .map(|k| {
                        (self.log_top_err[n].clone() + self.rel_err[n][k].clone()).to_sci(6)
                    })
                    .collect(),
            );
        }
        LogHTableRecord { p: self.p.get(), depth, precision: T::MANTISSA_BITS, ln_h, err_bound: err }
    }
}

/// Returns `exp(z0) * (exp(x) - 1)` with an absolute error bound, choosing
/// between the `expm1` form (for small `|x|`) and a direct difference.
#[allow(clippy::too_many_arguments)]
fn exp_difference<T: Real>(
    z0: &T,
    dz0: &T,
    x: &T,
    dx: &T,
    big_e: &T,
    c: &T,
    u: &T,
    ln_tiny: &T,
) -> (T, T) {
    let one = T::one();
    if x.abs() <= one {
        let m = x.exp_m1();
        let value = big_e.clone() * m.clone();
        let err = big_e.clone()
            * (m.abs() * (dz0.clone() + T::from_u(2) * c.clone() * u.clone())
                + x.exp() * dx.clone());
        (value, err)
    } else {
        let z1 = z0.clone() + x.clone();
        let e1 = if z1 < *ln_tiny { T::zero() } else { z1.exp() };
        let value = e1.clone() - big_e.clone();
        let err = e1 * (dz0.clone() + dx.clone() + c.clone() * u.clone())
            + big_e.clone() * (dz0.clone() + c.clone() * u.clone());
        (value, err)
    }
}

/// Bound on `|exp(v) - exp(v_true)|` when `|v - v_true| <= e`, `v <= 0`.
pub fn alpha_abs_error<T: Real>(v: &T, e: &T) -> f64 {
    if e.is_zero() {
        return 0.0;
    }
    let one = T::one();
    let bound = if *e <= one {
        v.exp() * e.exp_m1() + T::min_positive()
    } else {
        (v.clone() + e.clone()).exp()
    };
    let b = bound.to_f64();
    if b.is_nan() {
        f64::INFINITY
    } else {
        b.min(1.0)
    }
}

/// JSON form of a [`LogHTable`]; values are decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHTableRecord {
    pub p: u32,
    #[serde(rename = "N")]
    pub depth: usize,
    pub precision: u32,
    #[serde(rename = "L")]
    pub ln_h: Vec<Vec<String>>,
    #[serde(rename = "errBound")]
    pub err_bound: Vec<Vec<String>>,
}
