//! Distribution of `xi_n`, the order exponent of a uniformly random
//! conjugacy class of `P_n`, and the mean/variance scan over `n`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{alpha, median_k0};
use crate::error::{Error, Result};
use crate::prime::PrimeParam;
use crate::recurrence::{HTable, LogHTable, LOG_TABLE_MAX_ERROR};
use crate::scalar::Real;
use crate::ExactRatio;

#[derive(Clone, Debug)]
pub enum Pmf<T> {
    /// `counts[k] / total`, unreduced.
    Exact { counts: Vec<BigUint>, total: BigUint },
    /// Values with an absolute error bound per entry.
    Log { values: Vec<T>, err: Vec<T> },
}

#[derive(Clone, Debug)]
pub struct XiDistribution<T> {
    pub p: PrimeParam,
    pub n: usize,
    pub pmf: Pmf<T>,
}

impl<T: Real> XiDistribution<T> {
    pub fn is_exact(&self) -> bool {
        matches!(self.pmf, Pmf::Exact { .. })
    }

    /// Entry `k` in lowest terms (exact mode only).
    pub fn ratio(&self, k: usize) -> Option<ExactRatio> {
        match &self.pmf {
            Pmf::Exact { counts, total } => {
                Some(ExactRatio::new(BigInt::from(counts[k].clone()), BigInt::from(total.clone())))
            }
            Pmf::Log { .. } => None,
        }
    }

    /// Exact mode: whether the entries add up to exactly 1.
    pub fn sums_to_one(&self) -> Option<bool> {
        match &self.pmf {
            Pmf::Exact { counts, total } => Some(counts.iter().sum::<BigUint>() == *total),
            Pmf::Log { .. } => None,
        }
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Entry `k` as a float.
    pub fn prob(&self, k: usize) -> T {
        match &self.pmf {
            Pmf::Exact { counts, total } => ratio_to_real(&ExactRatio::new_raw(
                BigInt::from(counts[k].clone()),
                BigInt::from(total.clone()),
            )),
            Pmf::Log { values, .. } => values[k].clone(),
        }
    }

    /// Absolute error bound of entry `k` (zero in exact mode).
    pub fn prob_err(&self, k: usize) -> T {
        match &self.pmf {
            Pmf::Exact { .. } => T::zero(),
            Pmf::Log { err, .. } => err[k].clone(),
        }
    }
}

/// Nearest float to a rational, without overflowing on huge parts.
pub fn ratio_to_real<T: Real>(r: &ExactRatio) -> T {
    let keep = u64::from(T::MANTISSA_BITS) + 64;
    let split = |x: &BigInt| -> (T, i64) {
        let mag = x.abs().to_biguint().expect("non-negative");
        let bits = mag.bits();
        let shift = bits.saturating_sub(keep);
        let v = T::from_biguint(&(mag >> shift));
        (if x.is_negative() { -v } else { v }, shift as i64)
    };
    let (num, sn) = split(r.numer());
    let (den, sd) = split(r.denom());
    let q = num / den;
    let e = sn - sd;
    if e == 0 {
        q
    } else {
        let scale = (T::ln2() * T::from_u(e.unsigned_abs())).exp();
        if e > 0 {
            q * scale
        } else {
            q / scale
        }
    }
}

/// Exact pmf `(h_n(k) - h_n(k-1)) / h_n(n)` for `k = 0..=n`.
pub fn xi_pmf<T>(table: &HTable, n: usize) -> Result<XiDistribution<T>> {
    if n > table.depth() {
        return Err(Error::Argument(format!("level {n} outside table of depth {}", table.depth())));
    }
    let total = table.lookup(n, n as i64)?.clone();
    let counts = (0..=n as i64)
        .map(|k| Ok(table.lookup(n, k)? - table.lookup(n, k - 1)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(XiDistribution { p: table.p(), n, pmf: Pmf::Exact { counts, total } })
}

/// Bound on `|e^x - e^(x_true)|` for `|x - x_true| <= e`.
fn exp_error<T: Real>(x: &T, e: &T) -> T {
    if *e <= T::one() {
        x.exp() * e.exp_m1()
    } else {
        (x.clone() + e.clone()).exp()
    }
}

/// Log-domain pmf with the default cancellation tolerance.
pub fn xi_pmf_log<T: Real>(table: &LogHTable<T>, n: usize) -> Result<XiDistribution<T>> {
    xi_pmf_log_tol(table, n, LOG_TABLE_MAX_ERROR)
}

/// Log-domain pmf. Each entry is `exp(u_k) * -expm1(u_{k-1} - u_k)` with
/// `u_k = ln(h_n(k)/h_n(n))`; refuses if any entry's absolute error bound
/// exceeds `tol`.
pub fn xi_pmf_log_tol<T: Real>(table: &LogHTable<T>, n: usize, tol: f64) -> Result<XiDistribution<T>> {
    if n > table.depth() {
        return Err(Error::Argument(format!("level {n} outside table of depth {}", table.depth())));
    }
    let four_eps = T::epsilon() * T::from_u(4);
    let mut values = Vec::with_capacity(n + 1);
    let mut err = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (u, eu) = table.ln_ratio(n, k)?;
        let head = u.exp();
        if k == 0 {
            values.push(head.clone());
            err.push(head * four_eps.clone() + exp_error(u, eu));
            continue;
        }
        let (v, ev) = table.ln_ratio(n, k - 1)?;
        let d = v.clone() - u.clone();
        let tail = -d.exp_m1();
        let val = head.clone() * tail.clone();
        // entry is e^u - e^v, so each endpoint contributes at its own scale
        let e = val.clone() * four_eps.clone() + exp_error(u, eu) + exp_error(v, ev) + head * four_eps.clone();
        if e.to_f64() > tol {
            return Err(Error::Precision(format!(
                "pmf entry {k} at level {n} has error bound {:.3e} above {tol:.1e}",
                e.to_f64()
            )));
        }
        values.push(val);
        err.push(e);
    }
    Ok(XiDistribution { p: table.p(), n, pmf: Pmf::Log { values, err } })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactMoments {
    pub mean: ExactRatio,
    pub variance: ExactRatio,
    pub second_moment_about_k0: ExactRatio,
}

/// Exact moments of `counts[k] / total`. The results are left unreduced:
/// reducing multi-megabit fractions costs far more than computing them.
pub fn xi_moments_exact(counts: &[BigUint], total: &BigUint, k0: usize) -> ExactMoments {
    let h = BigInt::from(total.clone());
    let (mut s1, mut s2) = (BigInt::zero(), BigInt::zero());
    for (k, c) in counts.iter().enumerate() {
        let c = BigInt::from(c.clone());
        let k = BigInt::from(k);
        s1 += &k * &c;
        s2 += &k * &k * c;
    }
    let k0 = BigInt::from(k0);
    let mean = ExactRatio::new_raw(s1.clone(), h.clone());
    let variance = ExactRatio::new_raw(&s2 * &h - &s1 * &s1, &h * &h);
    let about_k0 = ExactRatio::new_raw(s2 - BigInt::from(2) * &k0 * s1 + &k0 * &k0 * &h, h);
    ExactMoments { mean, variance, second_moment_about_k0: about_k0 }
}

#[derive(Clone, Debug)]
pub struct MomentReport<T> {
    pub n: usize,
    pub k0: usize,
    pub mean: T,
    pub variance: T,
    pub second_moment_about_k0: T,
    /// Absolute error bound shared by the three moments.
    pub err: f64,
}

pub fn xi_moments<T: Real>(dist: &XiDistribution<T>, k0: usize) -> MomentReport<T> {
    if let Pmf::Exact { counts, total } = &dist.pmf {
        let m = xi_moments_exact(counts, total, k0);
        return MomentReport {
            n: dist.n,
            k0,
            mean: ratio_to_real(&m.mean),
            variance: ratio_to_real(&m.variance),
            second_moment_about_k0: ratio_to_real(&m.second_moment_about_k0),
            err: 0.0,
        };
    }
    let probs: Vec<T> = (0..dist.len()).map(|k| dist.prob(k)).collect();
    let kf = |k: usize| T::from_u(k as u64);
    let mean = probs.iter().enumerate().fold(T::zero(), |acc, (k, w)| acc + kf(k) * w.clone());
    let centered = |c: &T| {
        probs.iter().enumerate().fold(T::zero(), |acc, (k, w)| {
            let d = kf(k) - c.clone();
            acc + d.clone() * d * w.clone()
        })
    };
    let variance = centered(&mean);
    let second = centered(&kf(k0));
    let n = dist.n as f64;
    let err_sum: f64 = (0..dist.len()).map(|k| dist.prob_err(k).to_f64()).sum();
    let round = (n + 1.0) * n * n * 4.0 * T::epsilon().to_f64();
    MomentReport { n: dist.n, k0, mean, variance, second_moment_about_k0: second, err: err_sum * n * n + round }
}

/// `sum_k (alpha_n(k+1) - alpha_n(k)) (k - k0)^2` and the split bound
/// `sum_{k<=k0} alpha_n(k+1) (k-k0)^2 + sum_{k>k0} (1 - alpha_n(k)) (k-k0)^2`,
/// both exact.
#[derive(Clone, Debug)]
pub struct DecompositionCheck {
    pub direct: ExactRatio,
    pub via_alpha: ExactRatio,
    pub bound: ExactRatio,
}

impl DecompositionCheck {
    pub fn holds(&self) -> bool {
        self.direct == self.via_alpha && self.direct <= self.bound
    }
}

pub fn decomposition_check(table: &HTable, n: usize) -> Result<DecompositionCheck> {
    let k0 = median_k0(table, n)?;
    let dist = xi_pmf::<f64>(table, n)?;
    let Pmf::Exact { counts, total } = &dist.pmf else { unreachable!("exact table gives exact pmf") };
    let direct = xi_moments_exact(counts, total, k0).second_moment_about_k0;
    let a = |k: usize| -> Result<ExactRatio> {
        if k == 0 {
            Ok(ExactRatio::zero())
        } else {
            alpha(table, n, k)
        }
    };
    let sq = |k: usize| {
        let d = BigInt::from(k as i64 - k0 as i64);
        ExactRatio::from_integer(&d * &d)
    };
    let mut via_alpha = ExactRatio::zero();
    let mut bound = ExactRatio::zero();
    for k in 0..=n {
        via_alpha += (a(k + 1)? - a(k)?) * sq(k);
        bound += if k <= k0 { a(k + 1)? } else { ExactRatio::one() - a(k)? } * sq(k);
    }
    Ok(DecompositionCheck { direct, via_alpha, bound })
}

/// One line of the scan, numbers already formatted.
#[derive(Clone, Debug, Serialize)]
pub struct Theorem3Row {
    pub n: usize,
    pub k0: usize,
    pub mean: String,
    pub variance: String,
    #[serde(rename = "secondMomentAboutK0")]
    pub second_moment_about_k0: String,
    pub deviation: String,
}

#[derive(Clone, Debug)]
pub struct Theorem3Scan<T> {
    pub p: PrimeParam,
    pub reports: Vec<MomentReport<T>>,
    /// `mean - log_p n`, aligned with `reports`.
    pub deviations: Vec<T>,
    pub max_abs_deviation: f64,
    pub max_variance: f64,
    pub max_second_moment: f64,
    pub max_k0_offset: f64,
}

impl<T: Real> Theorem3Scan<T> {
    pub fn rows(&self, digits: usize) -> Vec<Theorem3Row> {
        self.reports
            .iter()
            .zip(&self.deviations)
            .map(|(r, d)| Theorem3Row {
                n: r.n,
                k0: r.k0,
                mean: r.mean.to_sci(digits),
                variance: r.variance.to_sci(digits),
                second_moment_about_k0: r.second_moment_about_k0.to_sci(digits),
                deviation: d.to_sci(digits),
            })
            .collect()
    }
}

/// Moments of `xi_n` for each `n` in `n_list`, computed in parallel from a
/// log-domain table deep enough for the largest `n`.
pub fn theorem3_scan<T: Real>(table: &LogHTable<T>, n_list: &[usize]) -> Result<Theorem3Scan<T>> {
    if n_list.is_empty() {
        return Err(Error::Argument("empty n list".into()));
    }
    let p = table.p();
    let ln_p = T::from_u(p.as_u64()).ln();
    let reports = n_list
        .par_iter()
        .map(|&n| {
            let k0 = median_k0(table, n)?;
            let dist = xi_pmf_log(table, n)?;
            Ok(xi_moments(&dist, k0))
        })
        .collect::<Result<Vec<MomentReport<T>>>>()?;
    let log_n = |n: usize| T::from_u(n as u64).ln() / ln_p.clone();
    let deviations: Vec<T> = reports.iter().map(|r| r.mean.clone() - log_n(r.n)).collect();
    let max_abs_deviation = deviations.iter().map(|d| d.to_f64().abs()).fold(0.0, f64::max);
    let max_variance = reports.iter().map(|r| r.variance.to_f64()).fold(0.0, f64::max);
    let max_second_moment = reports.iter().map(|r| r.second_moment_about_k0.to_f64()).fold(0.0, f64::max);
    let max_k0_offset = reports
        .iter()
        .map(|r| (r.k0 as f64 - log_n(r.n).to_f64()).abs())
        .fold(0.0, f64::max);
    Ok(Theorem3Scan { p, reports, deviations, max_abs_deviation, max_variance, max_second_moment, max_k0_offset })
}

/// Doubly exponential tails around `k0`:
/// `alpha_n(k0-d) < 2^(-2^d)` and `alpha_n(k0+d) > 2^(-2^(1-d))`.
/// Only the `d` for which the squared-log relation is available (all
/// involved `k >= threshold`) are checked.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TailReport {
    pub checked: usize,
    /// `(n, k0, d)` with `d < 0` for the lower tail.
    pub violations: Vec<(usize, usize, i64)>,
}

pub fn tail_check<T: Real>(table: &LogHTable<T>, n: usize, threshold: usize) -> Result<TailReport> {
    let k0 = median_k0(table, n)?;
    let ln2 = T::ln2();
    let mut rep = TailReport::default();
    // lower: needs the relation at k0-d+1 ..= k0
    let mut d = 1usize;
    while d < k0 && k0 - d + 1 >= threshold {
        let k = k0 - d;
        let (u, e) = table.ln_ratio(n, k - 1)?;
        let limit = -(ln2.clone() * num_traits::pow(T::from_u(2), d));
        rep.checked += 1;
        if !(u.clone() + e.clone() < limit) {
            rep.violations.push((n, k0, -(d as i64)));
        }
        d += 1;
    }
    // upper: needs the relation at k0+2 ..= k0+d
    if k0 + 2 >= threshold {
        for d in 2..=(n + 1 - k0) {
            let (u, e) = table.ln_ratio(n, k0 + d - 1)?;
            let scaled = (u.clone() - e.clone()) * num_traits::pow(T::from_u(2), d - 1);
            rep.checked += 1;
            if !(scaled > -ln2.clone()) {
                rep.violations.push((n, k0, d as i64));
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Float256, LogHTable256};

    fn q(a: i64, b: i64) -> ExactRatio {
        ExactRatio::new(a.into(), b.into())
    }

    fn dist(p: u32, n: usize) -> XiDistribution<f64> {
        let t = HTable::build(PrimeParam::new(p).unwrap(), n).unwrap();
        xi_pmf::<f64>(&t, n).unwrap()
    }

    fn exact(p: u32, n: usize) -> Vec<ExactRatio> {
        let d = dist(p, n);
        (0..=n).map(|k| d.ratio(k).unwrap()).collect()
    }

    fn moments(p: u32, n: usize, k0: usize) -> ExactMoments {
        match dist(p, n).pmf {
            Pmf::Exact { counts, total } => xi_moments_exact(&counts, &total, k0),
            Pmf::Log { .. } => unreachable!(),
        }
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(exact(2, 3), vec![q(1, 20), q(10, 20), q(8, 20), q(1, 20)]);
        assert_eq!(exact(2, 1), vec![q(1, 2), q(1, 2)]);
        assert_eq!(exact(3, 2), vec![q(1, 17), q(12, 17), q(4, 17)]);
    }

    #[test]
    fn moment_examples() {
        let m = moments(2, 3, 1);
        assert_eq!(m.mean, q(29, 20));
        assert_eq!(m.variance, q(179, 400));
        assert_eq!(m.second_moment_about_k0, q(13, 20));
        let m = moments(2, 1, 1);
        assert_eq!((m.mean, m.variance), (q(1, 2), q(1, 4)));
        assert_eq!(moments(3, 2, 1).mean, q(20, 17));
        assert_eq!(dist(5, 4).sums_to_one(), Some(true));
    }

    #[test]
    fn log_pmf_matches_exact() {
        let p = PrimeParam::new(3).unwrap();
        let t = HTable::build(p, 8).unwrap();
        let log = LogHTable256::build(p, 8).unwrap();
        let ex = xi_pmf::<Float256>(&t, 8).unwrap();
        let lg = xi_pmf_log(&log, 8).unwrap();
        for k in 0..=8 {
            let diff = (ex.prob(k) - lg.prob(k)).abs();
            assert!(diff <= lg.prob_err(k), "k = {k}");
        }
    }

    #[test]
    fn deep_pmf_sums_to_one() {
        let log = LogHTable256::build(PrimeParam::new(2).unwrap(), 300).unwrap();
        let d = xi_pmf_log(&log, 300).unwrap();
        let total = (0..=300).fold(Float256::zero(), |a, k| a + d.prob(k));
        assert!((total.to_f64() - 1.0).abs() < 1e-60);
    }

    #[test]
    fn f32_pmf_refuses_on_tight_tolerance() {
        let log = LogHTable::<f32>::build_unchecked(PrimeParam::new(2).unwrap(), 40).unwrap();
        assert!(matches!(xi_pmf_log_tol(&log, 40, 1e-12), Err(Error::Precision(_))));
    }

    #[test]
    fn scan_small_list() {
        let log = LogHTable256::build(PrimeParam::new(2).unwrap(), 8).unwrap();
        let scan = theorem3_scan(&log, &[1, 3]).unwrap();
        assert!((scan.reports[0].mean.to_f64() - 0.5).abs() < 1e-30);
        assert!((scan.deviations[0].to_f64() - 0.5).abs() < 1e-15);
        assert!((scan.deviations[1].to_f64() - (1.45 - 3f64.log2())).abs() < 1e-15);
        assert_eq!(scan.rows(6)[1].k0, 1);
    }

    #[test]
    fn decomposition_bound_small_levels() {
        for p in [2, 3, 5] {
            let t = HTable::build(PrimeParam::new(p).unwrap(), 7).unwrap();
            for n in 1..=7 {
                let c = decomposition_check(&t, n).unwrap();
                assert!(c.holds(), "p={p} n={n}");
            }
        }
    }

    #[test]
    fn ratio_to_real_huge_parts() {
        let big = BigInt::one() << 5000usize;
        let r = ExactRatio::new(&big * 3, &big * 4);
        assert_eq!(ratio_to_real::<f64>(&r), 0.75);
        let r = ExactRatio::new(big.clone(), BigInt::from(3));
        let v: Float256 = ratio_to_real(&r);
        assert!((v.ln().to_f64() - (5000.0 * std::f64::consts::LN_2 - 3f64.ln())).abs() < 1e-9);
    }
}
