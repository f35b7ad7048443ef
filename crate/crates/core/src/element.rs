//! Order statistics of a uniformly random element of `P_n`.
//!
//! Writing an element of `P_n = P_{n-1} wr C_p` as `(f, s)`: if the shift
//! `s` is trivial its order is the largest order among `p` independent
//! uniform elements of `P_{n-1}`; otherwise it is `p` times the order of a
//! product that is itself uniform in `P_{n-1}`. So with
//! `q_n(k) = P(order <= p^k)`,
//!
//! ```text
//! q_n(k) = q_{n-1}(k)^p / p + (1 - 1/p) q_{n-1}(k-1),   q_0 = 1, q(-1) = 0.
//! ```

use num_traits::Num;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prime::PrimeParam;
use crate::rng::{rng_stream, RngStream};
use crate::scalar::Real;

/// Default cap on expected recursion nodes per sample batch.
pub const DEFAULT_NODE_BUDGET: f64 = 1e7;

/// Samples per RNG stream; fixed so the merged result is independent of
/// the thread count.
pub const SAMPLE_CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaCdf<T> {
    pub p: PrimeParam,
    pub n: usize,
    /// `q[k] = P(order <= p^k)` for `k = 0..=n`.
    pub q: Vec<T>,
}

fn dp_step<T: Num + Clone + Send + Sync>(p: PrimeParam, prev: &[T]) -> Vec<T> {
    let m = prev.len();
    let pt = (0..p.get()).fold(T::zero(), |a, _| a + T::one());
    let inv_p = T::one() / pt.clone();
    let rest = (pt - T::one()) / (0..p.get()).fold(T::zero(), |a, _| a + T::one());
    (0..=m)
        .into_par_iter()
        .map(|k| {
            let same = prev[k.min(m - 1)].clone();
            let powered = (1..p.get()).fold(same.clone(), |a, _| a * same.clone());
            let lower = if k == 0 { T::zero() } else { prev[k - 1].clone() };
            inv_p.clone() * powered + rest.clone() * lower
        })
        .collect()
}

/// The cdfs `q_0, ..., q_n`, computed once.
pub fn zeta_cdf_levels<T: Num + Clone + Send + Sync>(p: PrimeParam, n: usize) -> Vec<ZetaCdf<T>> {
    let mut out = vec![ZetaCdf { p, n: 0, q: vec![T::one()] }];
    for level in 1..=n {
        let q = dp_step(p, &out[level - 1].q);
        out.push(ZetaCdf { p, n: level, q });
    }
    out
}

/// `q_n` by the DP. Works for any field, including exact rationals at small `n`.
pub fn zeta_exact_cdf<T: Num + Clone + Send + Sync>(p: PrimeParam, n: usize) -> ZetaCdf<T> {
    let mut q = vec![T::one()];
    for _ in 0..n {
        q = dp_step(p, &q);
    }
    ZetaCdf { p, n, q }
}

/// Absolute error bound of the floating DP at level `n`. Each step is
/// 1-Lipschitz in the previous row and adds at most `(p + 3)` roundings.
pub fn zeta_cdf_error<T: Real>(p: PrimeParam, n: usize) -> f64 {
    n as f64 * (p.get() as f64 + 3.0) * T::epsilon().to_f64()
}

/// [`zeta_exact_cdf`] for floats, refusing if the error bound exceeds `tol`.
pub fn zeta_cdf_checked<T: Real>(p: PrimeParam, n: usize, tol: f64) -> Result<ZetaCdf<T>> {
    let err = zeta_cdf_error::<T>(p, n);
    if err > tol {
        return Err(Error::Precision(format!(
            "element-order DP error bound {err:.2e} exceeds {tol:.1e} at {} bits",
            T::MANTISSA_BITS
        )));
    }
    Ok(zeta_exact_cdf(p, n))
}

impl<T: Num + Clone> ZetaCdf<T> {
    /// `E zeta = sum_{k<n} (1 - q[k])`.
    pub fn mean(&self) -> T {
        self.q[..self.n].iter().fold(T::zero(), |a, q| a + (T::one() - q.clone()))
    }

    /// `P(zeta = k)`.
    pub fn pmf(&self) -> Vec<T> {
        (0..=self.n)
            .map(|k| if k == 0 { self.q[0].clone() } else { self.q[k].clone() - self.q[k - 1].clone() })
            .collect()
    }

    pub fn variance(&self) -> T {
        let mean = self.mean();
        let mut second = T::zero();
        let mut kt = T::zero();
        for w in self.pmf() {
            second = second + kt.clone() * kt.clone() * w;
            kt = kt + T::one();
        }
        second - mean.clone() * mean
    }
}

/// Expected recursion nodes for one sample at depth `n`: `sum_{i<=n} (2 - 1/p)^i`.
pub fn expected_nodes(p: PrimeParam, n: usize) -> f64 {
    let r = 2.0 - 1.0 / p.get() as f64;
    (0..=n).map(|i| r.powi(i as i32)).sum()
}

/// One draw of `zeta_n`.
pub fn zeta_sample(p: PrimeParam, n: usize, rng: &mut RngStream) -> u32 {
    if n == 0 {
        return 0;
    }
    let pu = p.get();
    if rng.gen_range(0..pu) != 0 {
        1 + zeta_sample(p, n - 1, rng)
    } else {
        (0..pu).map(|_| zeta_sample(p, n - 1, rng)).max().expect("p >= 2")
    }
}

/// Histogram of `samples` draws, `counts[k]` for `k = 0..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleSummary {
    pub p: u32,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub counts: Vec<u64>,
}

impl SampleSummary {
    pub fn mean(&self) -> f64 {
        let total: u64 = self.counts.iter().enumerate().map(|(k, c)| k as u64 * c).sum();
        total as f64 / self.samples as f64
    }

    pub fn empirical_cdf(&self) -> Vec<f64> {
        let mut acc = 0u64;
        self.counts
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / self.samples as f64
            })
            .collect()
    }
}

pub fn zeta_sample_batch(p: PrimeParam, n: usize, samples: usize, seed: u64) -> Result<SampleSummary> {
    zeta_sample_batch_with_budget(p, n, samples, seed, DEFAULT_NODE_BUDGET)
}

pub fn zeta_sample_batch_with_budget(
    p: PrimeParam,
    n: usize,
    samples: usize,
    seed: u64,
    node_budget: f64,
) -> Result<SampleSummary> {
    let cost = expected_nodes(p, n) * samples as f64;
    if cost > node_budget {
        return Err(Error::Budget(format!(
            "{samples} samples at n = {n} need about {cost:.3e} recursion nodes (budget {node_budget:.1e})"
        )));
    }
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_stream(seed, c as u64);
            let take = SAMPLE_CHUNK.min(samples - c * SAMPLE_CHUNK);
            let mut counts = vec![0u64; n + 1];
            for _ in 0..take {
                counts[zeta_sample(p, n, &mut rng) as usize] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; n + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(SampleSummary { p: p.get(), n, samples, seed, counts })
}

/// Largest `|F_emp(k) - q(k)| / sigma_k` with binomial `sigma_k`; entries
/// where `q(k)` is 0 or 1 must match exactly (reported as infinity if not).
pub fn band_z_score(summary: &SampleSummary, cdf: &[f64]) -> f64 {
    let emp = summary.empirical_cdf();
    let n = summary.samples as f64;
    emp.iter()
        .zip(cdf)
        .map(|(&e, &q)| {
            let sigma = (q * (1.0 - q) / n).sqrt();
            if sigma == 0.0 {
                if (e - q).abs() < 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (e - q).abs() / sigma
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct CpConstant<T> {
    pub p: PrimeParam,
    pub value: T,
    pub residual: T,
    pub bracket: (T, T),
}

/// `F(c) = ((1-c)/c) ln(1-c) + ln c - ln(1 - 1/p)`.
pub fn cp_equation<T: Real>(p: PrimeParam, c: &T) -> T {
    let one = T::one();
    let pt = T::from_u(p.as_u64());
    let rhs = (-(one.clone() / pt)).ln_1p();
    let omc = one - c.clone();
    omc.clone() / c.clone() * (-c.clone()).ln_1p() + c.ln() - rhs
}

/// Root of [`cp_equation`] in `(1 - 1/p, 1)` by bisection, with `|F| <= tol`.
pub fn solve_cp<T: Real>(p: PrimeParam, tol: f64) -> Result<CpConstant<T>> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let one = T::one();
    let lo0 = one.clone() - one.clone() / T::from_u(p.as_u64());
    let hi0 = one - T::from_f64(1e-12).expect("finite").max_of(T::epsilon() * T::from_u(4));
    let (f_lo, f_hi) = (cp_equation(p, &lo0), cp_equation(p, &hi0));
    if !(f_lo < T::zero() && f_hi > T::zero()) {
        return Err(Error::Invariant(format!(
            "no sign change on [{}, {}]: F = {:e}, {:e}",
            lo0.to_f64(),
            hi0.to_f64(),
            f_lo.to_f64(),
            f_hi.to_f64()
        )));
    }
    let (mut lo, mut hi) = (lo0.clone(), hi0.clone());
    let two = T::from_u(2);
    for _ in 0..(2 * T::MANTISSA_BITS + 64) {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        let f = cp_equation(p, &mid);
        if f.abs().to_f64() <= tol && (hi.clone() - lo.clone()).to_f64() <= tol {
            return Ok(CpConstant { p, value: mid, residual: f.abs(), bracket: (lo0, hi0) });
        }
        if f < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if !(lo < hi) {
            break;
        }
    }
    let mid = (lo + hi) / two;
    let f = cp_equation(p, &mid).abs();
    if f.to_f64() <= tol {
        Ok(CpConstant { p, value: mid, residual: f, bracket: (lo0, hi0) })
    } else {
        Err(Error::Precision(format!(
            "bisection stalled with |F| = {:e} above {tol:e} at {} bits",
            f.to_f64(),
            T::MANTISSA_BITS
        )))
    }
}

/// One line of the element-order report.
#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Row {
    pub n: usize,
    #[serde(rename = "meanZeta")]
    pub mean_zeta: String,
    #[serde(rename = "meanZetaOverN")]
    pub mean_zeta_over_n: String,
    #[serde(rename = "varZeta")]
    pub var_zeta: String,
    pub cp: String,
    pub residual: String,
    pub samples: usize,
    pub seed: u64,
    /// Monte Carlo mean when `samples > 0`.
    #[serde(rename = "sampleMean", skip_serializing_if = "Option::is_none")]
    pub sample_mean: Option<String>,
    /// Largest binomial z-score of the sampled cdf against the DP.
    #[serde(rename = "bandZ", skip_serializing_if = "Option::is_none")]
    pub band_z: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Theorem1Report<T> {
    pub cp: CpConstant<T>,
    pub means: Vec<(usize, T, T)>,
    pub rows: Vec<Theorem1Row>,
}

/// DP means (and optionally Monte Carlo means) over `n_list`, with `c_p`.
pub fn theorem1_report<T: Real>(
    p: PrimeParam,
    n_list: &[usize],
    samples: usize,
    seed: u64,
    tol: f64,
    digits: usize,
) -> Result<Theorem1Report<T>> {
    let cp = solve_cp::<T>(p, tol)?;
    let top = n_list.iter().copied().max().ok_or_else(|| Error::Argument("empty n list".into()))?;
    zeta_cdf_checked::<T>(p, top, crate::recurrence::LOG_TABLE_MAX_ERROR)?;
    let levels = zeta_cdf_levels::<T>(p, top);
    let mut means = Vec::new();
    let mut rows = Vec::new();
    for &n in n_list {
        let cdf = &levels[n];
        let mean = cdf.mean();
        let var = cdf.variance();
        let over_n = if n == 0 { T::zero() } else { mean.clone() / T::from_u(n as u64) };
        let (sample_mean, band_z) = if samples > 0 {
            let batch = zeta_sample_batch(p, n, samples, seed)?;
            let q: Vec<f64> = cdf.q.iter().map(T::to_f64).collect();
            (Some(format!("{:.6}", batch.mean())), Some(band_z_score(&batch, &q)))
        } else {
            (None, None)
        };
        rows.push(Theorem1Row {
            n,
            mean_zeta: mean.to_sci(digits),
            mean_zeta_over_n: over_n.to_sci(digits),
            var_zeta: var.to_sci(digits),
            cp: cp.value.to_sci(digits),
            residual: cp.residual.to_sci(3),
            samples,
            seed,
            sample_mean,
            band_z,
        });
        means.push((n, mean, var));
    }
    Ok(Theorem1Report { cp, means, rows })
}
