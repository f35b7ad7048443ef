use serde::Serialize;
use serde_json::{json, Value};

use sylow_stats::class_stats::{theorem3_scan, xi_moments, xi_pmf, Pmf};
use sylow_stats::diagnostics::{
    check_alpha_asymptotic, check_alpha_products, diagnostics_report, fraction_string, gamma_estimate,
    gamma_estimate_log, median_k0, GammaEstimate,
};
use sylow_stats::element::{solve_cp, theorem1_report};
use sylow_stats::oracle::census::{cross_check, enumerate_classes};
use sylow_stats::{BigFloat, Error, HTable, LogHTable, PrimeParam, Real, Result};

use crate::args::{parse_n_list, Command, Common, Mode};
use crate::output::{Header, Report};

/// Largest `n - k` for the exact product identity under `--check`.
const PRODUCT_CHECK_GAP: usize = 6;

macro_rules! with_precision {
    ($bits:expr, $f:ident ( $($arg:expr),* )) => {
        match $bits {
            64 => $f::<BigFloat<64>>($($arg),*),
            128 => $f::<BigFloat<128>>($($arg),*),
            256 => $f::<BigFloat<256>>($($arg),*),
            512 => $f::<BigFloat<512>>($($arg),*),
            1024 => $f::<BigFloat<1024>>($($arg),*),
            other => Err(Error::Argument(format!(
                "unsupported precision {other}; use 64, 128, 256, 512 or 1024"
            ))),
        }
    };
}

/// Significant digits worth printing at `T`'s precision.
fn digits<T: Real>() -> usize {
    ((T::MANTISSA_BITS as f64 * std::f64::consts::LOG10_2) as usize).clamp(6, 40)
}

fn prime(c: &Common) -> Result<PrimeParam> {
    PrimeParam::new(c.p)
}

fn level(c: &Common) -> Result<usize> {
    c.n.ok_or_else(|| Error::Argument("--n is required".into()))
}

fn levels(c: &Common) -> Result<Vec<usize>> {
    match (&c.n_list, c.n) {
        (Some(s), _) => parse_n_list(s).map_err(Error::Argument),
        (None, Some(n)) => Ok(vec![n]),
        (None, None) => Err(Error::Argument("--n or --n-list is required".into())),
    }
}

fn header(c: &Common, mode: &str) -> Header {
    let n = match (&c.n_list, c.n) {
        (Some(s), _) => parse_n_list(s).map(|v| json!(v)).unwrap_or(Value::Null),
        (None, Some(n)) => json!(n),
        (None, None) => Value::Null,
    };
    Header {
        p: c.p,
        n,
        mode: mode.to_string(),
        precision: c.precision,
        seed: c.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn merge(report: &mut Report, value: impl Serialize) {
    if let Value::Object(m) = serde_json::to_value(value).expect("serializable") {
        for (k, v) in m {
            report.body.insert(k, v);
        }
    }
}

pub fn run(command: &Command) -> Result<Report> {
    match command {
        Command::Table(c) => table(c),
        Command::Stats(c) => with_precision!(c.precision, stats(c)),
        Command::Diag(c) => with_precision!(c.precision, diag(c)),
        Command::Gamma(c) => with_precision!(c.precision, gamma(c)),
        Command::Zeta(c) => with_precision!(c.precision, zeta(c)),
        Command::Cp(c) => with_precision!(c.precision, cp(c)),
        Command::Census(c) => census(c),
    }
}

pub fn common(command: &Command) -> &Common {
    match command {
        Command::Table(c)
        | Command::Stats(c)
        | Command::Diag(c)
        | Command::Gamma(c)
        | Command::Zeta(c)
        | Command::Cp(c)
        | Command::Census(c) => c,
    }
}

fn table(c: &Common) -> Result<Report> {
    let p = prime(c)?;
    let n = level(c)?;
    let mut report = Report::new(header(c, c.mode.as_str()));
    match c.mode {
        Mode::Exact => {
            let t = HTable::build(p, n)?;
            let rows: Vec<Value> = t
                .rows()
                .iter()
                .enumerate()
                .flat_map(|(n, row)| row.iter().enumerate().map(move |(k, h)| json!({"n": n, "k": k, "h": h.to_string()})))
                .collect();
            merge(&mut report, t.to_record());
            report.rows = rows;
        }
        Mode::Log => {
            let rec = with_precision!(c.precision, log_table_record(p, n))?;
            let rows = log_rows(&rec);
            report.body = match rec {
                Value::Object(m) => m,
                _ => unreachable!("record is an object"),
            };
            report.rows = rows;
        }
    }
    Ok(report)
}

fn log_table_record<T: Real>(p: PrimeParam, n: usize) -> Result<Value> {
    let t = LogHTable::<T>::build(p, n)?;
    Ok(serde_json::to_value(t.to_record()).expect("serializable"))
}

fn log_rows(rec: &Value) -> Vec<Value> {
    let empty = Vec::new();
    let ls = rec["L"].as_array().unwrap_or(&empty);
    let es = rec["errBound"].as_array().unwrap_or(&empty);
    ls.iter()
        .zip(es)
        .enumerate()
        .flat_map(|(n, (lrow, erow))| {
            let lrow = lrow.as_array().cloned().unwrap_or_default();
            let erow = erow.as_array().cloned().unwrap_or_default();
            lrow.into_iter()
                .zip(erow)
                .enumerate()
                .map(move |(k, (l, e))| json!({"n": n, "k": k, "L": l, "errBound": e}))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn stats<T: Real>(c: &Common) -> Result<Report> {
    let p = prime(c)?;
    let list = levels(c)?;
    let top = *list.iter().max().expect("non-empty");
    let d = digits::<T>();
    let mut report = Report::new(header(c, c.mode.as_str()));
    let ln_p = T::from_u(p.as_u64()).ln();
    match c.mode {
        Mode::Exact => {
            let t = HTable::build(p, top)?;
            let mut rows = Vec::new();
            let mut pmfs = Vec::new();
            let mut max_dev = 0.0f64;
            let mut max_second = 0.0f64;
            for &n in &list {
                let dist = xi_pmf::<T>(&t, n)?;
                let k0 = if n == 0 { 0 } else { median_k0(&t, n)? };
                let m = xi_moments(&dist, k0);
                let dev = m.mean.clone() - T::from_u(n.max(1) as u64).ln() / ln_p.clone();
                max_dev = max_dev.max(dev.to_f64().abs());
                max_second = max_second.max(m.second_moment_about_k0.to_f64());
                if let Pmf::Exact { counts, total } = &dist.pmf {
                    if dist.sums_to_one() != Some(true) {
                        report.falsified.push(format!("pmf at n = {n} does not sum to 1"));
                    }
                    let entries: Vec<String> = counts.iter().map(|c| fraction_string(c, total)).collect();
                    pmfs.push(json!({"n": n, "pmf": entries}));
                }
                rows.push(json!({
                    "n": n,
                    "k0": k0,
                    "mean": m.mean.to_sci(d),
                    "variance": m.variance.to_sci(d),
                    "secondMomentAboutK0": m.second_moment_about_k0.to_sci(d),
                    "deviation": dev.to_sci(d),
                }));
            }
            report.set("pmf", pmfs);
            report.set("moments", &rows);
            report.set("maxAbsDeviation", max_dev);
            report.set("maxSecondMomentAboutK0", max_second);
            report.rows = rows;
        }
        Mode::Log => {
            let t = LogHTable::<T>::build(p, top)?;
            let scan = theorem3_scan(&t, &list)?;
            let rows = scan.rows(d);
            report.set("moments", &rows);
            report.set("maxAbsDeviation", scan.max_abs_deviation);
            report.set("maxVariance", scan.max_variance);
            report.set("maxSecondMomentAboutK0", scan.max_second_moment);
            report.set("maxK0Offset", scan.max_k0_offset);
            report.rows_from(&rows);
        }
    }
    Ok(report)
}

fn diag<T: Real>(c: &Common) -> Result<Report> {
    let p = prime(c)?;
    let n = level(c)?;
    let d = digits::<T>();
    let mut report = Report::new(header(c, c.mode.as_str()));
    match c.mode {
        Mode::Exact => {
            let t = HTable::build(p, n)?;
            let log = LogHTable::<T>::build(p, n)?;
            let rep = diagnostics_report(&t, &log)?;
            report.falsified.extend(rep.falsified.iter().cloned());
            report.rows_from(&rep.records);
            merge(&mut report, &rep);
            report.body.shift_remove("falsified");
            if c.check {
                let failures = check_alpha_products(&t, PRODUCT_CHECK_GAP)?;
                for (n, k) in &failures {
                    report.falsified.push(format!("product identity fails at n = {n}, k = {k}"));
                }
                report.set("productIdentityChecked", true);
            }
        }
        Mode::Log => {
            let log = LogHTable::<T>::build(p, n)?;
            let mut rows = Vec::new();
            for m in 1..=n {
                let k0 = median_k0(&log, m)?;
                let half = m / 2;
                let ratio = if half >= 3 {
                    match check_alpha_asymptotic(&log, m, half) {
                        Ok(r) => Some(r.ratio.to_sci(d)),
                        Err(Error::Precision(_)) => None,
                        Err(e) => return Err(e),
                    }
                } else {
                    None
                };
                rows.push(json!({"n": m, "k0": k0, "asymptoticRatioAtHalf": ratio}));
            }
            report.set("records", &rows);
            report.rows = rows;
        }
    }
    Ok(report)
}

fn gamma_rows<T: Real>(g: &GammaEstimate<T>, d: usize) -> Vec<Value> {
    g.per_level
        .iter()
        .map(|iv| json!({"n": iv.n, "lo": iv.lo.to_sci(d), "hi": iv.hi.to_sci(d), "width": iv.width.to_sci(6)}))
        .collect()
}

fn gamma<T: Real>(c: &Common) -> Result<Report> {
    let p = prime(c)?;
    let n = level(c)?;
    let d = digits::<T>();
    let g = match c.mode {
        Mode::Exact => gamma_estimate::<T>(&HTable::build(p, n)?)?,
        Mode::Log => gamma_estimate_log(&LogHTable::<T>::build(p, n)?)?,
    };
    let mut report = Report::new(header(c, c.mode.as_str()));
    let rows = gamma_rows(&g, d);
    report.set("intervals", &rows);
    report.set("point", g.point.to_sci(d));
    report.set("consistent", g.consistent);
    report.rows = rows;
    if !g.consistent {
        report.falsified.push("gamma intervals have empty intersection".into());
    }
    Ok(report)
}

fn zeta<T: Real>(c: &Common) -> Result<Report> {
    let p = prime(c)?;
    let list = levels(c)?;
    let d = digits::<T>();
    let rep = theorem1_report::<T>(p, &list, c.samples, c.seed, c.tol, d)?;
    let mut report = Report::new(header(c, "exact"));
    report.set("cp", rep.cp.value.to_sci(d));
    report.set("residual", rep.cp.residual.to_sci(3));
    report.set("levels", &rep.rows);
    if c.check {
        for row in &rep.rows {
            if let Some(z) = row.band_z {
                if z > 3.0 {
                    report.falsified.push(format!("sampled cdf at n = {} is {z:.2} sigma from the DP", row.n));
                }
            }
        }
    }
    report.rows_from(&rep.rows);
    Ok(report)
}

fn cp<T: Real>(c: &Common) -> Result<Report> {
    let p = prime(c)?;
    let d = digits::<T>();
    let sol = solve_cp::<T>(p, c.tol)?;
    let mut report = Report::new(header(c, "exact"));
    let row = json!({
        "p": p.get(),
        "cp": sol.value.to_sci(d),
        "residual": sol.residual.to_sci(3),
        "bracketLo": sol.bracket.0.to_sci(d),
        "bracketHi": sol.bracket.1.to_sci(d),
    });
    merge(&mut report, &row);
    report.notes.push(format!("c_{} = {} (|F| = {})", p, sol.value.to_sci(d), sol.residual.to_sci(3)));
    report.rows = vec![row];
    Ok(report)
}

fn census(c: &Common) -> Result<Report> {
    let p = prime(c)?;
    let n = level(c)?;
    let census = enumerate_classes(p, n, c.slow)?;
    let mut report = Report::new(header(c, "exact"));
    let rec = census.to_record();
    report.rows_from(&rec.classes);
    merge(&mut report, &rec);
    if c.check {
        match cross_check(&census) {
            Ok(line) => {
                report.set("check", &line);
                report.notes.push(line);
            }
            Err(Error::Falsified(msg)) => report.falsified.push(msg),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
