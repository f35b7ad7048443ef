use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sylow-stats", version, about = "Class and element-order statistics of Sylow p-subgroups of S_{p^n}")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true, env = "SYLOW_STATS_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Class-count table h_n(k).
    Table(Common),
    /// Distribution and moments of the class order exponent.
    Stats(Common),
    /// alpha/beta ratios, k0 and the identities between them.
    Diag(Common),
    /// Admissible intervals for the class-count constant gamma.
    Gamma(Common),
    /// Element order exponent: DP, Monte Carlo and the limit constant.
    Zeta(Common),
    /// Solve for the limit constant c_p.
    Cp(Common),
    /// Brute-force conjugacy classes with kind classification.
    Census(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Log,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Log => "log",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub p: u32,

    /// Level (depth) n.
    #[arg(long)]
    pub n: Option<usize>,

    /// Levels as `a,b,c` or `start:end:step`.
    #[arg(long = "n-list")]
    pub n_list: Option<String>,

    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,

    /// Float precision in bits: 64, 128, 256, 512 or 1024.
    #[arg(long, env = "SYLOW_STATS_PRECISION", default_value_t = 256)]
    pub precision: u32,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Monte Carlo samples per level (0 disables sampling).
    #[arg(long, default_value_t = 0)]
    pub samples: usize,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Allow enumerations that take noticeably longer.
    #[arg(long)]
    pub slow: bool,

    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Run the cross-checks and fail on any mismatch.
    #[arg(long)]
    pub check: bool,
}

/// `"4,8,16"` or `"4:1024:4"` (inclusive end).
pub fn parse_n_list(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("cannot parse n list {s:?}");
    if s.contains(':') {
        let parts: Vec<usize> = s.split(':').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let (start, end, step) = match parts.as_slice() {
            [a, b] => (*a, *b, 1),
            [a, b, c] => (*a, *b, *c),
            _ => return Err(bad()),
        };
        if step == 0 || start > end {
            return Err(bad());
        }
        return Ok((start..=end).step_by(step).collect());
    }
    let list: Vec<usize> = s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    if list.is_empty() {
        Err(bad())
    } else {
        Ok(list)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_lists() {
        assert_eq!(parse_n_list("4,8, 16").unwrap(), vec![4, 8, 16]);
        assert_eq!(parse_n_list("4:16:4").unwrap(), vec![4, 8, 12, 16]);
        assert_eq!(parse_n_list("1:3").unwrap(), vec![1, 2, 3]);
        assert!(parse_n_list("4:1:1").is_err());
        assert!(parse_n_list("a").is_err());
    }
}
