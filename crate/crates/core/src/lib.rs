//! Conjugacy-class and element-order statistics of the Sylow p-subgroups
//! `P_n` of the symmetric groups `S_{p^n}`.
//!
//! * [`recurrence`]: exact and log-domain tables of `h_n(k)`.
//! * [`diagnostics`]: the ratios `alpha`/`beta`, the median index `k0`,
//!   the class-count constant `gamma` and the identities between them.
//! * [`class_stats`]: distribution and moments of the order exponent of a
//!   random conjugacy class.
//! * [`element`]: the same for a random element, by exact DP and by
//!   Monte Carlo, plus the limiting constant `c_p`.
//! * [`oracle`]: explicit wreath-product arithmetic and brute-force class
//!   enumeration used to cross-check everything else.
//!
//! Floating-point code is generic over [`Real`]; the aliases below name the
//! instantiations the CLI uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod class_stats;
pub mod diagnostics;
pub mod element;
pub mod error;
pub mod oracle;
pub mod prime;
pub mod recurrence;
pub mod rng;
pub mod scalar;

pub use diagnostics::{median_k0, AlphaProvider};
pub use element::{solve_cp, zeta_exact_cdf, CpConstant, ZetaCdf};
pub use error::{Error, Result};
pub use oracle::{ClassCensus, WreathElement};
pub use prime::PrimeParam;
pub use recurrence::{group_order, HTable, LogHTable};
pub use rng::{rng_stream, RngStream};
pub use scalar::{BigFloat, Real};

pub type Float128 = BigFloat<128>;
pub type Float256 = BigFloat<256>;
pub type Float512 = BigFloat<512>;

/// Exact non-negative rational in lowest terms.
pub type ExactRatio = num_rational::BigRational;

pub type LogHTable64 = LogHTable<f64>;
pub type LogHTable256 = LogHTable<Float256>;
pub type ZetaCdfExact = ZetaCdf<ExactRatio>;
