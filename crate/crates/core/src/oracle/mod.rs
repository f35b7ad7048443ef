//! Explicit group arithmetic in `P_n` and brute-force class enumeration,
//! used as ground truth for the counting code.

pub mod census;
pub mod wreath;

pub use census::{census_to_h, classify_kinds, cross_check, enumerate_classes, ClassCensus, KindCheck};
pub use wreath::WreathElement;
