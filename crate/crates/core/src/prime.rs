use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A prime `p`, checked by trial division on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeParam(u32);

impl PrimeParam {
    pub fn new(p: u32) -> Result<Self> {
        if is_prime(p) {
            Ok(PrimeParam(p))
        } else {
            Err(Error::Argument(format!("{p} is not a prime")))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_u64(self) -> u64 {
        u64::from(self.0)
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u32> for PrimeParam {
    type Error = Error;
    fn try_from(p: u32) -> Result<Self> {
        PrimeParam::new(p)
    }
}

impl From<PrimeParam> for u32 {
    fn from(p: PrimeParam) -> u32 {
        p.0
    }
}

impl fmt::Display for PrimeParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}
