//! Exact rational mass units.
//!
//! Every measure stores integer masses in units of a positive rational
//! quantum, so feasibility questions reduce to integral flow problems.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive rational `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawQuantum", into = "RawQuantum")]
pub struct Quantum {
    num: u64,
    den: u64,
}

#[derive(Serialize, Deserialize)]
struct RawQuantum {
    num: u64,
    den: u64,
}

impl TryFrom<RawQuantum> for Quantum {
    type Error = Error;
    fn try_from(raw: RawQuantum) -> Result<Self> {
        Quantum::new(raw.num, raw.den)
    }
}

impl From<Quantum> for RawQuantum {
    fn from(q: Quantum) -> Self {
        RawQuantum { num: q.num, den: q.den }
    }
}

impl Default for Quantum {
    fn default() -> Self {
        Quantum::ONE
    }
}

impl Quantum {
    pub const ONE: Quantum = Quantum { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidParameter(format!(
                "mass quantum must be a positive rational, got {num}/{den}"
            )));
        }
        let g = num.gcd(&den);
        Ok(Quantum {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self / k`, failing when the denominator no longer fits.
    pub fn divided_by(self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("division of a quantum by zero".into()));
        }
        let g = self.num.gcd(&k);
        let den = self.den.checked_mul(k / g).ok_or(Error::QuantumOverflow {
            factor: k as u128,
            cap: u64::MAX,
        })?;
        Quantum::new(self.num / g, den)
    }

    /// The largest quantum dividing both `a` and `b`, with the integer
    /// factors `a / g` and `b / g`.
    pub fn common(a: Quantum, b: Quantum) -> Result<(Quantum, u64, u64)> {
        let lhs = a.num as u128 * b.den as u128;
        let rhs = b.num as u128 * a.den as u128;
        let den = a.den as u128 * b.den as u128;
        let g = lhs.gcd(&rhs);
        let (fa, fb) = (lhs / g, rhs / g);
        let r = g.gcd(&den);
        let (gn, gd) = (g / r, den / r);
        let narrow = |v: u128| -> Result<u64> {
            u64::try_from(v).map_err(|_| Error::QuantumOverflow {
                factor: v,
                cap: u64::MAX,
            })
        };
        Ok((Quantum::new(narrow(gn)?, narrow(gd)?)?, narrow(fa)?, narrow(fb)?))
    }

    /// Compares `units_a * a` with `units_b * b` exactly.
    pub fn same_amount(units_a: u128, a: Quantum, units_b: u128, b: Quantum) -> bool {
        // units_a * a.num / a.den == units_b * b.num / b.den
        let lhs = units_a.checked_mul(a.num as u128 * b.den as u128);
        let rhs = units_b.checked_mul(b.num as u128 * a.den as u128);
        match (lhs, rhs) {
            (Some(l), Some(r)) => l == r,
            // Amounts this large never arise from valid desk-scale measures.
            _ => false,
        }
    }

    /// Human-readable total `units * self`.
    pub fn describe(self, units: u128) -> String {
        let n = units * self.num as u128;
        let g = n.gcd(&(self.den as u128));
        let (n, d) = (n / g.max(1), self.den as u128 / g.max(1));
        if d == 1 {
            n.to_string()
        } else {
            format!("{n}/{d}")
        }
    }
}

impl fmt::Display for Quantum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}
