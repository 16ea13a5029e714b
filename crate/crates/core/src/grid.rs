//! Grid points of the even (`2n` steps) and odd (`2n − 1` steps) lattices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub const ALL: [Parity; 2] = [Parity::Even, Parity::Odd];

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(Error::domain(format!("unknown parity `{other}`"))),
        }
    }
}

/// Identifies `a_{k,n} = P(S_{2n} = 2k)` (even) or `a*_{k,n} = P(S_{2n−1} = 2k − 1)` (odd).
///
/// Even points satisfy `|k| ≤ n`, odd points `−n + 1 ≤ k ≤ n`; `n ≥ 1` for both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub parity: Parity,
    pub n: u64,
    pub k: i64,
}

impl GridPoint {
    pub fn new(parity: Parity, n: u64, k: i64) -> Result<Self> {
        let p = GridPoint { parity, n, k };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::domain(format!("{p} is outside the grid")))
        }
    }

    pub fn even(n: u64, k: i64) -> Result<Self> {
        Self::new(Parity::Even, n, k)
    }

    pub fn odd(n: u64, k: i64) -> Result<Self> {
        Self::new(Parity::Odd, n, k)
    }

    pub fn is_valid(&self) -> bool {
        if self.n == 0 || self.n > i64::MAX as u64 / 2 {
            return false;
        }
        let n = self.n as i64;
        match self.parity {
            Parity::Even => self.k.abs() <= n,
            Parity::Odd => -n < self.k && self.k <= n,
        }
    }

    /// Walk length: `2n` or `2n − 1`.
    pub fn steps(&self) -> u64 {
        match self.parity {
            Parity::Even => 2 * self.n,
            Parity::Odd => 2 * self.n - 1,
        }
    }

    /// Walk position: `2k` or `2k − 1`.
    pub fn position(&self) -> i64 {
        match self.parity {
            Parity::Even => 2 * self.k,
            Parity::Odd => 2 * self.k - 1,
        }
    }

    /// Maps a walk `(l, j)` onto the lattice; `None` when `l + j` is odd or `|j| > l`.
    pub fn from_walk(l: u64, j: i64) -> Option<Self> {
        if l == 0 || j.unsigned_abs() > l || (l as i64 + j).rem_euclid(2) != 0 {
            return None;
        }
        let p = if l.is_multiple_of(2) {
            GridPoint {
                parity: Parity::Even,
                n: l / 2,
                k: j / 2,
            }
        } else {
            GridPoint {
                parity: Parity::Odd,
                n: l.div_ceil(2),
                k: (j + 1) / 2,
            }
        };
        debug_assert!(p.is_valid());
        Some(p)
    }

    /// `|k| = n` (even) or `k = n` (odd): the single-path extremes.
    pub fn is_boundary(&self) -> bool {
        match self.parity {
            Parity::Even => self.k.unsigned_abs() == self.n,
            Parity::Odd => self.k == self.n as i64,
        }
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, n={}, k={})", self.parity, self.n, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_edges() {
        assert!(GridPoint::even(3, -3).is_ok());
        assert!(GridPoint::even(3, 4).is_err());
        assert!(GridPoint::odd(3, -2).is_ok());
        assert!(GridPoint::odd(3, -3).is_err());
        assert!(GridPoint::odd(3, 3).is_ok());
        assert!(GridPoint::even(0, 0).is_err());
    }

    #[test]
    fn walk_mapping_roundtrips() {
        for l in 1..40u64 {
            for j in -(l as i64)..=(l as i64) {
                match GridPoint::from_walk(l, j) {
                    Some(p) => {
                        assert_eq!(p.steps(), l);
                        assert_eq!(p.position(), j);
                    }
                    None => assert_eq!((l as i64 + j).rem_euclid(2), 1),
                }
            }
        }
        assert_eq!(GridPoint::from_walk(3, 5), None);
    }
}
