//! Exact matching polynomials of free-boundary boxes.
//!
//! `counts[k]` is the number of ways to place `k` non-overlapping dimers on
//! nearest-neighbour bonds. The production path is a broken-profile transfer
//! matrix ([`matching_polynomial`]); [`brute_force_matchings`] is an
//! independent exhaustive enumerator used as an oracle on small boxes.

mod oracle;
mod transfer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::BigCount;
use crate::lattice::LatticeSpec;

pub use oracle::{brute_force_matchings, ORACLE_MAX_VOLUME};
pub use transfer::FrontierLayer;

pub const DEFAULT_MAX_FRONTIER_BITS: u32 = 22;
/// No override may push the frontier past this many bits.
pub const FRONTIER_BITS_CEILING: u32 = 26;
pub const DEFAULT_MAX_VOLUME: usize = 10_000;

/// Size limits checked before any counting starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Guards {
    pub max_frontier_bits: u32,
    pub max_volume: usize,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            max_frontier_bits: DEFAULT_MAX_FRONTIER_BITS,
            max_volume: DEFAULT_MAX_VOLUME,
        }
    }
}

impl Guards {
    pub fn with_frontier_bits(bits: u32) -> Result<Self> {
        if bits == 0 || bits > FRONTIER_BITS_CEILING {
            return Err(Error::Validation(format!(
                "frontier bit limit must be in 1..={FRONTIER_BITS_CEILING}, got {bits}"
            )));
        }
        Ok(Guards {
            max_frontier_bits: bits,
            ..Guards::default()
        })
    }

    pub fn check(&self, spec: &LatticeSpec) -> Result<()> {
        let cross = spec.cross_section();
        if cross > self.max_frontier_bits as usize {
            return Err(Error::Capacity {
                bound: "cross-section frontier bits",
                actual: cross,
                limit: self.max_frontier_bits as usize,
            });
        }
        let volume = spec.volume();
        if volume > self.max_volume {
            return Err(Error::Capacity {
                bound: "volume",
                actual: volume,
                limit: self.max_volume,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingPolynomial {
    volume: usize,
    counts: Vec<BigCount>,
    truncated: bool,
}

impl MatchingPolynomial {
    pub(crate) fn new(volume: usize, counts: Vec<BigCount>, truncated: bool) -> Self {
        debug_assert_eq!(counts.first(), Some(&BigCount::one()));
        MatchingPolynomial {
            volume,
            counts,
            truncated,
        }
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn counts(&self) -> &[BigCount] {
        &self.counts
    }

    pub fn count(&self, k: usize) -> Option<&BigCount> {
        self.counts.get(k)
    }

    /// True when `max_k` cut the polynomial short of `⌊V/2⌋`.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Keeps only `k <= max_k`.
    pub fn truncate(&self, max_k: usize) -> Self {
        if max_k >= self.counts.len().saturating_sub(1) {
            return self.clone();
        }
        MatchingPolynomial {
            volume: self.volume,
            counts: self.counts[..=max_k].to_vec(),
            truncated: true,
        }
    }
}

/// Slots needed for dimer counts `0..=max_k`, capped at `⌊V/2⌋`.
fn count_slots(volume: usize, max_k: Option<usize>) -> (usize, bool) {
    let full = volume / 2;
    match max_k {
        Some(k) if k < full => (k + 1, true),
        _ => (full + 1, false),
    }
}

pub fn matching_polynomial(spec: &LatticeSpec, max_k: Option<usize>) -> Result<MatchingPolynomial> {
    matching_polynomial_with(spec, max_k, &Guards::default())
}

pub fn matching_polynomial_with(
    spec: &LatticeSpec,
    max_k: Option<usize>,
    guards: &Guards,
) -> Result<MatchingPolynomial> {
    guards.check(spec)?;
    let (slots, truncated) = count_slots(spec.volume(), max_k);
    let counts = transfer::sweep(spec, slots - 1);
    Ok(MatchingPolynomial::new(spec.volume(), counts, truncated))
}

/// Number of perfect matchings (dimer coverings); zero for odd volume.
pub fn perfect_matching_count(spec: &LatticeSpec) -> Result<BigCount> {
    perfect_matching_count_with(spec, &Guards::default())
}

pub fn perfect_matching_count_with(spec: &LatticeSpec, guards: &Guards) -> Result<BigCount> {
    guards.check(spec)?;
    if spec.volume() % 2 == 1 {
        return Ok(BigCount::zero());
    }
    let poly = matching_polynomial_with(spec, None, guards)?;
    Ok(poly.counts()[spec.volume() / 2].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> LatticeSpec {
        s.parse().unwrap()
    }

    fn counts(s: &str) -> Vec<u64> {
        matching_polynomial(&spec(s), None)
            .unwrap()
            .counts()
            .iter()
            .map(|c| c.to_string().parse().unwrap())
            .collect()
    }

    #[test]
    fn small_boxes() {
        assert_eq!(counts("1x2"), vec![1, 1]);
        assert_eq!(counts("2x2"), vec![1, 4, 2]);
        assert_eq!(counts("2x3"), vec![1, 7, 11, 3]);
        assert_eq!(counts("1x4"), vec![1, 3, 1]);
        assert_eq!(counts("1"), vec![1]);
        assert_eq!(counts("1x1x1"), vec![1]);
    }

    #[test]
    fn perfect_counts() {
        let pm = |s: &str| perfect_matching_count(&spec(s)).unwrap().to_string();
        assert_eq!(pm("2x2"), "2");
        assert_eq!(pm("1x3"), "0");
        assert_eq!(pm("2x2x2"), "9");
        assert_eq!(pm("4x4"), "36");
        assert_eq!(pm("8x8"), "12988816");
    }

    #[test]
    fn truncation() {
        let full = matching_polynomial(&spec("4x4"), None).unwrap();
        let cut = matching_polynomial(&spec("4x4"), Some(3)).unwrap();
        assert!(cut.truncated());
        assert!(!full.truncated());
        assert_eq!(cut.counts(), &full.counts()[..4]);
        assert_eq!(full.truncate(3), cut);
        let zero = matching_polynomial(&spec("4x4"), Some(0)).unwrap();
        assert_eq!(zero.counts(), &[BigCount::one()]);
        // a max_k beyond V/2 is not a truncation
        let over = matching_polynomial(&spec("4x4"), Some(100)).unwrap();
        assert_eq!(over, full);
    }

    #[test]
    fn guards_name_the_bound() {
        let err = matching_polynomial(&spec("3x23"), None).unwrap_err();
        assert!(matches!(
            err,
            Error::Capacity {
                bound: "cross-section frontier bits",
                actual: 23,
                limit: 22
            }
        ));
        let err = matching_polynomial(&spec("10001x1"), None).unwrap_err();
        assert!(matches!(
            err,
            Error::Capacity {
                bound: "volume",
                ..
            }
        ));
        let wide = Guards::with_frontier_bits(23).unwrap();
        assert!(wide.check(&spec("3x23")).is_ok());
        assert!(Guards::with_frontier_bits(27).is_err());
        assert!(Guards::with_frontier_bits(0).is_err());
    }

    #[test]
    fn long_path_uses_many_limbs() {
        // 1x3000 has 2999 bonds, so counts need 47 limbs; the total number of
        // matchings is the Fibonacci number F(3001).
        let poly = matching_polynomial(&spec("3000"), None).unwrap();
        let total: num_bigint::BigUint = poly.counts().iter().map(|c| c.as_biguint()).sum();
        let (mut a, mut b) = (
            num_bigint::BigUint::from(0u32),
            num_bigint::BigUint::from(1u32),
        );
        for _ in 0..3001 {
            let next = &a + &b;
            a = b;
            b = next;
        }
        assert_eq!(total, a);
    }
}
