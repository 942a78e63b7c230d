//! Exhaustive enumeration of matchings, independent of the frontier sweep.
//!
//! Recursion over the adjacency lists: take the lowest undecided cell and
//! either leave it as a monomer or pair it with each undecided neighbour.

use crate::error::{Error, Result};
use crate::exactmath::BigCount;
use crate::lattice::LatticeSpec;

use super::MatchingPolynomial;

pub const ORACLE_MAX_VOLUME: usize = 24;

pub fn brute_force_matchings(spec: &LatticeSpec) -> Result<MatchingPolynomial> {
    let volume = spec.volume();
    if volume > ORACLE_MAX_VOLUME {
        return Err(Error::Capacity {
            bound: "oracle volume",
            actual: volume,
            limit: ORACLE_MAX_VOLUME,
        });
    }
    let adjacency = (0..volume)
        .map(|c| spec.neighbors(c))
        .collect::<Result<Vec<_>>>()?;
    let mut search = Search {
        adjacency: &adjacency,
        decided: vec![false; volume],
        counts: vec![0; volume / 2 + 1],
    };
    search.run(0, 0);
    let counts = search.counts.into_iter().map(BigCount::from).collect();
    Ok(MatchingPolynomial::new(volume, counts, false))
}

struct Search<'a> {
    adjacency: &'a [Vec<usize>],
    decided: Vec<bool>,
    counts: Vec<u64>,
}

impl Search<'_> {
    fn run(&mut self, from: usize, dimers: usize) {
        let Some(cell) = (from..self.decided.len()).find(|&c| !self.decided[c]) else {
            self.counts[dimers] += 1;
            return;
        };
        self.decided[cell] = true;
        self.run(cell + 1, dimers);
        for i in 0..self.adjacency[cell].len() {
            let other = self.adjacency[cell][i];
            if self.decided[other] {
                continue;
            }
            self.decided[other] = true;
            self.run(cell + 1, dimers + 1);
            self.decided[other] = false;
        }
        self.decided[cell] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(s: &str) -> Vec<String> {
        brute_force_matchings(&s.parse().unwrap())
            .unwrap()
            .counts()
            .iter()
            .map(|c| c.to_string())
            .collect()
    }

    #[test]
    fn hand_counts() {
        assert_eq!(counts("2x2"), ["1", "4", "2"]);
        assert_eq!(counts("1x4"), ["1", "3", "1"]);
        assert_eq!(counts("1x1"), ["1"]);
        assert_eq!(counts("2x3"), ["1", "7", "11", "3"]);
        assert_eq!(counts("4x4").last().unwrap(), "36");
        assert_eq!(counts("2x2x2").last().unwrap(), "9");
    }

    #[test]
    fn refuses_large_boxes() {
        let err = brute_force_matchings(&"5x5".parse().unwrap()).unwrap_err();
        assert_eq!(
            err,
            Error::Capacity {
                bound: "oracle volume",
                actual: 25,
                limit: 24
            }
        );
    }
}
