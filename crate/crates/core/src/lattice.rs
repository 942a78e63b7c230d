//! Finite d-dimensional rectangular boxes with free boundary.
//!
//! Cells are numbered lexicographically by coordinates with the last axis
//! varying fastest, so axis `a` has stride `∏_{b>a} dims[b]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    #[default]
    Free,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    dims: Vec<usize>,
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Validation("lattice needs at least one axis".into()));
        }
        if let Some(i) = dims.iter().position(|&n| n == 0) {
            return Err(Error::Validation(format!(
                "edge length of axis {i} is zero"
            )));
        }
        dims.iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Validation("volume overflows the address space".into()))?;
        Ok(LatticeSpec {
            dims,
            boundary: Boundary::Free,
        })
    }

    /// The box `side^d`.
    pub fn hypercube(d: usize, side: usize) -> Result<Self> {
        Self::new(vec![side; d])
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn volume(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of nearest-neighbour bonds inside the box.
    pub fn edge_count(&self) -> usize {
        let v = self.volume();
        self.dims.iter().map(|&n| (n - 1) * (v / n)).sum()
    }

    /// Cells in one slice perpendicular to axis 0.
    pub fn cross_section(&self) -> usize {
        self.volume() / self.dims[0]
    }

    /// Sites with fewer than 2d neighbours: `V − ∏ max(L_i − 2, 0)`.
    pub fn boundary_sites(&self) -> usize {
        let interior: usize = self.dims.iter().map(|&n| n.saturating_sub(2)).product();
        self.volume() - interior
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.d()];
        for a in (0..self.d().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.dims[a + 1];
        }
        strides
    }

    pub fn coords(&self, cell: usize) -> Result<Vec<usize>> {
        self.check_cell(cell)?;
        let mut rest = cell;
        let mut coords = vec![0; self.d()];
        for a in (0..self.d()).rev() {
            coords[a] = rest % self.dims[a];
            rest /= self.dims[a];
        }
        Ok(coords)
    }

    /// Nearest neighbours of `cell` inside the box, ascending.
    pub fn neighbors(&self, cell: usize) -> Result<Vec<usize>> {
        let coords = self.coords(cell)?;
        let strides = self.strides();
        let mut out = Vec::with_capacity(2 * self.d());
        for a in 0..self.d() {
            if coords[a] > 0 {
                out.push(cell - strides[a]);
            }
            if coords[a] + 1 < self.dims[a] {
                out.push(cell + strides[a]);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The same box with the axis order reversed.
    pub fn reversed(&self) -> Self {
        let mut dims = self.dims.clone();
        dims.reverse();
        LatticeSpec {
            dims,
            boundary: self.boundary,
        }
    }

    fn check_cell(&self, cell: usize) -> Result<()> {
        let volume = self.volume();
        if cell >= volume {
            return Err(Error::Range {
                index: cell,
                volume,
            });
        }
        Ok(())
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.dims.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl FromStr for LatticeSpec {
    type Err = Error;

    /// Parses `"L1xL2x...xLd"`, e.g. `"8x8"` or `"2x2x2"`.
    fn from_str(s: &str) -> Result<Self> {
        let dims = s
            .trim()
            .split(['x', 'X'])
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Validation(format!("cannot parse lattice {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(s: &str) -> LatticeSpec {
        s.parse().unwrap()
    }

    #[test]
    fn volumes() {
        assert_eq!(spec("2x3").volume(), 6);
        assert_eq!(spec("2x2x2").volume(), 8);
        assert_eq!(spec("10").volume(), 10);
    }

    #[test]
    fn edge_counts() {
        assert_eq!(spec("2x2").edge_count(), 4);
        assert_eq!(spec("2x3").edge_count(), 7);
        assert_eq!(spec("9").edge_count(), 8);
        assert_eq!(spec("1").edge_count(), 0);
        assert_eq!(spec("2x2x2").edge_count(), 12);
    }

    #[test]
    fn neighbor_counts() {
        let s = spec("2x2");
        assert_eq!(s.neighbors(0).unwrap(), vec![1, 2]);
        assert_eq!(spec("3x3").neighbors(4).unwrap(), vec![1, 3, 5, 7]);
        assert_eq!(spec("1x5").neighbors(2).unwrap(), vec![1, 3]);
        assert_eq!(
            spec("3x3").neighbors(9),
            Err(Error::Range {
                index: 9,
                volume: 9
            })
        );
    }

    #[test]
    fn layout_is_last_axis_fastest() {
        let s = spec("2x3x4");
        assert_eq!(s.strides(), vec![12, 4, 1]);
        assert_eq!(s.coords(13).unwrap(), vec![1, 0, 1]);
        assert_eq!(s.cross_section(), 12);
    }

    #[test]
    fn boundary_site_counts() {
        assert_eq!(spec("8x8").boundary_sites(), 28);
        assert_eq!(spec("2x2").boundary_sites(), 4);
        assert_eq!(spec("6").boundary_sites(), 2);
        assert_eq!(spec("4x4x4").boundary_sites(), 56);
    }

    #[test]
    fn parse_errors() {
        assert!("".parse::<LatticeSpec>().is_err());
        assert!("3x".parse::<LatticeSpec>().is_err());
        assert!("3x0".parse::<LatticeSpec>().is_err());
        assert!("ax2".parse::<LatticeSpec>().is_err());
        assert_eq!(spec(" 8X8 ").to_string(), "8x8");
    }

    fn small_spec() -> impl Strategy<Value = LatticeSpec> {
        proptest::collection::vec(1usize..6, 1..4).prop_map(|d| LatticeSpec::new(d).unwrap())
    }

    proptest! {
        #[test]
        fn handshake(s in small_spec()) {
            let degree_sum: usize = (0..s.volume()).map(|c| s.neighbors(c).unwrap().len()).sum();
            prop_assert_eq!(degree_sum, 2 * s.edge_count());
        }

        #[test]
        fn adjacency_is_symmetric(s in small_spec()) {
            for a in 0..s.volume() {
                for b in s.neighbors(a).unwrap() {
                    prop_assert!(s.neighbors(b).unwrap().contains(&a));
                }
            }
        }

        #[test]
        fn permutation_invariance(dims in proptest::collection::vec(1usize..8, 1..4), rot in 0usize..3) {
            let s = LatticeSpec::new(dims.clone()).unwrap();
            let mut permuted = dims;
            let len = permuted.len();
            permuted.rotate_left(rot % len);
            let t = LatticeSpec::new(permuted).unwrap();
            prop_assert_eq!(s.volume(), t.volume());
            prop_assert_eq!(s.edge_count(), t.edge_count());
            prop_assert_eq!(s.reversed().edge_count(), s.edge_count());
        }
    }
}
