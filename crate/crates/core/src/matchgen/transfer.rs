//! Broken-profile sweep.
//!
//! Cells are visited in lexicographic order. Before cell `i` is processed the
//! frontier window covers cells `i .. i + C` where `C` is the cross-section
//! (`V / dims[0]`), and bit `j` of a state mask is set when cell `i + j` is
//! already covered by a dimer anchored at an earlier cell. Processing cell `i`
//! either skips it (covered), leaves it as a monomer, or anchors a dimer on it
//! pointing to an in-box forward neighbour `i + stride` whose bit is clear.
//! Dimers only ever point forward, so each is counted once.
//!
//! Each state carries a row of counts indexed by dimer number. Counts are
//! stored as fixed-width little-endian limbs sized from the bond count `E`:
//! every entry counts distinct bond subsets, so it never exceeds `2^E`.
//!
//! The next layer is built by pulling: every target mask gathers from the at
//! most `2 + d` source masks that can produce it. Targets are independent, so
//! they are filled in parallel and the result is identical for any number of
//! threads.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::exactmath::BigCount;
use crate::lattice::LatticeSpec;

/// Below this many target states a layer is filled on the calling thread.
const PARALLEL_THRESHOLD: usize = 2048;

/// All frontier states after some prefix of cells has been processed.
#[derive(Clone, Debug)]
pub struct FrontierLayer {
    limbs: usize,
    slots: usize,
    masks: Vec<u32>,
    rows: Vec<u64>,
    index: HashMap<u32, usize>,
}

impl FrontierLayer {
    fn initial(limbs: usize, slots: usize) -> Self {
        let mut rows = vec![0u64; limbs * slots];
        rows[0] = 1;
        let mut layer = FrontierLayer {
            limbs,
            slots,
            masks: vec![0],
            rows,
            index: HashMap::new(),
        };
        layer.rebuild_index();
        layer
    }

    fn stride(&self) -> usize {
        self.limbs * self.slots
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .masks
            .iter()
            .enumerate()
            .map(|(i, &m)| (m, i))
            .collect();
    }

    fn row(&self, mask: u32) -> Option<&[u64]> {
        let i = *self.index.get(&mask)?;
        let s = self.stride();
        Some(&self.rows[i * s..(i + 1) * s])
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Frontier masks present in this layer, ascending.
    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    /// The count row of one state, indexed by dimers placed so far.
    pub fn counts(&self, mask: u32) -> Option<Vec<BigCount>> {
        self.row(mask)
            .map(|row| row.chunks(self.limbs).map(BigCount::from_limbs).collect())
    }

    /// Total count over all states with exactly `k` dimers placed.
    pub fn mass(&self, k: usize) -> BigCount {
        let total: num_bigint::BigUint = self
            .masks
            .iter()
            .filter_map(|&m| self.counts(m))
            .filter_map(|row| row.get(k).map(|c| c.as_biguint().clone()))
            .sum();
        BigCount::from(total)
    }
}

/// Per-cell geometry for the sweep.
struct Plan {
    width: u32,
    /// For each cell, the strides of its in-box forward neighbours.
    forward: Vec<Vec<u32>>,
    volume: usize,
}

impl Plan {
    fn new(spec: &LatticeSpec) -> Self {
        let dims = spec.dims();
        let d = dims.len();
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let volume = spec.volume();
        let width = (volume / dims[0]) as u32;
        let mut coords = vec![0usize; d];
        let mut forward = Vec::with_capacity(volume);
        for _ in 0..volume {
            forward.push(
                (0..d)
                    .filter(|&a| coords[a] + 1 < dims[a])
                    .map(|a| strides[a] as u32)
                    .collect(),
            );
            // odometer increment, last axis fastest
            for a in (0..d).rev() {
                coords[a] += 1;
                if coords[a] < dims[a] {
                    break;
                }
                coords[a] = 0;
            }
        }
        Plan {
            width,
            forward,
            volume,
        }
    }
}

/// `dst[k] += src[k - shift]` for `k` in `shift..=khi`, on limb rows.
#[inline]
fn add_shifted(dst: &mut [u64], src: &[u64], limbs: usize, shift: usize, khi: usize) {
    if limbs == 1 {
        for k in shift..=khi {
            dst[k] = dst[k].wrapping_add(src[k - shift]);
        }
        return;
    }
    for k in shift..=khi {
        let d = &mut dst[k * limbs..(k + 1) * limbs];
        let s = &src[(k - shift) * limbs..(k - shift + 1) * limbs];
        let mut carry = false;
        for (x, &y) in d.iter_mut().zip(s) {
            let (sum, c1) = x.overflowing_add(y);
            let (sum, c2) = sum.overflowing_add(carry as u64);
            *x = sum;
            carry = c1 || c2;
        }
        debug_assert!(!carry, "count exceeded its limb budget");
    }
}

/// Runs the sweep and returns `counts[0..=kcap]`.
pub(super) fn sweep(spec: &LatticeSpec, kcap: usize) -> Vec<BigCount> {
    let plan = Plan::new(spec);
    let limbs = (spec.edge_count() + 1).div_ceil(64).max(1);
    let slots = kcap + 1;
    let mut layer = FrontierLayer::initial(limbs, slots);
    for cell in 0..plan.volume {
        // dimers touching processed cells: 2k <= (cell + 1) + width
        let khi = kcap.min((cell + 1 + plan.width as usize) / 2);
        layer = step(&layer, &plan.forward[cell], plan.width, khi);
    }
    debug_assert_eq!(layer.masks, vec![0]);
    layer
        .counts(0)
        .expect("a box always admits the empty configuration")
}

/// Advances the frontier past one cell.
fn step(layer: &FrontierLayer, forward: &[u32], width: u32, khi: usize) -> FrontierLayer {
    let full = if width >= 32 {
        u32::MAX
    } else {
        (1u32 << width) - 1
    };
    let sources = &layer.masks;

    let expand = |&m: &u32| {
        let shifted = m >> 1;
        let mut out = Vec::with_capacity(1 + forward.len());
        out.push(shifted);
        if m & 1 == 0 {
            for &s in forward {
                if s < width && (m >> s) & 1 == 1 {
                    continue;
                }
                out.push(shifted | (1 << (s - 1)));
            }
        }
        out
    };
    let mut targets: Vec<u32> = if sources.len() >= PARALLEL_THRESHOLD {
        sources.par_iter().flat_map_iter(expand).collect()
    } else {
        sources.iter().flat_map(expand).collect()
    };
    targets.par_sort_unstable();
    targets.dedup();

    let limbs = layer.limbs;
    let stride = layer.stride();
    let pull = |t: u32, dst: &mut [u64]| {
        let up = t << 1;
        // skipped a covered cell, or left a monomer
        for src_mask in [up | 1, up] {
            if src_mask <= full {
                if let Some(src) = layer.row(src_mask) {
                    add_shifted(dst, src, limbs, 0, khi);
                }
            }
        }
        for &s in forward {
            let bit = 1u32 << (s - 1);
            if t & bit == 0 {
                continue;
            }
            let src_mask = (t ^ bit) << 1;
            if src_mask > full {
                continue;
            }
            if let Some(src) = layer.row(src_mask) {
                add_shifted(dst, src, limbs, 1, khi);
            }
        }
    };

    let mut rows = vec![0u64; targets.len() * stride];
    if targets.len() >= PARALLEL_THRESHOLD {
        rows.par_chunks_mut(stride)
            .zip(targets.par_iter())
            .for_each(|(dst, &t)| pull(t, dst));
    } else {
        rows.chunks_mut(stride)
            .zip(targets.iter())
            .for_each(|(dst, &t)| pull(t, dst));
    }

    // A truncated sweep can leave states whose every count fell past kcap.
    let mut masks = targets;
    if rows.chunks(stride).any(|r| r.iter().all(|&x| x == 0)) {
        let (kept_masks, kept_rows): (Vec<u32>, Vec<&[u64]>) = masks
            .iter()
            .zip(rows.chunks(stride))
            .filter(|(_, r)| r.iter().any(|&x| x != 0))
            .map(|(&m, r)| (m, r))
            .unzip();
        rows = kept_rows.concat();
        masks = kept_masks;
    }

    let mut next = FrontierLayer {
        limbs,
        slots: layer.slots,
        masks,
        rows,
        index: HashMap::new(),
    };
    next.rebuild_index();
    next
}
