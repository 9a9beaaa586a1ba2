//! Coresets precomputed on range tree nodes.
//!
//! A query's canonical nodes partition the points in the range, so the union
//! of their per-node coresets is a coreset of the range. Small nodes, and
//! nodes whose coreset would not shrink them by half, keep their raw points.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::geometry::{Rect, WeightedPoint};
use crate::index::{BuildParams, Meter, RangeIndex};
use crate::median::{coreset_from_centers, ApproxCenters, Coreset, ExplicitAccess, Provenance};
use crate::quadtree::CompressedQuadtree;
use crate::range_tree::{CanonicalNode, RangeTree};
use crate::solvers::{gonzalez, Objective};

/// Stored coresets of one node, indexed by `log2(k)`; `None` means raw.
#[derive(Clone, Debug, Default)]
struct NodeCoresets {
    median: Vec<Option<Vec<WeightedPoint>>>,
    means: Vec<Option<Vec<WeightedPoint>>>,
}

#[derive(Clone, Debug, Default)]
pub struct CoresetTree {
    k_max: usize,
    nodes: HashMap<(u32, u32), NodeCoresets>,
}

/// Smallest power of two at least `min(k, k_max)`.
pub fn k_bar(k: usize, k_max: usize) -> usize {
    k.clamp(1, k_max).next_power_of_two()
}

fn node_points(qt: &CompressedQuadtree, rt: &RangeTree, c: &CanonicalNode) -> Vec<WeightedPoint> {
    rt.node_ids(c)
        .iter()
        .map(|&e| {
            let en = qt.entry(e);
            WeightedPoint::new(en.point, en.weight)
        })
        .collect()
}

fn build_node(points: &[WeightedPoint], params: &BuildParams) -> NodeCoresets {
    let pa = ExplicitAccess::new(points).expect("normalized points");
    let w: f64 = points.iter().map(|p| p.weight).sum();
    let limit = points.len() / 2;
    let levels = params.k_max.trailing_zeros() as usize + 1;
    let mut out = NodeCoresets::default();
    for kind in [Objective::Median, Objective::Means] {
        let c1 = match kind {
            Objective::Means => 4.0 * w,
            _ => 2.0 * w,
        };
        let mut slots = Vec::with_capacity(levels);
        let mut give_up = false;
        for t in 0..levels {
            let k = 1usize << t;
            if give_up || k >= points.len() {
                slots.push(None);
                continue;
            }
            let a = ApproxCenters { centers: gonzalez(points, k), c1 };
            let s = coreset_from_centers(&pa, &a, k, params.delta, kind, Some(limit));
            // Coresets grow with k, so once one is too large the rest are too.
            give_up = s.is_none();
            slots.push(s.map(|s| s.members));
        }
        match kind {
            Objective::Means => out.means = slots,
            _ => out.median = slots,
        }
    }
    out
}

impl CoresetTree {
    pub fn empty() -> CoresetTree {
        CoresetTree::default()
    }

    pub fn build(qt: &CompressedQuadtree, rt: &RangeTree, params: &BuildParams) -> CoresetTree {
        let eligible: Vec<CanonicalNode> = (0..rt.layer_count() as u32)
            .flat_map(|l| rt.layer_nodes(l))
            .filter(|c| (c.hi - c.lo) as usize >= params.coreset_min_node)
            .collect();
        let built: Vec<NodeCoresets> = eligible
            .par_iter()
            .map(|c| build_node(&node_points(qt, rt, c), params))
            .collect();
        let nodes = eligible.iter().map(|c| (c.layer, c.node)).zip(built).collect();
        CoresetTree { k_max: params.k_max, nodes }
    }

    /// Number of stored (non-raw) coresets.
    pub fn stored(&self) -> usize {
        self.nodes
            .values()
            .map(|n| n.median.iter().chain(&n.means).filter(|s| s.is_some()).count())
            .sum()
    }

    pub fn memory_bytes(&self) -> usize {
        let per = std::mem::size_of::<WeightedPoint>();
        self.nodes
            .values()
            .map(|n| {
                n.median
                    .iter()
                    .chain(&n.means)
                    .flatten()
                    .map(|s| s.len() * per)
                    .sum::<usize>()
                    + 64
            })
            .sum()
    }

    fn lookup(&self, c: &CanonicalNode, k: usize, kind: Objective) -> Option<&[WeightedPoint]> {
        if k > self.k_max {
            return None;
        }
        let n = self.nodes.get(&(c.layer, c.node))?;
        let t = k_bar(k, self.k_max).trailing_zeros() as usize;
        let slots = match kind {
            Objective::Means => &n.means,
            _ => &n.median,
        };
        slots.get(t)?.as_deref()
    }
}

impl RangeIndex {
    /// Union of the stored node coresets (or raw points) over the canonical
    /// nodes of the normalized box `q`. Every member read counts as an access.
    pub fn canonical_coreset(&self, q: &Rect, k: usize, kind: Objective, meter: &Meter) -> Coreset {
        let rt = self.range_tree();
        let mut members = Vec::new();
        for c in rt.canonical_nodes(q) {
            match self.coreset_tree().lookup(&c, k, kind) {
                Some(s) => members.extend_from_slice(s),
                None => members.extend(node_points(self.quadtree(), rt, &c)),
            }
        }
        meter.add(members.len() as u64);
        let total_weight = members.iter().map(|m| m.weight).sum();
        Coreset {
            members,
            kind,
            k,
            eps: self.params().delta,
            provenance: Provenance::Canonical,
            total_weight,
        }
    }
}
