//! Persistent projection structures attached to compressed quadtree nodes.
//!
//! [`ProjectionTables`] keeps, for every axis subset `I` and every node, a
//! version of a range structure over the node's points with the axes of `I`
//! dropped. [`AxisExtremes`] keeps, for every axis `i`, a quadtree over the
//! points with axis `i` dropped, whose nodes carry a structure keyed by the
//! dropped coordinate.
//!
//! Both are built bottom-up: a node reuses the version of its largest child
//! and inserts the points of the other children.

use crate::geometry::{AxisSet, Rect, WeightedPoint};
use crate::persistent::{PersistentTree, RankSpace, Version};
use crate::quadtree::{CompressedQuadtree, NodeId};

#[derive(Clone, Debug)]
struct SubsetTable {
    kept: Vec<usize>,
    tree: PersistentTree,
    versions: Vec<Version>,
}

/// Index of the child holding the most entries (first in Z-order on ties).
fn heavy_child(qt: &CompressedQuadtree, v: NodeId, size: impl Fn(NodeId) -> usize) -> NodeId {
    let mut best = qt.children(v)[0];
    for &c in &qt.children(v)[1..] {
        if size(c) > size(best) {
            best = c;
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct ProjectionTables {
    d: usize,
    tables: Vec<Option<SubsetTable>>,
}

impl ProjectionTables {
    /// `ranks` must be built over the tree's entries in entry order.
    pub fn build(qt: &CompressedQuadtree, ranks: &RankSpace) -> ProjectionTables {
        let d = qt.dim();
        let mut tables: Vec<Option<SubsetTable>> = (0..1usize << d).map(|_| None).collect();
        for (mask, slot) in tables.iter_mut().enumerate() {
            let set = AxisSet(mask as u8);
            if set.is_empty() || set.len() == d {
                continue;
            }
            *slot = Some(Self::build_subset(qt, ranks, set));
        }
        ProjectionTables { d, tables }
    }

    fn build_subset(qt: &CompressedQuadtree, ranks: &RankSpace, dropped: AxisSet) -> SubsetTable {
        let kept: Vec<usize> = dropped.complement(qt.dim()).iter().collect();
        let mut tree = PersistentTree::new(kept.len(), ranks.len());
        let mut versions = vec![0 as Version; qt.node_count()];
        let mut rk = vec![0u32; kept.len()];
        let mut insert = |tree: &mut PersistentTree, v: Version, e: u32| {
            for (slot, &a) in rk.iter_mut().zip(&kept) {
                *slot = ranks.rank(a, e);
            }
            tree.insert(v, &rk, e, qt.entry(e).weight)
        };
        for v in (0..qt.node_count() as NodeId).rev() {
            let node = qt.node(v);
            if node.is_leaf() {
                versions[v as usize] = insert(&mut tree, 0, node.start);
                continue;
            }
            let heavy = heavy_child(qt, v, |c| qt.node(c).len());
            let mut ver = versions[heavy as usize];
            for &c in qt.children(v) {
                if c == heavy {
                    continue;
                }
                let cn = qt.node(c);
                for e in cn.start..cn.end {
                    ver = insert(&mut tree, ver, e);
                }
            }
            versions[v as usize] = ver;
        }
        SubsetTable { kept, tree, versions }
    }

    fn windows(&self, t: &SubsetTable, ranks: &RankSpace, q: &Rect) -> Vec<(u32, u32)> {
        t.kept.iter().map(|&a| ranks.window(a, q.lo()[a], q.hi()[a])).collect()
    }

    /// Weight of the node's points satisfying `q` on every axis outside `dropped`.
    pub fn weight(&self, ranks: &RankSpace, node: NodeId, dropped: AxisSet, q: &Rect) -> f64 {
        let t = self.tables[dropped.0 as usize].as_ref().expect("projection subset not built");
        let w = self.windows(t, ranks, q);
        t.tree.weight(t.versions[node as usize], &w)
    }

    /// Lowest entry of the node satisfying `q` on every axis outside `dropped`.
    pub fn report_one(&self, ranks: &RankSpace, node: NodeId, dropped: AxisSet, q: &Rect) -> Option<u32> {
        let t = self.tables[dropped.0 as usize].as_ref().expect("projection subset not built");
        let w = self.windows(t, ranks, q);
        t.tree.min_id(t.versions[node as usize], &w)
    }

    /// Insertions performed while building the table for `dropped`.
    pub fn insertions(&self, dropped: AxisSet) -> u64 {
        self.tables[dropped.0 as usize].as_ref().map_or(0, |t| t.tree.insertions())
    }

    /// Axis subsets with a table.
    pub fn subsets(&self) -> Vec<AxisSet> {
        (0..self.tables.len())
            .filter(|&m| self.tables[m].is_some())
            .map(|m| AxisSet(m as u8))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn memory_bytes(&self) -> usize {
        self.tables
            .iter()
            .flatten()
            .map(|t| t.tree.node_count() * 24 + t.versions.len() * 4)
            .sum()
    }
}

#[derive(Clone, Debug)]
pub struct ProjectedAxis {
    tree: CompressedQuadtree,
    extremes: PersistentTree,
    versions: Vec<Version>,
}

impl ProjectedAxis {
    /// Quadtree over the points with this axis dropped; entry members are
    /// entry ids of the full tree.
    pub fn tree(&self) -> &CompressedQuadtree {
        &self.tree
    }
}

#[derive(Clone, Debug)]
pub struct AxisExtremes {
    axes: Vec<ProjectedAxis>,
}

impl AxisExtremes {
    /// Requires `qt.dim() >= 2`.
    pub fn build(qt: &CompressedQuadtree, ranks: &RankSpace) -> AxisExtremes {
        let d = qt.dim();
        assert!(d >= 2);
        let axes = (0..d).map(|i| Self::build_axis(qt, ranks, i)).collect();
        AxisExtremes { axes }
    }

    fn build_axis(qt: &CompressedQuadtree, ranks: &RankSpace, axis: usize) -> ProjectedAxis {
        let drop = AxisSet::single(axis);
        let projected: Vec<WeightedPoint> = qt
            .entries()
            .iter()
            .map(|e| WeightedPoint::new(e.point.project_out(drop), e.weight))
            .collect();
        let tree = CompressedQuadtree::build(&projected).expect("nonempty");
        let mut extremes = PersistentTree::new(1, ranks.len());
        let mut versions = vec![0 as Version; tree.node_count()];
        let member_count = |v: NodeId| {
            let n = tree.node(v);
            (n.start..n.end).map(|e| tree.members(e).len()).sum::<usize>()
        };
        let insert_entry = |ext: &mut PersistentTree, mut ver: Version, pe: u32| {
            for &m in tree.members(pe) {
                ver = ext.insert(ver, &[ranks.rank(axis, m)], m, qt.entry(m).weight);
            }
            ver
        };
        for v in (0..tree.node_count() as NodeId).rev() {
            let node = tree.node(v);
            if node.is_leaf() {
                versions[v as usize] = insert_entry(&mut extremes, 0, node.start);
                continue;
            }
            let heavy = heavy_child(&tree, v, member_count);
            let mut ver = versions[heavy as usize];
            for &c in tree.children(v) {
                if c == heavy {
                    continue;
                }
                let cn = tree.node(c);
                for pe in cn.start..cn.end {
                    ver = insert_entry(&mut extremes, ver, pe);
                }
            }
            versions[v as usize] = ver;
        }
        ProjectedAxis {
            tree,
            extremes,
            versions,
        }
    }

    pub fn axis(&self, i: usize) -> &ProjectedAxis {
        &self.axes[i]
    }

    /// Entry of the full tree whose projection lies in `pnode` and whose
    /// coordinate on `axis` is extreme within `[lo, hi]`.
    pub fn extreme(&self, ranks: &RankSpace, axis: usize, pnode: NodeId, lo: f64, hi: f64, max: bool) -> Option<u32> {
        let pa = &self.axes[axis];
        let w = ranks.window(axis, lo, hi);
        let ver = pa.versions[pnode as usize];
        let r = if max { pa.extremes.max_rank(ver, w) } else { pa.extremes.min_rank(ver, w) }?;
        Some(ranks.entry_at(axis, r))
    }

    pub fn insertions(&self) -> u64 {
        self.axes.iter().map(|a| a.extremes.insertions()).sum()
    }

    pub fn memory_bytes(&self) -> usize {
        self.axes
            .iter()
            .map(|a| a.extremes.node_count() * 24 + a.versions.len() * 4 + a.tree.node_count() * 160)
            .sum()
    }
}
