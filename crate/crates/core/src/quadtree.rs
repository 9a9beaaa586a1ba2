//! Compressed quadtree over a weighted point set.
//!
//! Entries are stored in Z-order, so every node owns a contiguous slice of
//! the entry array. Points that share a leaf key are merged into a single
//! entry whose weight is the sum of the merged weights.

use crate::error::{Error, Result};
use crate::geometry::{CellId, LeafKey, Point, Rect, WeightedPoint, MAX_DIM, MAX_LEVEL};

pub type NodeId = u32;

#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub point: Point,
    pub key: LeafKey,
    pub weight: f64,
    /// Input position of the point kept for this location.
    pub source: u32,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub cell: CellId,
    child_start: u32,
    child_len: u32,
    pub start: u32,
    pub end: u32,
    pub weight: f64,
    facet_min: [u32; MAX_DIM],
    facet_max: [u32; MAX_DIM],
}

impl Node {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.child_len == 0
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Clone, Debug)]
pub struct CompressedQuadtree {
    d: usize,
    entries: Vec<Entry>,
    nodes: Vec<Node>,
    child_list: Vec<NodeId>,
    members: Vec<u32>,
    member_start: Vec<u32>,
}

impl CompressedQuadtree {
    /// Builds the tree; points must lie in `[0,1)^d`.
    pub fn build(points: &[WeightedPoint]) -> Result<CompressedQuadtree> {
        let first = points.first().ok_or(Error::EmptyInput)?;
        let d = first.point.dim();
        if points.len() > u32::MAX as usize / 2 {
            return Err(Error::TooLarge(format!("{} points", points.len())));
        }
        let mut raw: Vec<Entry> = Vec::with_capacity(points.len());
        for (i, wp) in points.iter().enumerate() {
            if wp.point.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: wp.point.dim(),
                });
            }
            raw.push(Entry {
                point: wp.point,
                key: LeafKey::of_point(&wp.point),
                weight: wp.weight,
                source: i as u32,
            });
        }
        raw.sort_by(|a, b| {
            a.key
                .cmp(&b.key)
                .then_with(|| a.point.lex_cmp(&b.point))
                .then(a.source.cmp(&b.source))
        });
        let members: Vec<u32> = raw.iter().map(|e| e.source).collect();
        let mut member_start = Vec::new();
        let mut entries: Vec<Entry> = Vec::with_capacity(raw.len());
        for (i, e) in raw.into_iter().enumerate() {
            match entries.last_mut() {
                Some(last) if last.key == e.key => last.weight += e.weight,
                _ => {
                    entries.push(e);
                    member_start.push(i as u32);
                }
            }
        }
        member_start.push(members.len() as u32);
        let mut tree = CompressedQuadtree {
            d,
            entries,
            nodes: Vec::with_capacity(2 * points.len()),
            child_list: Vec::new(),
            members,
            member_start,
        };
        let n = tree.entries.len() as u32;
        tree.build_node(0, n, None);
        Ok(tree)
    }

    fn build_node(&mut self, start: u32, end: u32, parent_level: Option<u32>) -> NodeId {
        let id = self.nodes.len() as NodeId;
        let first = self.entries[start as usize].key;
        let d = self.d;
        self.nodes.push(Node {
            cell: CellId::root(d),
            child_start: 0,
            child_len: 0,
            start,
            end,
            weight: 0.0,
            facet_min: [start; MAX_DIM],
            facet_max: [start; MAX_DIM],
        });
        if end - start == 1 {
            let cell = match parent_level {
                None => CellId::root(d),
                Some(l) => first.cell(l + 1),
            };
            let node = &mut self.nodes[id as usize];
            node.cell = cell;
            node.weight = self.entries[start as usize].weight;
            return id;
        }
        let last = self.entries[end as usize - 1].key;
        let level = first.common_level(&last);
        debug_assert!(level < MAX_LEVEL);
        let mut kids = Vec::with_capacity(1 << d);
        let mut s = start;
        while s < end {
            let group = self.entries[s as usize].key.cell(level + 1);
            let mut e = s + 1;
            while e < end && group.contains_key(&self.entries[e as usize].key) {
                e += 1;
            }
            kids.push(self.build_node(s, e, Some(level)));
            s = e;
        }
        let mut weight = 0.0;
        let mut fmin = [u32::MAX; MAX_DIM];
        let mut fmax = [u32::MAX; MAX_DIM];
        for &k in &kids {
            let kn = &self.nodes[k as usize];
            weight += kn.weight;
            for i in 0..d {
                if fmin[i] == u32::MAX || self.coord(kn.facet_min[i], i) < self.coord(fmin[i], i) {
                    fmin[i] = kn.facet_min[i];
                }
                if fmax[i] == u32::MAX || self.coord(kn.facet_max[i], i) > self.coord(fmax[i], i) {
                    fmax[i] = kn.facet_max[i];
                }
            }
        }
        let child_start = self.child_list.len() as u32;
        self.child_list.extend_from_slice(&kids);
        let node = &mut self.nodes[id as usize];
        node.cell = first.cell(level);
        node.child_start = child_start;
        node.child_len = kids.len() as u32;
        node.weight = weight;
        node.facet_min = fmin;
        node.facet_max = fmax;
        id
    }

    #[inline]
    fn coord(&self, entry: u32, axis: usize) -> f64 {
        self.entries[entry as usize].point[axis]
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn root(&self) -> NodeId {
        0
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        let n = &self.nodes[id as usize];
        &self.child_list[n.child_start as usize..(n.child_start + n.child_len) as usize]
    }

    /// Entries in Z-order.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    #[inline]
    pub fn entry(&self, i: u32) -> &Entry {
        &self.entries[i as usize]
    }

    #[inline]
    pub fn slice(&self, id: NodeId) -> &[Entry] {
        let n = &self.nodes[id as usize];
        &self.entries[n.start as usize..n.end as usize]
    }

    /// Input positions merged into an entry.
    #[inline]
    pub fn members(&self, entry: u32) -> &[u32] {
        &self.members[self.member_start[entry as usize] as usize..self.member_start[entry as usize + 1] as usize]
    }

    /// Total weight of all entries.
    pub fn total_weight(&self) -> f64 {
        self.nodes[0].weight
    }

    /// Entry with the smallest coordinate on `axis` (lowest Z-order on ties).
    #[inline]
    pub fn facet_min(&self, id: NodeId, axis: usize) -> u32 {
        self.nodes[id as usize].facet_min[axis]
    }

    /// Entry with the largest coordinate on `axis` (lowest Z-order on ties).
    #[inline]
    pub fn facet_max(&self, id: NodeId, axis: usize) -> u32 {
        self.nodes[id as usize].facet_max[axis]
    }

    /// First entry of the node in Z-order.
    #[inline]
    pub fn sample(&self, id: NodeId) -> u32 {
        self.nodes[id as usize].start
    }

    /// Depth of the tree (root has depth 0).
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0u32, 0usize)];
        while let Some((v, dep)) = stack.pop() {
            best = best.max(dep);
            for &c in self.children(v) {
                stack.push((c, dep + 1));
            }
        }
        best
    }

    /// The node holding exactly the points of `cell`, or `None` if the cell is empty.
    pub fn compressed_cell(&self, cell: &CellId) -> Option<NodeId> {
        let mut v = self.root();
        loop {
            let node = &self.nodes[v as usize];
            let vc = node.cell;
            if cell.contains(&vc) {
                return Some(v);
            }
            if !vc.contains(cell) {
                return None;
            }
            if node.is_leaf() {
                return if cell.contains_key(&self.entries[node.start as usize].key) {
                    Some(v)
                } else {
                    None
                };
            }
            let step = cell.ancestor(vc.level() + 1);
            let next = self
                .children(v)
                .iter()
                .copied()
                .find(|&u| step.contains(&self.nodes[u as usize].cell));
            {
                let u = next?;
                v = u
            }
        }
    }

    /// Maximal standard cells of level `>= target_level` below `start`, paired with
    /// their compressed nodes, skipping empty cells and cells missing `clip`.
    /// `node` must be the compressed cell of `start`. Output is in Z-order.
    pub fn subdivide(
        &self,
        start: CellId,
        node: NodeId,
        target_level: u32,
        clip: Option<&Rect>,
        out: &mut Vec<(CellId, NodeId)>,
    ) {
        let target = target_level.min(MAX_LEVEL);
        if let Some(c) = clip {
            if !c.intersects(&start.rect()) {
                return;
            }
        }
        if start.level() >= target {
            out.push((start, node));
            return;
        }
        let n = &self.nodes[node as usize];
        if n.cell.level() > start.level() || n.is_leaf() {
            let inner = if n.is_leaf() {
                self.entries[n.start as usize].key.cell(target)
            } else if n.cell.level() >= target {
                n.cell.ancestor(target)
            } else {
                n.cell
            };
            debug_assert!(start.contains(&inner));
            self.subdivide(inner, node, target, clip, out);
            return;
        }
        for &u in self.children(node) {
            let child = self.nodes[u as usize].cell.ancestor(start.level() + 1);
            self.subdivide(child, u, target, clip, out);
        }
    }

    /// Subdivision starting from the node's own cell.
    pub fn subdivide_to_side(&self, node: NodeId, target_level: u32, clip: Option<&Rect>) -> Vec<(CellId, NodeId)> {
        let mut out = Vec::new();
        self.subdivide(self.nodes[node as usize].cell, node, target_level, clip, &mut out);
        out
    }

    /// Entries of `node` inside the closed box `q`, by scanning its slice.
    pub fn scan_weight(&self, node: NodeId, q: &Rect) -> f64 {
        self.slice(node)
            .iter()
            .filter(|e| q.contains(&e.point))
            .map(|e| e.weight)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StandardLength;
    use std::cmp::Ordering;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(points: &[Point]) -> Vec<WeightedPoint> {
        points.iter().map(|p| WeightedPoint::unit(*p)).collect()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Point> {
        (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                Point::new(&c)
            })
            .collect()
    }

    fn clustered_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Point> {
        let centers = random_points(rng, 4, d);
        (0..n)
            .map(|i| {
                let c = &centers[i % 4];
                let v: Vec<f64> = (0..d)
                    .map(|a| (c[a] + (rng.random::<f64>() - 0.5) * 0.01).clamp(0.0, 0.999))
                    .collect();
                Point::new(&v)
            })
            .collect()
    }

    #[test]
    fn two_far_points_make_root_with_two_leaves() {
        let t = CompressedQuadtree::build(&unit(&[Point::new(&[0.1, 0.1]), Point::new(&[0.9, 0.9])])).unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.children(t.root()).len(), 2);
        assert_eq!(t.node(t.root()).cell, CellId::root(2));
        for &c in t.children(t.root()) {
            assert!(t.node(c).is_leaf());
            assert_eq!(t.node(c).cell.level(), 1);
        }
    }

    #[test]
    fn equal_points_merge_into_one_leaf() {
        let p = Point::new(&[0.3, 0.4]);
        let t = CompressedQuadtree::build(&unit(&[p; 7])).unwrap();
        assert_eq!(t.node_count(), 1);
        assert!(t.node(0).is_leaf());
        assert_eq!(t.node(0).weight, 7.0);
        assert_eq!(t.entries().len(), 1);
        assert_eq!(t.members(0), &[0, 1, 2, 3, 4, 5, 6]);
    }

    // Naive reference: grow the full standard quadtree cell by cell, then
    // contract single-child chains. Returns (cell, sorted entry points) per node.
    fn reference_nodes(points: &[Point]) -> Vec<(CellId, Vec<Vec<u64>>)> {
        fn grow(cell: CellId, pts: Vec<LeafKey>, out: &mut Vec<(CellId, Vec<Vec<u64>>)>) {
            let mut distinct = pts.clone();
            distinct.sort();
            distinct.dedup();
            if distinct.len() <= 1 {
                out.push((cell, distinct.iter().map(|k| k.coords().to_vec()).collect()));
                return;
            }
            let groups: Vec<(CellId, Vec<LeafKey>)> = cell
                .children()
                .map(|c| (c, distinct.iter().copied().filter(|k| c.contains_key(k)).collect::<Vec<_>>()))
                .filter(|(_, g)| !g.is_empty())
                .collect();
            if groups.len() == 1 {
                // Single child: contract this node into its child.
                let (c, g) = groups.into_iter().next().unwrap();
                grow(c, g, out);
                return;
            }
            out.push((cell, distinct.iter().map(|k| k.coords().to_vec()).collect()));
            for (c, g) in groups {
                grow(c, g, out);
            }
        }
        let keys: Vec<LeafKey> = points.iter().map(LeafKey::of_point).collect();
        let mut out = Vec::new();
        grow(CellId::root(points[0].dim()), keys, &mut out);
        out
    }

    #[test]
    fn grid_points_match_reference_builder() {
        let mut pts = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                pts.push(Point::new(&[(i as f64 + 0.5) / 8.0, (j as f64 + 0.5) / 8.0]));
            }
        }
        let t = CompressedQuadtree::build(&unit(&pts)).unwrap();
        let mut got: Vec<(CellId, Vec<Vec<u64>>)> = t
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut ks: Vec<Vec<u64>> =
                    t.slice(i as u32).iter().map(|e| e.key.coords().to_vec()).collect();
                ks.sort();
                (n.cell, ks)
            })
            .collect();
        let mut want = reference_nodes(&pts);
        for w in want.iter_mut() {
            w.1.sort();
        }
        let order = |a: &(CellId, Vec<Vec<u64>>), b: &(CellId, Vec<Vec<u64>>)| a.0.z_cmp(&b.0);
        got.sort_by(order);
        want.sort_by(order);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert_eq!(g.0, w.0);
            assert_eq!(g.1, w.1);
        }
        assert_eq!(t.node_count(), 64 + 21);
    }

    #[test]
    fn random_data_matches_reference_builder() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let d = 1 + trial % 3;
            let pts = if trial % 2 == 0 { random_points(&mut rng, 150, d) } else { clustered_points(&mut rng, 150, d) };
            let t = CompressedQuadtree::build(&unit(&pts)).unwrap();
            let mut got: Vec<CellId> = t.nodes().iter().map(|n| n.cell).collect();
            let mut want: Vec<CellId> = reference_nodes(&pts).into_iter().map(|x| x.0).collect();
            got.sort_by(|a, b| a.z_cmp(b));
            want.sort_by(|a, b| a.z_cmp(b));
            assert_eq!(got, want);
        }
    }

    fn check_invariants(t: &CompressedQuadtree, pts: &[Point]) {
        let total: f64 = t.entries().iter().map(|e| e.weight).sum();
        assert_eq!(total, pts.len() as f64);
        assert!(t.node_count() <= 2 * pts.len());
        for (i, n) in t.nodes().iter().enumerate() {
            let id = i as u32;
            let kids = t.children(id);
            assert!(kids.is_empty() || kids.len() >= 2);
            if !kids.is_empty() {
                assert_eq!(t.node(kids[0]).start, n.start);
                assert_eq!(t.node(*kids.last().unwrap()).end, n.end);
                for w in kids.windows(2) {
                    assert_eq!(t.node(w[0]).end, t.node(w[1]).start);
                }
            } else {
                assert_eq!(n.len(), 1);
            }
            // Slice equals brute-force containment over all entries.
            let inside: Vec<usize> = (0..t.entries().len())
                .filter(|&j| n.cell.contains_key(&t.entries()[j].key))
                .collect();
            assert_eq!(inside, (n.start as usize..n.end as usize).collect::<Vec<_>>());
            let w: f64 = t.slice(id).iter().map(|e| e.weight).sum();
            assert_eq!(w, n.weight);
            for a in 0..t.dim() {
                let lo = t.slice(id).iter().map(|e| e.point[a]).fold(f64::INFINITY, f64::min);
                let hi = t.slice(id).iter().map(|e| e.point[a]).fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(t.entry(t.facet_min(id, a)).point[a], lo);
                assert_eq!(t.entry(t.facet_max(id, a)).point[a], hi);
            }
            assert_eq!(t.compressed_cell(&n.cell), Some(id));
        }
    }

    #[test]
    fn structural_invariants_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, d) in [(2000, 2), (1500, 3), (500, 1), (300, 5)] {
            let mut pts = random_points(&mut rng, n, d);
            pts.extend(clustered_points(&mut rng, n / 2, d));
            let t = CompressedQuadtree::build(&unit(&pts)).unwrap();
            check_invariants(&t, &pts);
        }
    }

    #[test]
    fn compressed_cell_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in 1..=3 {
            let mut pts = random_points(&mut rng, 400, d);
            pts.extend(clustered_points(&mut rng, 400, d));
            let t = CompressedQuadtree::build(&unit(&pts)).unwrap();
            assert_eq!(t.compressed_cell(&CellId::root(d)), Some(t.root()));
            for _ in 0..3000 {
                let level = rng.random_range(0..14);
                let src = &t.entries()[rng.random_range(0..t.entries().len())];
                let mut cell = src.key.cell(level);
                if rng.random_bool(0.3) {
                    let c: Vec<u64> = (0..d).map(|_| rng.random_range(0..1u64 << level)).collect();
                    cell = CellId::new(level, &c).unwrap();
                }
                let inside: Vec<u32> = (0..t.entries().len() as u32)
                    .filter(|&j| cell.contains_key(&t.entry(j).key))
                    .collect();
                match t.compressed_cell(&cell) {
                    None => assert!(inside.is_empty()),
                    Some(v) => {
                        let n = t.node(v);
                        assert_eq!(inside, (n.start..n.end).collect::<Vec<_>>());
                        // Highest such node: its parent (if any) holds more points.
                        assert_eq!(t.compressed_cell(&n.cell), Some(v));
                    }
                }
            }
        }
    }

    #[test]
    fn subdivide_examples() {
        let pts = [Point::new(&[0.1, 0.1]), Point::new(&[0.9, 0.9])];
        let t = CompressedQuadtree::build(&unit(&pts)).unwrap();
        let same = t.subdivide_to_side(t.root(), 0, None);
        assert_eq!(same, vec![(CellId::root(2), t.root())]);
        let kids = t.subdivide_to_side(t.root(), 1, None);
        assert_eq!(kids.len(), 2);
        for (c, v) in &kids {
            assert_eq!(c.level(), 1);
            assert_eq!(*c, t.node(*v).cell);
        }
        let clip = Rect::new(&[0.0, 0.0], &[0.4, 0.4]).unwrap();
        assert_eq!(t.subdivide_to_side(t.root(), 1, Some(&clip)).len(), 1);
    }

    #[test]
    fn subdivide_covers_exactly_the_clipped_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..200 {
            let d = 1 + trial % 3;
            let mut pts = random_points(&mut rng, 300, d);
            pts.extend(clustered_points(&mut rng, 100, d));
            let t = CompressedQuadtree::build(&unit(&pts)).unwrap();
            let v = rng.random_range(0..t.node_count() as u32);
            let node = t.node(v);
            let target = node.cell.level() + rng.random_range(0..8);
            let lo: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 0.6).collect();
            let hi: Vec<f64> = lo.iter().map(|x| x + rng.random::<f64>() * 0.6).collect();
            let clip = Rect::new(&lo, &hi).unwrap();
            let cells = t.subdivide_to_side(v, target, Some(&clip));
            for (c, u) in &cells {
                assert!(c.level() >= target.min(MAX_LEVEL));
                assert!(node.cell.contains(c));
                assert!(clip.intersects(&c.rect()));
                assert_eq!(t.compressed_cell(c), Some(*u));
                assert_eq!(c.side(), StandardLength::new(c.level()));
            }
            for (a, b) in cells.iter().zip(cells.iter().skip(1)) {
                assert!(a.0.interior_disjoint(&b.0));
                assert_eq!(a.0.z_cmp(&b.0), Ordering::Less);
            }
            for e in t.slice(v) {
                if clip.contains(&e.point) {
                    assert!(cells.iter().filter(|(c, _)| c.contains_key(&e.key)).count() == 1);
                }
            }
            for (c, _) in &cells {
                assert_eq!(c.level(), target.max(node.cell.level()).min(MAX_LEVEL));
            }
        }
    }
}
