//! Static d-level range tree over weighted entries.
//!
//! Every level is a balanced segment tree over the entries sorted by one
//! axis; the segment nodes are stored implicitly in preorder (left child of
//! node `v` over `[lo, hi)` is `v + 1`, right child is `v + 2 (mid - lo)`).
//! Segment nodes of the last level are the canonical nodes.

use crate::geometry::{Point, Rect, MAX_DIM};

#[derive(Clone, Copy, Debug)]
enum LayerRef {
    Inner(u32),
    Last(u32),
}

#[derive(Clone, Debug)]
struct InnerLayer {
    axis: u8,
    keys: Vec<f64>,
    children: Vec<LayerRef>,
}

#[derive(Clone, Debug)]
struct LastLayer {
    axis: u8,
    ids: Vec<u32>,
    keys: Vec<f64>,
    prefix: Vec<f64>,
    /// Per preorder node: lowest id, then (argmin, argmax) entry per axis.
    agg: Vec<u32>,
}

/// A last-level segment node: `layer` and preorder `node`, covering
/// positions `lo..hi` of that layer's sorted entry list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalNode {
    pub layer: u32,
    pub node: u32,
    pub lo: u32,
    pub hi: u32,
}

#[derive(Clone, Debug)]
pub struct RangeTree {
    d: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
    inners: Vec<InnerLayer>,
    lasts: Vec<LastLayer>,
    root: LayerRef,
}

#[inline]
fn mid(lo: u32, hi: u32) -> u32 {
    lo + (hi - lo) / 2
}

impl RangeTree {
    /// Entry ids are positions in `points`; ties are broken toward lower ids.
    pub fn build(points: &[Point], weights: &[f64]) -> RangeTree {
        assert!(!points.is_empty());
        assert_eq!(points.len(), weights.len());
        let d = points[0].dim();
        let mut t = RangeTree {
            d,
            points: points.to_vec(),
            weights: weights.to_vec(),
            inners: Vec::new(),
            lasts: Vec::new(),
            root: LayerRef::Last(0),
        };
        let ids: Vec<u32> = (0..points.len() as u32).collect();
        t.root = t.build_layer(ids, 0);
        t
    }

    fn build_layer(&mut self, mut ids: Vec<u32>, axis: usize) -> LayerRef {
        let pts = &self.points;
        ids.sort_by(|&a, &b| pts[a as usize][axis].total_cmp(&pts[b as usize][axis]).then(a.cmp(&b)));
        let keys: Vec<f64> = ids.iter().map(|&i| pts[i as usize][axis]).collect();
        if axis + 1 == self.d {
            let mut prefix = Vec::with_capacity(ids.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &i in &ids {
                acc += self.weights[i as usize];
                prefix.push(acc);
            }
            let stride = 1 + 2 * self.d;
            let mut agg = vec![0u32; (2 * ids.len() - 1) * stride];
            self.fill_agg(&ids, &mut agg, 0, 0, ids.len() as u32);
            self.lasts.push(LastLayer {
                axis: axis as u8,
                ids,
                keys,
                prefix,
                agg,
            });
            return LayerRef::Last(self.lasts.len() as u32 - 1);
        }
        let m = ids.len() as u32;
        let mut children = Vec::with_capacity(2 * ids.len() - 1);
        self.build_children(&ids, axis + 1, 0, m, &mut children);
        self.inners.push(InnerLayer {
            axis: axis as u8,
            keys,
            children,
        });
        LayerRef::Inner(self.inners.len() as u32 - 1)
    }

    fn build_children(&mut self, ids: &[u32], axis: usize, lo: u32, hi: u32, out: &mut Vec<LayerRef>) {
        let r = self.build_layer(ids[lo as usize..hi as usize].to_vec(), axis);
        out.push(r);
        if hi - lo > 1 {
            let m = mid(lo, hi);
            self.build_children(ids, axis, lo, m, out);
            self.build_children(ids, axis, m, hi, out);
        }
    }

    fn fill_agg(&self, ids: &[u32], agg: &mut [u32], node: u32, lo: u32, hi: u32) {
        let d = self.d;
        let stride = 1 + 2 * d;
        let base = node as usize * stride;
        if hi - lo == 1 {
            let id = ids[lo as usize];
            for x in &mut agg[base..base + stride] {
                *x = id;
            }
            return;
        }
        let m = mid(lo, hi);
        let l = node + 1;
        let r = node + 2 * (m - lo);
        self.fill_agg(ids, agg, l, lo, m);
        self.fill_agg(ids, agg, r, m, hi);
        let (lb, rb) = (l as usize * stride, r as usize * stride);
        agg[base] = agg[lb].min(agg[rb]);
        for a in 0..d {
            let (x, y) = (agg[lb + 1 + 2 * a], agg[rb + 1 + 2 * a]);
            agg[base + 1 + 2 * a] = self.better(x, y, a, false);
            let (x, y) = (agg[lb + 2 + 2 * a], agg[rb + 2 + 2 * a]);
            agg[base + 2 + 2 * a] = self.better(x, y, a, true);
        }
    }

    /// The entry with the smaller (or larger) coordinate on `axis`; ties to the lower id.
    #[inline]
    fn better(&self, x: u32, y: u32, axis: usize, max: bool) -> u32 {
        let (cx, cy) = (self.points[x as usize][axis], self.points[y as usize][axis]);
        let x_wins = if max { cx > cy } else { cx < cy };
        if x_wins || (cx == cy && x < y) {
            x
        } else {
            y
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    fn window(keys: &[f64], lo: f64, hi: f64) -> (u32, u32) {
        let a = keys.partition_point(|&x| x < lo);
        let b = keys.partition_point(|&x| x <= hi);
        (a as u32, b.max(a) as u32)
    }

    /// Visits every last layer reached by `q`, with the window of positions inside `q`.
    fn visit_layers<F: FnMut(&LastLayer, u32, u32, u32)>(&self, q: &Rect, f: &mut F) {
        self.visit_ref(self.root, q, f);
    }

    fn visit_ref<F: FnMut(&LastLayer, u32, u32, u32)>(&self, r: LayerRef, q: &Rect, f: &mut F) {
        match r {
            LayerRef::Last(i) => {
                let layer = &self.lasts[i as usize];
                let a = layer.axis as usize;
                let (lo, hi) = Self::window(&layer.keys, q.lo()[a], q.hi()[a]);
                if lo < hi {
                    f(layer, i, lo, hi);
                }
            }
            LayerRef::Inner(i) => {
                let layer = &self.inners[i as usize];
                let a = layer.axis as usize;
                let (lo, hi) = Self::window(&layer.keys, q.lo()[a], q.hi()[a]);
                if lo < hi {
                    self.visit_segments(layer, 0, 0, layer.keys.len() as u32, lo, hi, q, f);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_segments<F: FnMut(&LastLayer, u32, u32, u32)>(
        &self,
        layer: &InnerLayer,
        node: u32,
        lo: u32,
        hi: u32,
        a: u32,
        b: u32,
        q: &Rect,
        f: &mut F,
    ) {
        if b <= lo || hi <= a {
            return;
        }
        if a <= lo && hi <= b {
            self.visit_ref(layer.children[node as usize], q, f);
            return;
        }
        let m = mid(lo, hi);
        self.visit_segments(layer, node + 1, lo, m, a, b, q, f);
        self.visit_segments(layer, node + 2 * (m - lo), m, hi, a, b, q, f);
    }

    fn last_segments<F: FnMut(u32, u32, u32)>(node: u32, lo: u32, hi: u32, a: u32, b: u32, f: &mut F) {
        if b <= lo || hi <= a {
            return;
        }
        if a <= lo && hi <= b {
            f(node, lo, hi);
            return;
        }
        let m = mid(lo, hi);
        Self::last_segments(node + 1, lo, m, a, b, f);
        Self::last_segments(node + 2 * (m - lo), m, hi, a, b, f);
    }

    /// Total weight of entries in the closed box `q`.
    pub fn count(&self, q: &Rect) -> f64 {
        let mut acc = 0.0;
        self.visit_layers(q, &mut |layer, _, lo, hi| {
            acc += layer.prefix[hi as usize] - layer.prefix[lo as usize];
        });
        acc
    }

    pub fn is_empty_in(&self, q: &Rect) -> bool {
        self.report_one(q).is_none()
    }

    /// Lowest entry id inside `q`.
    pub fn report_one(&self, q: &Rect) -> Option<u32> {
        let stride = 1 + 2 * self.d;
        let mut best = u32::MAX;
        self.visit_layers(q, &mut |layer, _, a, b| {
            let m = layer.ids.len() as u32;
            Self::last_segments(0, 0, m, a, b, &mut |node, _, _| {
                best = best.min(layer.agg[node as usize * stride]);
            });
        });
        (best != u32::MAX).then_some(best)
    }

    /// Per-axis (argmin, argmax) entries inside `q`.
    pub fn extremes(&self, q: &Rect) -> Option<([u32; MAX_DIM], [u32; MAX_DIM])> {
        let d = self.d;
        let stride = 1 + 2 * d;
        let mut lo_ids = [u32::MAX; MAX_DIM];
        let mut hi_ids = [u32::MAX; MAX_DIM];
        let mut any = false;
        self.visit_layers(q, &mut |layer, _, a, b| {
            let m = layer.ids.len() as u32;
            Self::last_segments(0, 0, m, a, b, &mut |node, _, _| {
                any = true;
                let base = node as usize * stride;
                for ax in 0..d {
                    let x = layer.agg[base + 1 + 2 * ax];
                    lo_ids[ax] = if lo_ids[ax] == u32::MAX { x } else { self.better(lo_ids[ax], x, ax, false) };
                    let y = layer.agg[base + 2 + 2 * ax];
                    hi_ids[ax] = if hi_ids[ax] == u32::MAX { y } else { self.better(hi_ids[ax], y, ax, true) };
                }
            });
        });
        any.then_some((lo_ids, hi_ids))
    }

    /// Smallest box enclosing the entries inside `q`.
    pub fn enclosing_box(&self, q: &Rect) -> Option<Rect> {
        let (lo, hi) = self.extremes(q)?;
        let d = self.d;
        let mut l = [0.0; MAX_DIM];
        let mut h = [0.0; MAX_DIM];
        for a in 0..d {
            l[a] = self.points[lo[a] as usize][a];
            h[a] = self.points[hi[a] as usize][a];
        }
        Rect::new(&l[..d], &h[..d]).ok()
    }

    /// Canonical nodes whose slices partition the entries inside `q`.
    pub fn canonical_nodes(&self, q: &Rect) -> Vec<CanonicalNode> {
        let mut out = Vec::new();
        self.visit_layers(q, &mut |layer, li, a, b| {
            let m = layer.ids.len() as u32;
            Self::last_segments(0, 0, m, a, b, &mut |node, lo, hi| {
                out.push(CanonicalNode { layer: li, node, lo, hi });
            });
        });
        out
    }

    /// Entry ids of a canonical node.
    pub fn node_ids(&self, c: &CanonicalNode) -> &[u32] {
        &self.lasts[c.layer as usize].ids[c.lo as usize..c.hi as usize]
    }

    pub fn layer_count(&self) -> usize {
        self.lasts.len()
    }

    /// All segment nodes of one last layer, in preorder.
    pub fn layer_nodes(&self, layer: u32) -> Vec<CanonicalNode> {
        fn walk(layer: u32, node: u32, lo: u32, hi: u32, out: &mut Vec<CanonicalNode>) {
            out.push(CanonicalNode { layer, node, lo, hi });
            if hi - lo > 1 {
                let m = mid(lo, hi);
                walk(layer, node + 1, lo, m, out);
                walk(layer, node + 2 * (m - lo), m, hi, out);
            }
        }
        let mut out = Vec::new();
        walk(layer, 0, 0, self.lasts[layer as usize].ids.len() as u32, &mut out);
        out
    }

    /// Approximate heap footprint in bytes.
    pub fn memory_bytes(&self) -> usize {
        let inner: usize = self.inners.iter().map(|l| l.keys.len() * 8 + l.children.len() * 8).sum();
        let last: usize = self
            .lasts
            .iter()
            .map(|l| l.ids.len() * 4 + l.keys.len() * 8 + l.prefix.len() * 8 + l.agg.len() * 4)
            .sum();
        inner + last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rect(rng: &mut ChaCha8Rng, d: usize) -> Rect {
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for a in 0..d {
            let x: f64 = rng.random::<f64>() * 1.2 - 0.1;
            let y: f64 = rng.random::<f64>() * 1.2 - 0.1;
            lo[a] = x.min(y);
            hi[a] = x.max(y);
        }
        Rect::new(&lo, &hi).unwrap()
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for d in 1..=4 {
            let n = 400;
            // Coordinates on a coarse lattice force ties.
            let pts: Vec<Point> = (0..n)
                .map(|_| Point::new(&(0..d).map(|_| rng.random_range(0..20) as f64 / 20.0).collect::<Vec<_>>()))
                .collect();
            let w: Vec<f64> = (0..n).map(|i| 1.0 + (i % 4) as f64).collect();
            let t = RangeTree::build(&pts, &w);
            assert_eq!(t.count(&Rect::unit(d)), w.iter().sum::<f64>());
            for _ in 0..500 {
                let q = random_rect(&mut rng, d);
                let inside: Vec<u32> = (0..n as u32).filter(|&i| q.contains(&pts[i as usize])).collect();
                let want: f64 = inside.iter().map(|&i| w[i as usize]).sum();
                assert_eq!(t.count(&q), want);
                assert_eq!(t.report_one(&q), inside.first().copied());
                assert_eq!(t.is_empty_in(&q), inside.is_empty());
                let canon = t.canonical_nodes(&q);
                let mut got: Vec<u32> = canon.iter().flat_map(|c| t.node_ids(c).iter().copied()).collect();
                got.sort();
                assert_eq!(got, inside);
                match t.extremes(&q) {
                    None => assert!(inside.is_empty()),
                    Some((lo, hi)) => {
                        for a in 0..d {
                            let best_lo = inside
                                .iter()
                                .copied()
                                .min_by(|&x, &y| pts[x as usize][a].total_cmp(&pts[y as usize][a]).then(x.cmp(&y)))
                                .unwrap();
                            let best_hi = inside
                                .iter()
                                .copied()
                                .min_by(|&x, &y| pts[y as usize][a].total_cmp(&pts[x as usize][a]).then(x.cmp(&y)))
                                .unwrap();
                            assert_eq!(lo[a], best_lo);
                            assert_eq!(hi[a], best_hi);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn layer_nodes_cover_every_segment() {
        let pts: Vec<Point> = (0..10).map(|i| Point::new(&[i as f64 / 10.0])).collect();
        let t = RangeTree::build(&pts, &[1.0; 10]);
        let nodes = t.layer_nodes(0);
        assert_eq!(nodes.len(), 19);
        for (i, n) in nodes.iter().enumerate() {
            assert_eq!(n.node as usize, i);
        }
    }
}
