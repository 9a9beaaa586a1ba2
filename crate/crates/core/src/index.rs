//! The query index: every structure built over one normalized point set.

use std::cell::Cell;
use std::time::Instant;

use serde::Serialize;

use crate::coreset_tree::CoresetTree;
use crate::error::{Error, Result};
use crate::geometry::{classify_cell, Classification, FaceClass, Normalizer, Point, Rect, WeightedPoint, MAX_DIM};
use crate::persistent::RankSpace;
use crate::projection::{AxisExtremes, ProjectionTables};
use crate::quadtree::{CompressedQuadtree, NodeId};
use crate::range_tree::RangeTree;
use crate::solvers::SEED;

/// Parameters fixed at build time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildParams {
    /// Accuracy of the coresets stored on range tree nodes.
    pub delta: f64,
    /// Largest power of two `k` with stored coresets.
    pub k_max: usize,
    pub seed: u64,
    /// Approximation factor claimed for query-time centers.
    pub c1: f64,
    /// Swap width of the local search.
    pub swap_width: usize,
    /// Relative improvement below which local search stops.
    pub tol: f64,
    /// Range tree nodes smaller than this keep raw points instead of a coreset.
    pub coreset_min_node: usize,
    /// Build the per-node coresets at all.
    pub coreset_tree: bool,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            delta: 0.5,
            k_max: 16,
            seed: SEED,
            c1: 25.0,
            swap_width: 1,
            tol: 1e-3,
            coreset_min_node: 1024,
            coreset_tree: true,
        }
    }
}

impl BuildParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta {} not in (0, 1)", self.delta)));
        }
        if self.k_max == 0 || !self.k_max.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("k_max {} is not a power of two", self.k_max)));
        }
        if !(self.c1 > 1.0 && self.c1.is_finite()) {
            return Err(Error::InvalidParameter(format!("c1 {} must exceed 1", self.c1)));
        }
        if self.swap_width == 0 {
            return Err(Error::InvalidParameter("swap width must be positive".into()));
        }
        if !(self.tol >= 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter(format!("tol {} not in [0, 1)", self.tol)));
        }
        Ok(())
    }
}

/// Counts point reads made while answering one query: representatives
/// emitted, facet points read, and range-structure probes. Reads of
/// per-node metadata (slice bounds, weights) are free.
#[derive(Debug, Default)]
pub struct Meter {
    accesses: Cell<u64>,
}

impl Meter {
    pub fn new() -> Meter {
        Meter::default()
    }

    #[inline]
    pub fn add(&self, n: u64) {
        self.accesses.set(self.accesses.get() + n);
    }

    pub fn get(&self) -> u64 {
        self.accesses.get()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BuildStats {
    pub n: usize,
    pub distinct: usize,
    pub d: usize,
    pub quadtree_nodes: usize,
    pub quadtree_depth: usize,
    pub projection_insertions: u64,
    pub extreme_insertions: u64,
    pub stored_coresets: usize,
    pub memory_bytes: usize,
    pub build_ms: u64,
}

#[derive(Clone, Debug)]
pub struct RangeIndex {
    params: BuildParams,
    normalizer: Normalizer,
    original: Vec<Point>,
    qt: CompressedQuadtree,
    ranks: RankSpace,
    rt: RangeTree,
    proj: ProjectionTables,
    extremes: AxisExtremes,
    coresets: CoresetTree,
    stats: BuildStats,
}

impl RangeIndex {
    /// Builds every structure over `points` (input units, `2 <= d <= 8`).
    pub fn build(points: &[Point], params: BuildParams) -> Result<RangeIndex> {
        let t0 = Instant::now();
        params.validate()?;
        let d = points.first().ok_or(Error::EmptyInput)?.dim();
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::Dimension(d));
        }
        let (normalizer, normalized) = Normalizer::fit(points)?;
        let weighted: Vec<WeightedPoint> = normalized.iter().map(|&p| WeightedPoint::unit(p)).collect();
        let qt = CompressedQuadtree::build(&weighted)?;
        let entry_points: Vec<Point> = qt.entries().iter().map(|e| e.point).collect();
        let entry_weights: Vec<f64> = qt.entries().iter().map(|e| e.weight).collect();
        let ranks = RankSpace::new(&entry_points);
        let rt = RangeTree::build(&entry_points, &entry_weights);
        let proj = ProjectionTables::build(&qt, &ranks);
        let extremes = AxisExtremes::build(&qt, &ranks);
        let coresets = if params.coreset_tree {
            CoresetTree::build(&qt, &rt, &params)
        } else {
            CoresetTree::empty()
        };
        let memory_bytes = qt.node_count() * std::mem::size_of::<crate::quadtree::Node>()
            + std::mem::size_of_val(qt.entries())
            + entry_points.len() * d * 12
            + rt.memory_bytes()
            + proj.memory_bytes()
            + extremes.memory_bytes()
            + coresets.memory_bytes();
        let stats = BuildStats {
            n: points.len(),
            distinct: qt.entries().len(),
            d,
            quadtree_nodes: qt.node_count(),
            quadtree_depth: qt.depth(),
            projection_insertions: proj.subsets().iter().map(|&s| proj.insertions(s)).sum(),
            extreme_insertions: extremes.insertions(),
            stored_coresets: coresets.stored(),
            memory_bytes,
            build_ms: t0.elapsed().as_millis() as u64,
        };
        log::debug!(
            "built index: n={} distinct={} d={} nodes={} depth={} in {} ms",
            stats.n,
            stats.distinct,
            d,
            stats.quadtree_nodes,
            stats.quadtree_depth,
            stats.build_ms
        );
        Ok(RangeIndex {
            params,
            normalizer,
            original: points.to_vec(),
            qt,
            ranks,
            rt,
            proj,
            extremes,
            coresets,
            stats,
        })
    }

    pub fn dim(&self) -> usize {
        self.stats.d
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Input points in input order and units.
    pub fn points(&self) -> &[Point] {
        &self.original
    }

    pub fn quadtree(&self) -> &CompressedQuadtree {
        &self.qt
    }

    pub fn ranks(&self) -> &RankSpace {
        &self.ranks
    }

    pub fn range_tree(&self) -> &RangeTree {
        &self.rt
    }

    pub fn projections(&self) -> &ProjectionTables {
        &self.proj
    }

    pub fn axis_extremes(&self) -> &AxisExtremes {
        &self.extremes
    }

    pub fn coreset_tree(&self) -> &CoresetTree {
        &self.coresets
    }

    /// Normalized location of a quadtree entry.
    #[inline]
    pub fn entry_point(&self, entry: u32) -> Point {
        self.qt.entry(entry).point
    }

    /// Maps an input-unit rectangle to normalized coordinates, checking its dimension.
    pub fn normalize_rect(&self, q: &Rect) -> Result<Rect> {
        if q.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: q.dim(),
            });
        }
        Ok(self.normalizer.rect_to_normalized(q))
    }

    /// Weight of points in the normalized box `q`.
    pub fn range_count(&self, q: &Rect) -> f64 {
        self.rt.count(q)
    }

    pub fn range_empty(&self, q: &Rect) -> bool {
        self.rt.is_empty_in(q)
    }

    /// Lowest Z-order entry in `q`.
    pub fn range_report_one(&self, q: &Rect) -> Option<u32> {
        self.rt.report_one(q)
    }

    /// Smallest box enclosing the points in `q`.
    pub fn range_extremes(&self, q: &Rect) -> Option<Rect> {
        self.rt.enclosing_box(q)
    }

    /// Classification of a node's cell against `q`.
    #[inline]
    pub fn classify_node(&self, node: NodeId, q: &Rect) -> Classification {
        classify_cell(&self.qt.node(node).cell, q)
    }

    /// Exact weight of `P ∩ q ∩ cell(node)`.
    pub fn cell_range_count(&self, node: NodeId, q: &Rect, meter: &Meter) -> f64 {
        let cls = self.classify_node(node, q);
        match cls.class {
            FaceClass::Outside => 0.0,
            FaceClass::Inside => self.qt.node(node).weight,
            FaceClass::Corner => {
                meter.add(1);
                let inner = self.qt.node(node).cell.inner_rect();
                q.intersection(&inner).map_or(0.0, |r| self.rt.count(&r))
            }
            FaceClass::AvoidsBelow(_) => {
                meter.add(1);
                self.proj.weight(&self.ranks, node, cls.free, q)
            }
        }
    }

    /// Lowest Z-order entry of `P ∩ q ∩ cell(node)`.
    pub fn cell_range_report_one(&self, node: NodeId, q: &Rect, meter: &Meter) -> Option<u32> {
        let cls = self.classify_node(node, q);
        match cls.class {
            FaceClass::Outside => None,
            FaceClass::Inside => Some(self.qt.node(node).start),
            FaceClass::Corner => {
                meter.add(1);
                let inner = self.qt.node(node).cell.inner_rect();
                q.intersection(&inner).and_then(|r| self.rt.report_one(&r))
            }
            FaceClass::AvoidsBelow(_) => {
                meter.add(1);
                self.proj.report_one(&self.ranks, node, cls.free, q)
            }
        }
    }

    pub fn cell_range_empty(&self, node: NodeId, q: &Rect, meter: &Meter) -> bool {
        self.cell_range_report_one(node, q, meter).is_none()
    }

    /// Emptiness test that reads a single stored facet point when the cell
    /// crosses exactly one facet of `q`; returns a point of `P ∩ q ∩ cell`.
    pub fn cell_probe_point(&self, node: NodeId, q: &Rect, meter: &Meter) -> Option<u32> {
        let cls = self.classify_node(node, q);
        if let FaceClass::AvoidsBelow(t) = cls.class {
            if t + 1 == self.dim() as u8 {
                let axis = (0..self.dim()).find(|&a| !cls.free.contains(a)).expect("one crossed axis");
                let cell = &self.qt.node(node).cell;
                let (lo, hi) = (cell.lo(axis), cell.hi(axis));
                let lo_cuts = q.lo()[axis] >= lo && q.lo()[axis] <= hi;
                let hi_cuts = q.hi()[axis] >= lo && q.hi()[axis] <= hi;
                if lo_cuts != hi_cuts {
                    meter.add(1);
                    let e = if lo_cuts { self.qt.facet_max(node, axis) } else { self.qt.facet_min(node, axis) };
                    return q.contains(&self.qt.entry(e).point).then_some(e);
                }
            }
        }
        self.cell_range_report_one(node, q, meter)
    }

    /// Converts a normalized weighted point list to input units.
    pub fn to_original(&self, p: &Point) -> Point {
        self.normalizer.to_original(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CellId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Point> {
        (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| (rng.random_range(0..40) as f64) * 0.25 - 3.0).collect();
                Point::new(&c)
            })
            .collect()
    }

    fn random_rect(rng: &mut ChaCha8Rng, d: usize) -> Rect {
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for a in 0..d {
            let x: f64 = rng.random_range(-0.1..1.1);
            let y: f64 = rng.random_range(-0.1..1.1);
            lo[a] = x.min(y);
            hi[a] = x.max(y);
        }
        Rect::new(&lo, &hi).unwrap()
    }

    fn params() -> BuildParams {
        BuildParams {
            coreset_tree: false,
            ..BuildParams::default()
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RangeIndex::build(&[], params()).is_err());
        assert!(RangeIndex::build(&[Point::new(&[1.0])], params()).is_err());
        let bad = BuildParams {
            k_max: 3,
            ..params()
        };
        assert!(RangeIndex::build(&[Point::new(&[1.0, 2.0])], bad).is_err());
    }

    #[test]
    fn cell_dispatch_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for d in 2..=4 {
            let pts = random_points(&mut rng, 400, d);
            let idx = RangeIndex::build(&pts, params()).unwrap();
            let qt = idx.quadtree();
            let meter = Meter::new();
            for _ in 0..300 {
                let q = random_rect(&mut rng, d);
                for v in 0..qt.node_count() as NodeId {
                    let want = qt.scan_weight(v, &q);
                    assert_eq!(idx.cell_range_count(v, &q, &meter), want);
                    let first = qt.slice(v).iter().position(|e| q.contains(&e.point)).map(|i| qt.node(v).start + i as u32);
                    assert_eq!(idx.cell_range_report_one(v, &q, &meter), first);
                    let probe = idx.cell_probe_point(v, &q, &meter);
                    assert_eq!(probe.is_some(), first.is_some());
                    if let Some(e) = probe {
                        assert!(q.contains(&qt.entry(e).point));
                        assert!(qt.node(v).cell.contains_key(&qt.entry(e).key));
                    }
                }
            }
        }
    }

    #[test]
    fn standard_cells_share_points_with_their_compressed_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let pts = random_points(&mut rng, 300, 2);
        let idx = RangeIndex::build(&pts, params()).unwrap();
        let qt = idx.quadtree();
        for _ in 0..2000 {
            let level = rng.random_range(0..8);
            let side = 1u64 << level;
            let c = [rng.random_range(0..side), rng.random_range(0..side)];
            let cell = CellId::new(level, &c).unwrap();
            let inside: Vec<u32> = (0..qt.entries().len() as u32)
                .filter(|&e| cell.contains_key(&qt.entry(e).key))
                .collect();
            match qt.compressed_cell(&cell) {
                None => assert!(inside.is_empty()),
                Some(v) => assert_eq!(inside, (qt.node(v).start..qt.node(v).end).collect::<Vec<_>>()),
            }
        }
    }
}
