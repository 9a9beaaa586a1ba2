//! Coresets for k-median and k-means from approximate centers, and the
//! range query pipeline built on them.
//!
//! The same coreset engine runs against two backends: the range index
//! restricted to a query box, and an explicit weighted point list (used for
//! preprocessing and for shrinking intermediate coresets).

use std::collections::BTreeMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{CellId, Point, Rect, StandardLength, WeightedPoint, MAX_LEVEL};
use crate::index::{Meter, RangeIndex};
use crate::persistent::RankSpace;
use crate::quadtree::{CompressedQuadtree, NodeId};
use crate::solvers::{self, gonzalez, local_search, LocalSearchOptions, Objective, SolverOptions, SolverTag};

/// Access to a (possibly range-restricted) weighted point set through a
/// compressed quadtree. All coordinates are normalized.
pub trait PointAccess {
    fn tree(&self) -> &CompressedQuadtree;
    /// Rank orders over the tree's entries.
    fn ranks(&self) -> &RankSpace;
    /// The query box, if the set is range-restricted.
    fn clip(&self) -> Option<&Rect>;
    /// Total weight of the accessible points.
    fn total_weight(&self) -> f64;
    /// Weight of the accessible points in `node`'s cell.
    fn weight_in(&self, node: NodeId) -> f64;
    /// Lowest Z-order accessible entry in `node`'s cell.
    fn report_in(&self, node: NodeId) -> Option<u32>;

    fn dim(&self) -> usize {
        self.tree().dim()
    }

    fn entry_point(&self, entry: u32) -> Point {
        self.tree().entry(entry).point
    }
}

/// An explicit weighted point list; every point is accessible.
pub struct ExplicitAccess {
    tree: CompressedQuadtree,
    ranks: RankSpace,
}

impl ExplicitAccess {
    pub fn new(points: &[WeightedPoint]) -> Result<ExplicitAccess> {
        let tree = CompressedQuadtree::build(points)?;
        let pts: Vec<Point> = tree.entries().iter().map(|e| e.point).collect();
        let ranks = RankSpace::new(&pts);
        Ok(ExplicitAccess { tree, ranks })
    }
}

impl PointAccess for ExplicitAccess {
    fn tree(&self) -> &CompressedQuadtree {
        &self.tree
    }

    fn ranks(&self) -> &RankSpace {
        &self.ranks
    }

    fn clip(&self) -> Option<&Rect> {
        None
    }

    fn total_weight(&self) -> f64 {
        self.tree.total_weight()
    }

    fn weight_in(&self, node: NodeId) -> f64 {
        self.tree.node(node).weight
    }

    fn report_in(&self, node: NodeId) -> Option<u32> {
        Some(self.tree.node(node).start)
    }
}

/// The range index restricted to a normalized query box.
pub struct IndexAccess<'a> {
    index: &'a RangeIndex,
    q: Rect,
    total: f64,
    meter: &'a Meter,
}

impl<'a> IndexAccess<'a> {
    pub fn new(index: &'a RangeIndex, q: Rect, meter: &'a Meter) -> IndexAccess<'a> {
        meter.add(1);
        let total = index.range_count(&q);
        IndexAccess { index, q, total, meter }
    }
}

impl PointAccess for IndexAccess<'_> {
    fn tree(&self) -> &CompressedQuadtree {
        self.index.quadtree()
    }

    fn ranks(&self) -> &RankSpace {
        self.index.ranks()
    }

    fn clip(&self) -> Option<&Rect> {
        Some(&self.q)
    }

    fn total_weight(&self) -> f64 {
        self.total
    }

    fn weight_in(&self, node: NodeId) -> f64 {
        self.index.cell_range_count(node, &self.q, self.meter)
    }

    fn report_in(&self, node: NodeId) -> Option<u32> {
        self.index.cell_range_report_one(node, &self.q, self.meter)
    }
}

/// Approximate centers with the approximation factor claimed for them.
#[derive(Clone, Debug)]
pub struct ApproxCenters {
    pub centers: Vec<Point>,
    pub c1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    FromCenters,
    Canonical,
    Smaller,
}

#[derive(Clone, Debug)]
pub struct Coreset {
    pub members: Vec<WeightedPoint>,
    pub kind: Objective,
    pub k: usize,
    pub eps: f64,
    pub provenance: Provenance,
    pub total_weight: f64,
}

impl Coreset {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Outcome of a coverage probe at one standard length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Every point is within `2 sqrt(d) alpha` of a center.
    Covered,
    /// Some point is farther than `alpha` from every center.
    Uncovered,
}

fn same_weight(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Decides coverage by summing exact counts over the union of the grid
/// clusters of side `alpha` around the centers.
pub fn coverage_probe<A: PointAccess + ?Sized>(pa: &A, centers: &[Point], alpha: StandardLength) -> Coverage {
    let alpha = alpha.clamp_to_leaf();
    let mut cells: Vec<CellId> = centers
        .iter()
        .flat_map(|a| CellId::of_point(a, alpha).grid_cluster())
        .collect();
    cells.sort_by(|a, b| a.z_cmp(b));
    cells.dedup();
    let tree = pa.tree();
    let mut w = 0.0;
    for c in &cells {
        if let Some(v) = tree.compressed_cell(c) {
            w += pa.weight_in(v);
        }
    }
    if same_weight(w, pa.total_weight()) {
        Coverage::Covered
    } else {
        Coverage::Uncovered
    }
}

/// True when every accessible point shares its leaf cell with a center.
fn zero_radius<A: PointAccess + ?Sized>(pa: &A, centers: &[Point]) -> bool {
    let mut cells: Vec<CellId> = centers
        .iter()
        .map(|a| CellId::of_point(a, StandardLength::new(MAX_LEVEL)))
        .collect();
    cells.sort_by(|a, b| a.z_cmp(b));
    cells.dedup();
    let w: f64 = cells
        .iter()
        .filter_map(|c| pa.tree().compressed_cell(c))
        .map(|v| pa.weight_in(v))
        .sum();
    same_weight(w, pa.total_weight())
}

/// One sorted run of standard lengths `sfloor(|x_axis - center_axis|)` over
/// the points on one side of a center; positions `lo..hi` remain.
struct SearchSpace {
    axis: usize,
    center: f64,
    up: bool,
    base: u32,
    lo: u32,
    hi: u32,
}

impl SearchSpace {
    fn value(&self, ranks: &RankSpace, t: u32) -> StandardLength {
        let x = if self.up {
            ranks.coord_at(self.axis, self.base + t) - self.center
        } else {
            self.center - ranks.coord_at(self.axis, self.base - 1 - t)
        };
        StandardLength::sfloor(x).expect("positive difference").clamp_to_leaf()
    }

    /// First position in `lo..hi` whose value is at least (or, with
    /// `strict`, greater than) `alpha`.
    fn split(&self, ranks: &RankSpace, alpha: StandardLength, strict: bool) -> u32 {
        let (mut a, mut b) = (self.lo, self.hi);
        while a < b {
            let m = a + (b - a) / 2;
            let v = self.value(ranks, m);
            let right = if strict { v > alpha } else { v >= alpha };
            if right {
                b = m;
            } else {
                a = m + 1;
            }
        }
        a
    }
}

/// A standard length `alpha` with `r*/(2 sqrt d) <= alpha <= 2 r*`, where
/// `r*` is the largest distance from an accessible point to the centers;
/// `None` when `r* = 0`.
pub fn approx_max_distance<A: PointAccess + ?Sized>(pa: &A, centers: &[Point]) -> Option<StandardLength> {
    assert!(!centers.is_empty(), "no centers");
    if pa.total_weight() <= 0.0 || zero_radius(pa, centers) {
        return None;
    }
    let ranks = pa.ranks();
    let n = ranks.len() as u32;
    let d = pa.dim();
    let mut spaces = Vec::with_capacity(centers.len() * d * 2);
    for a in centers {
        for axis in 0..d {
            let c = a[axis];
            // Ranks strictly below and strictly above the center coordinate.
            let below = ranks.window(axis, c, c).0;
            let above = ranks.window(axis, f64::NEG_INFINITY, c).1;
            if above < n {
                spaces.push(SearchSpace { axis, center: c, up: true, base: above, lo: 0, hi: n - above });
            }
            if below > 0 {
                spaces.push(SearchSpace { axis, center: c, up: false, base: below, lo: 0, hi: below });
            }
        }
    }
    let mut upper = StandardLength::ONE;
    let mut lower: Option<StandardLength> = None;
    loop {
        let mut medians: Vec<(StandardLength, u64)> = spaces
            .iter()
            .filter(|s| s.lo < s.hi)
            .map(|s| (s.value(ranks, s.lo + (s.hi - s.lo) / 2), (s.hi - s.lo) as u64))
            .collect();
        if medians.is_empty() {
            break;
        }
        medians.sort_by_key(|a| a.0);
        let total: u64 = medians.iter().map(|m| m.1).sum();
        let mut acc = 0;
        let mut alpha = medians[0].0;
        for &(v, w) in &medians {
            acc += w;
            if 2 * acc >= total {
                alpha = v;
                break;
            }
        }
        match coverage_probe(pa, centers, alpha) {
            Coverage::Covered => {
                upper = upper.min(alpha);
                for s in spaces.iter_mut().filter(|s| s.lo < s.hi) {
                    s.hi = s.split(ranks, alpha, false);
                }
            }
            Coverage::Uncovered => {
                lower = Some(lower.map_or(alpha, |l| l.max(alpha)));
                for s in spaces.iter_mut().filter(|s| s.lo < s.hi) {
                    s.lo = s.split(ranks, alpha, true);
                }
            }
        }
    }
    // Tighten from above so that half the answer is certified uncovered.
    while upper.exponent() < MAX_LEVEL && lower.is_none_or(|l| upper.half() > l) {
        if coverage_probe(pa, centers, upper.half()) == Coverage::Covered {
            upper = upper.half();
        } else {
            break;
        }
    }
    Some(upper)
}

/// The base radius `R`: the approximate maximum distance scaled by
/// `c1 |P_Q|` (median) or its square root (means). Zero when every point
/// sits on a center.
pub fn approx_radius<A: PointAccess + ?Sized>(pa: &A, a: &ApproxCenters, kind: Objective) -> f64 {
    match approx_max_distance(pa, &a.centers) {
        None => 0.0,
        Some(alpha) => {
            let w = pa.total_weight();
            match kind {
                Objective::Means => alpha.value() / (a.c1 * w).sqrt(),
                _ => alpha.value() / (a.c1 * w),
            }
        }
    }
}

/// Side lengths of the exponential grid levels.
#[derive(Clone, Debug)]
pub struct UnifiedGrid {
    pub radius: f64,
    /// Anchor side of each level, strictly doubling, ending at the root or level M.
    pub anchor: Vec<StandardLength>,
    /// Second-level side of each level.
    pub fine: Vec<StandardLength>,
}

impl UnifiedGrid {
    pub fn new(radius: f64, c1: f64, total_weight: f64, eps: f64, d: usize) -> UnifiedGrid {
        assert!(radius > 0.0);
        let m = (2.0 * (2.0 * (d as f64).sqrt() * c1 * total_weight.max(1.0)).log2()).ceil().max(0.0) as i64;
        let leaf = StandardLength::new(MAX_LEVEL);
        let mut anchor: Vec<StandardLength> = Vec::new();
        for j in 0..=m {
            let x = radius * (j as f64).exp2();
            let s = if x >= 1.0 {
                StandardLength::ONE
            } else {
                StandardLength::sceil(x).map_or(leaf, |s| s.max(leaf))
            };
            if anchor.last() != Some(&s) {
                anchor.push(s);
            }
            if s == StandardLength::ONE {
                break;
            }
        }
        let denom = 40.0 * c1 * d as f64;
        let fine = anchor
            .iter()
            .map(|r| {
                let x = eps * r.value() / denom;
                let f = if x >= 1.0 {
                    StandardLength::ONE
                } else {
                    StandardLength::sceil(x).map_or(leaf, |s| s.max(leaf))
                };
                // Never coarser than the first-level cells.
                if r.exponent() < MAX_LEVEL {
                    f.min(r.half())
                } else {
                    f
                }
            })
            .collect();
        UnifiedGrid { radius, anchor, fine }
    }

    pub fn levels(&self) -> usize {
        self.anchor.len()
    }
}

/// A second-level cell with its compressed node and grid level.
#[derive(Clone, Copy, Debug)]
pub struct GridCell {
    pub cell: CellId,
    pub node: NodeId,
    pub level: usize,
}

/// The pruned, pairwise interior-disjoint second-level cells whose union
/// holds every accessible point.
pub fn collect_second_level_cells<A: PointAccess + ?Sized>(pa: &A, centers: &[Point], grid: &UnifiedGrid) -> Vec<GridCell> {
    let tree = pa.tree();
    let clip = pa.clip();
    // First-level candidates: (first-level cell, node, grid level).
    let mut cand: Vec<(CellId, NodeId, usize)> = Vec::new();
    for a in centers {
        let mut prev: Vec<CellId> = Vec::new();
        for (j, &side) in grid.anchor.iter().enumerate() {
            let cluster = CellId::of_point(a, side).grid_cluster();
            for c in &cluster {
                let Some(v) = tree.compressed_cell(c) else { continue };
                if side.exponent() >= MAX_LEVEL {
                    // Leaf-level anchors cannot split further.
                    if j == 0 && clip.is_none_or(|q| q.intersects(&c.rect())) {
                        cand.push((*c, v, j));
                    }
                    continue;
                }
                for child in c.children() {
                    if j > 0 && prev.iter().any(|p| p.contains(&child)) {
                        continue;
                    }
                    if clip.is_some_and(|q| !q.intersects(&child.rect())) {
                        continue;
                    }
                    if let Some(u) = tree.compressed_cell(&child) {
                        cand.push((child, u, j));
                    }
                }
            }
            prev = cluster;
        }
    }
    // Smallest cells first; drop any compressed cell containing an earlier one.
    cand.sort_by(|a, b| b.0.level().cmp(&a.0.level()).then_with(|| a.0.z_cmp(&b.0)).then(a.2.cmp(&b.2)));
    let mut taken: BTreeMap<u32, u32> = BTreeMap::new();
    let mut kept = Vec::new();
    for (cell, node, j) in cand {
        let n = tree.node(node);
        if taken.range(n.start..n.end).next().is_some() {
            continue;
        }
        taken.insert(n.start, n.end);
        kept.push((cell, node, j));
    }
    let mut out = Vec::new();
    let mut buf = Vec::new();
    for (cell, node, j) in kept {
        buf.clear();
        tree.subdivide(cell, node, grid.fine[j].exponent(), clip, &mut buf);
        out.extend(buf.iter().map(|&(c, v)| GridCell { cell: c, node: v, level: j }));
    }
    out
}

/// Builds a `(k, eps)`-coreset of the accessible points from approximate
/// centers. With `limit`, gives up (returns `None`) once more than `limit`
/// representatives are produced.
pub fn coreset_from_centers<A: PointAccess + ?Sized>(
    pa: &A,
    a: &ApproxCenters,
    k: usize,
    eps: f64,
    kind: Objective,
    limit: Option<usize>,
) -> Option<Coreset> {
    assert!(k >= 1 && eps > 0.0);
    let total = pa.total_weight();
    let mut members = Vec::new();
    let finish = |members: Vec<WeightedPoint>| Coreset {
        members,
        kind,
        k,
        eps,
        provenance: Provenance::FromCenters,
        total_weight: total,
    };
    if total <= 0.0 {
        return Some(finish(members));
    }
    let radius = approx_radius(pa, a, kind);
    let cells = if radius == 0.0 {
        // Every point sits in a center's leaf cell.
        let mut leaves: Vec<CellId> = a
            .centers
            .iter()
            .map(|c| CellId::of_point(c, StandardLength::new(MAX_LEVEL)))
            .collect();
        leaves.sort_by(|x, y| x.z_cmp(y));
        leaves.dedup();
        leaves
            .into_iter()
            .filter_map(|c| pa.tree().compressed_cell(&c).map(|v| GridCell { cell: c, node: v, level: 0 }))
            .collect()
    } else {
        let grid = UnifiedGrid::new(radius, a.c1, total, eps, pa.dim());
        collect_second_level_cells(pa, &a.centers, &grid)
    };
    let mut charged = 0.0;
    for gc in &cells {
        let w = pa.weight_in(gc.node);
        if w <= 0.0 {
            continue;
        }
        let e = pa.report_in(gc.node).expect("nonempty cell has a point");
        members.push(WeightedPoint::new(pa.entry_point(e), w));
        charged += w;
        if limit.is_some_and(|l| members.len() > l) {
            return None;
        }
    }
    if !same_weight(charged, total) {
        log::warn!("grid charged weight {charged} of {total}; falling back to raw points");
        members = raw_points(pa);
        if limit.is_some_and(|l| members.len() > l) {
            return None;
        }
    }
    Some(finish(members))
}

/// Every accessible distinct location with its weight, in Z-order.
pub fn raw_points<A: PointAccess + ?Sized>(pa: &A) -> Vec<WeightedPoint> {
    let tree = pa.tree();
    let mut out = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(v) = stack.pop() {
        let n = tree.node(v);
        if n.is_leaf() {
            let w = pa.weight_in(v);
            if w > 0.0 {
                out.push(WeightedPoint::new(tree.entry(n.start).point, w));
            }
            continue;
        }
        if let Some(q) = pa.clip() {
            if !q.intersects(&n.cell.rect()) {
                continue;
            }
        }
        stack.extend(tree.children(v).iter().rev());
    }
    out
}

/// Options for the query pipeline.
#[derive(Clone, Debug)]
pub struct QueryOptions {
    pub c1: f64,
    pub solver: SolverOptions,
}

impl QueryOptions {
    pub fn from_index(index: &RangeIndex) -> QueryOptions {
        let p = index.params();
        QueryOptions {
            c1: p.c1,
            solver: SolverOptions {
                local_search: LocalSearchOptions {
                    swap_width: p.swap_width,
                    tol: p.tol,
                    ..LocalSearchOptions::default()
                },
                ..SolverOptions::default()
            },
        }
    }
}

/// At most `k` centers that are a constant-factor solution for `s`:
/// farthest-first seeding followed by swap local search.
pub fn bootstrap_centers(s: &[WeightedPoint], k: usize, kind: Objective, opts: &LocalSearchOptions) -> Vec<Point> {
    let seed = gonzalez(s, k);
    local_search(s, k, kind, &seed, opts).centers
}

/// Shrinks a weighted coreset: farthest-first centers on `s` (a `2W`
/// or `4W` approximation for total weight `W`), then a coreset of `s` from
/// them.
pub fn smaller_coreset(s: &Coreset, k: usize, eps: f64) -> Result<(Coreset, ApproxCenters)> {
    if s.is_empty() {
        return Err(Error::EmptyInput);
    }
    let w: f64 = s.members.iter().map(|m| m.weight).sum();
    let c1 = match s.kind {
        Objective::Means => 4.0 * w,
        _ => 2.0 * w,
    };
    let a = ApproxCenters { centers: gonzalez(&s.members, k), c1 };
    let pa = ExplicitAccess::new(&s.members)?;
    let mut c = coreset_from_centers(&pa, &a, k, eps, s.kind, None).expect("no limit");
    c.provenance = Provenance::Smaller;
    Ok((c, a))
}

/// Accuracy of the intermediate coreset used only to find approximate centers.
pub const BOOTSTRAP_EPS: f64 = 2.0;

/// Result of a clustering query, in input units.
#[derive(Clone, Debug)]
pub struct ClusteringAnswer {
    pub kind: Objective,
    pub k: usize,
    pub eps: f64,
    pub centers: Vec<Point>,
    pub cost: f64,
    pub solver: SolverTag,
    /// Weight of the points in the range.
    pub range_weight: f64,
    pub coreset_size: usize,
    pub point_accesses: u64,
    /// Additive slack of the k-center answer (input units), zero otherwise.
    pub inflation: f64,
    pub wall_ms: f64,
}

impl RangeIndex {
    /// `(1 + eps)`-style k-median or k-means answer for the points in `q` (input units).
    pub fn cluster_query(&self, q: &Rect, k: usize, eps: f64, kind: Objective) -> Result<ClusteringAnswer> {
        self.cluster_query_with(q, k, eps, kind, &QueryOptions::from_index(self))
    }

    pub fn kmedian_query(&self, q: &Rect, k: usize, eps: f64) -> Result<ClusteringAnswer> {
        self.cluster_query(q, k, eps, Objective::Median)
    }

    pub fn kmeans_query(&self, q: &Rect, k: usize, eps: f64) -> Result<ClusteringAnswer> {
        self.cluster_query(q, k, eps, Objective::Means)
    }

    /// A `(k, eps)`-coreset of the points in the access's range, with the
    /// approximate centers it was built from; `None` for an empty range.
    pub fn query_coreset(
        &self,
        pa: &IndexAccess<'_>,
        k: usize,
        eps: f64,
        kind: Objective,
        opts: &QueryOptions,
        meter: &Meter,
    ) -> Result<Option<(Coreset, ApproxCenters)>> {
        if pa.total_weight() <= 0.0 {
            return Ok(None);
        }
        let s = self.canonical_coreset(&pa.q, k, kind, meter);
        let (s, _) = smaller_coreset(&s, k, BOOTSTRAP_EPS)?;
        let centers = bootstrap_centers(&s.members, k, kind, &opts.solver.local_search);
        let a = ApproxCenters { centers, c1: opts.c1 };
        let c = coreset_from_centers(pa, &a, k, eps, kind, None).expect("no limit");
        Ok(Some((c, a)))
    }

    pub fn cluster_query_with(&self, q: &Rect, k: usize, eps: f64, kind: Objective, opts: &QueryOptions) -> Result<ClusteringAnswer> {
        let t0 = Instant::now();
        if kind == Objective::Center {
            return self.kcenter_query(q, k, eps);
        }
        check_query(k, eps, self.len())?;
        let qn = self.normalize_rect(q)?;
        let meter = Meter::new();
        let pa = IndexAccess::new(self, qn, &meter);
        let mut ans = ClusteringAnswer {
            kind,
            k,
            eps,
            centers: Vec::new(),
            cost: 0.0,
            solver: SolverTag::Trivial,
            range_weight: pa.total_weight(),
            coreset_size: 0,
            point_accesses: 0,
            inflation: 0.0,
            wall_ms: 0.0,
        };
        if let Some((fin, a)) = self.query_coreset(&pa, k, eps / 3.0, kind, opts, &meter)? {
            let (centers, cost, tag) = solvers::solve_seeded(&fin.members, k, kind, &a.centers, &opts.solver);
            ans.centers = centers.iter().map(|c| self.to_original(c)).collect();
            ans.cost = kind.cost_to_original(cost, self.normalizer().scale());
            ans.solver = tag;
            ans.coreset_size = fin.len();
        }
        ans.point_accesses = meter.get();
        ans.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        Ok(ans)
    }
}

pub(crate) fn check_query(k: usize, eps: f64, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={n}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    Ok(())
}
