//! k-center range queries: a grid lower bound on the optimal radius, then a
//! coreset of one point per nonempty cell of side about `eps * lb`.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::Result;
use crate::geometry::{CellId, Point, Rect, StandardLength, WeightedPoint, MAX_LEVEL};
use crate::index::{Meter, RangeIndex};
use crate::median::{check_query, ClusteringAnswer};
use crate::quadtree::NodeId;
use crate::solvers::{cost, gonzalez, gonzalez_indices, oracle_exact, Objective, SolverTag, ORACLE_MAX_K, ORACLE_MAX_POINTS};

/// A nonempty standard cell with its compressed node and, once read, one
/// point of the range inside it.
#[derive(Clone, Copy, Debug)]
pub struct CoverCell {
    pub cell: CellId,
    pub node: NodeId,
    pub rep: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct LowerBound {
    /// Lower bound on the optimal k-center radius (normalized units); zero
    /// when the range was resolved down to distinct locations.
    pub lb: f64,
    /// Pairwise interior-disjoint nonempty cells covering the range.
    pub cover: Vec<CoverCell>,
    /// Range points already read while computing the bound.
    pub known: Vec<u32>,
}

impl LowerBound {
    pub fn is_exact(&self) -> bool {
        self.lb == 0.0
    }
}

/// The k-center coreset with the lower bound it was built from.
#[derive(Clone, Debug)]
pub struct CenterCoreset {
    pub points: Vec<Point>,
    pub lb: f64,
    /// Every range point is within this distance of some coreset point.
    pub displacement: f64,
}

fn cluster_threshold(k: usize, d: usize) -> usize {
    k.saturating_mul(3usize.pow(d as u32))
}

/// A lower bound on twice the optimal k-center radius: the smallest pairwise
/// distance among `k + 1` of the points (two of them share a cluster).
/// Farthest-first picks, improved by single swaps that raise that distance.
fn separation(points: &[Point], k: usize) -> f64 {
    if points.len() <= k {
        return 0.0;
    }
    let wp: Vec<WeightedPoint> = points.iter().map(|&p| WeightedPoint::unit(p)).collect();
    let mut pick = gonzalez_indices(&wp, k + 1);
    if pick.len() <= k {
        return 0.0;
    }
    let min_gap = |pick: &[usize]| {
        let mut best = (f64::INFINITY, 0, 0);
        for (a, &i) in pick.iter().enumerate() {
            for (b, &j) in pick.iter().enumerate().skip(a + 1) {
                let g = points[i].dist2(&points[j]);
                if g < best.0 {
                    best = (g, a, b);
                }
            }
        }
        best
    };
    let mut cur = min_gap(&pick);
    for _ in 0..4 * (k + 1) {
        // Replace one endpoint of the closest pair by the point farthest from the rest.
        let (_, a, b) = cur;
        let mut improved = false;
        for slot in [a, b] {
            let rest: Vec<Point> = pick.iter().enumerate().filter(|&(t, _)| t != slot).map(|(_, &i)| points[i]).collect();
            let (far, _) = points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, p.dist_to_set(&rest)))
                .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
                .expect("nonempty");
            let mut next = pick.clone();
            next[slot] = far;
            let g = min_gap(&next);
            if g.0 > cur.0 {
                pick = next;
                cur = g;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    cur.0.sqrt()
}

impl RangeIndex {
    /// Nonempty children at `level` of the given cells, clipped to `q`.
    /// Cells inside `q` are known nonempty without a read; `read_inside`
    /// fetches their point anyway.
    fn refine_cells(&self, cells: &[CoverCell], level: u32, q: &Rect, read_inside: bool, meter: &Meter) -> Vec<CoverCell> {
        let mut buf = Vec::new();
        let mut out = Vec::new();
        for c in cells {
            buf.clear();
            self.quadtree().subdivide(c.cell, c.node, level, Some(q), &mut buf);
            for &(cell, node) in &buf {
                if !read_inside && self.node_inside(node, q) {
                    out.push(CoverCell { cell, node, rep: None });
                } else if let Some(rep) = self.probe_for_rep(node, q, meter) {
                    out.push(CoverCell { cell, node, rep: Some(rep) });
                }
            }
        }
        out
    }

    fn node_inside(&self, node: NodeId, q: &Rect) -> bool {
        q.contains_rect(&self.quadtree().node(node).cell.rect())
    }

    /// The cell's point, reading it if not yet known.
    fn read_rep(&self, c: &CoverCell, meter: &Meter) -> u32 {
        c.rep.unwrap_or_else(|| {
            meter.add(1);
            self.quadtree().node(c.node).start
        })
    }

    fn rep_of(&self, c: &CoverCell, meter: &Meter) -> Point {
        self.entry_point(self.read_rep(c, meter))
    }

    /// A point of `P ∩ q ∩ cell(node)`, charging one access.
    pub(crate) fn probe_for_rep(&self, node: NodeId, q: &Rect, meter: &Meter) -> Option<u32> {
        if self.node_inside(node, q) {
            meter.add(1);
            return Some(self.quadtree().node(node).start);
        }
        self.cell_probe_point(node, q, meter)
    }

    /// Descends the grid levels until more than `k 3^d` cells of the range
    /// are nonempty. `q` is normalized.
    pub fn kcenter_lower_bound(&self, q: &Rect, k: usize, meter: &Meter) -> Option<LowerBound> {
        let qt = self.quadtree();
        let root = qt.root();
        let rep = if self.node_inside(root, q) { None } else { Some(self.cell_probe_point(root, q, meter)?) };
        let mut cur = vec![CoverCell { cell: CellId::root(self.dim()), node: root, rep }];
        let limit = cluster_threshold(k, self.dim());
        for level in 1..=MAX_LEVEL {
            let next = self.refine_cells(&cur, level, q, false, meter);
            if next.len() > limit {
                let grid_lb = StandardLength::new(level).value();
                let known: Vec<u32> = next.iter().map(|c| self.read_rep(c, meter)).collect();
                let reps: Vec<Point> = known.iter().map(|&e| self.entry_point(e)).collect();
                let lb = grid_lb.max(separation(&reps, k) / 2.0);
                return Some(LowerBound { lb, cover: cur, known });
            }
            cur = next;
        }
        // Leaf cells hold one location each: the range is resolved exactly.
        Some(LowerBound { lb: 0.0, cover: cur, known: Vec::new() })
    }

    /// One range point per nonempty cell of side `sfloor(eps * lb)` inside
    /// the cover. `q` is normalized.
    pub fn kcenter_coreset(&self, q: &Rect, k: usize, eps: f64, meter: &Meter) -> Option<CenterCoreset> {
        let lbr = self.kcenter_lower_bound(q, k, meter)?;
        if lbr.is_exact() {
            let points = lbr.cover.iter().map(|c| self.rep_of(c, meter)).collect();
            return Some(CenterCoreset { points, lb: 0.0, displacement: 0.0 });
        }
        let side = StandardLength::sfloor(eps * lbr.lb).expect("positive").clamp_to_leaf();
        // Cells inside q reuse a point read for the bound when one falls in them.
        let mut cells = self.refine_cells(&lbr.cover, side.exponent(), q, false, meter);
        let seen: HashMap<CellId, u32> = lbr
            .known
            .iter()
            .rev()
            .map(|&e| (CellId::of_point(&self.entry_point(e), side), e))
            .collect();
        for c in cells.iter_mut().filter(|c| c.rep.is_none()) {
            c.rep = seen.get(&c.cell).copied();
        }
        let points = cells.iter().map(|c| self.rep_of(c, meter)).collect();
        let displacement = (self.dim() as f64).sqrt() * side.value();
        Some(CenterCoreset { points, lb: lbr.lb, displacement })
    }

    /// k-center answer for the points in `q` (input units).
    pub fn kcenter_query(&self, q: &Rect, k: usize, eps: f64) -> Result<ClusteringAnswer> {
        let t0 = Instant::now();
        check_query(k, eps, self.len())?;
        let qn = self.normalize_rect(q)?;
        let meter = Meter::new();
        meter.add(1);
        let range_weight = self.range_count(&qn);
        let mut ans = ClusteringAnswer {
            kind: Objective::Center,
            k,
            eps,
            centers: Vec::new(),
            cost: 0.0,
            solver: SolverTag::Trivial,
            range_weight,
            coreset_size: 0,
            point_accesses: 0,
            inflation: 0.0,
            wall_ms: 0.0,
        };
        if let Some(s) = self.kcenter_coreset(&qn, k, eps, &meter) {
            let (centers, tag) = solve_center(&s.points, k);
            let wp: Vec<WeightedPoint> = s.points.iter().map(|&p| WeightedPoint::unit(p)).collect();
            let scale = self.normalizer().scale();
            ans.cost = Objective::Center.cost_to_original(cost(&wp, &centers, Objective::Center), scale);
            ans.centers = centers.iter().map(|c| self.to_original(c)).collect();
            ans.solver = tag;
            ans.coreset_size = s.points.len();
            ans.inflation = self.normalizer().length_to_original(s.displacement);
        }
        ans.point_accesses = meter.get();
        ans.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        Ok(ans)
    }
}

/// Exact solver on small inputs, farthest-first otherwise.
fn solve_center(points: &[Point], k: usize) -> (Vec<Point>, SolverTag) {
    let wp: Vec<WeightedPoint> = points.iter().map(|&p| WeightedPoint::unit(p)).collect();
    let mut distinct = points.to_vec();
    distinct.sort_by(|a, b| a.lex_cmp(b));
    distinct.dedup();
    if distinct.len() <= k {
        return (distinct, SolverTag::Trivial);
    }
    if points.len() <= ORACLE_MAX_POINTS && k <= ORACLE_MAX_K {
        let (_, c) = oracle_exact(&wp, k, Objective::Center).expect("within oracle limits");
        return (c, SolverTag::Exhaustive);
    }
    (gonzalez(&wp, k), SolverTag::Gonzalez)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::BuildParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn build(points: &[Point]) -> RangeIndex {
        RangeIndex::build(points, BuildParams { coreset_tree: false, ..BuildParams::default() }).unwrap()
    }

    #[test]
    fn few_points_are_answered_exactly() {
        let pts: Vec<Point> = [[0.0, 0.0], [5.0, 1.0], [5.0, 1.0], [2.0, 7.0]].iter().map(|c| Point::new(c)).collect();
        let idx = build(&pts);
        let q = Rect::new(&[-1.0, -1.0], &[10.0, 10.0]).unwrap();
        let ans = idx.kcenter_query(&q, 3, 0.1).unwrap();
        assert_eq!(ans.cost, 0.0);
        assert_eq!(ans.centers.len(), 3);
        let empty = Rect::new(&[20.0, 20.0], &[30.0, 30.0]).unwrap();
        let ans = idx.kcenter_query(&empty, 1, 0.1).unwrap();
        assert!(ans.centers.is_empty());
    }

    #[test]
    fn square_corners_with_two_centers() {
        let pts: Vec<Point> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]].iter().map(|c| Point::new(c)).collect();
        let idx = build(&pts);
        let q = Rect::new(&[-0.5, -0.5], &[1.5, 1.5]).unwrap();
        let eps = 1e-3;
        let ans = idx.kcenter_query(&q, 2, eps).unwrap();
        assert_eq!(ans.solver, SolverTag::Exhaustive);
        assert!(ans.cost >= 0.5 - 1e-9 && ans.cost <= 0.5 * (1.0 + 2.0 * 2f64.sqrt() * eps) + 1e-9);
    }

    #[test]
    fn coreset_covers_the_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let pts: Vec<Point> = (0..2000).map(|_| Point::new(&[rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])).collect();
        let idx = build(&pts);
        for _ in 0..30 {
            let lo = [rng.random_range(0.0..0.7), rng.random_range(0.0..0.7)];
            let q = Rect::new(&lo, &[lo[0] + 0.3, lo[1] + 0.3]).unwrap();
            let qn = idx.normalize_rect(&q).unwrap();
            let k = rng.random_range(1..5);
            let meter = Meter::new();
            let s = idx.kcenter_coreset(&qn, k, 0.2, &meter).unwrap();
            let inside: Vec<Point> = idx.quadtree().entries().iter().map(|e| e.point).filter(|p| qn.contains(p)).collect();
            assert!(s.points.iter().all(|p| qn.contains(p)));
            assert!(s.displacement <= 2f64.sqrt() * 0.2 * s.lb + 1e-15);
            for p in &inside {
                assert!(p.dist_to_set(&s.points) <= s.displacement + 1e-12);
            }
        }
    }
}
