//! Approximate diameter and enclosing-ball radius of the points in a range.
//!
//! The coreset keeps one point per nonempty grid cell along the boundary of
//! the range's bounding box, plus, for every interior grid column along each
//! axis, the two points extreme along that axis.

use std::time::Instant;

use crate::error::Result;
use crate::geometry::{AxisSet, CellId, Point, Rect, StandardLength, MAX_DIM};
use crate::index::{Meter, RangeIndex};
use crate::solvers::seb;

#[derive(Clone, Debug)]
pub struct ExtentCoreset {
    /// Distinct range points.
    pub points: Vec<Point>,
    /// Diagonal of the range's bounding box; within `sqrt(d)` of the diameter.
    pub apx: f64,
    /// Grid side; zero when the range is a single location.
    pub grid_side: f64,
}

#[derive(Clone, Debug)]
pub struct ExtentAnswer {
    pub value: f64,
    /// Ball center for radius queries.
    pub center: Option<Point>,
    pub range_weight: f64,
    pub coreset_size: usize,
    pub point_accesses: u64,
    pub wall_ms: f64,
}

/// Largest `x' < x`, so that closed windows stop short of a grid line.
fn below(x: f64) -> f64 {
    if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else {
        x
    }
}

impl RangeIndex {
    /// Grid side used by extent queries for bounding-box diagonal `apx`.
    pub fn extent_grid_side(&self, apx: f64, eps: f64) -> StandardLength {
        let e = eps.min(1.0) / (4.0 * self.dim() as f64);
        StandardLength::sfloor(e * apx).expect("positive").clamp_to_leaf()
    }

    /// The extent coreset of the normalized box `q`; `None` for an empty range.
    pub fn extent_coreset(&self, q: &Rect, eps: f64, meter: &Meter) -> Option<ExtentCoreset> {
        let d = self.dim();
        meter.add(2 * d as u64);
        let meb = self.range_extremes(q)?;
        let apx = meb.diagonal();
        if apx == 0.0 {
            let p = *meb.lo();
            return Some(ExtentCoreset { points: vec![p], apx, grid_side: 0.0 });
        }
        let side = self.extent_grid_side(apx, eps);
        let g = side.value();
        let level = side.exponent();
        // Interior cells: index range [first, last] per axis, fully inside the box.
        let mut first = [0u64; MAX_DIM];
        let mut last = [0i64; MAX_DIM];
        let mut has_interior = true;
        for i in 0..d {
            first[i] = (meb.lo()[i] / g).ceil() as u64;
            last[i] = (meb.hi()[i] / g).floor() as i64 - 1;
            has_interior &= last[i] >= first[i] as i64;
        }
        // The points attaining the bounding box are always kept.
        let (mins, maxs) = self.range_tree().extremes(q).expect("nonempty range");
        let mut points: Vec<Point> = mins[..d].iter().chain(&maxs[..d]).map(|&e| self.entry_point(e)).collect();
        let qt = self.quadtree();
        let root = CellId::root(d);
        // Boundary slabs.
        let mut slabs = Vec::new();
        if has_interior {
            for i in 0..d {
                let inner_lo = first[i] as f64 * g;
                let inner_hi = (last[i] + 1) as f64 * g;
                if meb.lo()[i] < inner_lo {
                    let mut hi = *meb.hi();
                    hi.coords_mut()[i] = below(inner_lo);
                    slabs.push(Rect::from_corners(*meb.lo(), hi).expect("ordered"));
                }
                if meb.hi()[i] >= inner_hi {
                    let mut lo = *meb.lo();
                    lo.coords_mut()[i] = inner_hi;
                    slabs.push(Rect::from_corners(lo, *meb.hi()).expect("ordered"));
                }
            }
        } else {
            slabs.push(meb);
        }
        let mut cells = Vec::new();
        for s in &slabs {
            qt.subdivide(root, qt.root(), level, Some(s), &mut cells);
        }
        cells.sort_by(|a, b| a.0.z_cmp(&b.0));
        cells.dedup_by(|a, b| a.0 == b.0);
        for &(_, node) in &cells {
            if let Some(e) = self.probe_for_rep(node, &meb, meter) {
                points.push(self.entry_point(e));
            }
        }
        // Interior columns along each axis.
        if has_interior {
            let mut lo = [0.0; MAX_DIM];
            let mut hi = [0.0; MAX_DIM];
            for i in 0..d {
                lo[i] = first[i] as f64 * g;
                hi[i] = below((last[i] + 1) as f64 * g);
            }
            let inner = Rect::new(&lo[..d], &hi[..d]).expect("ordered");
            let mut cols = Vec::new();
            for i in 0..d {
                let pt = self.axis_extremes().axis(i).tree();
                // Nudge the lower corner so columns that only touch it are skipped.
                let proj = inner.project_out(AxisSet::single(i));
                let nudged: Vec<f64> = proj.lo().coords().iter().map(|x| x.next_up()).collect();
                let proj = Rect::new(&nudged, proj.hi().coords()).expect("ordered");
                cols.clear();
                pt.subdivide(CellId::root(d - 1), pt.root(), level, Some(&proj), &mut cols);
                for &(_, pnode) in &cols {
                    for max in [false, true] {
                        meter.add(1);
                        if let Some(e) = self.axis_extremes().extreme(self.ranks(), i, pnode, lo[i], hi[i], max) {
                            points.push(self.entry_point(e));
                        }
                    }
                }
            }
        }
        points.sort_by(|a, b| a.lex_cmp(b));
        points.dedup();
        Some(ExtentCoreset { points, apx, grid_side: g })
    }

    fn extent_answer(&self, q: &Rect, eps: f64, radius: bool) -> Result<ExtentAnswer> {
        let t0 = Instant::now();
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!("eps = {eps} must be positive")));
        }
        let qn = self.normalize_rect(q)?;
        let meter = Meter::new();
        let mut ans = ExtentAnswer {
            value: 0.0,
            center: None,
            range_weight: 0.0,
            coreset_size: 0,
            point_accesses: 0,
            wall_ms: 0.0,
        };
        if let Some(s) = self.extent_coreset(&qn, eps, &meter) {
            meter.add(1);
            ans.range_weight = self.range_count(&qn);
            ans.coreset_size = s.points.len();
            let nz = self.normalizer();
            if radius {
                let b = seb(&s.points);
                let inflation = if s.grid_side > 0.0 { (self.dim() as f64).sqrt() * s.grid_side } else { 0.0 };
                ans.value = nz.length_to_original(b.radius + inflation);
                ans.center = Some(self.to_original(&b.center));
            } else {
                ans.value = nz.length_to_original(diameter(&s.points));
            }
        }
        ans.point_accesses = meter.get();
        ans.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        Ok(ans)
    }

    /// Diameter estimate `D'` with `D / (1 + eps) <= D' <= D` (input units).
    pub fn diameter_query(&self, q: &Rect, eps: f64) -> Result<ExtentAnswer> {
        self.extent_answer(q, eps, false)
    }

    /// Enclosing-ball radius estimate `r'` with `r <= r' <= (1 + eps) r`, and the ball's center.
    pub fn radius_query(&self, q: &Rect, eps: f64) -> Result<ExtentAnswer> {
        self.extent_answer(q, eps, true)
    }
}

/// Largest pairwise distance, by scan.
pub fn diameter(points: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max(p.dist2(q));
        }
    }
    best.sqrt()
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
    fn small_cases_are_exact() {
        let pts = vec![Point::new(&[0.0, 0.0]), Point::new(&[3.0, 4.0])];
        let idx = build(&pts);
        let q = Rect::new(&[-1.0, -1.0], &[5.0, 5.0]).unwrap();
        assert!((idx.diameter_query(&q, 0.1).unwrap().value - 5.0).abs() < 1e-9);
        let one = Rect::new(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let r = idx.radius_query(&one, 0.1).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(idx.diameter_query(&one, 0.1).unwrap().value, 0.0);
        let none = Rect::new(&[10.0, 10.0], &[11.0, 11.0]).unwrap();
        assert_eq!(idx.diameter_query(&none, 0.1).unwrap().coreset_size, 0);
    }

    #[test]
    fn collinear_points_keep_both_ends() {
        let pts: Vec<Point> = (0..200).map(|i| Point::new(&[i as f64 * 0.37, 2.0])).collect();
        let mut all = pts.clone();
        all.push(Point::new(&[0.0, 50.0]));
        let idx = build(&all);
        let q = Rect::new(&[-1.0, 1.0], &[100.0, 3.0]).unwrap();
        let ans = idx.diameter_query(&q, 0.3).unwrap();
        assert!((ans.value - 199.0 * 0.37).abs() < 1e-9);
    }

    #[test]
    fn sandwich_on_random_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for d in 2..=3 {
            let pts: Vec<Point> = (0..1500)
                .map(|_| Point::new(&(0..d).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<_>>()))
                .collect();
            let idx = build(&pts);
            for _ in 0..40 {
                let lo: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..0.6)).collect();
                let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.05..0.4)).collect();
                let q = Rect::new(&lo, &hi).unwrap();
                let inside: Vec<Point> = pts.iter().copied().filter(|p| q.contains(p)).collect();
                if inside.is_empty() {
                    continue;
                }
                let eps = 0.1;
                let dd = diameter(&inside);
                let ans = idx.diameter_query(&q, eps).unwrap().value;
                assert!(ans <= dd * (1.0 + 1e-12) && ans >= dd / (1.0 + eps), "{ans} vs {dd}");
                let r = seb(&inside).radius;
                let ans = idx.radius_query(&q, eps).unwrap().value;
                assert!(ans >= r * (1.0 - 1e-9) && ans <= (1.0 + eps) * r, "{ans} vs {r}");
            }
        }
    }
}
