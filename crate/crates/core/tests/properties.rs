mod common;

use common::*;
use proptest::prelude::*;
use rangeclust::geometry::z_cmp;
use rangeclust::median::{approx_radius, collect_second_level_cells, ApproxCenters, IndexAccess, UnifiedGrid};
use rangeclust::solvers::{local_search, LocalSearchOptions};
use rangeclust::{
    BuildParams, CellId, Meter, Objective, Point, RangeIndex, Rect, StandardLength, WeightedPoint, MAX_LEVEL,
};

fn points_strategy(d: usize, max: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(prop::collection::vec(0u32..64, d), 1..max)
        .prop_map(|rows| rows.iter().map(|r| Point::new(&r.iter().map(|&x| x as f64 / 8.0).collect::<Vec<_>>())).collect())
}

fn rect_strategy(d: usize) -> impl Strategy<Value = Rect> {
    (prop::collection::vec(-0.5f64..8.5, d), prop::collection::vec(-0.5f64..8.5, d)).prop_map(|(a, b)| {
        let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        Rect::new(&lo, &hi).unwrap()
    })
}

fn index(points: &[Point]) -> RangeIndex {
    RangeIndex::build(points, BuildParams { coreset_tree: false, ..BuildParams::default() }).unwrap()
}

fn normalized(idx: &RangeIndex) -> Vec<Point> {
    idx.points().iter().map(|p| idx.normalizer().to_normalized(p)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standard_lengths_bracket(x in 1e-12f64..=1.0) {
        let f = StandardLength::sfloor(x).unwrap().value();
        let c = StandardLength::sceil(x).unwrap().value();
        prop_assert!(f <= x && x < 2.0 * f);
        prop_assert!(c / 2.0 < x && x <= c);
    }

    #[test]
    fn cell_nesting_matches_key_intervals(
        x in 0.0f64..1.0, y in 0.0f64..1.0, u in 0.0f64..1.0, v in 0.0f64..1.0,
        la in 0u32..=12, lb in 0u32..=12,
    ) {
        let a = CellId::of_point(&Point::new(&[x, y]), StandardLength::new(la));
        let b = CellId::of_point(&Point::new(&[u, v]), StandardLength::new(lb));
        let (a0, a1) = a.morton_interval();
        let (b0, b1) = b.morton_interval();
        let geo = (0..2).all(|i| a.lo(i) <= b.lo(i) && b.hi(i) <= a.hi(i));
        let keys = z_cmp(a0.coords(), b0.coords()).is_le() && z_cmp(b1.coords(), a1.coords()).is_le();
        prop_assert_eq!(geo, keys);
    }

    #[test]
    fn quadtree_slices_are_cells(points in points_strategy(2, 200)) {
        let idx = index(&points);
        let qt = idx.quadtree();
        let pts = normalized(&idx);
        for v in 0..qt.node_count() as u32 {
            let node = qt.node(v);
            prop_assert!(qt.children(v).len() != 1);
            let mut want: Vec<Point> = pts.iter().copied().filter(|p| node.cell.contains_point(p)).collect();
            want.sort_by(|a, b| a.lex_cmp(b));
            want.dedup();
            let mut got: Vec<Point> = qt.slice(v).iter().map(|e| e.point).collect();
            got.sort_by(|a, b| a.lex_cmp(b));
            prop_assert_eq!(got, want);
            prop_assert_eq!(qt.compressed_cell(&node.cell), Some(v));
        }
        let weight: f64 = qt.entries().iter().map(|e| e.weight).sum();
        prop_assert_eq!(weight, points.len() as f64);
    }

    #[test]
    fn range_queries_match_scans(points in points_strategy(3, 150), q in rect_strategy(3)) {
        let idx = index(&points);
        let qn = idx.normalize_rect(&q).unwrap();
        let ins = inside(&points, &q);
        prop_assert_eq!(idx.range_count(&qn), ins.len() as f64);
        prop_assert_eq!(idx.range_empty(&qn), ins.is_empty());
        match idx.range_report_one(&qn) {
            Some(e) => prop_assert!(in_box(&idx.entry_point(e), &qn)),
            None => prop_assert!(ins.is_empty()),
        }
        let w: f64 = idx.range_tree().canonical_nodes(&qn).iter().map(|c| idx.range_tree().node_ids(c).len() as f64).sum();
        let distinct = {
            let mut v = ins.clone();
            v.sort_by(|a, b| a.lex_cmp(b));
            v.dedup();
            v.len() as f64
        };
        prop_assert_eq!(w, distinct);
    }

    #[test]
    fn grid_cells_partition_the_range(points in points_strategy(2, 300), q in rect_strategy(2), k in 1usize..4) {
        let idx = index(&points);
        let qn = idx.normalize_rect(&q).unwrap();
        let meter = Meter::new();
        let pa = IndexAccess::new(&idx, qn, &meter);
        let ins = inside(&normalized(&idx), &qn);
        prop_assume!(!ins.is_empty());
        let centers: Vec<Point> = ins.iter().step_by(ins.len().div_ceil(k)).copied().collect();
        let a = ApproxCenters { centers: centers.clone(), c1: 25.0 };
        let r = approx_radius(&pa, &a, Objective::Median);
        prop_assume!(r > 0.0);
        let grid = UnifiedGrid::new(r, a.c1, ins.len() as f64, 0.3, 2);
        let cells = collect_second_level_cells(&pa, &centers, &grid);
        let total: f64 = cells.iter().map(|c| idx.cell_range_count(c.node, &qn, &meter)).sum();
        prop_assert_eq!(total, ins.len() as f64);
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                prop_assert!(a.cell.interior_disjoint(&b.cell));
            }
        }
    }

    #[test]
    fn kcenter_coreset_covers(points in points_strategy(2, 300), q in rect_strategy(2), k in 1usize..5, eps in 0.05f64..0.5) {
        let idx = index(&points);
        let qn = idx.normalize_rect(&q).unwrap();
        let ins = inside(&normalized(&idx), &qn);
        let Some(core) = idx.kcenter_coreset(&qn, k, eps, &Meter::new()) else {
            prop_assert!(ins.is_empty());
            return Ok(());
        };
        prop_assert!(core.points.iter().all(|p| ins.contains(p)));
        let slack = 2f64.sqrt() * eps * core.lb;
        let mut rng = rng(k as u64);
        for _ in 0..20 {
            let c = random_points_in(&mut rng, k, &Rect::unit(2));
            prop_assert!(max_cost(&ins, &c) <= max_cost(&core.points, &c) + slack + 1e-12);
        }
    }

    #[test]
    fn extent_coreset_is_a_subset(points in points_strategy(3, 300), q in rect_strategy(3), eps in 0.05f64..1.0) {
        let idx = index(&points);
        let qn = idx.normalize_rect(&q).unwrap();
        let ins = inside(&normalized(&idx), &qn);
        match idx.extent_coreset(&qn, eps, &Meter::new()) {
            Some(core) => {
                prop_assert!(core.points.iter().all(|p| ins.contains(p)));
                prop_assert!(diameter(&core.points) <= diameter(&ins));
            }
            None => prop_assert!(ins.is_empty()),
        }
    }

    #[test]
    fn local_search_reports_its_cost(points in points_strategy(2, 60), k in 1usize..5, means in any::<bool>()) {
        let wp: Vec<WeightedPoint> = points.iter().map(|&p| WeightedPoint::unit(p)).collect();
        let kind = if means { Objective::Means } else { Objective::Median };
        let res = local_search(&wp, k, kind, &[], &LocalSearchOptions::default());
        let unit: Vec<(Point, f64)> = points.iter().map(|&p| (p, 1.0)).collect();
        let recomputed = sum_cost(&unit, &res.centers, if means { 2 } else { 1 });
        prop_assert!((res.cost - recomputed).abs() <= 1e-9 * recomputed.max(1.0));
    }
}

#[test]
fn leaf_level_is_the_finest_cell() {
    assert_eq!(StandardLength::sfloor(1e-300).unwrap().clamp_to_leaf(), StandardLength::new(MAX_LEVEL));
}
