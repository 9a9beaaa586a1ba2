//! Self-checks of a built index against brute-force scans, grouped into suites.
//!
//! Every check is seeded, so a report is reproducible byte for byte when
//! timings are left out.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::extent::diameter;
use crate::geometry::{Point, Rect, WeightedPoint};
use crate::index::{BuildParams, Meter, RangeIndex};
use crate::median::{approx_radius, collect_second_level_cells, IndexAccess, PointAccess, QueryOptions, UnifiedGrid};
use crate::solvers::{cost, oracle_exact, seb, Objective, SEED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Structures,
    Coresets,
    Clustering,
    Extent,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Structures, Suite::Coresets, Suite::Clustering, Suite::Extent];

    pub fn parse(s: &str) -> Option<Vec<Suite>> {
        Some(match s {
            "structures" => vec![Suite::Structures],
            "coresets" => vec![Suite::Coresets],
            "clustering" => vec![Suite::Clustering],
            "extent" => vec![Suite::Extent],
            "all" => Suite::ALL.to_vec(),
            _ => return None,
        })
    }
}

/// Outcome of one property: `worst` is the largest observed ratio of the
/// checked quantity to its allowed bound (at most 1 when passing).
#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub suite: Suite,
    pub property: String,
    pub trials: u64,
    pub failures: u64,
    pub worst: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub n: usize,
    pub d: usize,
    pub budget: usize,
    pub pass: bool,
    pub results: Vec<PropertyResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

struct Tally {
    suite: Suite,
    property: &'static str,
    trials: u64,
    failures: u64,
    worst: f64,
}

impl Tally {
    fn new(suite: Suite, property: &'static str) -> Tally {
        Tally { suite, property, trials: 0, failures: 0, worst: 0.0 }
    }

    /// Records `value <= bound` (with a relative floating-point allowance).
    fn check(&mut self, value: f64, bound: f64) {
        self.trials += 1;
        let ratio = if bound > 0.0 { value / bound } else if value > 0.0 { f64::INFINITY } else { 0.0 };
        self.worst = self.worst.max(ratio);
        if value > bound * (1.0 + 1e-9) + 1e-12 {
            self.failures += 1;
        }
    }

    fn check_eq(&mut self, ok: bool) {
        self.trials += 1;
        if !ok {
            self.failures += 1;
            self.worst = f64::INFINITY;
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            suite: self.suite,
            property: self.property.to_string(),
            trials: self.trials,
            failures: self.failures,
            worst: if self.worst.is_finite() { self.worst } else { f64::MAX },
            pass: self.failures == 0,
        }
    }
}

/// Random box in normalized coordinates covering a random fraction of each axis.
pub fn random_box(rng: &mut ChaCha8Rng, d: usize) -> Rect {
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        lo[i] = a.min(b);
        hi[i] = a.max(b);
    }
    Rect::new(&lo, &hi).expect("ordered")
}

fn inside(index: &RangeIndex, q: &Rect) -> Vec<WeightedPoint> {
    index
        .quadtree()
        .entries()
        .iter()
        .filter(|e| q.contains(&e.point))
        .map(|e| WeightedPoint::new(e.point, e.weight))
        .collect()
}

fn random_centers(rng: &mut ChaCha8Rng, k: usize, d: usize) -> Vec<Point> {
    (0..k)
        .map(|_| Point::new(&(0..d).map(|_| rng.random::<f64>()).collect::<Vec<_>>()))
        .collect()
}

fn structures(index: &RangeIndex, budget: usize, rng: &mut ChaCha8Rng) -> Vec<PropertyResult> {
    let d = index.dim();
    let mut count = Tally::new(Suite::Structures, "range_count");
    let mut ext = Tally::new(Suite::Structures, "range_extremes");
    let mut canon = Tally::new(Suite::Structures, "canonical_union");
    let mut cells = Tally::new(Suite::Structures, "cell_range_count");
    for _ in 0..budget {
        let q = random_box(rng, d);
        let ins = inside(index, &q);
        let w: f64 = ins.iter().map(|p| p.weight).sum();
        count.check_eq(index.range_count(&q) == w);
        let bb = Rect::bounding(ins.iter().map(|p| &p.point));
        ext.check_eq(index.range_extremes(&q) == bb);
        let mut ids = BTreeSet::new();
        let mut disjoint = true;
        for c in index.range_tree().canonical_nodes(&q) {
            for &e in index.range_tree().node_ids(&c) {
                disjoint &= ids.insert(e);
            }
        }
        let scan: BTreeSet<u32> = (0..index.quadtree().entries().len() as u32)
            .filter(|&e| q.contains(&index.entry_point(e)))
            .collect();
        canon.check_eq(disjoint && ids == scan);
        if ins.is_empty() {
            continue;
        }
        let meter = Meter::new();
        let pa = IndexAccess::new(index, q, &meter);
        let m = rng.random_range(1..4);
        let a = random_centers(rng, m, d);
        let centers = crate::median::ApproxCenters { centers: a.clone(), c1: index.params().c1 };
        let r = approx_radius(&pa, &centers, Objective::Median);
        if r <= 0.0 {
            continue;
        }
        let grid = UnifiedGrid::new(r, centers.c1, w, 0.5, d);
        for gc in collect_second_level_cells(&pa, &a, &grid) {
            let scan: f64 = ins.iter().filter(|p| gc.cell.contains_point(&p.point)).map(|p| p.weight).sum();
            cells.check_eq(pa.weight_in(gc.node) == scan);
        }
    }
    vec![count.finish(), ext.finish(), canon.finish(), cells.finish()]
}

fn coresets(index: &RangeIndex, budget: usize, rng: &mut ChaCha8Rng) -> Vec<PropertyResult> {
    let d = index.dim();
    let eps = 0.2;
    let opts = QueryOptions::from_index(index);
    let mut out = Vec::new();
    for (kind, name) in [(Objective::Median, "kmedian_coreset_deviation"), (Objective::Means, "kmeans_coreset_deviation")] {
        let mut t = Tally::new(Suite::Coresets, name);
        for trial in 0..budget.div_ceil(10).max(1) {
            let q = random_box(rng, d);
            let meter = Meter::new();
            let pa = IndexAccess::new(index, q, &meter);
            let k = 1 << (trial % 3);
            let Ok(Some((s, _))) = index.query_coreset(&pa, k, eps, kind, &opts, &meter) else { continue };
            let ins = inside(index, &q);
            for _ in 0..20 {
                let c = random_centers(rng, k, d);
                let full = cost(&ins, &c, kind);
                let approx = cost(&s.members, &c, kind);
                t.check((approx - full).abs(), eps * full);
            }
        }
        out.push(t.finish());
    }
    out
}

fn tiny_index(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Result<(RangeIndex, Vec<Point>)> {
    let pts: Vec<Point> = (0..n)
        .map(|_| Point::new(&(0..d).map(|_| rng.random_range(0..40) as f64 / 4.0).collect::<Vec<_>>()))
        .collect();
    let idx = RangeIndex::build(&pts, BuildParams { coreset_tree: false, ..BuildParams::default() })?;
    Ok((idx, pts))
}

fn clustering(budget: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<PropertyResult>> {
    let eps = 0.1;
    let mut med = Tally::new(Suite::Clustering, "kmedian_within_1+3eps");
    let mut means = Tally::new(Suite::Clustering, "kmeans_within_1+3eps");
    let mut lb = Tally::new(Suite::Clustering, "kcenter_lower_bound");
    let mut kc = Tally::new(Suite::Clustering, "kcenter_exact_path");
    let everything = Rect::everything(d);
    for _ in 0..budget.div_ceil(5).max(1) {
        let n = rng.random_range(4..=12);
        let k = rng.random_range(1..=3);
        let (idx, pts) = tiny_index(rng, n, d)?;
        let wp: Vec<WeightedPoint> = pts.iter().map(|&p| WeightedPoint::unit(p)).collect();
        for (kind, tally) in [(Objective::Median, &mut med), (Objective::Means, &mut means)] {
            let ans = idx.cluster_query(&everything, k, eps, kind)?;
            let (opt, _) = oracle_exact(&wp, k, kind)?;
            tally.check(cost(&wp, &ans.centers, kind), (1.0 + 3.0 * eps) * opt);
        }
        let (opt, _) = oracle_exact(&wp, k, Objective::Center)?;
        let scale = idx.normalizer().scale();
        let qn = idx.normalize_rect(&everything)?;
        if let Some(l) = idx.kcenter_lower_bound(&qn, k, &Meter::new()) {
            lb.check(l.lb / scale, opt);
        }
        let ans = idx.kcenter_query(&everything, k, eps)?;
        kc.check(cost(&wp, &ans.centers, Objective::Center), (1.0 + 2.0 * (d as f64).sqrt() * eps) * opt);
    }
    Ok(vec![med.finish(), means.finish(), lb.finish(), kc.finish()])
}

fn extent(index: &RangeIndex, budget: usize, rng: &mut ChaCha8Rng) -> Result<Vec<PropertyResult>> {
    let d = index.dim();
    let mut dl = Tally::new(Suite::Extent, "diameter_lower");
    let mut du = Tally::new(Suite::Extent, "diameter_upper");
    let mut rl = Tally::new(Suite::Extent, "radius_lower");
    let mut ru = Tally::new(Suite::Extent, "radius_upper");
    let nz = index.normalizer();
    for trial in 0..budget {
        let eps = if trial % 2 == 0 { 0.3 } else { 0.1 };
        let qn = random_box(rng, d);
        let ins = inside(index, &qn);
        if ins.is_empty() {
            continue;
        }
        let q = Rect::from_corners(nz.to_original(qn.lo()), nz.to_original(qn.hi()))?;
        let pts: Vec<Point> = ins.iter().map(|p| p.point).collect();
        let dd = nz.length_to_original(diameter(&pts));
        let rr = nz.length_to_original(seb(&pts).radius);
        let a = index.diameter_query(&q, eps)?.value;
        dl.check(dd, (1.0 + eps) * a);
        du.check(a, dd);
        let b = index.radius_query(&q, eps)?.value;
        rl.check(rr, b);
        ru.check(b, (1.0 + eps) * rr);
    }
    Ok(vec![dl.finish(), du.finish(), rl.finish(), ru.finish()])
}

/// Runs the chosen suites with roughly `budget` trials each.
pub fn run(index: &RangeIndex, suites: &[Suite], budget: usize, timing: bool) -> Result<Report> {
    let t0 = Instant::now();
    let mut results = Vec::new();
    for &s in suites {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ s as u64);
        match s {
            Suite::Structures => results.extend(structures(index, budget, &mut rng)),
            Suite::Coresets => results.extend(coresets(index, budget, &mut rng)),
            Suite::Clustering => results.extend(clustering(budget, index.dim(), &mut rng)?),
            Suite::Extent => results.extend(extent(index, budget, &mut rng)?),
        }
    }
    Ok(Report {
        n: index.len(),
        d: index.dim(),
        budget,
        pass: results.iter().all(|r| r.pass),
        results,
        wall_ms: timing.then(|| t0.elapsed().as_secs_f64() * 1e3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, GenSpec, Mixture};

    #[test]
    fn all_suites_pass_on_a_small_index() {
        let pts = generate(&GenSpec { n: 600, d: 2, mixture: Mixture::Uniform, seed: 3 }).unwrap();
        let idx = RangeIndex::build(&pts, BuildParams { coreset_tree: false, ..BuildParams::default() }).unwrap();
        let r = run(&idx, &Suite::ALL, 20, false).unwrap();
        for p in &r.results {
            assert!(p.pass, "{p:?}");
            assert!(p.trials > 0, "{p:?}");
        }
    }
}
