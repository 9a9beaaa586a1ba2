//! Clustering objectives and single-shot solvers on explicit weighted point lists.

use std::fmt;

use rayon::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, WeightedPoint, MAX_DIM};

/// Seed for every randomized step, so runs are reproducible.
pub const SEED: u64 = 0x5EED;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Sum of weighted distances.
    Median,
    /// Sum of weighted squared distances.
    Means,
    /// Largest distance.
    Center,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Median => "kmedian",
            Objective::Means => "kmeans",
            Objective::Center => "kcenter",
        }
    }

    /// Converts a normalized cost to input units given the normalizer scale.
    pub fn cost_to_original(self, cost: f64, scale: f64) -> f64 {
        match self {
            Objective::Means => cost / (scale * scale),
            _ => cost / scale,
        }
    }

    #[inline]
    fn of_dist2(self, d2: f64) -> f64 {
        match self {
            Objective::Means => d2,
            _ => d2.sqrt(),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[inline]
fn nearest_dist2(p: &Point, centers: &[Point]) -> f64 {
    centers.iter().map(|c| p.dist2(c)).fold(f64::INFINITY, f64::min)
}

/// Cost of serving `points` by `centers`. The center objective takes the
/// maximum over points of positive weight and ignores the weights otherwise.
pub fn phi(points: &[WeightedPoint], centers: &[Point], kind: Objective) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::InvalidParameter("empty center set".into()));
    }
    Ok(cost(points, centers, kind))
}

/// [`phi`] without the emptiness check; panics on an empty center set.
pub fn cost(points: &[WeightedPoint], centers: &[Point], kind: Objective) -> f64 {
    assert!(!centers.is_empty(), "empty center set");
    match kind {
        Objective::Center => points
            .iter()
            .filter(|p| p.weight > 0.0)
            .map(|p| nearest_dist2(&p.point, centers))
            .fold(0.0, f64::max)
            .sqrt(),
        _ => points
            .iter()
            .map(|p| p.weight * kind.of_dist2(nearest_dist2(&p.point, centers)))
            .sum(),
    }
}

/// Farthest-first traversal starting at the first point of positive weight.
/// Returns at most `k` distinct centers, fewer if the points run out.
pub fn gonzalez(points: &[WeightedPoint], k: usize) -> Vec<Point> {
    gonzalez_indices(points, k)
        .into_iter()
        .map(|i| points[i].point)
        .collect()
}

pub fn gonzalez_indices(points: &[WeightedPoint], k: usize) -> Vec<usize> {
    let live: Vec<usize> = (0..points.len()).filter(|&i| points[i].weight > 0.0).collect();
    if live.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut chosen = vec![live[0]];
    let mut dist: Vec<f64> = live.iter().map(|&i| points[i].point.dist2(&points[live[0]].point)).collect();
    while chosen.len() < k {
        let (mut best, mut far) = (usize::MAX, 0.0);
        for (j, &dj) in dist.iter().enumerate() {
            if dj > far {
                far = dj;
                best = j;
            }
        }
        if best == usize::MAX {
            break;
        }
        let c = points[live[best]].point;
        chosen.push(live[best]);
        for (j, &i) in live.iter().enumerate() {
            dist[j] = dist[j].min(points[i].point.dist2(&c));
        }
    }
    chosen
}

#[derive(Clone, Debug)]
pub struct LocalSearchOptions {
    /// Maximum number of centers exchanged in one move.
    pub swap_width: usize,
    /// Stop once a move improves the cost by less than this fraction.
    pub tol: f64,
    /// Swap-in candidates per round; larger inputs use a fixed seeded sample.
    pub max_candidates: usize,
}

impl Default for LocalSearchOptions {
    fn default() -> Self {
        LocalSearchOptions { swap_width: 1, tol: 1e-3, max_candidates: 1024 }
    }
}

/// Outcome of [`local_search`].
#[derive(Clone, Debug)]
pub struct LocalSearchResult {
    pub centers: Vec<Point>,
    pub cost: f64,
    pub moves: usize,
}

/// Distinct locations of positive weight, first occurrence kept.
fn distinct_locations(points: &[WeightedPoint]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).filter(|&i| points[i].weight > 0.0).collect();
    idx.sort_by(|&a, &b| points[a].point.lex_cmp(&points[b].point).then(a.cmp(&b)));
    idx.dedup_by(|a, b| points[*a].point == points[*b].point);
    idx.sort_unstable();
    idx
}

/// Swap-based local search with centers drawn from the input locations.
/// Each round applies the best improving exchange of up to `swap_width`
/// centers; `seed` centers are snapped to their nearest input location.
pub fn local_search(
    points: &[WeightedPoint],
    k: usize,
    kind: Objective,
    seed: &[Point],
    opts: &LocalSearchOptions,
) -> LocalSearchResult {
    assert!(kind != Objective::Center, "local search serves median and means only");
    let mut cand = distinct_locations(points);
    if cand.len() <= k {
        let centers: Vec<Point> = cand.iter().map(|&i| points[i].point).collect();
        return LocalSearchResult {
            cost: if centers.is_empty() { 0.0 } else { cost(points, &centers, kind) },
            centers,
            moves: 0,
        };
    }
    let mut current: Vec<usize> = Vec::with_capacity(k);
    for s in seed.iter().take(k) {
        let j = cand
            .iter()
            .copied()
            .min_by(|&a, &b| points[a].point.dist2(s).total_cmp(&points[b].point.dist2(s)).then(a.cmp(&b)))
            .expect("nonempty");
        if !current.contains(&j) {
            current.push(j);
        }
    }
    if current.len() < k {
        let extra = gonzalez_indices(points, 2 * k);
        for i in extra.into_iter().chain(cand.iter().copied()) {
            if current.len() == k {
                break;
            }
            if !current.contains(&i) && cand.binary_search(&i).is_ok() {
                current.push(i);
            }
        }
    }
    if cand.len() > opts.max_candidates.max(k + 1) {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut pick: Vec<usize> = rand::seq::index::sample(&mut rng, cand.len(), opts.max_candidates.max(k + 1))
            .into_iter()
            .map(|t| cand[t])
            .collect();
        pick.sort_unstable();
        cand = pick;
    }
    let mut moves = 0;
    let mut cur_cost = cost_of(points, &current, kind);
    loop {
        let step = if opts.swap_width <= 1 {
            best_single_swap(points, &cand, &current, kind)
        } else {
            best_multi_swap(points, &cand, &current, kind, opts.swap_width)
        };
        match step {
            Some((new_cost, next)) if cur_cost > 0.0 && new_cost < cur_cost * (1.0 - opts.tol) => {
                debug_assert!(new_cost <= cur_cost);
                current = next;
                cur_cost = new_cost;
                moves += 1;
            }
            _ => break,
        }
    }
    current.sort_unstable();
    let centers: Vec<Point> = current.iter().map(|&i| points[i].point).collect();
    LocalSearchResult {
        cost: cost(points, &centers, kind),
        centers,
        moves,
    }
}

fn cost_of(points: &[WeightedPoint], idx: &[usize], kind: Objective) -> f64 {
    let centers: Vec<Point> = idx.iter().map(|&i| points[i].point).collect();
    cost(points, &centers, kind)
}

/// Best exchange of one center for one candidate, using nearest and
/// second-nearest distances so each candidate costs one pass over the points.
fn best_single_swap(
    points: &[WeightedPoint],
    cand: &[usize],
    current: &[usize],
    kind: Objective,
) -> Option<(f64, Vec<usize>)> {
    let m = current.len();
    let n = points.len();
    let mut near = vec![0usize; n];
    let mut g1 = vec![0.0; n];
    let mut g2 = vec![f64::INFINITY; n];
    for (j, p) in points.iter().enumerate() {
        let (mut b1, mut b2, mut a) = (f64::INFINITY, f64::INFINITY, 0);
        for (i, &c) in current.iter().enumerate() {
            let d = p.point.dist2(&points[c].point);
            if d < b1 {
                b2 = b1;
                b1 = d;
                a = i;
            } else if d < b2 {
                b2 = d;
            }
        }
        near[j] = a;
        g1[j] = kind.of_dist2(b1);
        g2[j] = kind.of_dist2(b2);
    }
    let best = cand
        .par_iter()
        .filter(|c| !current.contains(c))
        .map(|&c| {
            let cp = points[c].point;
            let mut base = 0.0;
            let mut adj = vec![0.0; m];
            for (j, p) in points.iter().enumerate() {
                if p.weight == 0.0 {
                    continue;
                }
                let dc = kind.of_dist2(p.point.dist2(&cp));
                let keep = dc.min(g1[j]);
                base += p.weight * keep;
                adj[near[j]] += p.weight * (dc.min(g2[j]) - keep);
            }
            let (i, a) = adj
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1).then(x.0.cmp(&y.0)))
                .expect("k >= 1");
            (base + a, i, c)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)).then(x.1.cmp(&y.1)));
    best.map(|(total, i, c)| {
        let mut next = current.to_vec();
        next[i] = c;
        (total, next)
    })
}

fn best_multi_swap(
    points: &[WeightedPoint],
    cand: &[usize],
    current: &[usize],
    kind: Objective,
    width: usize,
) -> Option<(f64, Vec<usize>)> {
    fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
        if size == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for (i, &x) in items.iter().enumerate() {
            for mut rest in subsets(&items[i + 1..], size - 1) {
                rest.insert(0, x);
                out.push(rest);
            }
        }
        out
    }
    let outside: Vec<usize> = cand.iter().copied().filter(|c| !current.contains(c)).collect();
    let positions: Vec<usize> = (0..current.len()).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in 1..=width.min(current.len()) {
        for outs in subsets(&positions, s) {
            for ins in subsets(&outside, s) {
                let mut next = current.to_vec();
                for (&pos, &c) in outs.iter().zip(&ins) {
                    next[pos] = c;
                }
                let total = cost_of(points, &next, kind);
                if best.as_ref().is_none_or(|b| total < b.0) {
                    best = Some((total, next));
                }
            }
        }
    }
    best
}

/// Weighted mean.
pub fn centroid(points: &[WeightedPoint]) -> Point {
    let d = points[0].point.dim();
    let mut acc = [0.0; MAX_DIM];
    let mut w = 0.0;
    for p in points {
        for (a, slot) in acc.iter_mut().enumerate().take(d) {
            *slot += p.weight * p.point[a];
        }
        w += p.weight;
    }
    if w <= 0.0 {
        return points[0].point;
    }
    for slot in acc.iter_mut().take(d) {
        *slot /= w;
    }
    Point::new(&acc[..d])
}

/// Weighted geometric median by Weiszfeld iteration, with the Vardi-Zhang
/// correction when the iterate lands on an input point.
const WEISZFELD_STARTS: usize = 32;

pub fn weiszfeld(points: &[WeightedPoint]) -> Point {
    let d = points[0].point.dim();
    let live: Vec<&WeightedPoint> = points.iter().filter(|p| p.weight > 0.0).collect();
    if live.is_empty() {
        return points[0].point;
    }
    if live.len() == 1 {
        return live[0].point;
    }
    // Starting from the best of the heaviest input locations avoids the slow
    // approach to a dominant vertex.
    let mut starts: Vec<&WeightedPoint> = live.clone();
    if starts.len() > WEISZFELD_STARTS {
        starts.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        starts.truncate(WEISZFELD_STARTS);
    }
    let mut y = starts
        .iter()
        .map(|p| p.point)
        .min_by(|a, b| {
            let ca: f64 = live.iter().map(|q| q.weight * q.point.dist(a)).sum();
            let cb: f64 = live.iter().map(|q| q.weight * q.point.dist(b)).sum();
            ca.total_cmp(&cb)
        })
        .unwrap();
    let c = centroid(points);
    let cost_at = |z: &Point| live.iter().map(|q| q.weight * q.point.dist(z)).sum::<f64>();
    if cost_at(&c) < cost_at(&y) {
        y = c;
    }
    for _ in 0..100_000 {
        let mut num = [0.0; MAX_DIM];
        let mut den = 0.0;
        let mut grad = [0.0; MAX_DIM];
        let mut eta = 0.0;
        for p in &live {
            let dist = p.point.dist(&y);
            if dist < 1e-300 {
                eta += p.weight;
                continue;
            }
            let f = p.weight / dist;
            for a in 0..d {
                num[a] += f * p.point[a];
                grad[a] += f * (p.point[a] - y[a]);
            }
            den += f;
        }
        if den == 0.0 {
            return y;
        }
        let r = (0..d).map(|a| grad[a] * grad[a]).sum::<f64>().sqrt();
        if eta > 0.0 && r <= eta {
            return y;
        }
        let mut t = [0.0; MAX_DIM];
        for a in 0..d {
            t[a] = num[a] / den;
        }
        let mut next = [0.0; MAX_DIM];
        if eta > 0.0 {
            let beta = eta / r;
            for a in 0..d {
                next[a] = (1.0 - beta) * t[a] + beta * y[a];
            }
        } else {
            next[..d].copy_from_slice(&t[..d]);
        }
        let next = Point::new(&next[..d]);
        let step = next.dist(&y);
        y = next;
        if step <= 1e-12 * (1.0 + (0..d).map(|a| y[a].abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    y
}

/// Norm of the cost gradient of the weighted 1-median objective at `y`,
/// ignoring input points that coincide with `y`.
pub fn median_gradient(points: &[WeightedPoint], y: &Point) -> (f64, f64) {
    let d = y.dim();
    let mut g = [0.0; MAX_DIM];
    let mut eta = 0.0;
    for p in points.iter().filter(|p| p.weight > 0.0) {
        let dist = p.point.dist(y);
        if dist < 1e-300 {
            eta += p.weight;
            continue;
        }
        for (a, slot) in g.iter_mut().enumerate().take(d) {
            *slot += p.weight * (p.point[a] - y[a]) / dist;
        }
    }
    ((0..d).map(|a| g[a] * g[a]).sum::<f64>().sqrt(), eta)
}

/// A ball; an empty ball has negative radius.
#[derive(Clone, Copy, Debug)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    fn contains(&self, p: &Point) -> bool {
        if self.radius < 0.0 {
            return false;
        }
        let r2 = self.radius * self.radius;
        p.dist2(&self.center) <= r2 * (1.0 + 1e-12) + 1e-300
    }
}

/// Smallest ball through all points of `support` (which must be affinely independent).
fn circumball(support: &[Point]) -> Ball {
    match support.len() {
        0 => Ball {
            center: Point::zeros(1),
            radius: -1.0,
        },
        1 => Ball {
            center: support[0],
            radius: 0.0,
        },
        m => {
            let d = support[0].dim();
            let p0 = support[0];
            let k = m - 1;
            let mut v = [[0.0; MAX_DIM]; MAX_DIM + 1];
            for i in 0..k {
                for a in 0..d {
                    v[i][a] = support[i + 1][a] - p0[a];
                }
            }
            // Gram system 2 (v_i . v_j) lambda_j = |v_i|^2.
            let mut mat = [[0.0; MAX_DIM + 2]; MAX_DIM + 1];
            for i in 0..k {
                for j in 0..k {
                    mat[i][j] = 2.0 * (0..d).map(|a| v[i][a] * v[j][a]).sum::<f64>();
                }
                mat[i][k] = (0..d).map(|a| v[i][a] * v[i][a]).sum::<f64>();
            }
            let lambda = gauss_solve(&mut mat, k);
            let mut c = [0.0; MAX_DIM];
            for a in 0..d {
                c[a] = p0[a] + (0..k).map(|j| lambda[j] * v[j][a]).sum::<f64>();
            }
            let center = Point::new(&c[..d]);
            let radius = support.iter().map(|p| p.dist(&center)).fold(0.0, f64::max);
            Ball { center, radius }
        }
    }
}

/// Gaussian elimination with partial pivoting on an augmented `k x (k+1)` matrix.
/// Near-singular pivots are treated as zero and their unknowns set to 0.
fn gauss_solve(mat: &mut [[f64; MAX_DIM + 2]; MAX_DIM + 1], k: usize) -> [f64; MAX_DIM + 1] {
    let mut x = [0.0; MAX_DIM + 1];
    let scale = (0..k).map(|i| mat[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut pivot_col = [usize::MAX; MAX_DIM + 1];
    let mut row = 0;
    for col in 0..k {
        let p = (row..k).max_by(|&a, &b| mat[a][col].abs().total_cmp(&mat[b][col].abs()));
        let Some(p) = p else { break };
        if mat[p][col].abs() <= 1e-14 * scale {
            continue;
        }
        mat.swap(row, p);
        for r in 0..k {
            if r != row {
                let f = mat[r][col] / mat[row][col];
                if f != 0.0 {
                    let pivot = mat[row];
                    for (x, p) in mat[r][col..=k].iter_mut().zip(&pivot[col..=k]) {
                        *x -= f * p;
                    }
                }
            }
        }
        pivot_col[row] = col;
        row += 1;
    }
    for r in 0..row {
        let c = pivot_col[r];
        x[c] = mat[r][k] / mat[r][c];
    }
    x
}

/// Exact smallest enclosing ball (move-to-front Welzl) after a seeded shuffle.
pub fn seb(points: &[Point]) -> Ball {
    assert!(!points.is_empty());
    let d = points[0].dim();
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    pts.shuffle(&mut rng);
    let mut support = Vec::with_capacity(d + 1);
    let n = pts.len();
    let mut ball = mtf(&mut pts, n, &mut support, d);
    // A final sweep guards against round-off in the support computation.
    let r2 = pts.iter().map(|p| p.dist2(&ball.center)).fold(0.0, f64::max);
    ball.radius = ball.radius.max(r2.sqrt());
    ball
}

fn mtf(pts: &mut [Point], end: usize, support: &mut Vec<Point>, d: usize) -> Ball {
    let mut ball = circumball(support);
    if support.len() == d + 1 {
        return ball;
    }
    for i in 0..end {
        if !ball.contains(&pts[i]) {
            support.push(pts[i]);
            ball = mtf(pts, i, support, d);
            support.pop();
            pts[..=i].rotate_right(1);
        }
    }
    ball
}

/// Largest input size accepted by [`oracle_exact`].
pub const ORACLE_MAX_POINTS: usize = 14;
/// Largest `k` accepted by [`oracle_exact`].
pub const ORACLE_MAX_K: usize = 3;

/// Optimal solution of one cluster under `kind`.
pub fn one_center(points: &[WeightedPoint], kind: Objective) -> (Point, f64) {
    let c = match kind {
        Objective::Median => weiszfeld(points),
        Objective::Means => centroid(points),
        Objective::Center => {
            let live: Vec<Point> = points.iter().filter(|p| p.weight > 0.0).map(|p| p.point).collect();
            if live.is_empty() {
                points[0].point
            } else {
                seb(&live).center
            }
        }
    };
    (c, cost(points, &[c], kind))
}

/// Exact optimum over all partitions into at most `k` parts, each part
/// served by its own optimal center.
pub fn oracle_exact(points: &[WeightedPoint], k: usize, kind: Objective) -> Result<(f64, Vec<Point>)> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > ORACLE_MAX_POINTS || k > ORACLE_MAX_K || k == 0 {
        return Err(Error::TooLarge(format!("exact oracle needs n <= {ORACLE_MAX_POINTS}, 1 <= k <= {ORACLE_MAX_K}")));
    }
    let full = (1usize << n) - 1;
    let mut single = vec![(0.0, Point::zeros(points[0].point.dim())); full + 1];
    for (mask, slot) in single.iter_mut().enumerate().skip(1) {
        let part: Vec<WeightedPoint> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| points[i]).collect();
        let (c, v) = one_center(&part, kind);
        *slot = (v, c);
    }
    let combine = |a: f64, b: f64| if kind == Objective::Center { a.max(b) } else { a + b };
    // best[j][mask]: optimum for `mask` with at most j+1 parts, and the first part used.
    let mut best = vec![vec![(f64::INFINITY, 0usize); full + 1]; k];
    for mask in 1..=full {
        best[0][mask] = (single[mask].0, mask);
    }
    for j in 1..k {
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let mut top = best[j - 1][mask];
            let rest = mask ^ low;
            let mut sub = rest;
            loop {
                let part = sub | low;
                if part != mask {
                    let v = combine(single[part].0, best[j - 1][mask ^ part].0);
                    if v < top.0 {
                        top = (v, part);
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            best[j][mask] = top;
        }
    }
    let mut centers = Vec::new();
    let mut mask = full;
    let mut j = k - 1;
    while mask != 0 {
        let part = best[j][mask].1;
        centers.push(single[part].1);
        mask ^= part;
        j = j.saturating_sub(1);
    }
    Ok((best[k - 1][full].0, centers))
}

/// Weighted Lloyd iterations for the means objective; never increases cost.
pub fn lloyd(points: &[WeightedPoint], centers: &[Point], max_iter: usize) -> Vec<Point> {
    let mut cur = centers.to_vec();
    let mut cur_cost = cost(points, &cur, Objective::Means);
    for _ in 0..max_iter {
        let mut groups: Vec<Vec<WeightedPoint>> = vec![Vec::new(); cur.len()];
        for p in points {
            let (i, _) = cur
                .iter()
                .enumerate()
                .map(|(i, c)| (i, p.point.dist2(c)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            groups[i].push(*p);
        }
        let next: Vec<Point> = groups
            .iter()
            .zip(&cur)
            .map(|(g, c)| if g.iter().any(|p| p.weight > 0.0) { centroid(g) } else { *c })
            .collect();
        let next_cost = cost(points, &next, Objective::Means);
        if next_cost >= cur_cost * (1.0 - 1e-12) {
            if next_cost < cur_cost {
                cur = next;
            }
            break;
        }
        cur = next;
        cur_cost = next_cost;
    }
    cur
}

/// Alternates assignment and per-cluster geometric medians; never increases cost.
pub fn refine_median(points: &[WeightedPoint], centers: &[Point], rounds: usize) -> Vec<Point> {
    let mut cur = centers.to_vec();
    let mut cur_cost = cost(points, &cur, Objective::Median);
    for _ in 0..rounds {
        let mut groups: Vec<Vec<WeightedPoint>> = vec![Vec::new(); cur.len()];
        for p in points {
            let (i, _) = cur
                .iter()
                .enumerate()
                .map(|(i, c)| (i, p.point.dist2(c)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            groups[i].push(*p);
        }
        let next: Vec<Point> = groups
            .iter()
            .zip(&cur)
            .map(|(g, c)| if g.iter().any(|p| p.weight > 0.0) { weiszfeld(g) } else { *c })
            .collect();
        let next_cost = cost(points, &next, Objective::Median);
        if next_cost >= cur_cost * (1.0 - 1e-9) {
            if next_cost < cur_cost {
                cur = next;
            }
            break;
        }
        cur = next;
        cur_cost = next_cost;
    }
    cur
}

/// Which solver produced an answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTag {
    Exhaustive,
    LocalSearch,
    LocalSearchLloyd,
    Gonzalez,
    Trivial,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub local_search: LocalSearchOptions,
    /// Use the exhaustive solver when the input has at most this many points...
    pub exhaustive_max_points: usize,
    /// ...and `k` is at most this.
    pub exhaustive_max_k: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            local_search: LocalSearchOptions::default(),
            exhaustive_max_points: ORACLE_MAX_POINTS,
            exhaustive_max_k: ORACLE_MAX_K,
        }
    }
}

/// Runs the single-shot solver for `kind` on an explicit weighted set.
pub fn solve(points: &[WeightedPoint], k: usize, kind: Objective, opts: &SolverOptions) -> (Vec<Point>, f64, SolverTag) {
    solve_seeded(points, k, kind, &[], opts)
}

/// [`solve`] with local search started from `seed` (farthest-first when empty).
pub fn solve_seeded(
    points: &[WeightedPoint],
    k: usize,
    kind: Objective,
    seed: &[Point],
    opts: &SolverOptions,
) -> (Vec<Point>, f64, SolverTag) {
    let live: Vec<WeightedPoint> = points.iter().copied().filter(|p| p.weight > 0.0).collect();
    if live.is_empty() {
        return (Vec::new(), 0.0, SolverTag::Trivial);
    }
    let distinct = distinct_locations(&live);
    if distinct.len() <= k {
        let centers: Vec<Point> = distinct.iter().map(|&i| live[i].point).collect();
        return (centers, 0.0, SolverTag::Trivial);
    }
    if live.len() <= opts.exhaustive_max_points.min(ORACLE_MAX_POINTS) && k <= opts.exhaustive_max_k.min(ORACLE_MAX_K) {
        let (_, centers) = oracle_exact(&live, k, kind).expect("within oracle limits");
        let c = cost(&live, &centers, kind);
        return (centers, c, SolverTag::Exhaustive);
    }
    match kind {
        Objective::Center => {
            let centers = gonzalez(&live, k);
            let c = cost(&live, &centers, kind);
            (centers, c, SolverTag::Gonzalez)
        }
        Objective::Median => {
            let seed = if seed.is_empty() { gonzalez(&live, k) } else { seed.to_vec() };
            let ls = local_search(&live, k, kind, &seed, &opts.local_search);
            let centers = refine_median(&live, &ls.centers, 10);
            let c = cost(&live, &centers, kind);
            (centers, c, SolverTag::LocalSearch)
        }
        Objective::Means => {
            let seed = if seed.is_empty() { gonzalez(&live, k) } else { seed.to_vec() };
            let ls = local_search(&live, k, kind, &seed, &opts.local_search);
            let centers = lloyd(&live, &ls.centers, 100);
            let c = cost(&live, &centers, kind);
            (centers, c, SolverTag::LocalSearchLloyd)
        }
    }
}
