//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's solvers or structures.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rangeclust::data::{generate, GenSpec, Mixture};
use rangeclust::{Point, Rect};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(n: usize, d: usize, seed: u64) -> Vec<Point> {
    generate(&GenSpec { n, d, mixture: Mixture::Uniform, seed }).unwrap()
}

pub fn gaussians(n: usize, d: usize, seed: u64) -> Vec<Point> {
    generate(&GenSpec { n, d, mixture: Mixture::Gaussians { m: 5, sigma: 0.05 }, seed }).unwrap()
}

/// Box with corners drawn uniformly from `bounds`.
pub fn random_rect(rng: &mut ChaCha8Rng, bounds: &Rect) -> Rect {
    let d = bounds.dim();
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        let (a, b) = (bounds.lo()[i], bounds.hi()[i]);
        let x = rng.random_range(a..=b);
        let y = rng.random_range(a..=b);
        lo[i] = x.min(y);
        hi[i] = x.max(y);
    }
    Rect::new(&lo, &hi).unwrap()
}

pub fn in_box(p: &Point, q: &Rect) -> bool {
    (0..p.dim()).all(|i| q.lo()[i] <= p[i] && p[i] <= q.hi()[i])
}

pub fn inside(points: &[Point], q: &Rect) -> Vec<Point> {
    points.iter().copied().filter(|p| in_box(p, q)).collect()
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    (0..a.dim()).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

pub fn nearest(p: &Point, centers: &[Point]) -> f64 {
    centers.iter().map(|c| dist(p, c)).fold(f64::INFINITY, f64::min)
}

/// Weighted sum of nearest-center distances raised to `power` (1 or 2).
pub fn sum_cost(points: &[(Point, f64)], centers: &[Point], power: i32) -> f64 {
    points.iter().map(|(p, w)| w * nearest(p, centers).powi(power)).sum()
}

pub fn max_cost(points: &[Point], centers: &[Point]) -> f64 {
    points.iter().map(|p| nearest(p, centers)).fold(0.0, f64::max)
}

pub fn diameter(points: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(dist(a, b));
        }
    }
    best
}

/// Smallest ball through every point of `boundary` (within their affine hull).
fn circumball(boundary: &[Point]) -> (Vec<f64>, f64) {
    let p0 = &boundary[0];
    let d = p0.dim();
    let vs: Vec<Vec<f64>> = boundary[1..].iter().map(|p| (0..d).map(|i| p[i] - p0[i]).collect()).collect();
    let m = vs.len();
    // Gram system for the center offset sum_j lambda_j v_j.
    let mut a = vec![vec![0.0; m + 1]; m];
    for r in 0..m {
        for c in 0..m {
            a[r][c] = (0..d).map(|i| vs[r][i] * vs[c][i]).sum();
        }
        a[r][m] = a[r][r] / 2.0;
    }
    let mut lambda = vec![0.0; m];
    let mut rows: Vec<usize> = (0..m).collect();
    let mut pivots = Vec::new();
    for col in 0..m {
        let Some((pos, &row)) = rows
            .iter()
            .enumerate()
            .max_by(|x, y| a[*x.1][col].abs().total_cmp(&a[*y.1][col].abs()))
        else {
            break;
        };
        if a[row][col].abs() < 1e-300 {
            continue;
        }
        rows.remove(pos);
        for &r in &rows {
            let f = a[r][col] / a[row][col];
            let pivot = a[row].clone();
            for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
        }
        pivots.push((row, col));
    }
    for &(row, col) in pivots.iter().rev() {
        let mut s = a[row][m];
        for c in col + 1..m {
            s -= a[row][c] * lambda[c];
        }
        lambda[col] = s / a[row][col];
    }
    let center: Vec<f64> = (0..d).map(|i| p0[i] + (0..m).map(|j| lambda[j] * vs[j][i]).sum::<f64>()).collect();
    let r = boundary
        .iter()
        .map(|p| (0..d).map(|i| (p[i] - center[i]).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    (center, r)
}

fn covers(ball: &(Vec<f64>, f64), p: &Point) -> bool {
    let d2: f64 = (0..p.dim()).map(|i| (p[i] - ball.0[i]).powi(2)).sum();
    d2.sqrt() <= ball.1 * (1.0 + 1e-12) + 1e-15
}

fn welzl(points: &[Point], boundary: &mut Vec<Point>, d: usize) -> (Vec<f64>, f64) {
    let mut ball = if boundary.is_empty() {
        (points[0].coords().to_vec(), 0.0)
    } else {
        circumball(boundary)
    };
    if boundary.len() == d + 1 {
        return ball;
    }
    let start = usize::from(boundary.is_empty());
    for i in start..points.len() {
        if !covers(&ball, &points[i]) {
            boundary.push(points[i]);
            ball = welzl(&points[..i], boundary, d);
            boundary.pop();
        }
    }
    ball
}

/// Exact smallest enclosing ball radius (randomized incremental construction).
pub fn seb_radius(points: &[Point]) -> f64 {
    let mut pts = points.to_vec();
    pts.shuffle(&mut rng(0xB411));
    welzl(&pts, &mut Vec::new(), pts[0].dim()).1
}

/// Cheapest split of all of `0..n` into at most `k` groups, given the cost
/// of every subset mask and a combiner (sum or max).
fn best_partition(n: usize, k: usize, subset: &[f64], combine: fn(f64, f64) -> f64) -> f64 {
    let full = (1usize << n) - 1;
    let mut best = subset.to_vec();
    for _ in 1..k {
        let prev = best.clone();
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let rest = mask ^ low;
            // Submasks of `rest`, each joined with the lowest bit.
            let mut sub = rest;
            loop {
                let part = sub | low;
                if part != mask {
                    let v = combine(subset[part], prev[mask ^ part]);
                    if v < best[mask] {
                        best[mask] = v;
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
    }
    best[full]
}

fn members(points: &[Point], mask: usize) -> Vec<Point> {
    (0..points.len()).filter(|i| mask >> i & 1 == 1).map(|i| points[i]).collect()
}

/// Optimal Euclidean k-center radius of a tiny point set.
pub fn kcenter_opt(points: &[Point], k: usize) -> f64 {
    let n = points.len();
    assert!(n <= 16);
    let mut subset = vec![0.0; 1 << n];
    for (mask, s) in subset.iter_mut().enumerate().skip(1) {
        *s = seb_radius(&members(points, mask));
    }
    best_partition(n, k, &subset, f64::max)
}

/// Optimal k-means cost of a tiny point set (unit weights).
pub fn kmeans_opt(points: &[Point], k: usize) -> f64 {
    let n = points.len();
    let d = points[0].dim();
    let mut subset = vec![0.0; 1 << n];
    for (mask, s) in subset.iter_mut().enumerate().skip(1) {
        let m = members(points, mask);
        let c: Vec<f64> = (0..d).map(|i| m.iter().map(|p| p[i]).sum::<f64>() / m.len() as f64).collect();
        *s = m.iter().map(|p| (0..d).map(|i| (p[i] - c[i]).powi(2)).sum::<f64>()).sum();
    }
    best_partition(n, k, &subset, |a, b| a + b)
}

/// Sum of distances to the geometric median, by Weiszfeld iteration started
/// from the best input point (which handles medians on an input point).
fn median_cost(m: &[Point]) -> f64 {
    let d = m[0].dim();
    let f = |y: &[f64]| -> f64 {
        m.iter().map(|p| (0..d).map(|i| (p[i] - y[i]).powi(2)).sum::<f64>().sqrt()).sum()
    };
    let mut best = m.iter().map(|p| f(p.coords())).fold(f64::INFINITY, f64::min);
    let mut y: Vec<f64> = (0..d).map(|i| m.iter().map(|p| p[i]).sum::<f64>() / m.len() as f64).collect();
    for _ in 0..2000 {
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        for p in m {
            let r = (0..d).map(|i| (p[i] - y[i]).powi(2)).sum::<f64>().sqrt();
            if r < 1e-14 {
                continue;
            }
            for i in 0..d {
                num[i] += p[i] / r;
            }
            den += 1.0 / r;
        }
        if den == 0.0 {
            break;
        }
        let next: Vec<f64> = num.iter().map(|x| x / den).collect();
        let step: f64 = (0..d).map(|i| (next[i] - y[i]).powi(2)).sum::<f64>().sqrt();
        y = next;
        if step < 1e-13 {
            break;
        }
    }
    best = best.min(f(&y));
    best
}

/// Optimal k-median cost of a tiny point set, up to Weiszfeld's convergence.
pub fn kmedian_opt(points: &[Point], k: usize) -> f64 {
    let n = points.len();
    let mut subset = vec![0.0; 1 << n];
    for (mask, s) in subset.iter_mut().enumerate().skip(1) {
        *s = median_cost(&members(points, mask));
    }
    best_partition(n, k, &subset, |a, b| a + b)
}

/// Points on a coarse lattice, so duplicates and collinear triples occur.
pub fn lattice_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(&(0..d).map(|_| rng.random_range(0..12) as f64 * 0.5).collect::<Vec<_>>()))
        .collect()
}

pub fn random_points_in(rng: &mut ChaCha8Rng, k: usize, bounds: &Rect) -> Vec<Point> {
    (0..k)
        .map(|_| {
            let c: Vec<f64> = (0..bounds.dim()).map(|i| rng.random_range(bounds.lo()[i]..=bounds.hi()[i])).collect();
            Point::new(&c)
        })
        .collect()
}

/// Collects `(name, pass, detail)` lines and writes them where the test
/// harness does not capture them.
#[derive(Default)]
pub struct Summary {
    lines: Vec<(String, bool, String)>,
}

impl Summary {
    pub fn record(&mut self, name: &str, pass: bool, detail: String) {
        use std::io::Write;
        let line = format!("{} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
        let _ = std::io::stderr().write_all(line.as_bytes());
        self.lines.push((name.to_string(), pass, detail));
    }

    pub fn failures(&self) -> Vec<&str> {
        self.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect()
    }
}
