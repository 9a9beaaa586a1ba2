//! Path-copying persistent segment trees, nested once per axis.
//!
//! Each axis is indexed by rank: entries are sorted by their coordinate on
//! that axis (ties by entry id) and a coordinate window maps to a rank
//! window. A version is a root handle; inserting returns a new root and
//! leaves every older version intact.

use crate::geometry::Point;

/// Per-axis rank orders of a fixed entry list.
#[derive(Clone, Debug)]
pub struct RankSpace {
    order: Vec<Vec<u32>>,
    rank: Vec<Vec<u32>>,
    coord: Vec<Vec<f64>>,
}

impl RankSpace {
    #[allow(clippy::needless_range_loop)]
    pub fn new(points: &[Point]) -> RankSpace {
        let d = points.first().map_or(0, |p| p.dim());
        let n = points.len();
        let mut order = Vec::with_capacity(d);
        let mut rank = Vec::with_capacity(d);
        let mut coord = Vec::with_capacity(d);
        for a in 0..d {
            let mut ids: Vec<u32> = (0..n as u32).collect();
            ids.sort_by(|&x, &y| {
                points[x as usize][a]
                    .total_cmp(&points[y as usize][a])
                    .then(x.cmp(&y))
            });
            let mut r = vec![0u32; n];
            for (pos, &id) in ids.iter().enumerate() {
                r[id as usize] = pos as u32;
            }
            coord.push(ids.iter().map(|&id| points[id as usize][a]).collect());
            order.push(ids);
            rank.push(r);
        }
        RankSpace { order, rank, coord }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.order.first().map_or(0, |o| o.len())
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn rank(&self, axis: usize, entry: u32) -> u32 {
        self.rank[axis][entry as usize]
    }

    #[inline]
    pub fn entry_at(&self, axis: usize, rank: u32) -> u32 {
        self.order[axis][rank as usize]
    }

    #[inline]
    pub fn coord_at(&self, axis: usize, rank: u32) -> f64 {
        self.coord[axis][rank as usize]
    }

    /// Half-open rank window of the closed coordinate interval `[lo, hi]`.
    #[inline]
    pub fn window(&self, axis: usize, lo: f64, hi: f64) -> (u32, u32) {
        let c = &self.coord[axis];
        let a = c.partition_point(|&x| x < lo);
        let b = c.partition_point(|&x| x <= hi);
        (a as u32, b.max(a) as u32)
    }
}

/// Version handle; 0 is the empty structure.
pub type Version = u32;

#[derive(Clone, Copy, Debug)]
struct INode {
    left: u32,
    right: u32,
    down: u32,
}

#[derive(Clone, Copy, Debug)]
struct LNode {
    left: u32,
    right: u32,
    weight: f64,
    min_id: u32,
}

/// Persistent `e`-level range structure over rank coordinates `0..universe`.
#[derive(Clone, Debug)]
pub struct PersistentTree {
    levels: usize,
    universe: u32,
    inner: Vec<Vec<INode>>,
    last: Vec<LNode>,
    insertions: u64,
}

impl PersistentTree {
    pub fn new(levels: usize, universe: usize) -> PersistentTree {
        assert!(levels >= 1);
        let sentinel_i = INode {
            left: 0,
            right: 0,
            down: 0,
        };
        let sentinel_l = LNode {
            left: 0,
            right: 0,
            weight: 0.0,
            min_id: u32::MAX,
        };
        PersistentTree {
            levels,
            universe: universe.max(1) as u32,
            inner: (1..levels).map(|_| vec![sentinel_i]).collect(),
            last: vec![sentinel_l],
            insertions: 0,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Number of insert calls so far.
    pub fn insertions(&self) -> u64 {
        self.insertions
    }

    /// Allocated nodes across all levels.
    pub fn node_count(&self) -> usize {
        self.last.len() + self.inner.iter().map(Vec::len).sum::<usize>()
    }

    /// Returns a new version holding `v`'s contents plus one point.
    pub fn insert(&mut self, v: Version, ranks: &[u32], id: u32, weight: f64) -> Version {
        debug_assert_eq!(ranks.len(), self.levels);
        self.insertions += 1;
        if self.levels == 1 {
            self.ins_last(v, 0, self.universe, ranks[0], id, weight)
        } else {
            self.ins_inner(0, v, 0, self.universe, ranks, id, weight)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn ins_inner(&mut self, lvl: usize, node: u32, lo: u32, hi: u32, ranks: &[u32], id: u32, w: f64) -> u32 {
        let old = self.inner[lvl][node as usize];
        let down = if lvl + 2 < self.levels {
            self.ins_inner(lvl + 1, old.down, 0, self.universe, ranks, id, w)
        } else {
            self.ins_last(old.down, 0, self.universe, ranks[self.levels - 1], id, w)
        };
        let (mut left, mut right) = (old.left, old.right);
        if hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ranks[lvl] < mid {
                left = self.ins_inner(lvl, old.left, lo, mid, ranks, id, w);
            } else {
                right = self.ins_inner(lvl, old.right, mid, hi, ranks, id, w);
            }
        }
        let arena = &mut self.inner[lvl];
        arena.push(INode { left, right, down });
        (arena.len() - 1) as u32
    }

    fn ins_last(&mut self, node: u32, lo: u32, hi: u32, r: u32, id: u32, w: f64) -> u32 {
        let old = self.last[node as usize];
        let (mut left, mut right) = (old.left, old.right);
        if hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if r < mid {
                left = self.ins_last(old.left, lo, mid, r, id, w);
            } else {
                right = self.ins_last(old.right, mid, hi, r, id, w);
            }
        }
        self.last.push(LNode {
            left,
            right,
            weight: old.weight + w,
            min_id: old.min_id.min(id),
        });
        (self.last.len() - 1) as u32
    }

    /// Total weight of points with `windows[l].0 <= rank_l < windows[l].1` on every level.
    pub fn weight(&self, v: Version, windows: &[(u32, u32)]) -> f64 {
        let mut acc = 0.0;
        self.visit(v, windows, &mut |n: &LNode| acc += n.weight);
        acc
    }

    /// Lowest entry id inside the windows.
    pub fn min_id(&self, v: Version, windows: &[(u32, u32)]) -> Option<u32> {
        let mut best = u32::MAX;
        self.visit(v, windows, &mut |n: &LNode| best = best.min(n.min_id));
        (best != u32::MAX).then_some(best)
    }

    fn visit<F: FnMut(&LNode)>(&self, v: Version, windows: &[(u32, u32)], f: &mut F) {
        if self.levels == 1 {
            self.visit_last(v, 0, self.universe, windows[0], f);
        } else {
            self.visit_inner(0, v, 0, self.universe, windows, f);
        }
    }

    fn visit_inner<F: FnMut(&LNode)>(&self, lvl: usize, node: u32, lo: u32, hi: u32, windows: &[(u32, u32)], f: &mut F) {
        let (a, b) = windows[lvl];
        if node == 0 || b <= lo || hi <= a {
            return;
        }
        let n = self.inner[lvl][node as usize];
        if a <= lo && hi <= b {
            if lvl + 2 < self.levels {
                self.visit_inner(lvl + 1, n.down, 0, self.universe, windows, f);
            } else {
                self.visit_last(n.down, 0, self.universe, windows[self.levels - 1], f);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.visit_inner(lvl, n.left, lo, mid, windows, f);
        self.visit_inner(lvl, n.right, mid, hi, windows, f);
    }

    fn visit_last<F: FnMut(&LNode)>(&self, node: u32, lo: u32, hi: u32, (a, b): (u32, u32), f: &mut F) {
        if node == 0 || b <= lo || hi <= a {
            return;
        }
        let n = &self.last[node as usize];
        if a <= lo && hi <= b {
            f(n);
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.visit_last(n.left, lo, mid, (a, b), f);
        self.visit_last(n.right, mid, hi, (a, b), f);
    }

    /// Largest occupied rank inside the window (single-level trees only).
    pub fn max_rank(&self, v: Version, window: (u32, u32)) -> Option<u32> {
        debug_assert_eq!(self.levels, 1);
        self.extreme_rank(v, 0, self.universe, window, true)
    }

    /// Smallest occupied rank inside the window (single-level trees only).
    pub fn min_rank(&self, v: Version, window: (u32, u32)) -> Option<u32> {
        debug_assert_eq!(self.levels, 1);
        self.extreme_rank(v, 0, self.universe, window, false)
    }

    fn extreme_rank(&self, node: u32, lo: u32, hi: u32, (a, b): (u32, u32), max: bool) -> Option<u32> {
        if node == 0 || b <= lo || hi <= a {
            return None;
        }
        let n = &self.last[node as usize];
        if n.min_id == u32::MAX {
            return None;
        }
        if hi - lo == 1 {
            return Some(lo);
        }
        let mid = lo + (hi - lo) / 2;
        let (first, second) = if max {
            ((n.right, mid, hi), (n.left, lo, mid))
        } else {
            ((n.left, lo, mid), (n.right, mid, hi))
        };
        self.extreme_rank(first.0, first.1, first.2, (a, b), max)
            .or_else(|| self.extreme_rank(second.0, second.1, second.2, (a, b), max))
    }
}
