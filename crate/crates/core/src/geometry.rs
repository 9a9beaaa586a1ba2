//! Points, boxes, standard lengths, quadtree cells and Z-order keys.
//!
//! All index structures work in a normalized space where the data fits
//! inside the unit cube `[0,1)^d`. A cell of level `l` is the half-open box
//! `[c_i 2^-l, (c_i+1) 2^-l)` per axis; points are located by their leaf key,
//! the integer vector `floor(x_i 2^50)`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;
/// Deepest quadtree level; points sharing a leaf key at this level are merged.
pub const MAX_LEVEL: u32 = 50;
const LEAF_SCALE: f64 = (1u64 << MAX_LEVEL) as f64;
const LEAF_MAX: u64 = (1u64 << MAX_LEVEL) - 1;

#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    c: [f64; MAX_DIM],
    d: u8,
}

impl Point {
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[f64]) -> Point {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "point dimension {} out of range",
            coords.len()
        );
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            c,
            d: coords.len() as u8,
        }
    }

    /// Checked constructor: rejects bad dimensions and non-finite values.
    pub fn try_new(coords: &[f64]) -> Result<Point> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Dimension(coords.len()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point::new(coords))
    }

    pub fn zeros(d: usize) -> Point {
        Point::new(&[0.0; MAX_DIM][..d])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.d as usize]
    }

    #[inline]
    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.c[..self.d as usize]
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let t = self.c[i] - other.c[i];
            s += t * t;
        }
        s
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    /// Distance to the nearest point of `set`; infinite for an empty set.
    pub fn dist_to_set(&self, set: &[Point]) -> f64 {
        set.iter()
            .map(|c| self.dist2(c))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Drops the axes in `mask`, keeping the others in order.
    pub fn project_out(&self, mask: AxisSet) -> Point {
        let mut c = [0.0; MAX_DIM];
        let mut m = 0;
        for i in 0..self.dim() {
            if !mask.contains(i) {
                c[m] = self.c[i];
                m += 1;
            }
        }
        Point::new(&c[..m])
    }

    /// Total order on coordinates, used only to break ties deterministically.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for i in 0..self.dim() {
            match self.c[i].total_cmp(&other.c[i]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl Index<usize> for Point {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedPoint {
    pub point: Point,
    pub weight: f64,
}

impl WeightedPoint {
    pub fn new(point: Point, weight: f64) -> WeightedPoint {
        WeightedPoint { point, weight }
    }

    pub fn unit(point: Point) -> WeightedPoint {
        WeightedPoint { point, weight: 1.0 }
    }
}

/// Set of axes as a bit mask (bit `i` = axis `i`, zero based).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AxisSet(pub u8);

impl AxisSet {
    pub const EMPTY: AxisSet = AxisSet(0);

    pub fn all(d: usize) -> AxisSet {
        AxisSet(((1u16 << d) - 1) as u8)
    }

    pub fn single(i: usize) -> AxisSet {
        AxisSet(1 << i)
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn complement(self, d: usize) -> AxisSet {
        AxisSet(!self.0 & AxisSet::all(d).0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..8).filter(move |&i| self.contains(i))
    }
}

impl fmt::Debug for AxisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Axis-parallel box with closed intervals.
#[derive(Clone, Copy, PartialEq)]
pub struct Rect {
    lo: Point,
    hi: Point,
}

impl Rect {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Rect> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let lo = Point::try_new(lo)?;
        let hi = Point::try_new(hi)?;
        Rect::from_corners(lo, hi)
    }

    pub fn from_corners(lo: Point, hi: Point) -> Result<Rect> {
        for i in 0..lo.dim() {
            if lo[i] > hi[i] {
                return Err(Error::InvalidRect(i));
            }
        }
        Ok(Rect { lo, hi })
    }

    /// The closed unit cube.
    pub fn unit(d: usize) -> Rect {
        Rect {
            lo: Point::zeros(d),
            hi: Point::new(&[1.0; MAX_DIM][..d]),
        }
    }

    /// Box covering all of space.
    pub fn everything(d: usize) -> Rect {
        Rect {
            lo: Point::new(&[f64::NEG_INFINITY; MAX_DIM][..d]),
            hi: Point::new(&[f64::INFINITY; MAX_DIM][..d]),
        }
    }

    /// Smallest box containing all points; `None` for an empty slice.
    pub fn bounding<'a, I: IntoIterator<Item = &'a Point>>(points: I) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            for i in 0..p.dim() {
                lo.c[i] = lo.c[i].min(p.c[i]);
                hi.c[i] = hi.c[i].max(p.c[i]);
            }
        }
        Some(Rect { lo, hi })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    #[inline]
    pub fn lo(&self) -> &Point {
        &self.lo
    }

    #[inline]
    pub fn hi(&self) -> &Point {
        &self.hi
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|i| self.lo.c[i] <= p.c[i] && p.c[i] <= self.hi.c[i])
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        (0..self.dim()).all(|i| self.lo.c[i] <= r.lo.c[i] && r.hi.c[i] <= self.hi.c[i])
    }

    pub fn intersects(&self, r: &Rect) -> bool {
        (0..self.dim()).all(|i| self.lo.c[i] <= r.hi.c[i] && r.lo.c[i] <= self.hi.c[i])
    }

    pub fn intersection(&self, r: &Rect) -> Option<Rect> {
        if !self.intersects(r) {
            return None;
        }
        let mut out = *self;
        for i in 0..self.dim() {
            out.lo.c[i] = self.lo.c[i].max(r.lo.c[i]);
            out.hi.c[i] = self.hi.c[i].min(r.hi.c[i]);
        }
        Some(out)
    }

    /// Length of the main diagonal.
    pub fn diagonal(&self) -> f64 {
        self.lo.dist(&self.hi)
    }

    /// The box with the axes in `mask` removed.
    pub fn project_out(&self, mask: AxisSet) -> Rect {
        Rect {
            lo: self.lo.project_out(mask),
            hi: self.hi.project_out(mask),
        }
    }
}

impl fmt::Debug for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rect({:?} .. {:?})", self.lo, self.hi)
    }
}

/// The length `2^-exponent`. Ordered by value, so a larger exponent is smaller.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StandardLength(u32);

impl StandardLength {
    pub const ONE: StandardLength = StandardLength(0);

    pub fn new(exponent: u32) -> StandardLength {
        StandardLength(exponent)
    }

    #[inline]
    pub fn exponent(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn value(self) -> f64 {
        exp2_neg(self.0)
    }

    pub fn half(self) -> StandardLength {
        StandardLength(self.0 + 1)
    }

    /// Twice the length, saturating at 1.
    pub fn double(self) -> StandardLength {
        StandardLength(self.0.saturating_sub(1))
    }

    /// Largest standard length `<= x`. Values above 1 clamp to 1.
    pub fn sfloor(x: f64) -> Result<StandardLength> {
        if x.is_nan() || x <= 0.0 {
            return Err(Error::InvalidParameter(format!("sfloor of nonpositive value {x}")));
        }
        if x >= 1.0 {
            return Ok(StandardLength::ONE);
        }
        if !x.is_normal() {
            return Ok(StandardLength(1074));
        }
        let e = ((x.to_bits() >> 52) & 0x7ff) as i64 - 1023;
        Ok(StandardLength((-e) as u32))
    }

    /// Smallest standard length `>= x`, clamped at 1.
    pub fn sceil(x: f64) -> Result<StandardLength> {
        let f = StandardLength::sfloor(x)?;
        if x >= 1.0 || f.value() == x {
            Ok(f)
        } else {
            Ok(f.double())
        }
    }

    /// Clamp to the deepest quadtree level.
    pub fn clamp_to_leaf(self) -> StandardLength {
        StandardLength(self.0.min(MAX_LEVEL))
    }
}

impl PartialOrd for StandardLength {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for StandardLength {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0)
    }
}

impl fmt::Debug for StandardLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^-{}", self.0)
    }
}

#[inline]
fn exp2_neg(e: u32) -> f64 {
    if e <= 1022 {
        f64::from_bits((1023 - e as u64) << 52)
    } else {
        0.5f64.powi(e as i32)
    }
}

/// Compares two integer vectors in Z-order (axis 0 supplies the most
/// significant bit of every interleaved group).
#[inline]
pub fn z_cmp(a: &[u64], b: &[u64]) -> Ordering {
    let mut axis = 0;
    let mut best = 0u64;
    for i in 0..a.len() {
        let x = a[i] ^ b[i];
        if best < x && best < (best ^ x) {
            axis = i;
            best = x;
        }
    }
    a[axis].cmp(&b[axis])
}

/// Integer location of a point at the deepest level.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct LeafKey {
    c: [u64; MAX_DIM],
    d: u8,
}

impl LeafKey {
    pub fn of_point(p: &Point) -> LeafKey {
        let mut c = [0u64; MAX_DIM];
        for (i, slot) in c.iter_mut().enumerate().take(p.dim()) {
            let x = (p[i] * LEAF_SCALE).floor();
            *slot = if x <= 0.0 {
                0
            } else if x >= LEAF_MAX as f64 {
                LEAF_MAX
            } else {
                x as u64
            };
        }
        LeafKey { c, d: p.d }
    }

    pub fn from_coords(coords: &[u64]) -> LeafKey {
        let mut c = [0u64; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        LeafKey {
            c,
            d: coords.len() as u8,
        }
    }

    #[inline]
    pub fn coords(&self) -> &[u64] {
        &self.c[..self.d as usize]
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    /// The cell of the given level containing this key.
    #[inline]
    pub fn cell(&self, level: u32) -> CellId {
        debug_assert!(level <= MAX_LEVEL);
        let mut c = [0u64; MAX_DIM];
        let shift = MAX_LEVEL - level;
        for (i, slot) in c.iter_mut().enumerate().take(self.dim()) {
            *slot = self.c[i] >> shift;
        }
        CellId {
            level: level as u8,
            d: self.d,
            c,
        }
    }

    /// Level of the smallest cell containing both keys.
    pub fn common_level(&self, other: &LeafKey) -> u32 {
        let x = (0..self.dim()).fold(0u64, |acc, i| acc | (self.c[i] ^ other.c[i]));
        MAX_LEVEL - (64 - x.leading_zeros())
    }

    /// Drops the axes in `mask`.
    pub fn project_out(&self, mask: AxisSet) -> LeafKey {
        let mut c = [0u64; MAX_DIM];
        let mut m = 0;
        for i in 0..self.dim() {
            if !mask.contains(i) {
                c[m] = self.c[i];
                m += 1;
            }
        }
        LeafKey { c, d: m as u8 }
    }
}

impl Ord for LeafKey {
    fn cmp(&self, other: &Self) -> Ordering {
        z_cmp(self.coords(), other.coords())
    }
}

impl PartialOrd for LeafKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for LeafKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LeafKey{:?}", self.coords())
    }
}

/// A standard quadtree cell.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellId {
    level: u8,
    d: u8,
    c: [u64; MAX_DIM],
}

impl CellId {
    pub fn root(d: usize) -> CellId {
        assert!((1..=MAX_DIM).contains(&d));
        CellId {
            level: 0,
            d: d as u8,
            c: [0; MAX_DIM],
        }
    }

    pub fn new(level: u32, coords: &[u64]) -> Result<CellId> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Dimension(coords.len()));
        }
        if level > MAX_LEVEL {
            return Err(Error::InvalidParameter(format!("cell level {level} exceeds {MAX_LEVEL}")));
        }
        if coords.iter().any(|&x| x >> level != 0) {
            return Err(Error::InvalidParameter("cell coordinate out of range".into()));
        }
        let mut c = [0u64; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(CellId {
            level: level as u8,
            d: coords.len() as u8,
            c,
        })
    }

    /// The cell of side `side` containing `p`, with side clamped to the leaf level.
    pub fn of_point(p: &Point, side: StandardLength) -> CellId {
        LeafKey::of_point(p).cell(side.exponent().min(MAX_LEVEL))
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level as u32
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    #[inline]
    pub fn coords(&self) -> &[u64] {
        &self.c[..self.d as usize]
    }

    #[inline]
    pub fn side(&self) -> StandardLength {
        StandardLength(self.level as u32)
    }

    #[inline]
    pub fn side_len(&self) -> f64 {
        exp2_neg(self.level as u32)
    }

    #[inline]
    pub fn lo(&self, i: usize) -> f64 {
        self.c[i] as f64 * self.side_len()
    }

    #[inline]
    pub fn hi(&self, i: usize) -> f64 {
        (self.c[i] + 1) as f64 * self.side_len()
    }

    /// Closed box of the cell.
    pub fn rect(&self) -> Rect {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for i in 0..self.dim() {
            lo[i] = self.lo(i);
            hi[i] = self.hi(i);
        }
        let d = self.dim();
        Rect {
            lo: Point::new(&lo[..d]),
            hi: Point::new(&hi[..d]),
        }
    }

    /// Largest closed box inside the half-open cell.
    pub fn inner_rect(&self) -> Rect {
        let mut r = self.rect();
        for i in 0..self.dim() {
            r.hi.c[i] = r.hi.c[i].next_down();
        }
        r
    }

    #[inline]
    pub fn contains_key(&self, key: &LeafKey) -> bool {
        let shift = MAX_LEVEL - self.level as u32;
        (0..self.dim()).all(|i| key.c[i] >> shift == self.c[i])
    }

    /// Half-open membership.
    pub fn contains_point(&self, p: &Point) -> bool {
        self.contains_key(&LeafKey::of_point(p))
    }

    /// True if `other` is nested inside (or equal to) this cell.
    pub fn contains(&self, other: &CellId) -> bool {
        if other.level < self.level {
            return false;
        }
        let shift = (other.level - self.level) as u32;
        (0..self.dim()).all(|i| other.c[i] >> shift == self.c[i])
    }

    pub fn interior_disjoint(&self, other: &CellId) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    pub fn parent(&self) -> Option<CellId> {
        if self.level == 0 {
            None
        } else {
            Some(self.ancestor(self.level as u32 - 1))
        }
    }

    pub fn ancestor(&self, level: u32) -> CellId {
        debug_assert!(level <= self.level as u32);
        let shift = self.level as u32 - level;
        let mut out = *self;
        out.level = level as u8;
        for i in 0..self.dim() {
            out.c[i] = self.c[i] >> shift;
        }
        out
    }

    /// Child number `mask`; bit `d-1-i` of the mask selects the upper half on axis `i`,
    /// so child numbers follow Z-order.
    pub fn child(&self, mask: usize) -> CellId {
        debug_assert!((self.level as u32) < MAX_LEVEL);
        let d = self.dim();
        let mut out = *self;
        out.level += 1;
        for i in 0..d {
            out.c[i] = (self.c[i] << 1) | ((mask >> (d - 1 - i)) & 1) as u64;
        }
        out
    }

    pub fn children(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..1usize << self.dim()).map(move |m| self.child(m))
    }

    /// First leaf key inside the cell in Z-order.
    pub fn first_leaf(&self) -> LeafKey {
        let shift = MAX_LEVEL - self.level as u32;
        let mut c = [0u64; MAX_DIM];
        for (i, slot) in c.iter_mut().enumerate().take(self.dim()) {
            *slot = self.c[i] << shift;
        }
        LeafKey { c, d: self.d }
    }

    /// Last leaf key inside the cell in Z-order.
    pub fn last_leaf(&self) -> LeafKey {
        let shift = MAX_LEVEL - self.level as u32;
        let mut c = [0u64; MAX_DIM];
        for (i, slot) in c.iter_mut().enumerate().take(self.dim()) {
            *slot = (self.c[i] << shift) | ((1u64 << shift) - 1);
        }
        LeafKey { c, d: self.d }
    }

    /// The closed Z-order interval of leaf keys covered by the cell. Two cells
    /// are nested exactly when their intervals are nested.
    pub fn morton_interval(&self) -> (LeafKey, LeafKey) {
        (self.first_leaf(), self.last_leaf())
    }

    /// Interleaved index among cells of the same level, if it fits in 128 bits.
    pub fn morton_index(&self) -> Option<u128> {
        let d = self.dim();
        if d * self.level as usize > 128 {
            return None;
        }
        let mut idx = 0u128;
        for b in (0..self.level as u32).rev() {
            for i in 0..d {
                idx = (idx << 1) | ((self.c[i] >> b) & 1) as u128;
            }
        }
        Some(idx)
    }

    /// Z-order comparison of cells; a cell sorts before the cells it contains.
    pub fn z_cmp(&self, other: &CellId) -> Ordering {
        self.first_leaf()
            .cmp(&other.first_leaf())
            .then(self.level.cmp(&other.level))
    }

    /// The cell and its same-level neighbours sharing a face or corner, clipped to the root.
    pub fn grid_cluster(&self) -> Vec<CellId> {
        let d = self.dim();
        let limit = 1u64 << self.level;
        let mut out = Vec::with_capacity(3usize.pow(d as u32));
        'codes: for code in 0..3usize.pow(d as u32) {
            let mut cell = *self;
            let mut rem = code;
            for i in 0..d {
                let v = self.c[i] as i64 + (rem % 3) as i64 - 1;
                rem /= 3;
                if v < 0 || v as u64 >= limit {
                    continue 'codes;
                }
                cell.c[i] = v as u64;
            }
            out.push(cell);
        }
        out.sort_by(|a, b| a.z_cmp(b));
        out
    }

    /// Drops the axes in `mask`.
    pub fn project_out(&self, mask: AxisSet) -> CellId {
        let mut out = *self;
        let mut m = 0;
        for i in 0..self.dim() {
            if !mask.contains(i) {
                out.c[m] = self.c[i];
                m += 1;
            }
        }
        for slot in out.c.iter_mut().skip(m) {
            *slot = 0;
        }
        out.d = m as u8;
        out
    }
}

impl fmt::Debug for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cell(l={}, {:?})", self.level, self.coords())
    }
}

/// How a cell meets a query box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceClass {
    /// The cell lies inside the box.
    Inside,
    /// The cell contains a vertex of the box.
    Corner,
    /// The cell meets no face of dimension below `t` but meets a `t`-face.
    AvoidsBelow(u8),
    /// The cell misses the box.
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub class: FaceClass,
    /// Axes whose two facets of the query both miss the cell. Along these axes
    /// the query constraint holds for the whole cell.
    pub free: AxisSet,
}

/// Classifies the closed box `[lo, hi]` against `q`.
pub fn classify_box(lo: &[f64], hi: &[f64], q: &Rect) -> Classification {
    let d = q.dim();
    let mut inside = true;
    let mut free = AxisSet::EMPTY;
    for i in 0..d {
        let (a, b) = (q.lo()[i], q.hi()[i]);
        if hi[i] < a || b < lo[i] {
            return Classification {
                class: FaceClass::Outside,
                free: AxisSet::EMPTY,
            };
        }
        let inner = a <= lo[i] && hi[i] <= b;
        inside &= inner;
        let crossed = (lo[i] <= a && a <= hi[i]) || (lo[i] <= b && b <= hi[i]);
        if !crossed {
            free.insert(i);
        }
    }
    if inside {
        return Classification {
            class: FaceClass::Inside,
            free: AxisSet::all(d),
        };
    }
    let class = if free.is_empty() {
        FaceClass::Corner
    } else {
        FaceClass::AvoidsBelow(free.len() as u8)
    };
    Classification { class, free }
}

pub fn classify_cell(cell: &CellId, q: &Rect) -> Classification {
    let r = cell.rect();
    classify_box(r.lo().coords(), r.hi().coords(), q)
}

/// Affine map from input coordinates into the unit cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalizer {
    offset: Point,
    scale: f64,
}

/// Relative padding of the bounding box so no point lands on the upper root boundary.
pub const NORMALIZE_PAD: f64 = 1.0 / 1024.0;

impl Normalizer {
    pub fn identity(d: usize) -> Normalizer {
        Normalizer {
            offset: Point::zeros(d),
            scale: 1.0,
        }
    }

    pub fn from_parts(offset: Point, scale: f64) -> Normalizer {
        Normalizer { offset, scale }
    }

    /// Fits the bounding box of `points` and maps them into `[0,1)^d`.
    pub fn fit(points: &[Point]) -> Result<(Normalizer, Vec<Point>)> {
        let first = points.first().ok_or(Error::EmptyInput)?;
        let d = first.dim();
        for p in points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.dim(),
                });
            }
            if p.coords().iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let bbox = Rect::bounding(points).expect("nonempty");
        let extent = (0..d)
            .map(|i| bbox.hi()[i] - bbox.lo()[i])
            .fold(0.0, f64::max);
        let scale = if extent > 0.0 {
            1.0 / (extent * (1.0 + NORMALIZE_PAD))
        } else {
            1.0
        };
        let norm = Normalizer {
            offset: *bbox.lo(),
            scale,
        };
        let out = points.iter().map(|p| norm.to_normalized(p)).collect();
        Ok((norm, out))
    }

    pub fn offset(&self) -> &Point {
        &self.offset
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn to_normalized(&self, p: &Point) -> Point {
        let mut out = *p;
        for i in 0..p.dim() {
            out.c[i] = (p.c[i] - self.offset.c[i]) * self.scale;
        }
        out
    }

    pub fn to_original(&self, p: &Point) -> Point {
        let mut out = *p;
        for i in 0..p.dim() {
            out.c[i] = p.c[i] / self.scale + self.offset.c[i];
        }
        out
    }

    pub fn rect_to_normalized(&self, r: &Rect) -> Rect {
        Rect {
            lo: self.to_normalized(r.lo()),
            hi: self.to_normalized(r.hi()),
        }
    }

    /// Converts a normalized length back to input units.
    pub fn length_to_original(&self, x: f64) -> f64 {
        x / self.scale
    }
}
