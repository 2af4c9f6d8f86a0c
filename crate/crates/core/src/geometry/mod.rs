//! Lattice boxes, tilings and the parallelogram/annulus constructions.

mod crossing;
pub mod grid;
mod parallelogram;

pub use crossing::{crossing_geometry, CrossingGeometry, Octant};
pub use parallelogram::{
    make_parallelogram, rotate_and_assemble, rotate_vertex, Annulus, Parallelogram, PlacedParallelogram, Side,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("box size must be positive, got {0}")]
    EmptyBox(String),
    #[error("parallelogram constraint violated: {0}")]
    BadParallelogram(String),
    #[error("parallelogram is not good (a and l integral, l = 16 w required)")]
    NotGood,
    #[error("annulus check failed: {0}")]
    Annulus(String),
    #[error("scale parameter invalid: {0}")]
    Scale(String),
    #[error("infeasible placement: {0}")]
    Infeasible(String),
}

/// A point of the square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i64,
    pub y: i64,
}

impl Vertex {
    pub const fn new(x: i64, y: i64) -> Self {
        Vertex { x, y }
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Vertex::new(self.x + dx, self.y + dy)
    }

    /// Nearest neighbours in the order east, north, west, south.
    pub fn neighbors(self) -> [Vertex; 4] {
        [self.offset(1, 0), self.offset(0, 1), self.offset(-1, 0), self.offset(0, -1)]
    }

    pub fn sup_dist(self, other: Vertex) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn l1_dist(self, other: Vertex) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    /// Squared Euclidean distance, exact.
    pub fn dist2(self, other: Vertex) -> i128 {
        let dx = (self.x - other.x) as i128;
        let dy = (self.y - other.y) as i128;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Vertex) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        dx.hypot(dy)
    }

    pub fn is_adjacent(self, other: Vertex) -> bool {
        self.l1_dist(other) == 1
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Axis-aligned rectangle of lattice points `corner + (i, j)`, `0 <= i < width`, `0 <= j < height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub corner: Vertex,
    pub width: usize,
    pub height: usize,
}

impl LatticeBox {
    pub fn new(corner: Vertex, width: usize, height: usize) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyBox(format!("{width}x{height}")));
        }
        Ok(LatticeBox { corner, width, height })
    }

    pub fn square(corner: Vertex, side: usize) -> Result<Self, GeometryError> {
        Self::new(corner, side, side)
    }

    /// Box spanning the two corners inclusive.
    pub fn spanning(lo: Vertex, hi: Vertex) -> Result<Self, GeometryError> {
        if hi.x < lo.x || hi.y < lo.y {
            return Err(GeometryError::EmptyBox(format!("{lo}..{hi}")));
        }
        Self::new(lo, (hi.x - lo.x + 1) as usize, (hi.y - lo.y + 1) as usize)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_corner(&self) -> Vertex {
        self.corner.offset(self.width as i64 - 1, self.height as i64 - 1)
    }

    /// Side length in lattice units (vertex count minus one) of the longer side.
    pub fn side_length(&self) -> usize {
        self.width.max(self.height) - 1
    }

    pub fn contains(&self, v: Vertex) -> bool {
        let dx = v.x - self.corner.x;
        let dy = v.y - self.corner.y;
        dx >= 0 && dy >= 0 && (dx as usize) < self.width && (dy as usize) < self.height
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        self.contains(other.corner) && self.contains(other.max_corner())
    }

    pub fn intersects(&self, other: &LatticeBox) -> bool {
        let a = self.max_corner();
        let b = other.max_corner();
        self.corner.x <= b.x && other.corner.x <= a.x && self.corner.y <= b.y && other.corner.y <= a.y
    }

    /// Row-major index of `v`.
    pub fn index(&self, v: Vertex) -> Option<usize> {
        if self.contains(v) {
            Some(((v.y - self.corner.y) as usize) * self.width + (v.x - self.corner.x) as usize)
        } else {
            None
        }
    }

    pub fn vertex(&self, idx: usize) -> Vertex {
        self.corner.offset((idx % self.width) as i64, (idx / self.width) as i64)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.len()).map(move |i| self.vertex(i))
    }

    /// True when `v` lies in the box and has a lattice neighbour outside it.
    pub fn on_boundary(&self, v: Vertex) -> bool {
        if !self.contains(v) {
            return false;
        }
        let m = self.max_corner();
        v.x == self.corner.x || v.y == self.corner.y || v.x == m.x || v.y == m.y
    }

    pub fn boundary(&self) -> Vec<Vertex> {
        self.vertices().filter(|&v| self.on_boundary(v)).collect()
    }

    /// The box shrunk by one on every side, if anything is left.
    pub fn interior(&self) -> Option<LatticeBox> {
        if self.width < 3 || self.height < 3 {
            return None;
        }
        Some(LatticeBox { corner: self.corner.offset(1, 1), width: self.width - 2, height: self.height - 2 })
    }

    /// Vertices at sup-distance greater than `chi * side` from the boundary.
    pub fn chi_core(&self, chi: f64) -> Option<LatticeBox> {
        let side = self.side_length() as f64;
        let lo = self.corner;
        let hi = self.max_corner();
        let margin = chi * side;
        // d(z, boundary) = min distance to the four edges
        let k = (margin.floor() as i64) + 1;
        LatticeBox::spanning(lo.offset(k, k), hi.offset(-k, -k)).ok()
    }
}

/// `[-N/2, N/2]^2` intersected with the lattice.
pub fn box_vn(n: u64) -> Result<LatticeBox, GeometryError> {
    if n == 0 {
        return Err(GeometryError::EmptyBox("N = 0".into()));
    }
    let h = (n / 2) as i64;
    LatticeBox::square(Vertex::new(-h, -h), (2 * h + 1) as usize)
}

/// Lattice points within sup-distance `l / 2` of `z`.
pub fn box_vl(z: Vertex, l: f64) -> Result<LatticeBox, GeometryError> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(GeometryError::EmptyBox(format!("side {l}")));
    }
    let r = (l / 2.0).floor() as i64;
    LatticeBox::square(z.offset(-r, -r), (2 * r + 1) as usize)
}

/// A tile `[a r - 1/2, (a+1) r - 1/2] x [b r - 1/2, (b+1) r - 1/2]` of the scale-`r` tiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoxId {
    pub scale: u64,
    pub a: i64,
    pub b: i64,
}

impl BoxId {
    pub fn lattice_box(&self) -> LatticeBox {
        let r = self.scale as i64;
        LatticeBox { corner: Vertex::new(self.a * r, self.b * r), width: self.scale as usize, height: self.scale as usize }
    }

    /// Lower-left lattice point of the tile.
    pub fn corner(&self) -> Vertex {
        let r = self.scale as i64;
        Vertex::new(self.a * r, self.b * r)
    }

    /// Geometric centre of the tile's lattice points.
    pub fn center(&self) -> (f64, f64) {
        let c = self.corner();
        let half = (self.scale as f64 - 1.0) / 2.0;
        (c.x as f64 + half, c.y as f64 + half)
    }
}

impl fmt::Display for BoxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}:{},{}]", self.scale, self.a, self.b)
    }
}

pub fn box_of(p: Vertex, r: u64) -> BoxId {
    assert!(r >= 1, "tile scale must be positive");
    let ri = r as i64;
    BoxId { scale: r, a: p.x.div_euclid(ri), b: p.y.div_euclid(ri) }
}

/// `k` with `K = 2^k`, rejecting anything that is not a power of two at least 2.
pub fn log2_scale(k: u64) -> Result<u32, GeometryError> {
    if k < 2 || !k.is_power_of_two() {
        return Err(GeometryError::Scale(format!("K = {k} is not a power of two >= 2")));
    }
    Ok(k.trailing_zeros())
}

/// Integer tile side `K^e`, where negative exponents collapse to singleton tiles.
pub fn tile_side(k: u64, e: i64) -> Result<u64, GeometryError> {
    if e <= 0 {
        return Ok(1);
    }
    k.checked_pow(e as u32).ok_or_else(|| GeometryError::Scale(format!("K^{e} overflows")))
}

/// Tiles of side `K^(j-2)` meeting `V_N`.
pub fn end_boxes(j: u32, k: u64, n: u64) -> Result<Vec<BoxId>, GeometryError> {
    if j == 0 {
        return Err(GeometryError::Scale("j must be at least 1".into()));
    }
    log2_scale(k)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let r = tile_side(k, j as i64 - 2)?;
    let vn = box_vn(n)?;
    let lo = box_of(vn.corner, r);
    let hi = box_of(vn.max_corner(), r);
    let mut out = Vec::with_capacity(((hi.a - lo.a + 1) * (hi.b - lo.b + 1)) as usize);
    for b in lo.b..=hi.b {
        for a in lo.a..=hi.a {
            out.push(BoxId { scale: r, a, b });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vn_examples() {
        let b = box_vn(4).unwrap();
        assert_eq!(b.len(), 25);
        assert_eq!(b.corner, Vertex::new(-2, -2));
        let b = box_vn(1).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.corner, Vertex::new(0, 0));
        let b = box_vn(2).unwrap();
        assert_eq!((b.width, b.height), (3, 3));
        assert_eq!(b.corner, Vertex::new(-1, -1));
        assert!(box_vn(0).is_err());
    }

    #[test]
    fn vl_examples() {
        assert_eq!(box_vl(Vertex::new(0, 0), 2.0).unwrap().len(), 9);
        let b = box_vl(Vertex::new(5, 5), 0.5).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.contains(Vertex::new(5, 5)));
        let b = box_vl(Vertex::new(0, 0), 8.0).unwrap();
        assert_eq!((b.width, b.height), (9, 9));
        assert!(box_vl(Vertex::new(0, 0), 0.0).is_err());
    }

    #[test]
    fn tile_examples() {
        assert_eq!(box_of(Vertex::new(0, 0), 4), BoxId { scale: 4, a: 0, b: 0 });
        assert_eq!(box_of(Vertex::new(-1, 0), 4), BoxId { scale: 4, a: -1, b: 0 });
        assert_eq!(box_of(Vertex::new(3, 3), 4), BoxId { scale: 4, a: 0, b: 0 });
    }

    #[test]
    fn end_box_counts() {
        assert_eq!(end_boxes(2, 4, 8).unwrap().len(), 81);
        assert_eq!(end_boxes(3, 4, 8).unwrap().len(), 9);
        assert_eq!(end_boxes(1, 4, 8).unwrap().len(), 81);
        assert!(end_boxes(3, 4, 0).unwrap().is_empty());
        assert!(end_boxes(3, 6, 8).is_err());
    }

    #[test]
    fn end_boxes_match_enumeration() {
        // every tile meeting V_N, found by scanning lattice points
        for (j, k, n) in [(2u32, 4u64, 8u64), (3, 4, 8), (3, 2, 10), (4, 2, 13), (3, 8, 30)] {
            let r = tile_side(k, j as i64 - 2).unwrap();
            let mut seen: Vec<BoxId> = box_vn(n).unwrap().vertices().map(|v| box_of(v, r)).collect();
            seen.sort();
            seen.dedup();
            let mut got = end_boxes(j, k, n).unwrap();
            got.sort();
            assert_eq!(got, seen);
        }
    }

    #[test]
    fn chi_core_is_strictly_inside() {
        let b = box_vn(64).unwrap();
        let core = b.chi_core(0.1).unwrap();
        for v in b.vertices() {
            let d = (v.x - b.corner.x)
                .min(v.y - b.corner.y)
                .min(b.max_corner().x - v.x)
                .min(b.max_corner().y - v.y);
            assert_eq!(core.contains(v), (d as f64) > 6.4, "{v}");
        }
    }

    proptest! {
        #[test]
        fn tiling_is_a_partition(x in -10_000i64..10_000, y in -10_000i64..10_000, r in 1u64..50) {
            let p = Vertex::new(x, y);
            let t = box_of(p, r);
            let ri = r as f64;
            let (px, py) = (x as f64, y as f64);
            prop_assert!(t.a as f64 * ri - 0.5 <= px && px <= (t.a + 1) as f64 * ri - 0.5);
            prop_assert!(t.b as f64 * ri - 0.5 <= py && py <= (t.b + 1) as f64 * ri - 0.5);
            prop_assert!(t.lattice_box().contains(p));
            for (da, db) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
                let other = BoxId { scale: r, a: t.a + da, b: t.b + db };
                prop_assert!(!other.lattice_box().contains(p));
            }
        }
    }
}
