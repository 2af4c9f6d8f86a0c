use serde::Serialize;

use super::grid;
use super::{box_vl, GeometryError, LatticeBox, Vertex};

const TOL: f64 = 1e-9;

/// Closed parallelogram with corners `(a,b)`, `(a+l,b+h)`, `(a+l,b+h+w)`, `(a,b+w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parallelogram {
    pub a: f64,
    pub b: f64,
    pub length: f64,
    pub rise: f64,
    pub width: f64,
    pub angle: f64,
    pub anchor: Vertex,
    pub good: bool,
}

fn floor_snapped(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < TOL * x.abs().max(1.0) {
        r as i64
    } else {
        x.floor() as i64
    }
}

fn is_integral(x: f64) -> bool {
    x.fract() == 0.0
}

pub fn make_parallelogram(a: f64, b: f64, l: f64, h: f64, w: f64) -> Result<Parallelogram, GeometryError> {
    if ![a, b, l, h, w].iter().all(|x| x.is_finite()) {
        return Err(GeometryError::BadParallelogram("non-finite parameter".into()));
    }
    if w < 10.0 {
        return Err(GeometryError::BadParallelogram(format!("width {w} < 10")));
    }
    if l < w {
        return Err(GeometryError::BadParallelogram(format!("length {l} < width {w}")));
    }
    if !(0.0..=l).contains(&h) {
        return Err(GeometryError::BadParallelogram(format!("rise {h} outside [0, {l}]")));
    }
    let angle = (h / l).atan();
    let r2 = h * h + l * l;
    let sin2 = h * h / r2;
    let sincos = h * l / r2;
    // anchor measured from the base corner
    let ax = a + (h + l - 7.0 * w * sin2) / 2.0;
    let ay = b + (h - l + 7.0 * w * sincos) / 2.0;
    let anchor = Vertex::new(floor_snapped(ax), floor_snapped(ay));
    let good = is_integral(a) && is_integral(l) && l == 16.0 * w;
    Ok(Parallelogram { a, b, length: l, rise: h, width: w, angle, anchor, good })
}

impl Parallelogram {
    pub fn slope(&self) -> f64 {
        self.rise / self.length
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        let (a, b, l, h, w) = (self.a, self.b, self.length, self.rise, self.width);
        [(a, b), (a + l, b + h), (a + l, b + h + w), (a, b + w)]
    }

    /// Coordinates `(s, t)` with `p = (a, b) + s (1, h/l) + t (0, 1)`.
    pub fn local(&self, p: (f64, f64)) -> (f64, f64) {
        let s = p.0 - self.a;
        (s, p.1 - self.b - s * self.slope())
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        self.contains_within(p, TOL)
    }

    pub fn contains_within(&self, p: (f64, f64), tol: f64) -> bool {
        let (s, t) = self.local(p);
        s >= -tol && s <= self.length + tol && t >= -tol && t <= self.width + tol
    }
}

/// A parallelogram rotated by `turns` quarter turns counterclockwise about `pivot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlacedParallelogram {
    pub shape: Parallelogram,
    pub turns: u8,
    pub pivot: Vertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Start,
    End,
}

fn rotate(p: (f64, f64), pivot: Vertex, turns: u8) -> (f64, f64) {
    let (mut x, mut y) = (p.0 - pivot.x as f64, p.1 - pivot.y as f64);
    for _ in 0..turns % 4 {
        (x, y) = (-y, x);
    }
    (x + pivot.x as f64, y + pivot.y as f64)
}

pub fn rotate_vertex(v: Vertex, pivot: Vertex, turns: u8) -> Vertex {
    let (mut x, mut y) = (v.x - pivot.x, v.y - pivot.y);
    for _ in 0..turns % 4 {
        (x, y) = (-y, x);
    }
    Vertex::new(x + pivot.x, y + pivot.y)
}

impl PlacedParallelogram {
    pub fn unrotated(shape: Parallelogram) -> Self {
        PlacedParallelogram { shape, turns: 0, pivot: shape.anchor }
    }

    fn to_local_frame(&self, v: Vertex) -> (f64, f64) {
        let back = rotate_vertex(v, self.pivot, (4 - self.turns % 4) % 4);
        (back.x as f64, back.y as f64)
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        self.shape.corners().map(|c| rotate(c, self.pivot, self.turns))
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.shape.contains(self.to_local_frame(v))
    }

    /// Smallest lattice box containing the lattice points of the closed region.
    pub fn bounding_box(&self) -> LatticeBox {
        let cs = self.corners();
        let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| cs.iter().map(pick).fold(init, f);
        let x0 = fold(f64::min, f64::INFINITY, |c| c.0);
        let x1 = fold(f64::max, f64::NEG_INFINITY, |c| c.0);
        let y0 = fold(f64::min, f64::INFINITY, |c| c.1);
        let y1 = fold(f64::max, f64::NEG_INFINITY, |c| c.1);
        let lo = Vertex::new((x0 - TOL).ceil() as i64, (y0 - TOL).ceil() as i64);
        let hi = Vertex::new((x1 + TOL).floor() as i64, (y1 + TOL).floor() as i64);
        LatticeBox::spanning(lo, hi).expect("corners are ordered")
    }

    pub fn lattice_points(&self) -> Vec<Vertex> {
        let bb = self.bounding_box();
        bb.vertices().filter(|&v| self.contains(v)).collect()
    }

    /// Which of the two crossing sides `v` touches: the first lattice column on either short side.
    pub fn side_of(&self, v: Vertex) -> Option<Side> {
        if !self.contains(v) {
            return None;
        }
        let (s, _) = self.shape.local(self.to_local_frame(v));
        if s < 1.0 - TOL {
            Some(Side::Start)
        } else if s > self.shape.length - 1.0 + TOL {
            Some(Side::End)
        } else {
            None
        }
    }
}

/// Four quarter-turn copies of a good parallelogram about its anchor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Annulus {
    pub pieces: [PlacedParallelogram; 4],
    pub center: Vertex,
    pub inner: LatticeBox,
    pub outer: LatticeBox,
}

impl Annulus {
    pub fn contains(&self, v: Vertex) -> bool {
        self.pieces.iter().any(|p| p.contains(v))
    }

    /// Membership of the ring on every cell of `window`.
    pub fn region_mask(&self, window: &LatticeBox) -> Vec<bool> {
        let mut mask = vec![false; window.len()];
        for piece in &self.pieces {
            for v in piece.lattice_points() {
                if let Some(i) = window.index(v) {
                    mask[i] = true;
                }
            }
        }
        mask
    }

    /// Lattice surround test: no 8-connected route avoiding the ring joins the outside to the inner box.
    pub fn surrounds_inner(&self) -> bool {
        let window = LatticeBox::new(self.outer.corner.offset(-1, -1), self.outer.width + 2, self.outer.height + 2)
            .expect("non-empty");
        let blocked = self.region_mask(&window);
        !grid::outside_reaches(&window, &blocked, &self.inner)
    }

    pub fn rotated(&self) -> [PlacedParallelogram; 4] {
        self.pieces.map(|p| PlacedParallelogram { turns: (p.turns + 1) % 4, ..p })
    }
}

pub fn rotate_and_assemble(d: &Parallelogram) -> Result<Annulus, GeometryError> {
    if !d.good {
        return Err(GeometryError::NotGood);
    }
    let v0 = d.anchor;
    let pieces = [0u8, 1, 2, 3].map(|turns| PlacedParallelogram { shape: *d, turns, pivot: v0 });
    let inner = box_vl(v0, 2.0 * d.width)?;
    let outer = box_vl(v0, 4.0 * d.length)?;
    let half = 2.0 * d.length;
    for piece in &pieces {
        for (x, y) in piece.corners() {
            if (x - v0.x as f64).abs() > half + TOL || (y - v0.y as f64).abs() > half + TOL {
                return Err(GeometryError::Annulus(format!("corner ({x}, {y}) leaves the outer box")));
            }
        }
    }
    let annulus = Annulus { pieces, center: v0, inner, outer };
    if inner.vertices().any(|v| annulus.contains(v)) {
        return Err(GeometryError::Annulus("ring meets the inner box".into()));
    }
    if !annulus.surrounds_inner() {
        return Err(GeometryError::Annulus("ring does not surround the inner box".into()));
    }
    Ok(annulus)
}
