use serde::Serialize;

use super::{box_vl, make_parallelogram, tile_side, BoxId, GeometryError, LatticeBox, Parallelogram, Vertex};

/// Lattice symmetry taking the world frame to one where the displacement
/// between the two end boxes satisfies `dx >= dy >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Octant {
    pub flip_x: bool,
    pub flip_y: bool,
    pub swap: bool,
}

impl Octant {
    pub fn for_direction(dx: f64, dy: f64) -> Self {
        Octant { flip_x: dx < 0.0, flip_y: dy < 0.0, swap: dy.abs() > dx.abs() }
    }

    pub fn to_canonical(&self, p: (f64, f64)) -> (f64, f64) {
        let x = if self.flip_x { -p.0 } else { p.0 };
        let y = if self.flip_y { -p.1 } else { p.1 };
        if self.swap {
            (y, x)
        } else {
            (x, y)
        }
    }

    pub fn to_world(&self, p: (f64, f64)) -> (f64, f64) {
        let (x, y) = if self.swap { (p.1, p.0) } else { p };
        (if self.flip_x { -x } else { x }, if self.flip_y { -y } else { y })
    }

    pub fn vertex_to_world(&self, v: Vertex) -> Vertex {
        let (x, y) = if self.swap { (v.y, v.x) } else { (v.x, v.y) };
        Vertex::new(if self.flip_x { -x } else { x }, if self.flip_y { -y } else { y })
    }

    /// Image of a box centred at `v` under the inverse symmetry.
    fn centred_box_to_world(&self, v: Vertex, side: f64) -> Result<LatticeBox, GeometryError> {
        box_vl(self.vertex_to_world(v), side)
    }
}

/// Long parallelogram between two end boxes, the good pieces cut from it and their surrounding boxes.
#[derive(Debug, Clone, Serialize)]
pub struct CrossingGeometry {
    pub octant: Octant,
    /// In the canonical frame.
    pub long: Parallelogram,
    /// In the canonical frame.
    pub pieces: Vec<Parallelogram>,
    /// Piece anchors in world coordinates.
    pub anchors: Vec<Vertex>,
    /// Surrounding boxes in world coordinates.
    pub boxes: Vec<LatticeBox>,
}

fn box_distance_range(p: &LatticeBox, q: &LatticeBox) -> (f64, f64) {
    let gap = |lo1: i64, hi1: i64, lo2: i64, hi2: i64| (lo2 - hi1).max(lo1 - hi2).max(0) as f64;
    let span = |lo1: i64, hi1: i64, lo2: i64, hi2: i64| (hi2 - lo1).abs().max((hi1 - lo2).abs()) as f64;
    let (pa, pb, qa, qb) = (p.corner, p.max_corner(), q.corner, q.max_corner());
    let min = gap(pa.x, pb.x, qa.x, qb.x).hypot(gap(pa.y, pb.y, qa.y, qb.y));
    let max = span(pa.x, pb.x, qa.x, qb.x).hypot(span(pa.y, pb.y, qa.y, qb.y));
    (min, max)
}

fn disjoint_all(boxes: &[LatticeBox]) -> bool {
    let ordered_in_x = boxes.windows(2).all(|w| w[0].max_corner().x < w[1].corner.x);
    if ordered_in_x {
        return true;
    }
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes[i].intersects(&boxes[j]) {
                return false;
            }
        }
    }
    true
}

/// Places the long parallelogram joining the centres of two end boxes of side `K^(j-2)`
/// and cuts `floor(sqrt(K)/8)` good pieces from it, one centred in each equal section.
pub fn crossing_geometry(start: BoxId, end: BoxId, j: u32, k: u64) -> Result<CrossingGeometry, GeometryError> {
    super::log2_scale(k)?;
    if j == 0 {
        return Err(GeometryError::Scale("j must be at least 1".into()));
    }
    let scale = tile_side(k, j as i64 - 2)?;
    if start.scale != scale || end.scale != scale {
        return Err(GeometryError::Scale(format!("end boxes must have side {scale}")));
    }
    let kf = k as f64;
    let count = (kf.sqrt() / 8.0).floor() as usize;
    if count == 0 {
        return Err(GeometryError::Infeasible(format!("floor(sqrt({k})/8) = 0 pieces")));
    }
    let kj = kf.powi(j as i32);
    let (dmin, dmax) = box_distance_range(&start.lattice_box(), &end.lattice_box());
    if dmax < kj || dmin > (1.0 + 1.0 / kf) * kj {
        return Err(GeometryError::Infeasible(format!(
            "box distance range [{dmin}, {dmax}] misses [{kj}, {}]",
            (1.0 + 1.0 / kf) * kj
        )));
    }

    let width = 20.0 * kf.powi(j as i32 - 1);
    let long_len = kj / 4.0;
    let big_l = kf.powf(j as f64 - 0.5);

    let (sx, sy) = start.center();
    let (ex, ey) = end.center();
    let octant = Octant::for_direction(ex - sx, ey - sy);
    let p = octant.to_canonical((sx, sy));
    let q = octant.to_canonical((ex, ey));
    let slope = if q.0 > p.0 { (q.1 - p.1) / (q.0 - p.0) } else { 0.0 };
    let mid = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0);
    let a = mid.0 - long_len / 2.0;
    let b = mid.1 - slope * long_len / 2.0 - width / 2.0;
    let long = make_parallelogram(a, b, long_len, slope * long_len, width)?;

    let section = long_len / count as f64;
    let piece_len = 16.0 * width;
    let mut pieces = Vec::with_capacity(count);
    let mut anchors = Vec::with_capacity(count);
    let mut boxes = Vec::with_capacity(count);
    for i in 0..count {
        let sec_lo = a + i as f64 * section;
        let centre = sec_lo + section / 2.0;
        let ai = (centre - piece_len / 2.0).floor();
        let bi = b + (ai - a) * slope;
        let piece = make_parallelogram(ai, bi, piece_len, piece_len * slope, width)?;
        debug_assert!(piece.good);
        let fifth_lo = sec_lo + 0.4 * section;
        let fifth_hi = sec_lo + 0.6 * section;
        if ai < fifth_lo - 1.0 || ai + piece_len > fifth_hi + 1.0 {
            return Err(GeometryError::Infeasible(format!(
                "piece {i} of length {piece_len} does not fit the middle fifth of a section of length {section}"
            )));
        }
        // rounding at these magnitudes is relative, not absolute
        let tol = 1e-9 + 1e-12 * (a.abs() + b.abs() + long_len);
        if !piece.corners().iter().all(|&c| long.contains_within(c, tol)) {
            return Err(GeometryError::Infeasible(format!("piece {i} leaves the long parallelogram")));
        }
        let v = piece.anchor;
        let half = 2.0 * piece_len;
        if !piece.corners().iter().all(|&(x, y)| (x - v.x as f64).abs() <= half && (y - v.y as f64).abs() <= half) {
            return Err(GeometryError::Infeasible(format!("piece {i} leaves the box of side 4l about its anchor")));
        }
        let near = box_vl(v, 4.0 * piece_len)?;
        let around = box_vl(v, big_l)?;
        if !around.contains_box(&near) {
            return Err(GeometryError::Infeasible(format!(
                "box of side 4l = {} about piece {i} exceeds its surrounding box of side {big_l}",
                4.0 * piece_len
            )));
        }
        pieces.push(piece);
        anchors.push(octant.vertex_to_world(v));
        boxes.push(octant.centred_box_to_world(v, big_l)?);
    }
    // world boxes keep the canonical ordering only up to reflection
    let mut ordered = boxes.clone();
    ordered.sort_by_key(|b| (b.corner.x, b.corner.y));
    if !disjoint_all(&ordered) {
        return Err(GeometryError::Infeasible("surrounding boxes overlap".into()));
    }
    let hull = box_vl(start.corner(), 4.0 * kj)?;
    if !boxes.iter().all(|b| hull.contains_box(b)) {
        return Err(GeometryError::Infeasible("surrounding boxes leave the box of side 4K^j about the start corner".into()));
    }
    Ok(CrossingGeometry { octant, long, pieces, anchors, boxes })
}
