//! Random path generators used by experiments and tests.

use rand::Rng;

use super::LatticePath;
use crate::geometry::Vertex;

/// Path monotone in x from `start`, `dx` steps east, with vertical jogs inside
/// the band `start.y ..= start.y + height`. Each column draws a jog with probability `jog`.
pub fn band_path<R: Rng + ?Sized>(rng: &mut R, start: Vertex, dx: u64, height: i64, jog: f64) -> LatticePath {
    let mut vs = vec![start];
    let mut v = start;
    for _ in 0..dx {
        if height > 0 && rng.random_bool(jog) {
            let target = start.y + rng.random_range(0..=height);
            while v.y != target {
                v = v.offset(0, (target - v.y).signum());
                vs.push(v);
            }
        }
        v = v.offset(1, 0);
        vs.push(v);
    }
    LatticePath::new(vs).expect("nearest-neighbour steps")
}

/// Chronological loop erasure of a simple random walk from `start` stopped on leaving
/// the sup-norm ball of radius `radius`.
pub fn lerw_path<R: Rng + ?Sized>(rng: &mut R, start: Vertex, radius: i64) -> LatticePath {
    const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let mut vs = vec![start];
    let mut pos = std::collections::HashMap::from([(start, 0usize)]);
    let mut v = start;
    while v.sup_dist(start) < radius {
        let (dx, dy) = STEPS[rng.random_range(0..4)];
        v = v.offset(dx, dy);
        if let Some(&i) = pos.get(&v) {
            for u in vs.drain(i + 1..) {
                pos.remove(&u);
            }
        } else {
            pos.insert(v, vs.len());
            vs.push(v);
        }
    }
    LatticePath::new(vs).expect("nearest-neighbour steps")
}

/// Straight east-going path with `dx` steps.
pub fn straight_path(start: Vertex, dx: u64) -> LatticePath {
    LatticePath::new((0..=dx as i64).map(|i| start.offset(i, 0)).collect()).expect("nearest-neighbour steps")
}
