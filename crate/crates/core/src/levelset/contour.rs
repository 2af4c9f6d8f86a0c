//! Outermost open circuit around a box, found by exploring inward from the outside.

use super::{LevelSetError, OpenMask};
use crate::geometry::grid::{exterior, flood, Adjacency};
use crate::geometry::{Annulus, LatticeBox, Vertex};

/// A simple open 4-circuit with the set of vertices on or inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub window: LatticeBox,
    /// Closed: the first vertex is repeated at the end.
    pub cycle: Vec<Vertex>,
    /// Vertices on or inside the circuit, over `window`.
    pub enclosed: Vec<bool>,
}

impl Contour {
    pub fn encloses(&self, v: Vertex) -> bool {
        self.window.index(v).map(|i| self.enclosed[i]).unwrap_or(false)
    }

    pub fn enclosed_vertices(&self) -> Vec<Vertex> {
        self.window.vertices().zip(&self.enclosed).filter(|(_, &e)| e).map(|(v, _)| v).collect()
    }

    /// Distinct vertices of the circuit.
    pub fn vertices(&self) -> &[Vertex] {
        &self.cycle[..self.cycle.len() - 1]
    }
}

const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

fn pad(window: &LatticeBox) -> LatticeBox {
    LatticeBox::new(window.corner.offset(-1, -1), window.width + 2, window.height + 2).expect("non-empty")
}

/// Left-hand boundary walk around the 4-connected set `f`, starting from its top-left cell.
fn boundary_walk(grid: &LatticeBox, f: &[bool]) -> Vec<Vertex> {
    let start = grid
        .vertices()
        .zip(f)
        .filter(|(_, &x)| x)
        .map(|(v, _)| v)
        .max_by_key(|v| (v.y, -v.x))
        .expect("non-empty set");
    let inside = |v: Vertex| grid.index(v).map(|i| f[i]).unwrap_or(false);
    let choose = |v: Vertex, heading: usize| -> Option<usize> {
        [1usize, 0, 3, 2].iter().map(|t| (heading + t) % 4).find(|&d| inside(v.offset(DIRS[d].0, DIRS[d].1)))
    };
    let mut walk = vec![start];
    let Some(first) = choose(start, 0) else {
        return walk;
    };
    let (mut v, mut heading) = (start, first);
    v = v.offset(DIRS[heading].0, DIRS[heading].1);
    loop {
        walk.push(v);
        let d = choose(v, heading).expect("cell with a neighbour");
        if v == start && d == first {
            break;
        }
        heading = d;
        v = v.offset(DIRS[d].0, DIRS[d].1);
    }
    walk
}

/// Splits a closed walk at repeated vertices into simple closed loops.
fn simple_loops(walk: &[Vertex]) -> Vec<Vec<Vertex>> {
    let mut loops = Vec::new();
    let mut stack: Vec<Vertex> = Vec::new();
    for &v in walk {
        if let Some(i) = stack.iter().position(|&u| u == v) {
            let mut lp: Vec<Vertex> = stack.drain(i..).collect();
            lp.push(v);
            loops.push(lp);
            stack.push(v);
        } else {
            stack.push(v);
        }
    }
    loops
}

/// Winding number of a closed lattice loop around the point `c + (1/2, 1/2)`.
fn winding(lp: &[Vertex], c: Vertex) -> i64 {
    lp.windows(2)
        .filter(|e| e[0].x == e[1].x && e[0].x > c.x)
        .map(|e| match (e[0].y - c.y, e[1].y - c.y) {
            (0, 1) => 1,
            (1, 0) => -1,
            _ => 0,
        })
        .sum()
}

/// Among the open 4-circuits of `open` (a mask over `window`) that surround `inner`,
/// the one enclosing the most, or `None` when no circuit surrounds `inner`.
pub fn outermost_contour(window: &LatticeBox, open: &[bool], inner: &LatticeBox) -> Result<Option<Contour>, LevelSetError> {
    if !window.contains_box(inner) {
        return Err(LevelSetError::OutsideWindow(format!("inner box {inner:?}")));
    }
    let grid = pad(window);
    let mut o = vec![false; grid.len()];
    for (v, &x) in window.vertices().zip(open) {
        o[grid.index(v).expect("padded")] = x;
    }
    for v in inner.vertices() {
        o[grid.index(v).expect("inside")] = false;
    }
    let closed: Vec<bool> = o.iter().map(|x| !x).collect();
    let outside = exterior(&grid, &closed, Adjacency::Eight);
    let inner_idx: Vec<usize> = inner.vertices().map(|v| grid.index(v).expect("inside")).collect();
    if inner_idx.iter().any(|&i| outside[i]) {
        return Ok(None);
    }
    let not_outside: Vec<bool> = outside.iter().map(|x| !x).collect();
    let f = flood(&grid, &not_outside, inner_idx, Adjacency::Four);
    let walk = boundary_walk(&grid, &f);
    let mut around: Vec<Vec<Vertex>> = simple_loops(&walk).into_iter().filter(|lp| winding(lp, inner.corner).abs() == 1).collect();
    if around.len() != 1 {
        return Err(LevelSetError::Invariant(format!("{} boundary loops wind around the inner box", around.len())));
    }
    let cycle = around.pop().expect("one loop");
    let mut on_cycle = vec![false; grid.len()];
    for v in &cycle {
        let i = grid.index(*v).expect("inside");
        if !o[i] {
            return Err(LevelSetError::Invariant(format!("closed vertex {v} on the contour")));
        }
        on_cycle[i] = true;
    }
    let off: Vec<bool> = on_cycle.iter().map(|x| !x).collect();
    let ext = exterior(&grid, &off, Adjacency::Eight);
    let enclosed: Vec<bool> = window.vertices().map(|v| !ext[grid.index(v).expect("padded")]).collect();
    if inner.vertices().any(|v| !enclosed[window.index(v).expect("inside")]) {
        return Err(LevelSetError::Invariant("contour does not enclose the inner box".into()));
    }
    Ok(Some(Contour { window: *window, cycle, enclosed }))
}

/// Outermost open circuit in the ring of `annulus` around its inner box.
pub fn outermost_open_contour(mask: &OpenMask, annulus: &Annulus) -> Result<Option<Contour>, LevelSetError> {
    let window = annulus.outer;
    let region = annulus.region_mask(&window);
    let open: Vec<bool> = window.vertices().zip(region).map(|(v, r)| r && mask.is_open(v)).collect();
    outermost_contour(&window, &open, &annulus.inner)
}

pub fn open_circuit_exists(mask: &OpenMask, annulus: &Annulus) -> Result<bool, LevelSetError> {
    Ok(outermost_open_contour(mask, annulus)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_parallelogram, rotate_and_assemble};
    use proptest::prelude::*;

    fn win(n: usize) -> LatticeBox {
        LatticeBox::square(Vertex::new(0, 0), n).unwrap()
    }

    fn ring_mask(w: &LatticeBox, rings: &[LatticeBox]) -> Vec<bool> {
        w.vertices().map(|v| rings.iter().any(|r| r.on_boundary(v))).collect()
    }

    #[test]
    fn single_ring_is_found() {
        let w = win(9);
        let ring = LatticeBox::square(Vertex::new(1, 1), 7).unwrap();
        let inner = LatticeBox::square(Vertex::new(3, 3), 3).unwrap();
        let c = outermost_contour(&w, &ring_mask(&w, &[ring]), &inner).unwrap().unwrap();
        assert_eq!(c.vertices().len(), 24);
        assert_eq!(c.enclosed_vertices().len(), 49);
        assert_eq!(c.cycle.first(), c.cycle.last());
    }

    #[test]
    fn nested_rings_give_the_outer_one() {
        let w = win(11);
        let a = LatticeBox::square(Vertex::new(1, 1), 9).unwrap();
        let b = LatticeBox::square(Vertex::new(3, 3), 5).unwrap();
        let inner = LatticeBox::square(Vertex::new(5, 5), 1).unwrap();
        let c = outermost_contour(&w, &ring_mask(&w, &[a, b]), &inner).unwrap().unwrap();
        assert_eq!(c.enclosed_vertices().len(), 81);
    }

    #[test]
    fn broken_ring_gives_nothing() {
        let w = win(9);
        let ring = LatticeBox::square(Vertex::new(1, 1), 7).unwrap();
        let inner = LatticeBox::square(Vertex::new(3, 3), 3).unwrap();
        let mut m = ring_mask(&w, &[ring]);
        m[w.index(Vertex::new(1, 4)).unwrap()] = false;
        assert!(outermost_contour(&w, &m, &inner).unwrap().is_none());
    }

    #[test]
    fn bays_and_spurs_are_dropped() {
        // ring with a dead-end spur pointing out and a pinched bay
        let w = win(13);
        let ring = LatticeBox::square(Vertex::new(2, 2), 9).unwrap();
        let bay = LatticeBox::square(Vertex::new(10, 10), 3).unwrap();
        let inner = LatticeBox::square(Vertex::new(5, 5), 3).unwrap();
        let mut m = ring_mask(&w, &[ring, bay]);
        m[w.index(Vertex::new(0, 6)).unwrap()] = true;
        m[w.index(Vertex::new(1, 6)).unwrap()] = true;
        let c = outermost_contour(&w, &m, &inner).unwrap().unwrap();
        assert!(!c.encloses(Vertex::new(1, 6)));
        // the bay touches the ring at (10,10) only, so it is its own loop
        assert!(!c.encloses(Vertex::new(11, 11)));
        assert_eq!(c.enclosed_vertices().len(), 81);
    }

    #[test]
    fn all_open_annulus_has_a_circuit() {
        let d = make_parallelogram(0.0, 0.0, 160.0, 37.0, 10.0).unwrap();
        let ann = rotate_and_assemble(&d).unwrap();
        let all = OpenMask::from_bools(ann.outer, vec![true; ann.outer.len()]);
        let c = outermost_open_contour(&all, &ann).unwrap().unwrap();
        assert!(c.vertices().iter().all(|&v| ann.contains(v)));
        let none = OpenMask::from_bools(ann.outer, vec![false; ann.outer.len()]);
        assert!(!open_circuit_exists(&none, &ann).unwrap());
        // a closed radial cut through the ring
        let v0 = ann.center;
        let cut: Vec<bool> = ann.outer.vertices().map(|v| !(v.y == v0.y && v.x >= v0.x)).collect();
        let cut = OpenMask::from_bools(ann.outer, cut);
        assert!(!open_circuit_exists(&cut, &ann).unwrap());
    }

    proptest! {
        #[test]
        fn interior_changes_do_not_move_the_contour(seed: u64, p in 0.55f64..0.9) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w = win(15);
            let inner = LatticeBox::square(Vertex::new(6, 6), 3).unwrap();
            let m: Vec<bool> = w.vertices().map(|v| !inner.contains(v) && rng.random_bool(p)).collect();
            if let Some(c) = outermost_contour(&w, &m, &inner).unwrap() {
                let mut altered = m.clone();
                for (i, v) in w.vertices().enumerate() {
                    if c.enclosed[i] && !c.vertices().contains(&v) && !inner.contains(v) {
                        altered[i] = rng.random_bool(0.5);
                    }
                }
                let again = outermost_contour(&w, &altered, &inner).unwrap().unwrap();
                prop_assert_eq!(again, c);
            }
        }
    }
}
