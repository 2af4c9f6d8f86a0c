//! Flood fills over boolean grids laid out row-major on a [`LatticeBox`].

use std::collections::VecDeque;

use super::{LatticeBox, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacency {
    Four,
    Eight,
}

const STEPS4: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
const STEPS8: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

impl Adjacency {
    pub fn steps(self) -> &'static [(i64, i64)] {
        match self {
            Adjacency::Four => &STEPS4,
            Adjacency::Eight => &STEPS8,
        }
    }
}

/// Marks every cell reachable from `seeds` through cells where `passable` holds.
/// Seeds that are not passable are ignored.
pub fn flood(
    window: &LatticeBox,
    passable: &[bool],
    seeds: impl IntoIterator<Item = usize>,
    adjacency: Adjacency,
) -> Vec<bool> {
    debug_assert_eq!(passable.len(), window.len());
    let mut seen = vec![false; window.len()];
    let mut queue = VecDeque::new();
    for s in seeds {
        if passable[s] && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    let w = window.width as i64;
    let h = window.height as i64;
    while let Some(i) = queue.pop_front() {
        let x = (i % window.width) as i64;
        let y = (i / window.width) as i64;
        for &(dx, dy) in adjacency.steps() {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let j = (ny * w + nx) as usize;
            if passable[j] && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Indices of the outermost ring of cells of the window.
pub fn frame_indices(window: &LatticeBox) -> impl Iterator<Item = usize> + '_ {
    (0..window.len()).filter(move |&i| window.on_boundary(window.vertex(i)))
}

/// Cells reachable from outside the window through `passable` cells.
pub fn exterior(window: &LatticeBox, passable: &[bool], adjacency: Adjacency) -> Vec<bool> {
    flood(window, passable, frame_indices(window), adjacency)
}

/// True if some cell of `target` is reachable from outside the window while avoiding `blocked`.
pub fn outside_reaches(window: &LatticeBox, blocked: &[bool], target: &LatticeBox) -> bool {
    let passable: Vec<bool> = blocked.iter().map(|b| !b).collect();
    let ext = exterior(window, &passable, Adjacency::Eight);
    target.vertices().any(|v| window.index(v).map(|i| ext[i]).unwrap_or(false))
}

pub fn indices_of(window: &LatticeBox, vs: impl IntoIterator<Item = Vertex>) -> Vec<usize> {
    vs.into_iter().filter_map(|v| window.index(v)).collect()
}
