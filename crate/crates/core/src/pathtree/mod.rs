//! Lattice paths, scale classes, tameness, and multi-scale path trees with a unit flow.

pub mod gen;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgff::FieldSample;
use crate::geometry::{box_of, log2_scale, tile_side, BoxId, GeometryError, Vertex};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("empty path")]
    Empty,
    #[error("vertices {0} and {1} are not lattice neighbours")]
    NotAdjacent(Vertex, Vertex),
    #[error("path is in no scale class")]
    Unscaled,
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("level {0} exceeds tree depth {1}")]
    Level(usize, usize),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("bad ensemble parameters: {0}")]
    Ensemble(String),
    #[error("path text: {0}")]
    Parse(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Nearest-neighbour vertex sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath(Vec<Vertex>);

impl LatticePath {
    pub fn new(vs: Vec<Vertex>) -> Result<Self, PathError> {
        if vs.is_empty() {
            return Err(PathError::Empty);
        }
        if let Some(w) = vs.windows(2).find(|w| !w[0].is_adjacent(w[1])) {
            return Err(PathError::NotAdjacent(w[0], w[1]));
        }
        Ok(LatticePath(vs))
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn start(&self) -> Vertex {
        self.0[0]
    }

    pub fn end(&self) -> Vertex {
        *self.0.last().expect("non-empty")
    }

    /// Vertex count.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span2(&self) -> i128 {
        self.start().dist2(self.end())
    }

    /// Euclidean distance between the endpoints.
    pub fn span(&self) -> f64 {
        self.start().dist(self.end())
    }

    /// Subpath over the inclusive index range.
    pub fn sub(&self, start: usize, end: usize) -> LatticePath {
        LatticePath(self.0[start..=end].to_vec())
    }

    pub fn to_text(&self) -> String {
        self.0.iter().fold(String::new(), |mut s, v| {
            let _ = writeln!(s, "{},{}", v.x, v.y);
            s
        })
    }

    pub fn from_text(text: &str) -> Result<Self, PathError> {
        let vs = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let (x, y) = l.trim().split_once(',').ok_or_else(|| PathError::Parse(l.into()))?;
                let p = |s: &str| s.trim().parse::<i64>().map_err(|_| PathError::Parse(l.into()));
                Ok::<_, PathError>(Vertex::new(p(x)?, p(y)?))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(vs)
    }
}

fn pow_i128(k: u64, e: u32) -> Option<i128> {
    (k as i128).checked_pow(e)
}

/// Scale class of the slice `vs`: `0` for a single vertex, else the `j >= 1` with
/// `K^j <= span <= (1 + 1/K) K^j` and every vertex within `span` of the start.
fn class_of(vs: &[Vertex], k: u64) -> Option<u32> {
    if vs.len() == 1 {
        return Some(0);
    }
    let (x, y) = (vs[0], vs[vs.len() - 1]);
    let d2 = x.dist2(y);
    if vs.iter().any(|v| x.dist2(*v) > d2) {
        return None;
    }
    let mut j = 1;
    loop {
        let lo = pow_i128(k, j)?;
        if lo * lo > d2 {
            return None;
        }
        let hi = (k as i128 + 1) * pow_i128(k, j - 1)?;
        if d2 <= hi * hi {
            return Some(j);
        }
        j += 1;
    }
}

pub fn scale_class(p: &LatticePath, k: u64) -> Result<Option<u32>, PathError> {
    log2_scale(k)?;
    Ok(class_of(p.vertices(), k))
}

/// Distance from `(y0, y1)`, both non-negative, to the filled axis-aligned ellipse with
/// semi-axes `e0 >= e1 > 0`, by bisection on the normal-line parameter.
pub fn ellipse_distance(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    let (y0, y1) = (y0.abs(), y1.abs());
    let z0 = y0 / e0;
    let z1 = y1 / e1;
    let g = z0 * z0 + z1 * z1 - 1.0;
    if g <= 0.0 {
        return 0.0;
    }
    if y1 == 0.0 {
        return y0 - e0;
    }
    if y0 == 0.0 {
        return y1 - e1;
    }
    let r0 = (e0 / e1).powi(2);
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = n0.hypot(z1) - 1.0;
    let mut s = 0.0;
    for _ in 0..2000 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let a = n0 / (s + r0);
        let b = z1 / (s + 1.0);
        let gs = a * a + b * b - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    let x0 = r0 * y0 / (s + r0);
    let x1 = y1 / (s + 1.0);
    (x0 - y0).hypot(x1 - y1)
}

/// Largest distance from a vertex of `vs` to the focal ellipse
/// `|x - z| + |y - z| <= (1 + 2/K^2) |x - y|` through the endpoints.
fn ellipse_excess(vs: &[Vertex], k: u64) -> f64 {
    let (x, y) = (vs[0], vs[vs.len() - 1]);
    let span = x.dist(y);
    if span == 0.0 {
        return vs.iter().map(|v| x.dist(*v)).fold(0.0, f64::max);
    }
    let kf = k as f64;
    let a = (1.0 + 2.0 / (kf * kf)) * span / 2.0;
    let c = span / 2.0;
    let b = (a * a - c * c).sqrt();
    let (cx, cy) = ((x.x + y.x) as f64 / 2.0, (x.y + y.y) as f64 / 2.0);
    let (ux, uy) = ((y.x - x.x) as f64 / span, (y.y - x.y) as f64 / span);
    vs.iter()
        .map(|v| {
            let (rx, ry) = (v.x as f64 - cx, v.y as f64 - cy);
            ellipse_distance(a, b, rx * ux + ry * uy, -rx * uy + ry * ux)
        })
        .fold(0.0, f64::max)
}

const TAME_TOL: f64 = 1e-9;

fn tame_slice(vs: &[Vertex], k: u64, class: u32) -> bool {
    let allowance = 4.0 * (k as f64).powi(class as i32 - 1);
    ellipse_excess(vs, k) <= allowance + TAME_TOL
}

/// Every vertex lies within `4 K^j` of the focal ellipse, for a path in `SL_(j+1)`.
pub fn is_tame(p: &LatticePath, k: u64) -> Result<bool, PathError> {
    match scale_class(p, k)? {
        Some(c) if c >= 1 => Ok(tame_slice(p.vertices(), k, c)),
        _ => Err(PathError::Unscaled),
    }
}

/// Inclusive index range of a child; consecutive children may share an endpoint.
pub type Span = (usize, usize);

const MAX_TILE_VISITS: usize = 12;

fn tiles_of(vs: &[Vertex], side: u64) -> HashSet<BoxId> {
    vs.iter().map(|&v| box_of(v, side)).collect()
}

/// Greedy extraction of children of class `j` from `vs[s0..=e0]`, at least `min_count` of them.
fn extract(vs: &[Vertex], s0: usize, e0: usize, k: u64, j: u32, min_count: usize) -> Result<Vec<Span>, PathError> {
    let node = &vs[s0..=e0];
    if j == 0 {
        let mut seen = HashSet::new();
        let kids: Vec<Span> = (s0..=e0).filter(|&i| seen.insert(vs[i])).map(|i| (i, i)).collect();
        if kids.len() < min_count {
            return Err(PathError::Decomposition(format!("{} distinct vertices, need {min_count}", kids.len())));
        }
        return Ok(kids);
    }
    let side = tile_side(k, j as i64)?;
    let kj = pow_i128(k, j).ok_or_else(|| PathError::Decomposition("K^j overflows".into()))?;
    let upper = (k as i128 + 1) * pow_i128(k, j - 1).expect("smaller power");
    let k2 = (k as i128) * (k as i128);
    let mut tried = Vec::new();
    for t in 0..=k as i128 {
        // span threshold K^j (1 + t/K^2), compared in squares scaled by K^4
        let ell_num = kj * (k2 + t);
        let mut kids = Vec::new();
        let mut visits: HashMap<BoxId, usize> = HashMap::new();
        let mut s = s0;
        'outer: while s < e0 {
            let x = vs[s];
            let mut far = 0i128;
            for e in s + 1..=e0 {
                let d2 = x.dist2(vs[e]);
                far = far.max(d2);
                if far > upper * upper {
                    break;
                }
                if d2 * k2 * k2 >= ell_num * ell_num && d2 <= upper * upper && far <= d2 {
                    let tiles = tiles_of(&vs[s..=e], side);
                    if tiles.iter().all(|b| visits.get(b).copied().unwrap_or(0) < MAX_TILE_VISITS) {
                        for b in tiles {
                            *visits.entry(b).or_default() += 1;
                        }
                        kids.push((s, e));
                        s = e;
                        continue 'outer;
                    }
                    break;
                }
            }
            s += 1;
        }
        if kids.len() >= min_count {
            verify_children(vs, &kids, k, j, side)?;
            return Ok(kids);
        }
        tried.push(kids.len());
    }
    Err(PathError::Decomposition(format!(
        "span {:.3} at class {j}: child counts {tried:?} over the thresholds, need {min_count}",
        node[0].dist(node[node.len() - 1])
    )))
}

fn verify_children(vs: &[Vertex], kids: &[Span], k: u64, j: u32, side: u64) -> Result<(), PathError> {
    let mut visits: HashMap<BoxId, usize> = HashMap::new();
    for w in kids.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(PathError::Decomposition(format!("children {w:?} overlap")));
        }
    }
    for &(s, e) in kids {
        if class_of(&vs[s..=e], k) != Some(j) {
            return Err(PathError::Decomposition(format!("child {s}..={e} is not in class {j}")));
        }
        for b in tiles_of(&vs[s..=e], side) {
            *visits.entry(b).or_default() += 1;
        }
    }
    if let Some((b, n)) = visits.iter().find(|(_, &n)| n > MAX_TILE_VISITS) {
        return Err(PathError::Decomposition(format!("tile {b} visited by {n} children")));
    }
    Ok(())
}

/// Children one class down of a path in `SL_(j+1)`.
pub fn decompose_children(p: &LatticePath, k: u64) -> Result<Vec<LatticePath>, PathError> {
    let c = scale_class(p, k)?.filter(|&c| c >= 1).ok_or(PathError::Unscaled)?;
    let vs = p.vertices();
    let min = if c == 1 { (k as usize).max((p.span() / 2.0).ceil() as usize) } else { k as usize };
    Ok(extract(vs, 0, vs.len() - 1, k, c - 1, min)?.into_iter().map(|(s, e)| p.sub(s, e)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub start: usize,
    pub end: usize,
    pub level: usize,
    /// Scale class, absent for an ensemble root outside every class.
    pub class: Option<u32>,
    pub flow: f64,
    pub children: Vec<usize>,
    pub start_box: BoxId,
    /// Absent at the ensemble root; leaves are tame.
    pub tame: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathTree {
    pub path: LatticePath,
    pub k: u64,
    pub depth: usize,
    pub nodes: Vec<TreeNode>,
}

impl PathTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn level(&self, r: usize) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(move |n| n.level == r)
    }

    pub fn node_vertices(&self, n: &TreeNode) -> &[Vertex] {
        &self.path.vertices()[n.start..=n.end]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// Indented text: level, index range, span, flow, tame flag.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let n = &self.nodes[i];
            let vs = self.node_vertices(n);
            let tame = n.tame.map(|t| if t { "tame" } else { "untamed" }).unwrap_or("-");
            let _ = writeln!(
                s,
                "{}{} [{}..={}] span={:.3} flow={:.6e} {}",
                "  ".repeat(n.level),
                n.level,
                n.start,
                n.end,
                vs[0].dist(vs[vs.len() - 1]),
                n.flow,
                tame
            );
            stack.extend(n.children.iter().rev());
        }
        s
    }
}

fn start_box(v: Vertex, k: u64, class: i64) -> Result<BoxId, PathError> {
    Ok(box_of(v, tile_side(k, class - 2)?))
}

fn grow(tree: &mut PathTree, idx: usize) -> Result<(), PathError> {
    let (s, e, class, flow, level) = {
        let n = &tree.nodes[idx];
        (n.start, n.end, n.class.expect("classed below the root"), n.flow, n.level)
    };
    if class == 0 {
        return Ok(());
    }
    let k = tree.k;
    let vs = tree.path.vertices().to_vec();
    let span = vs[s].dist(vs[e]);
    let min = if class == 1 { (k as usize).max((span / 2.0).ceil() as usize) } else { k as usize };
    let kids = extract(&vs, s, e, k, class - 1, min)?;
    add_children(tree, idx, &vs, &kids, class - 1, flow, level)
}

fn add_children(tree: &mut PathTree, idx: usize, vs: &[Vertex], kids: &[Span], class: u32, flow: f64, level: usize) -> Result<(), PathError> {
    let share = flow / kids.len() as f64;
    let k = tree.k;
    for &(a, b) in kids {
        let tame = class == 0 || tame_slice(&vs[a..=b], k, class);
        let node = TreeNode {
            start: a,
            end: b,
            level: level + 1,
            class: Some(class),
            flow: share,
            children: Vec::new(),
            start_box: start_box(vs[a], k, class as i64)?,
            tame: Some(tame),
        };
        tree.nodes.push(node);
        let child = tree.nodes.len() - 1;
        tree.nodes[idx].children.push(child);
        grow(tree, child)?;
    }
    Ok(())
}

/// Recursive decomposition of a path in `SL_j`, `j >= 1`, down to single vertices.
pub fn build_tree(p: &LatticePath, k: u64) -> Result<PathTree, PathError> {
    let c = scale_class(p, k)?.filter(|&c| c >= 1).ok_or(PathError::Unscaled)?;
    let root = TreeNode {
        start: 0,
        end: p.len() - 1,
        level: 0,
        class: Some(c),
        flow: 1.0,
        children: Vec::new(),
        start_box: start_box(p.start(), k, c as i64)?,
        tame: Some(tame_slice(p.vertices(), k, c)),
    };
    let mut tree = PathTree { path: p.clone(), k, depth: c as usize, nodes: vec![root] };
    grow(&mut tree, 0)?;
    Ok(tree)
}

/// Parameters of the ensemble of long, not too winding paths in `V_N`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kappa: f64,
    pub delta: f64,
    pub k: u64,
    pub n: u64,
}

impl EnsembleSpec {
    pub fn new(kappa: f64, delta: f64, k: u64, n: u64) -> Result<Self, PathError> {
        log2_scale(k)?;
        if !(0.0 < kappa && kappa < 1.0) || !(0.0 < delta && delta < 1.0) || n == 0 {
            return Err(PathError::Ensemble(format!("kappa {kappa}, delta {delta}, N {n}")));
        }
        Ok(EnsembleSpec { kappa, delta, k, n })
    }

    /// `N^(1 + delta / (K^2 k))` with `K = 2^k`.
    pub fn length_cap(&self) -> f64 {
        let kf = self.k as f64;
        let small_k = self.k.trailing_zeros() as f64;
        (self.n as f64).powf(1.0 + self.delta / (kf * kf * small_k))
    }

    /// `m` with `K^(m+1) <= kappa N < K^(m+2)`.
    pub fn m(&self) -> Result<u32, PathError> {
        let target = self.kappa * self.n as f64;
        let kf = self.k as f64;
        let mut m: i64 = -1;
        while kf.powi((m + 2) as i32) <= target {
            m += 1;
        }
        if m < 1 {
            return Err(PathError::Ensemble(format!("kappa N = {target} below K^2")));
        }
        Ok(m as u32)
    }
}

pub fn ensemble_membership(p: &LatticePath, spec: &EnsembleSpec) -> bool {
    p.span() >= spec.kappa * spec.n as f64 && p.len() as f64 <= spec.length_cap()
}

/// Tree of an ensemble path: at least `floor(kappa N / K^(m-1))` children in `SL_(m-1)`
/// under the root, then recursion down to single vertices; depth `m`.
pub fn build_ensemble_tree(p: &LatticePath, spec: &EnsembleSpec) -> Result<PathTree, PathError> {
    let m = spec.m()?;
    let k = spec.k;
    let d0 = (spec.kappa * spec.n as f64 / (k as f64).powi(m as i32 - 1)).floor() as usize;
    let vs = p.vertices().to_vec();
    let kids = extract(&vs, 0, vs.len() - 1, k, m - 1, d0)?;
    let class = scale_class(p, k)?;
    let root = TreeNode {
        start: 0,
        end: vs.len() - 1,
        level: 0,
        class,
        flow: 1.0,
        children: Vec::new(),
        start_box: start_box(p.start(), k, m as i64 + 1)?,
        tame: None,
    };
    let mut tree = PathTree { path: p.clone(), k, depth: m as usize, nodes: vec![root] };
    add_children(&mut tree, 0, &vs, &kids, m - 1, 1.0, 0)?;
    Ok(tree)
}

/// Flow through untamed nodes on the internal levels `1..depth`.
pub fn untamed_flow(tree: &PathTree) -> f64 {
    tree.nodes
        .iter()
        .filter(|n| n.level >= 1 && n.level < tree.depth && n.tame == Some(false))
        .fold(0.0, |acc, n| acc + n.flow)
}

/// Flow through level-`r` nodes that are tame and entirely open under the shift of their start box.
pub fn tame_open_flow(tree: &PathTree, sample: &FieldSample, r: usize, lambda: f64, shift: impl Fn(BoxId) -> f64) -> Result<f64, PathError> {
    if r > tree.depth {
        return Err(PathError::Level(r, tree.depth));
    }
    Ok(tree
        .level(r)
        .filter(|n| n.tame != Some(false))
        .filter(|n| {
            let a = shift(n.start_box);
            tree.node_vertices(n).iter().all(|&v| (sample.value(v) + a).abs() <= lambda)
        })
        .map(|n| n.flow)
        .sum())
}

/// Largest tame open flow over a finite ensemble of trees.
pub fn xi_over_ensemble(trees: &[PathTree], sample: &FieldSample, r: usize, lambda: f64, shift: impl Fn(BoxId) -> f64) -> Result<f64, PathError> {
    if trees.is_empty() {
        return Err(PathError::EmptyEnsemble);
    }
    trees.iter().map(|t| tame_open_flow(t, sample, r, lambda, &shift)).try_fold(f64::NEG_INFINITY, |m, y| Ok(m.max(y?)))
}
