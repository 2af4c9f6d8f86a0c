//! Open-vertex masks and the queries run on them.

mod contour;

pub use contour::{open_circuit_exists, outermost_contour, outermost_open_contour, Contour};

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::dgff::FieldSample;
use crate::geometry::{LatticeBox, PlacedParallelogram, Side, Vertex};

#[derive(Debug, Error)]
pub enum LevelSetError {
    #[error("threshold must be non-negative, got {0}")]
    NegativeThreshold(f64),
    #[error("region leaves the mask window: {0}")]
    OutsideWindow(String),
    #[error("malformed mask dump: {0}")]
    Parse(String),
    #[error("contour invariant violated: {0}")]
    Invariant(String),
}

/// Which vertices of a window are open; values outside the window count as closed.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenMask {
    pub window: LatticeBox,
    pub open: Vec<bool>,
    pub lambda: f64,
    pub alpha: f64,
}

/// `|eta(v) + alpha| <= lambda` on the sample's bounding box, with `eta = 0` off the domain.
pub fn open_mask(sample: &FieldSample, lambda: f64, alpha: f64) -> Result<OpenMask, LevelSetError> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(LevelSetError::NegativeThreshold(lambda));
    }
    let open = sample.values.iter().map(|&x| (x + alpha).abs() <= lambda).collect();
    Ok(OpenMask { window: *sample.bbox(), open, lambda, alpha })
}

/// One-sided comparison mask `eta(v) >= h`.
pub fn upper_mask(sample: &FieldSample, h: f64) -> OpenMask {
    let open = sample.values.iter().map(|&x| x >= h).collect();
    OpenMask { window: *sample.bbox(), open, lambda: f64::INFINITY, alpha: 0.0 }
}

impl OpenMask {
    pub fn from_bools(window: LatticeBox, open: Vec<bool>) -> Self {
        assert_eq!(open.len(), window.len());
        OpenMask { window, open, lambda: f64::NAN, alpha: 0.0 }
    }

    pub fn is_open(&self, v: Vertex) -> bool {
        self.window.index(v).map(|i| self.open[i]).unwrap_or(false)
    }

    pub fn count_open(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Mask over a sub-box, closed wherever the sub-box leaves this window.
    pub fn restrict(&self, sub: LatticeBox) -> OpenMask {
        let open = sub.vertices().map(|v| self.is_open(v)).collect();
        OpenMask { window: sub, open, lambda: self.lambda, alpha: self.alpha }
    }

    /// Run-length encoding: a header line, then one line per row of `<count><o|x>` runs.
    pub fn to_rle(&self) -> String {
        let w = self.window;
        let mut s = format!("corner={},{} width={} height={}\n", w.corner.x, w.corner.y, w.width, w.height);
        for row in self.open.chunks(w.width) {
            let mut i = 0;
            while i < row.len() {
                let j = (i..row.len()).find(|&j| row[j] != row[i]).unwrap_or(row.len());
                let _ = write!(s, "{}{}", j - i, if row[i] { 'o' } else { 'x' });
                i = j;
            }
            s.push('\n');
        }
        s
    }

    pub fn from_rle(text: &str) -> Result<OpenMask, LevelSetError> {
        let bad = |m: &str| LevelSetError::Parse(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let mut corner = None;
        let (mut width, mut height) = (None, None);
        for field in header.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(|| bad(field))?;
            match k {
                "corner" => {
                    let (x, y) = v.split_once(',').ok_or_else(|| bad(v))?;
                    corner = Some(Vertex::new(x.parse().map_err(|_| bad(x))?, y.parse().map_err(|_| bad(y))?));
                }
                "width" => width = Some(v.parse::<usize>().map_err(|_| bad(v))?),
                "height" => height = Some(v.parse::<usize>().map_err(|_| bad(v))?),
                _ => return Err(bad(k)),
            }
        }
        let window = LatticeBox::new(corner.ok_or_else(|| bad("corner"))?, width.ok_or_else(|| bad("width"))?, height.ok_or_else(|| bad("height"))?)
            .map_err(|e| LevelSetError::Parse(e.to_string()))?;
        let mut open = Vec::with_capacity(window.len());
        for line in lines.take(window.height) {
            let start = open.len();
            let mut count = String::new();
            for c in line.chars() {
                match c {
                    '0'..='9' => count.push(c),
                    'o' | 'x' => {
                        let n: usize = count.parse().map_err(|_| bad(line))?;
                        open.extend(std::iter::repeat_n(c == 'o', n));
                        count.clear();
                    }
                    _ => return Err(bad(line)),
                }
            }
            if open.len() - start != window.width {
                return Err(bad("row width"));
            }
        }
        if open.len() != window.len() {
            return Err(bad("row count"));
        }
        Ok(OpenMask::from_bools(window, open))
    }
}

/// Open 4-path inside the lattice points of `piece` from its start side to its end side.
pub fn crossing_exists(mask: &OpenMask, piece: &PlacedParallelogram) -> Result<bool, LevelSetError> {
    let pts = piece.lattice_points();
    if let Some(v) = pts.iter().find(|v| !mask.window.contains(**v)) {
        return Err(LevelSetError::OutsideWindow(format!("{v}")));
    }
    let w = mask.window;
    let mut inside = vec![false; w.len()];
    for &v in &pts {
        inside[w.index(v).expect("checked")] = true;
    }
    let mut seen = vec![false; w.len()];
    let mut queue = VecDeque::new();
    for &v in &pts {
        if piece.side_of(v) == Some(Side::Start) && mask.is_open(v) {
            let i = w.index(v).expect("checked");
            seen[i] = true;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        if piece.side_of(v) == Some(Side::End) {
            return Ok(true);
        }
        for n in v.neighbors() {
            if let Some(i) = w.index(n) {
                if inside[i] && !seen[i] && mask.open[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    Ok(false)
}

/// Edge count of a shortest open 4-path from any source to any target.
pub fn chemical_distance(mask: &OpenMask, sources: &[Vertex], targets: &[Vertex]) -> Option<usize> {
    let w = mask.window;
    let mut is_target = vec![false; w.len()];
    for t in targets.iter().filter_map(|&t| w.index(t)) {
        is_target[t] = true;
    }
    let mut dist = vec![usize::MAX; w.len()];
    let mut queue = VecDeque::new();
    for s in sources.iter().filter_map(|&s| w.index(s)) {
        if mask.open[s] && dist[s] == usize::MAX {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(i) = queue.pop_front() {
        if is_target[i] {
            return Some(dist[i]);
        }
        for n in w.vertex(i).neighbors() {
            if let Some(j) = w.index(n) {
                if mask.open[j] && dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
    }
    None
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// 4-connected open clusters; each id is the smallest row-major index in its cluster.
pub fn cluster_labels(mask: &OpenMask) -> Vec<Option<usize>> {
    let (w, n) = (mask.window.width, mask.window.len());
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        if !mask.open[i] {
            continue;
        }
        for j in [(i % w > 0).then(|| i - 1), (i >= w).then(|| i - w)].into_iter().flatten() {
            if mask.open[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    (0..n).map(|i| mask.open[i].then(|| find(&mut parent, i))).collect()
}
