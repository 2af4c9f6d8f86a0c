//! Exact Green-function statistics and the harmonic fluctuation experiment.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::dst::BoxLaplacian;
use super::harmonic::dirichlet_solve;
use super::rng::{derive_seed, stream};
use super::{DgffError, Domain, FieldSample, SpectralSampler};
use crate::geometry::{box_vl, box_vn, LatticeBox, Vertex};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;
pub const CHI: f64 = 0.1;

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// `G(u, .)` over the bounding box of a rectangle, from one sine-transform solve.
fn green_row(bbox: &LatticeBox, lap: &BoxLaplacian, u: Vertex) -> Vec<f64> {
    let inner = bbox.interior().expect("box with interior");
    let mut e = vec![0.0; lap.len()];
    if let Some(k) = inner.index(u) {
        e[k] = 4.0;
        lap.solve(&mut e);
    }
    let mut row = vec![0.0; bbox.len()];
    for (k, x) in e.into_iter().enumerate() {
        row[bbox.index(inner.vertex(k)).expect("inside")] = x;
    }
    row
}

#[derive(Debug, Clone, Serialize)]
pub struct LogCorrelationReport {
    pub n: u64,
    /// `sup |G(u,v) - (2/pi) log(L / (|u-v|_inf v 1))|` over the sources examined.
    pub constant: f64,
    pub worst_pair: (Vertex, Vertex),
    pub sources: usize,
}

/// Deviation of the Green function on `V_N` from the pure logarithm, over pairs in
/// the core of the box; rows come from exact solves, sources are a seeded sample
/// of core vertices together with its corners, edge midpoints and centre.
pub fn log_correlation_report(n: u64, sample_count: usize, seed: u64) -> Result<LogCorrelationReport, DgffError> {
    if n > 512 {
        return Err(DgffError::Invalid(format!("N = {n} exceeds 512")));
    }
    let bbox = box_vn(n)?;
    let core = bbox.chi_core(CHI).ok_or(DgffError::NoInterior)?;
    let inner = bbox.interior().ok_or(DgffError::NoInterior)?;
    let lap = BoxLaplacian::new(inner.width, inner.height);
    let (lo, hi) = (core.corner, core.max_corner());
    let (mx, my) = ((lo.x + hi.x) / 2, (lo.y + hi.y) / 2);
    let mut sources: Vec<Vertex> = [(lo.x, lo.y), (hi.x, lo.y), (lo.x, hi.y), (hi.x, hi.y), (mx, lo.y), (mx, hi.y), (lo.x, my), (hi.x, my), (mx, my)]
        .into_iter()
        .map(|(x, y)| Vertex::new(x, y))
        .collect();
    let mut rng = stream(seed);
    for _ in 0..sample_count {
        sources.push(Vertex::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y)));
    }
    let l = n as f64;
    let mut best = (0.0f64, (lo, lo));
    for &u in &sources {
        let row = green_row(&bbox, &lap, u);
        for v in core.vertices() {
            let d = u.sup_dist(v).max(1) as f64;
            let dev = (row[bbox.index(v).expect("core inside box")] - 2.0 / PI * (l / d).ln()).abs();
            if dev > best.0 {
                best = (dev, (u, v));
            }
        }
    }
    Ok(LogCorrelationReport { n, constant: best.0, worst_pair: best.1, sources: sources.len() })
}

/// `sum_{v in dV_{l1}(z)} G_{V_{l2}(z)}(u, v)` for every `u` on `dV_{l1}(z)`.
pub fn boundary_greens_sums(z: Vertex, l1: f64, l2: f64) -> Result<Vec<(Vertex, f64)>, DgffError> {
    if l2 < l1 + 2.0 {
        return Err(DgffError::Invalid(format!("need l2 >= l1 + 2, got {l1}, {l2}")));
    }
    let outer = box_vl(z, l2)?;
    let ring = box_vl(z, l1)?;
    let inner = outer.interior().ok_or(DgffError::NoInterior)?;
    let lap = BoxLaplacian::new(inner.width, inner.height);
    let mut g: Vec<f64> = inner.vertices().map(|v| if ring.on_boundary(v) { 4.0 } else { 0.0 }).collect();
    lap.solve(&mut g);
    Ok(ring.boundary().into_iter().map(|u| (u, g[inner.index(u).expect("ring inside")])).collect())
}

pub fn boundary_greens_sum(z: Vertex, l1: f64, l2: f64, u: Vertex) -> Result<f64, DgffError> {
    boundary_greens_sums(z, l1, l2)?
        .into_iter()
        .find(|(v, _)| *v == u)
        .map(|(_, s)| s)
        .ok_or_else(|| DgffError::Invalid(format!("{u} is not on the boundary of V_l1({z})")))
}

/// Mean of `eta + alpha` over the boundary of `V_{2w}(v0)`.
pub fn boundary_average(sample: &FieldSample, v0: Vertex, w: f64, alpha: f64) -> Result<f64, DgffError> {
    let b = box_vl(v0, 2.0 * w)?;
    if !sample.bbox().contains_box(&b) || !b.vertices().all(|v| sample.domain.contains(v)) {
        return Err(DgffError::NotContained(format!("V_2w({v0}) not in sample domain")));
    }
    let ring = b.boundary();
    Ok(ring.iter().map(|&u| sample.value(u) + alpha).sum::<f64>() / ring.len() as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct AverageVariance {
    pub exact: f64,
    /// `(1/pi) log(L / 2w)` with `L` the side of the domain.
    pub lower_bound: f64,
}

/// Exact variance of the boundary average over `dV_{2w}(v0)` for the field on `domain`.
pub fn boundary_average_variance(domain: &Domain, v0: Vertex, w: f64) -> Result<AverageVariance, DgffError> {
    let b = box_vl(v0, 2.0 * w)?;
    if !b.vertices().all(|v| domain.contains(v)) {
        return Err(DgffError::NotContained(format!("V_2w({v0}) not in domain")));
    }
    let bbox = *domain.bbox();
    let ones: Vec<f64> = bbox.vertices().map(|v| if b.on_boundary(v) { 1.0 } else { 0.0 }).collect();
    let zero = vec![0.0; bbox.len()];
    let g = dirichlet_solve(domain, &zero, Some(&ones))?;
    let m = b.boundary().len() as f64;
    let quad: f64 = ones.iter().zip(&g).map(|(a, b)| a * b).sum();
    let exact = 4.0 * quad / (m * m);
    let lower_bound = (bbox.side_length() as f64 / (2.0 * w)).ln() / PI;
    Ok(AverageVariance { exact, lower_bound })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailEstimate {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `4 exp(-eps^2 L / (8 C2 l))`.
    pub bound: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FluctuationSetup {
    pub outer: LatticeBox,
    pub block: LatticeBox,
    pub window: LatticeBox,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub c2: f64,
}

/// Monte Carlo estimate of `P(max_{x in U} |H(x) - H(z_U)| >= eps)` for the harmonic
/// extension `H` into the block, with `z_U` the lower-left corner of the window.
pub fn fluctuation_tail_experiment(s: &FluctuationSetup) -> Result<TailEstimate, DgffError> {
    if !s.outer.contains_box(&s.block) {
        return Err(DgffError::NotContained("block outside the sampled box".into()));
    }
    let core = s.block.chi_core(CHI).ok_or(DgffError::NoInterior)?;
    if !core.contains_box(&s.window) {
        return Err(DgffError::NotContained("window outside the core of the block".into()));
    }
    if s.trials == 0 {
        return Err(DgffError::Invalid("no trials".into()));
    }
    let sampler = SpectralSampler::new(s.outer);
    let block = Domain::from_box(s.block);
    let bb = s.block;
    let anchor = s.window.corner;
    let window = s.window;
    let hits: u64 = (0..s.trials)
        .into_par_iter()
        .map(|t| -> Result<u64, DgffError> {
            let field = sampler.sample(derive_seed(s.seed, 0, t));
            let data: Vec<f64> = bb.vertices().map(|v| field.value(v)).collect();
            let h = dirichlet_solve(&block, &data, None)?;
            let at = |v: Vertex| h[bb.index(v).expect("window inside block")];
            let base = at(anchor);
            let sup = window.vertices().map(|x| (at(x) - base).abs()).fold(0.0, f64::max);
            Ok(u64::from(sup >= s.eps))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let (ci_lo, ci_hi) = wilson_interval(hits, s.trials);
    let big_l = s.block.side_length() as f64;
    let ell = s.window.side_length().max(1) as f64;
    let bound = 4.0 * (-s.eps * s.eps * big_l / (8.0 * s.c2 * ell)).exp();
    Ok(TailEstimate { hits, trials: s.trials, estimate: hits as f64 / s.trials as f64, ci_lo, ci_hi, bound })
}
