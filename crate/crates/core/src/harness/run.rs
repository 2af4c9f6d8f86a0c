//! Experiment runners. Trials run on the current rayon pool; results are merged in trial order.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::fit::{fit_exponent, ExponentFit};
use super::{ExperimentConfig, HarnessError, ResultRecord};
use crate::dgff::rng::{derive_seed, mix64};
use crate::dgff::solve::MaskedLaplacian;
use crate::dgff::stats::{boundary_average, fluctuation_tail_experiment, wilson_interval, FluctuationSetup, Z95};
use crate::dgff::{FieldSample, SpectralSampler};
use crate::geometry::{box_vl, box_vn, make_parallelogram, rotate_and_assemble, Annulus, LatticeBox, PlacedParallelogram, Vertex};
use crate::levelset::{chemical_distance, crossing_exists, open_mask, outermost_open_contour, upper_mask};
use crate::schedule::trivial_decay_bound;

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    /// `(kind, lambda, fit)` per regression.
    pub fits: Vec<(String, f64, ExponentFit)>,
    pub notes: Value,
    /// Invariant breaches found during the run; non-empty means exit code 3.
    pub failures: Vec<String>,
}

fn trials_in_order<T: Send>(
    range: std::ops::Range<u64>,
    f: impl Fn(u64) -> Result<T, HarnessError> + Sync + Send,
) -> Result<Vec<T>, HarnessError> {
    range.into_par_iter().map(f).collect()
}

fn record(cfg: &ExperimentConfig, kind: String, n: u64, lambda: f64, trials: u64, est: (f64, f64, f64), t0: Instant) -> ResultRecord {
    ResultRecord {
        kind,
        n,
        lambda,
        kappa: cfg.kappa,
        k: cfg.k,
        trials,
        estimate: est.0,
        ci_lo: est.1,
        ci_hi: est.2,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

fn proportion(hits: u64, trials: u64) -> (f64, f64, f64) {
    let (lo, hi) = wilson_interval(hits, trials);
    (hits as f64 / trials as f64, lo, hi)
}

/// Sample mean with a normal 95% interval; `NaN` for an empty sample.
fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (m, m, m);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let h = Z95 * (var / n).sqrt();
    (m, m - h, m + h)
}

fn column(b: &LatticeBox, x: i64) -> Vec<Vertex> {
    (0..b.height as i64).map(|dy| Vertex::new(x, b.corner.y + dy)).collect()
}

/// Left-right open crossing of the central `kappa N` square of `V_N`, sampling on `V_2N`.
pub fn run_crossing(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let mut out = RunOutput::default();
    let mut notes = Vec::new();
    let mut cell = 0u64;
    for &n in &cfg.n {
        let sampler = SpectralSampler::new(box_vn(2 * n)?);
        let side = (cfg.kappa * n as f64).floor() as i64;
        let band = LatticeBox::square(Vertex::new(-side / 2, -side / 2), side as usize + 1)?;
        let (left, right) = (column(&band, band.corner.x), column(&band, band.max_corner().x));
        for &lambda in &cfg.lambda {
            let t0 = Instant::now();
            let hits: u64 = trials_in_order(0..cfg.trials, |t| {
                let s = sampler.sample(derive_seed(cfg.seed, cell, t));
                let mask = open_mask(&s, lambda, 0.0)?.restrict(band);
                Ok(u64::from(chemical_distance(&mask, &left, &right).is_some()))
            })?
            .into_iter()
            .sum();
            out.records.push(record(cfg, "crossing".into(), n, lambda, cfg.trials, proportion(hits, cfg.trials), t0));
            let bound = trivial_decay_bound(lambda, cfg.kappa, n).ok();
            notes.push(json!({"N": n, "lambda": lambda, "hits": hits, "trivial_bound": bound}));
            cell += 1;
        }
    }
    out.notes = json!({
        "proxy": "span >= kappa N open path operationalized as a left-right crossing of the central kappa N square of V_N; field sampled on V_2N",
        "cells": notes,
    });
    Ok(out)
}

/// Shortest open left-right distances in the `N x N` box for two-sided and one-sided masks.
pub fn run_chemdist(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let mut out = RunOutput::default();
    let mut notes = Vec::new();
    let mut ns = cfg.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let variants = ["two-sided", "one-sided"];
    let mut cell = 0u64;
    for &lambda in &cfg.lambda {
        let mut series: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
        for &n in &ns {
            let t0 = Instant::now();
            let sampler = SpectralSampler::new(box_vn(2 * n)?);
            let h = (n / 2) as i64;
            let b = LatticeBox::square(Vertex::new(-h, -h), n as usize)?;
            let (left, right) = (column(&b, b.corner.x), column(&b, b.max_corner().x));
            let cap = cfg.reject_cap * cfg.trials;
            let mut found: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            let mut attempts = 0u64;
            while attempts < cap && found.iter().any(|f| (f.len() as u64) < cfg.trials) {
                let batch = (cap - attempts).min(cfg.trials);
                let res = trials_in_order(attempts..attempts + batch, |t| {
                    let s = sampler.sample(derive_seed(cfg.seed, cell, t));
                    let two = open_mask(&s, lambda, 0.0)?.restrict(b);
                    let one = upper_mask(&s, -lambda).restrict(b);
                    Ok([chemical_distance(&two, &left, &right), chemical_distance(&one, &left, &right)])
                })?;
                for pair in res {
                    for (v, d) in pair.into_iter().enumerate() {
                        if let Some(d) = d {
                            if (found[v].len() as u64) < cfg.trials {
                                found[v].push(d as f64);
                            }
                        }
                    }
                }
                attempts += batch;
            }
            for (v, name) in variants.iter().enumerate() {
                let got = found[v].len() as u64;
                let est = mean_ci(&found[v]);
                out.records.push(record(cfg, format!("chemdist/{name}"), n, lambda, got, est, t0));
                out.records.push(record(cfg, format!("chemdist/{name}/connected"), n, lambda, attempts, proportion(got, attempts.max(1)), t0));
                if got > 0 {
                    series[v].push(((n - 1) as f64, est.0));
                } else {
                    notes.push(json!({"unfit": format!("chemdist/{name}"), "N": n, "lambda": lambda}));
                }
            }
            cell += 1;
        }
        for (v, name) in variants.iter().enumerate() {
            match fit_exponent(&series[v]) {
                Ok(f) => out.fits.push((format!("chemdist/{name}"), lambda, f)),
                Err(e) => notes.push(json!({"fit": format!("chemdist/{name}"), "lambda": lambda, "error": e.to_string()})),
            }
        }
    }
    out.notes = json!({
        "box": "N x N vertices centred at the origin, field sampled on V_2N; distance in edges between the left and right columns",
        "regression": "ln(mean distance) on ln(N - 1), the box side length",
        "conditioning": "rejection sampling, at most reject_cap * trials attempts per cell",
        "cells": notes,
    });
    Ok(out)
}

/// Open crossing of a good parallelogram inside `V_L(v0)`, `L = ratio * w`.
pub fn run_parallelogram(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let mut out = RunOutput::default();
    let mut notes = Vec::new();
    let w = cfg.width;
    let d = make_parallelogram(0.0, 0.0, 16.0 * w, cfg.rise, w)?;
    let piece = PlacedParallelogram::unrotated(d);
    let pts = piece.lattice_points();
    let mut cell = 0u64;
    for &lambda in &cfg.lambda {
        for &ratio in &cfg.ratios {
            let l = ratio as f64 * w;
            let vl = box_vl(d.anchor, l)?;
            if !pts.iter().all(|&v| vl.contains(v)) {
                notes.push(json!({"skipped": {"lambda": lambda, "ratio": ratio}, "reason": "parallelogram leaves V_L(v0)"}));
                cell += cfg.alpha.len() as u64;
                continue;
            }
            let sampler = SpectralSampler::new(vl);
            for &alpha in &cfg.alpha {
                let t0 = Instant::now();
                let hits: u64 = trials_in_order(0..cfg.trials, |t| {
                    let s = sampler.sample(derive_seed(cfg.seed, cell, t));
                    Ok(u64::from(crossing_exists(&open_mask(&s, lambda, alpha)?, &piece)?))
                })?
                .into_iter()
                .sum();
                let kind = format!("parallelogram/ratio={ratio}/alpha={alpha}");
                out.records.push(record(cfg, kind, l as u64, lambda, cfg.trials, proportion(hits, cfg.trials), t0));
                cell += 1;
            }
        }
    }
    out.notes = json!({
        "parallelogram": {"a": 0, "b": 0, "length": 16.0 * w, "rise": cfg.rise, "width": w, "anchor": [d.anchor.x, d.anchor.y]},
        "reference": 7.0 / 8.0,
        "cells": notes,
    });
    Ok(out)
}

/// Tail of harmonic fluctuations over a window of side `ell` in `V_N`, field on `V_2N`; `lambda` is the deviation.
pub fn run_fluctuation(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let mut out = RunOutput::default();
    let mut notes = Vec::new();
    let mut cell = 0u64;
    for &n in &cfg.n {
        let ell = cfg.ell.unwrap_or((n / 16).max(2));
        let h = (ell / 2) as i64;
        let window = LatticeBox::square(Vertex::new(-h, -h), ell as usize + 1)?;
        for &eps in &cfg.lambda {
            let t0 = Instant::now();
            let setup = FluctuationSetup {
                outer: box_vn(2 * n)?,
                block: box_vn(n)?,
                window,
                eps,
                trials: cfg.trials,
                seed: mix64(cfg.seed ^ mix64(cell)),
                c2: 1.0,
            };
            let r = fluctuation_tail_experiment(&setup)?;
            out.records.push(record(cfg, "fluctuation".into(), n, eps, r.trials, (r.estimate, r.ci_lo, r.ci_hi), t0));
            notes.push(json!({"N": n, "eps": eps, "ell": ell, "bound": r.bound}));
            cell += 1;
        }
    }
    out.notes = json!({"cells": notes});
    Ok(out)
}

/// Per-trial contour statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourTrial {
    /// Mean of `eta + alpha` over the boundary of `V_2w(v0)`.
    pub x: f64,
    pub has_contour: bool,
    /// Mean over that boundary of the harmonic extension from the contour, plus `alpha`.
    pub conditional_mean: Option<f64>,
    /// Exact variance of the boundary mean of the zero-boundary field inside the contour.
    pub var_y: Option<f64>,
    /// Largest `sum_v G(u, v)` over boundary vertices `u`.
    pub max_green_sum: Option<f64>,
}

const CONTOUR_CG_TOL: f64 = 1e-11;
/// Slack for the conditional-mean bound, covering the iterative solve.
pub const CONTOUR_SLACK: f64 = 1e-6;

/// Contour statistics of one sample over an annulus with inner box `V_2w(v0)`.
pub fn contour_trial(sample: &FieldSample, ann: &Annulus, w: f64, lambda: f64, alpha: f64) -> Result<ContourTrial, HarnessError> {
    let v0 = ann.center;
    let x = boundary_average(sample, v0, w, alpha)?;
    let mask = open_mask(sample, lambda, alpha)?;
    let Some(c) = outermost_open_contour(&mask, ann)? else {
        return Ok(ContourTrial { x, has_contour: false, conditional_mean: None, var_y: None, max_green_sum: None });
    };
    let (lo, hi) = c.cycle.iter().fold((c.cycle[0], c.cycle[0]), |(lo, hi), v| {
        (Vertex::new(lo.x.min(v.x), lo.y.min(v.y)), Vertex::new(hi.x.max(v.x), hi.y.max(v.y)))
    });
    let crop = LatticeBox::spanning(lo, hi)?;
    let mut on_cycle = vec![false; crop.len()];
    for v in c.vertices() {
        on_cycle[crop.index(*v).expect("cycle inside its bounding box")] = true;
    }
    let free: Vec<bool> = crop.vertices().enumerate().map(|(i, v)| c.encloses(v) && !on_cycle[i]).collect();
    let inner = box_vl(v0, 2.0 * w)?;
    let ring = inner.boundary();
    let mut ind = vec![0.0; crop.len()];
    for u in &ring {
        let i = crop.index(*u).ok_or_else(|| HarnessError::Invariant(format!("{u} outside the contour")))?;
        if !free[i] {
            return Err(HarnessError::Invariant(format!("{u} not strictly inside the contour")));
        }
        ind[i] = 1.0;
    }
    // data term of the Dirichlet problem: field values on the contour next to free cells
    let rhs: Vec<f64> = crop
        .vertices()
        .enumerate()
        .map(|(i, v)| {
            if !free[i] {
                return 0.0;
            }
            v.neighbors()
                .iter()
                .filter(|n| crop.index(**n).map(|j| on_cycle[j]).unwrap_or(false))
                .map(|n| sample.value(*n))
                .sum()
        })
        .collect();
    let g = MaskedLaplacian::new(crop.width, crop.height, free).solve(&ind, CONTOUR_CG_TOL)?;
    let m = ring.len() as f64;
    // mean of H over the ring is 1^T L^-1 b / m = g^T b / m with g = L^-1 1 (L symmetric)
    let h_mean: f64 = g.iter().zip(&rhs).map(|(a, b)| a * b).sum::<f64>() / m;
    let sums: Vec<f64> = ring.iter().map(|u| 4.0 * g[crop.index(*u).expect("checked")]).collect();
    Ok(ContourTrial {
        x,
        has_contour: true,
        conditional_mean: Some(h_mean + alpha),
        var_y: Some(sums.iter().sum::<f64>() / (m * m)),
        max_green_sum: Some(sums.iter().copied().fold(0.0, f64::max)),
    })
}

/// Annulus from the configured good parallelogram and the box `V` the field lives on.
pub fn contour_setup(cfg: &ExperimentConfig) -> Result<(Annulus, LatticeBox), HarnessError> {
    let w = cfg.width;
    let d = make_parallelogram(0.0, 0.0, 16.0 * w, cfg.rise, w)?;
    let ann = rotate_and_assemble(&d)?;
    let v = box_vl(ann.center, 4.0 * d.length + 2.0 * w)?;
    Ok((ann, v))
}

/// Outermost contour statistics and the conditional-mean bound on every contoured trial.
pub fn run_contour(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let mut out = RunOutput::default();
    let (ann, vbox) = contour_setup(cfg)?;
    let w = cfg.width;
    let l = 16.0 * w;
    let green_cap = 2.0 * (4.0 * l - 2.0 * w);
    let sampler = SpectralSampler::new(vbox);
    let mut notes = Vec::new();
    let mut cell = 0u64;
    for &lambda in &cfg.lambda {
        for &alpha in &cfg.alpha {
            let t0 = Instant::now();
            let trials = trials_in_order(0..cfg.trials, |t| {
                let s = sampler.sample(derive_seed(cfg.seed, cell, t));
                contour_trial(&s, &ann, w, lambda, alpha)
            })?;
            let found: Vec<&ContourTrial> = trials.iter().filter(|t| t.has_contour).collect();
            let violations =
                found.iter().filter(|t| t.conditional_mean.is_some_and(|c| c.abs() > lambda + CONTOUR_SLACK)).count() as u64;
            let var_max = found.iter().filter_map(|t| t.var_y).fold(0.0, f64::max);
            let green_max = found.iter().filter_map(|t| t.max_green_sum).fold(0.0, f64::max);
            if violations > 0 {
                out.failures.push(format!("{violations} conditional-mean violations at lambda {lambda}, alpha {alpha}"));
            }
            if var_max > 16.0 + CONTOUR_SLACK {
                out.failures.push(format!("Var(Y) = {var_max} exceeds 16"));
            }
            if green_max > green_cap + CONTOUR_SLACK {
                out.failures.push(format!("Green sum {green_max} exceeds {green_cap}"));
            }
            let kind = |s: &str| format!("contour/{s}/alpha={alpha}");
            let n = vbox.side_length() as u64;
            let hits = found.len() as u64;
            out.records.push(record(cfg, kind("exists"), n, lambda, cfg.trials, proportion(hits, cfg.trials), t0));
            let v = violations as f64;
            out.records.push(record(cfg, kind("violations"), n, lambda, hits, (v, v, v), t0));
            let xs: Vec<f64> = trials.iter().map(|t| t.x).collect();
            out.records.push(record(cfg, kind("mean-x"), n, lambda, cfg.trials, mean_ci(&xs), t0));
            notes.push(json!({"lambda": lambda, "alpha": alpha, "contours": hits, "violations": violations, "max_var_y": var_max, "max_green_sum": green_max, "green_cap": green_cap}));
            cell += 1;
        }
    }
    out.notes = json!({
        "annulus": {"width": w, "length": l, "center": [ann.center.x, ann.center.y], "field_box_side": vbox.side_length()},
        "slack": CONTOUR_SLACK,
        "cells": notes,
    });
    Ok(out)
}
