//! Monte Carlo experiments, result records, and run outputs.

mod fit;
mod plot;
mod run;

pub use fit::{fit_exponent, ExponentFit};
pub use plot::plot_results;
pub use run::{
    contour_setup, contour_trial, run_chemdist, run_contour, run_crossing, run_fluctuation, run_parallelogram, ContourTrial, RunOutput, CONTOUR_SLACK,
};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgff::DgffError;
use crate::geometry::GeometryError;
use crate::levelset::LevelSetError;
use crate::schedule::ScheduleError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("fit: {0}")]
    Fit(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Dgff(#[from] DgffError),
    #[error(transparent)]
    LevelSet(#[from] LevelSetError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for invariant failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Json(_) => 2,
            HarnessError::Invariant(_) | HarnessError::LevelSet(LevelSetError::Invariant(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Crossing,
    Chemdist,
    Parallelogram,
    Fluctuation,
    Contour,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Crossing => "crossing",
            ExperimentKind::Chemdist => "chemdist",
            ExperimentKind::Parallelogram => "parallelogram",
            ExperimentKind::Fluctuation => "fluctuation",
            ExperimentKind::Contour => "contour",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| HarnessError::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// Thresholds as JSON numbers, or the string `"inf"`.
mod thresholds {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Level {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Level> =
            v.iter().map(|&x| if x.is_infinite() { Level::Text("inf".into()) } else { Level::Num(x) }).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Level>::deserialize(d)?
            .into_iter()
            .map(|l| match l {
                Level::Num(x) => Ok(x),
                Level::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
                Level::Text(t) => Err(serde::de::Error::custom(format!("bad threshold {t:?}"))),
            })
            .collect()
    }
}

fn default_kappa() -> f64 {
    0.5
}
fn default_k() -> u64 {
    4
}
fn default_alpha() -> Vec<f64> {
    vec![0.0]
}
fn default_ratios() -> Vec<u64> {
    vec![8, 16, 32, 64]
}
fn default_width() -> f64 {
    10.0
}
fn default_reject_cap() -> u64 {
    10
}

/// One experiment run. Keys are lowercase; `N` and `K` are accepted as aliases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, alias = "N")]
    pub n: Vec<u64>,
    #[serde(with = "thresholds")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_k", alias = "K")]
    pub k: u64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Shifts for parallelogram and contour runs.
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    /// `L / w` ratios for parallelogram runs.
    #[serde(default = "default_ratios")]
    pub ratios: Vec<u64>,
    /// Parallelogram width `w`; the length is `16 w`.
    #[serde(default = "default_width")]
    pub width: f64,
    /// Parallelogram rise `h`.
    #[serde(default)]
    pub rise: f64,
    /// Rejection attempts per cell, as a multiple of `trials`.
    #[serde(default = "default_reject_cap")]
    pub reject_cap: u64,
    /// Window side for fluctuation runs; defaults to `N / 16`.
    #[serde(default)]
    pub ell: Option<u64>,
    /// Write wall time into `results.csv`; off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_seconds: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.lambda.is_empty() || self.lambda.iter().any(|l| l.is_nan() || *l < 0.0) {
            return bad(format!("lambda list {:?} must be non-empty and non-negative", self.lambda));
        }
        if let Some(n) = self.n.iter().find(|&&n| n < 4 || n % 2 == 1) {
            return bad(format!("N = {n} must be even and at least 4"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad(format!("kappa = {} outside (0, 1]", self.kappa));
        }
        if self.k < 2 || !self.k.is_power_of_two() {
            return bad(format!("K = {} is not a power of two", self.k));
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        match self.kind {
            ExperimentKind::Crossing | ExperimentKind::Fluctuation if self.n.is_empty() => bad("N list is empty".into()),
            ExperimentKind::Chemdist => {
                let mut ns = self.n.clone();
                ns.sort_unstable();
                ns.dedup();
                if ns.len() < 3 {
                    return bad("chemdist needs at least 3 distinct N".into());
                }
                if self.reject_cap == 0 {
                    return bad("reject_cap must be positive".into());
                }
                Ok(())
            }
            ExperimentKind::Parallelogram | ExperimentKind::Contour => {
                if self.alpha.is_empty() || self.alpha.iter().any(|a| !a.is_finite()) {
                    return bad("alpha list must be non-empty and finite".into());
                }
                if self.kind == ExperimentKind::Parallelogram && (self.ratios.is_empty() || self.ratios.contains(&0)) {
                    return bad("ratios must be non-empty and positive".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    /// Experiment kind, optionally followed by `/variant`.
    pub kind: String,
    pub n: u64,
    pub lambda: f64,
    pub kappa: f64,
    pub k: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seconds: f64,
}

pub const RESULTS_HEADER: &str = "kind,N,lambda,kappa,K,trials,estimate,ci_lo,ci_hi,seconds";

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn results_csv(records: &[ResultRecord], with_seconds: bool) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for r in records {
        let secs = if with_seconds { num(r.seconds) } else { String::new() };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.kind,
            r.n,
            num(r.lambda),
            num(r.kappa),
            r.k,
            r.trials,
            num(r.estimate),
            num(r.ci_lo),
            num(r.ci_hi),
            secs
        );
    }
    s
}

/// Runs the configured experiment on a pool of `workers` threads (all cores when absent).
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let threads = workers.or(cfg.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cfg.kind {
        ExperimentKind::Crossing => run_crossing(cfg),
        ExperimentKind::Chemdist => run_chemdist(cfg),
        ExperimentKind::Parallelogram => run_parallelogram(cfg),
        ExperimentKind::Fluctuation => run_fluctuation(cfg),
        ExperimentKind::Contour => run_contour(cfg),
    })
}

/// Writes `results.csv`, `manifest.json` and, for chemdist, `fits.csv` into `dir`.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &RunOutput,
    started: chrono::DateTime<chrono::Utc>,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(&out.records, cfg.record_seconds))?;
    if !out.fits.is_empty() {
        let mut s = String::from("kind,lambda,slope,slope_lo,slope_hi,intercept,points\n");
        for (kind, lambda, f) in &out.fits {
            let _ = writeln!(s, "{kind},{},{},{},{},{},{}", num(*lambda), f.slope, f.ci_lo, f.ci_hi, f.intercept, f.points);
        }
        fs::write(dir.join("fits.csv"), s)?;
    }
    let manifest = serde_json::json!({
        "config": cfg,
        "master_seed": cfg.seed,
        "code_version": env!("CARGO_PKG_VERSION"),
        "started": started.to_rfc3339(),
        "finished": chrono::Utc::now().to_rfc3339(),
        "cell_seconds": out.records.iter().map(|r| (r.kind.clone(), r.n, num(r.lambda), r.seconds)).collect::<Vec<_>>(),
        "notes": out.notes,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}
