//! Constant recursions of the multi-scale induction, evaluated in log-space.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// `beta = 2^-9`, as a binary exponent.
pub const BETA_LOG2: i64 = -9;
pub const BETA: f64 = 1.0 / 512.0;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("rho = {0} >= 1/4: the trivial bound needs P(|Z| <= lambda) < 1/4")]
    RhoTooLarge(f64),
    #[error("no passing power of two up to 2^{0}")]
    NoPassingScale(u32),
}

/// Positive real as `mantissa * 2^exponent` with `mantissa` in `[1, 2)`; zero has mantissa 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaled {
    pub mantissa: f64,
    pub exponent: i64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, exponent: 0 };

    pub fn pow2(exponent: i64) -> Self {
        Scaled { mantissa: 1.0, exponent }
    }

    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let l2 = ln / LN_2;
        let e = l2.floor();
        let mut m = ((l2 - e) * LN_2).exp();
        let mut e = e as i64;
        if m >= 2.0 {
            m /= 2.0;
            e += 1;
        }
        Scaled { mantissa: m, exponent: e }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            return Self::ZERO;
        }
        let e = x.log2().floor() as i64;
        Scaled { mantissa: x / 2f64.powi(e as i32), exponent: e }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.mantissa == 0.0 {
            return Self::ZERO;
        }
        while self.mantissa >= 2.0 {
            self.mantissa /= 2.0;
            self.exponent += 1;
        }
        while self.mantissa < 1.0 {
            self.mantissa *= 2.0;
            self.exponent -= 1;
        }
        self
    }

    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * LN_2
    }

    pub fn log2(&self) -> f64 {
        self.mantissa.log2() + self.exponent as f64
    }

    pub fn to_f64(&self) -> f64 {
        self.mantissa * 2f64.powf(self.exponent as f64)
    }

    pub fn mul(self, o: Scaled) -> Scaled {
        Scaled { mantissa: self.mantissa * o.mantissa, exponent: self.exponent + o.exponent }.normalized()
    }
}

impl fmt::Display for Scaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.15}*2^{}", self.mantissa, self.exponent)
    }
}

fn default_c2() -> f64 {
    1.0
}
fn default_c4() -> f64 {
    2.0
}
fn default_one() -> f64 {
    1.0
}
fn default_k() -> u64 {
    1 << 32
}
fn default_delta() -> f64 {
    1.0 / 16.0
}
fn default_horizon() -> usize {
    64
}

/// Universal and exponent constants. `C3` and `C5` are derived from `C2`, `C4`;
/// `c` and `b` default to the smallest admissible values at `lambda0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_one")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_c4")]
    pub c4: f64,
    #[serde(default = "default_one")]
    pub c_prime: f64,
    #[serde(default = "default_one")]
    pub lambda0: f64,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default = "default_k")]
    pub k: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            c1: 1.0,
            c2: default_c2(),
            c4: default_c4(),
            c_prime: 1.0,
            lambda0: 1.0,
            c: None,
            b: None,
            k: default_k(),
            delta: default_delta(),
            horizon: default_horizon(),
        }
    }
}

fn log2_of(k: u64) -> Result<u32, ScheduleError> {
    if k < 2 || !k.is_power_of_two() {
        return Err(ScheduleError::Config(format!("K = {k} is not a power of two >= 2")));
    }
    Ok(k.trailing_zeros())
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        for (name, v) in [("C1", self.c1), ("C2", self.c2), ("C4", self.c4), ("c'", self.c_prime), ("lambda0", self.lambda0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScheduleError::Config(format!("{name} = {v} must be positive")));
            }
        }
        if !(0.0 < self.delta && self.delta < 1.0) {
            return Err(ScheduleError::Config(format!("delta = {} outside (0,1)", self.delta)));
        }
        log2_of(self.k)?;
        if let Some(c) = self.c {
            let need = self.min_c();
            if c < need {
                return Err(ScheduleError::Config(format!("c = {c} below the admissible minimum {need}")));
            }
        }
        Ok(())
    }

    pub fn c3(&self) -> f64 {
        2.0 * self.c4 * self.c2.sqrt()
    }

    pub fn c5_ln(&self) -> f64 {
        32.0 * self.c4.max(2.0).ln()
    }

    /// Smallest `c` with `e^(c l^2) >= 400 e^(2c'(l + eps_0)^2)` and `>= C5` for every `l >= lambda0`.
    /// Both ratios decrease in `l`, so `lambda0` is the binding point.
    pub fn min_c(&self) -> f64 {
        let l = self.lambda0;
        let e0 = epsilon(self, 0);
        ((400f64.ln() + 2.0 * self.c_prime * (l + e0).powi(2)) / (l * l)).max(self.c5_ln() / (l * l))
    }

    pub fn c_value(&self) -> f64 {
        self.c.unwrap_or_else(|| self.min_c())
    }
}

/// `eps_r` in closed form.
pub fn epsilon(cfg: &ScheduleConfig, r: usize) -> f64 {
    let s = cfg.c2.sqrt();
    match r {
        0 => 100.0 * s,
        1 => 8.0 * s,
        _ => 4.0 * s * 2f64.powf(BETA_LOG2 as f64 * (r - 1) as f64 / 2.0),
    }
}

pub fn epsilon_schedule(cfg: &ScheduleConfig, horizon: usize) -> Vec<f64> {
    (0..=horizon).map(|r| epsilon(cfg, r)).collect()
}

/// `sum_{i >= 1} eps_i`, with the geometric tail in closed form.
pub fn epsilon_total(cfg: &ScheduleConfig) -> f64 {
    let q = BETA.sqrt();
    cfg.c2.sqrt() * (8.0 + 4.0 * q / (1.0 - q))
}

/// `c_r = (beta K)^r = 2^(r (k - 9))`, exact.
pub fn c_r(k: u64, r: usize) -> Scaled {
    Scaled::pow2(r as i64 * (k.trailing_zeros() as i64 + BETA_LOG2))
}

/// `ln(1 + 2 e^x)` without overflow.
fn ln_one_plus_twice_exp(x: f64) -> f64 {
    if x > 30.0 {
        LN_2 + x + (0.5 * (-x).exp()).ln_1p()
    } else {
        (2.0 * x.exp()).ln_1p()
    }
}

/// `ln Delta_r` for `r >= 1`.
pub fn big_delta_ln(k: u64, r: usize) -> f64 {
    assert!(r >= 1, "Delta is indexed from 1");
    let lnk = k.trailing_zeros() as f64 * LN_2;
    if r == 1 {
        return (9.0 * lnk).ln() - BETA.ln() - lnk / 8.0;
    }
    let lnc = c_r(k, r - 1).ln();
    (ln_one_plus_twice_exp(lnc) + 9.0 * lnk / BETA).ln() - lnc
}

pub fn big_delta(k: u64, r: usize) -> f64 {
    big_delta_ln(k, r).exp()
}

/// `delta_0..=delta_R` and `Delta_1..=Delta_R` (the latter as logarithms, index 0 unused).
#[derive(Debug, Clone, Serialize)]
pub struct DeltaSchedule {
    pub delta: Vec<f64>,
    pub big_delta_ln: Vec<Option<f64>>,
}

pub fn delta_schedule(k: u64, horizon: usize) -> Result<DeltaSchedule, ScheduleError> {
    log2_of(k)?;
    let big: Vec<Option<f64>> = (0..=horizon).map(|r| (r >= 1).then(|| big_delta_ln(k, r))).collect();
    let mut delta = vec![0.0];
    for r in 1..=horizon {
        let next = if r == 1 { 0.5 } else { delta[r - 1] + big[r - 1].expect("r - 1 >= 1").exp() };
        delta.push(next);
    }
    Ok(DeltaSchedule { delta, big_delta_ln: big })
}

/// `ln K_0(l) = c l^2`.
pub fn k0_ln(cfg: &ScheduleConfig, lambda: f64) -> f64 {
    cfg.c_value() * lambda * lambda
}

#[derive(Debug, Clone, Serialize)]
pub struct Thresholds {
    /// `ln K_r(lambda)` for `r = 0..=R`.
    pub k_ln: Vec<f64>,
    pub k_inf_ln: f64,
}

pub fn k_thresholds(cfg: &ScheduleConfig, lambda: f64, horizon: usize) -> Result<Thresholds, ScheduleError> {
    if lambda < cfg.lambda0 {
        return Err(ScheduleError::Config(format!("lambda = {lambda} below lambda0 = {}", cfg.lambda0)));
    }
    let mut shift = 0.0;
    let mut k_ln = vec![k0_ln(cfg, lambda)];
    for r in 1..=horizon {
        shift += epsilon(cfg, r);
        k_ln.push(k0_ln(cfg, lambda + shift));
    }
    Ok(Thresholds { k_ln, k_inf_ln: k0_ln(cfg, lambda + epsilon_total(cfg)) })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Summability {
    pub pass: bool,
    /// `Delta_1 + sum_(r >= 1) Delta_(r+1)`, including the tail bound.
    pub total: f64,
    /// `delta - total`.
    pub residual: f64,
    pub horizon: usize,
}

/// Sum of all `Delta_r` against `delta`, with a geometric tail bound after the horizon.
pub fn summability_check(k: u64, delta: f64) -> Result<Summability, ScheduleError> {
    Ok(summability_check_log2(log2_of(k)?, delta))
}

/// Summability for `K = 2^kk`, which may exceed `u64`.
pub fn summability_check_log2(kk: u32, delta: f64) -> Summability {
    let verdict = |total: f64, horizon| Summability { pass: total <= delta, total, residual: delta - total, horizon };
    let lnk = kk as f64 * LN_2;
    let d1 = (9.0 * lnk / BETA) * (-lnk / 8.0).exp();
    let growth = kk as i64 + BETA_LOG2;
    if growth <= 0 {
        // c_r does not grow and the series diverges
        return verdict(f64::INFINITY, 1);
    }
    if d1 > delta {
        return verdict(d1, 1);
    }
    let lnq = growth as f64 * LN_2;
    let mut total = d1;
    let mut r = 1usize;
    loop {
        let lnc = r as f64 * lnq;
        let term = (ln_one_plus_twice_exp(lnc) + 9.0 * lnk / BETA) * (-lnc).exp();
        total += term;
        if term < total * 1e-18 || r >= 4096 {
            break;
        }
        r += 1;
    }
    // for s > r: Delta_(s+1) <= (ln 3 + s ln(beta K) + 9 ln K / beta) q^s with q = 1/(beta K)
    let q = (-lnq).exp();
    let a = 3f64.ln() + 9.0 * lnk / BETA;
    let rf = r as f64;
    let qr = q.powf(rf + 1.0);
    let tail = a * qr / (1.0 - q) + lnq * qr * ((rf + 1.0) - rf * q) / (1.0 - q).powi(2);
    verdict(total + tail, r)
}

/// Exponent of the smallest passing power of two, by doubling `K` from 2 up to `2^max_log2`.
pub fn minimal_passing_log2(delta: f64, max_log2: u32) -> Result<u32, ScheduleError> {
    (1..=max_log2).find(|&e| summability_check_log2(e, delta).pass).ok_or(ScheduleError::NoPassingScale(max_log2))
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonOfLambda {
    pub lambda: f64,
    pub b: f64,
    /// `k(lambda) = log2 K(lambda)`.
    pub k_log2: u64,
    pub k_lambda: Scaled,
    pub epsilon: Scaled,
    /// `-ln eps(lambda) / lambda^2`.
    pub a_effective: f64,
    pub summability_residual: f64,
    /// Which constraint fixed `K(lambda)`.
    pub binding: String,
}

pub const FINAL_DELTA: f64 = 1.0 / 16.0;
const SEARCH_LOG2: u32 = 4096;

/// Smallest admissible `b`: `e^(b l^2)` must dominate `K_inf(l)` and the minimal passing scale for all `l >= lambda0`.
pub fn min_b(cfg: &ScheduleConfig) -> Result<f64, ScheduleError> {
    let l0 = cfg.lambda0;
    let sum_ln = minimal_passing_log2(FINAL_DELTA, SEARCH_LOG2)? as f64 * LN_2;
    Ok((cfg.c_value() * (l0 + epsilon_total(cfg)).powi(2)).max(sum_ln) / (l0 * l0))
}

pub fn epsilon_of_lambda(cfg: &ScheduleConfig, lambda: f64) -> Result<EpsilonOfLambda, ScheduleError> {
    cfg.validate()?;
    if lambda < cfg.lambda0 {
        return Err(ScheduleError::Config(format!("lambda = {lambda} below lambda0 = {}", cfg.lambda0)));
    }
    let need_b = min_b(cfg)?;
    let b = match cfg.b {
        Some(b) if b < need_b => return Err(ScheduleError::Config(format!("b = {b} below the admissible minimum {need_b}"))),
        Some(b) => b,
        None => need_b,
    };
    let sum_log2 = minimal_passing_log2(FINAL_DELTA, SEARCH_LOG2)? as f64;
    let inf_log2 = k0_ln(cfg, lambda + epsilon_total(cfg)) / LN_2;
    let form_log2 = b * lambda * lambda / LN_2;
    let candidates = [("e^(b lambda^2)", form_log2), ("K_inf(lambda)", inf_log2), ("summability at 1/16", sum_log2)];
    let (binding, need) = candidates.iter().fold(("", f64::NEG_INFINITY), |acc, &(n, v)| if v > acc.1 { (n, v) } else { acc });
    let kk = need.ceil().max(1.0) as u64;
    let check = summability_check_log2(kk.min(u32::MAX as u64) as u32, FINAL_DELTA);
    let kf = kk as f64;
    let eps_ln = -(16f64.ln() + 2.0 * kf * LN_2 + kf.ln());
    Ok(EpsilonOfLambda {
        lambda,
        b,
        k_log2: kk,
        k_lambda: Scaled::pow2(kk as i64),
        epsilon: Scaled::from_ln(eps_ln),
        a_effective: -eps_ln / (lambda * lambda),
        summability_residual: check.residual,
        binding: binding.to_string(),
    })
}

/// `rho(lambda) = P(|Z| <= lambda)` for `Z ~ N(0, 4)`.
pub fn rho(lambda: f64) -> f64 {
    let n = Normal::new(0.0, 2.0).expect("valid normal");
    (2.0 * n.cdf(lambda) - 1.0).max(0.0)
}

/// `lambda*` with `rho(lambda*) = 1/4`, i.e. `2 Phi^-1(5/8)`.
pub fn rho_threshold() -> f64 {
    2.0 * Normal::standard().inverse_cdf(5.0 / 8.0)
}

/// `N^2 (4 rho)^(kappa N)`.
pub fn trivial_decay_bound(lambda: f64, kappa: f64, n: u64) -> Result<f64, ScheduleError> {
    let r = rho(lambda);
    if r >= 0.25 {
        return Err(ScheduleError::RhoTooLarge(r));
    }
    let nf = n as f64;
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * nf.ln() + kappa * nf * (4.0 * r).ln()).exp())
}

/// One row per `r`, as written by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct ScheduleRow {
    pub r: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub big_delta: Option<Scaled>,
    pub c_r: Scaled,
    pub k_r: Scaled,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleTable {
    pub k: u64,
    pub lambda: f64,
    pub rows: Vec<ScheduleRow>,
    pub k_inf: Scaled,
}

pub fn schedule_table(cfg: &ScheduleConfig, lambda: f64) -> Result<ScheduleTable, ScheduleError> {
    cfg.validate()?;
    let eps = epsilon_schedule(cfg, cfg.horizon);
    let ds = delta_schedule(cfg.k, cfg.horizon)?;
    let th = k_thresholds(cfg, lambda, cfg.horizon)?;
    let rows = (0..=cfg.horizon)
        .map(|r| ScheduleRow {
            r,
            epsilon: eps[r],
            delta: ds.delta[r],
            big_delta: ds.big_delta_ln[r].map(Scaled::from_ln),
            c_r: c_r(cfg.k, r),
            k_r: Scaled::from_ln(th.k_ln[r]),
        })
        .collect();
    Ok(ScheduleTable { k: cfg.k, lambda, rows, k_inf: Scaled::from_ln(th.k_inf_ln) })
}

impl ScheduleTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,epsilon_r,delta_r,Delta_r,c_r,K_r\n");
        for row in &self.rows {
            let big = row.big_delta.map(|d| d.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{:e},{:e},{},{},{}\n", row.r, row.epsilon, row.delta, big, row.c_r, row.k_r));
        }
        s
    }
}
