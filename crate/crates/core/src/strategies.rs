//! Query-selection policies over the unlabeled pool.
//!
//! Selectors only ever see `(id, predicted probability)` pairs; true labels
//! never reach this module.
//!
//! The shifted-normal policy draws a target probability from a Beta
//! distribution whose mode sits slightly left of 0.5 and queries the
//! not-yet-chosen candidate whose prediction is closest to that target.
//! Beta variates are produced as `X / (X + Y)` with `X ~ Gamma(alpha)` and
//! `Y ~ Gamma(beta)`, each drawn with the Marsaglia–Tsang squeeze method.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datagen::InstanceId;
use crate::error::{Error, Result};
use crate::special::{beta_inc, ln_beta};

pub const DEFAULT_MODE: f64 = 0.45;
pub const DEFAULT_CONCENTRATION: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryStrategy {
    Random,
    Uncertainty,
    ShiftedNormal { mode: f64, concentration: f64 },
}

impl QueryStrategy {
    pub fn shifted_normal() -> Self {
        QueryStrategy::ShiftedNormal {
            mode: DEFAULT_MODE,
            concentration: DEFAULT_CONCENTRATION,
        }
    }

    /// Designation used on the command line and in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            QueryStrategy::Random => "random",
            QueryStrategy::Uncertainty => "uncertainty",
            QueryStrategy::ShiftedNormal { .. } => "shifted-normal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let QueryStrategy::ShiftedNormal { mode, concentration } = *self {
            beta_from_mode(mode, concentration)?;
        }
        Ok(())
    }
}

impl fmt::Display for QueryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(QueryStrategy::Random),
            "uncertainty" => Ok(QueryStrategy::Uncertainty),
            "shifted-normal" => Ok(QueryStrategy::shifted_normal()),
            other => Err(Error::Config(format!(
                "unknown strategy '{other}' (expected one of: random, uncertainty, shifted-normal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    /// Shape parameters must both exceed 1 so the density has an interior mode.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 1.0 && beta > 1.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Parameter(format!(
                "Beta shapes must both be finite and > 1, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mode(&self) -> f64 {
        (self.alpha - 1.0) / (self.alpha + self.beta - 2.0)
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Cumulative distribution function I_x(alpha, beta).
    pub fn cdf(&self, x: f64) -> f64 {
        beta_inc(self.alpha, self.beta, x)
    }
}

/// Beta shapes with the given mode and `alpha + beta = concentration`.
pub fn beta_from_mode(mode: f64, concentration: f64) -> Result<BetaParams> {
    if !(mode > 0.0 && mode < 1.0) {
        return Err(Error::Parameter(format!("mode must lie in (0, 1), got {mode}")));
    }
    if !(concentration > 2.0 && concentration.is_finite()) {
        return Err(Error::Parameter(format!(
            "concentration must be a finite number > 2, got {concentration}"
        )));
    }
    let spread = concentration - 2.0;
    BetaParams::new(1.0 + mode * spread, 1.0 + (1.0 - mode) * spread)
}

/// Beta density at `x`, normalized through log-gamma.
pub fn beta_pdf(params: &BetaParams, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("Beta density needs x in (0, 1), got {x}")));
    }
    let (a, b) = (params.alpha, params.beta);
    Ok(((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)).exp())
}

/// Gamma(shape, 1) variate, Marsaglia–Tsang.
fn gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        // Gamma(a) = Gamma(a + 1) * U^(1/a)
        let u: f64 = rng.random();
        return gamma_sample(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from Beta(alpha, beta), strictly inside (0, 1).
pub fn beta_sample<R: Rng + ?Sized>(params: &BetaParams, rng: &mut R) -> f64 {
    loop {
        let x = gamma_sample(params.alpha, rng);
        let y = gamma_sample(params.beta, rng);
        let t = x / (x + y);
        if t > 0.0 && t < 1.0 {
            return t;
        }
    }
}

/// An unlabeled instance as seen by the selectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate {
    pub instance_id: InstanceId,
    pub prob: f64,
}

impl ScoredCandidate {
    pub fn new(instance_id: InstanceId, prob: f64) -> Result<Self> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::Selection(format!(
                "candidate {instance_id} has probability {prob} outside (0, 1)"
            )));
        }
        Ok(Self { instance_id, prob })
    }
}

fn check_k(k: usize, available: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Selection("batch size must be positive".into()));
    }
    if k > available {
        return Err(Error::Selection(format!(
            "cannot select {k} instances from {available} candidates"
        )));
    }
    Ok(())
}

/// Uniform sample of `k` ids without replacement.
pub fn select_random<R: Rng + ?Sized>(pool_ids: &[InstanceId], k: usize, rng: &mut R) -> Result<Vec<InstanceId>> {
    check_k(k, pool_ids.len())?;
    Ok(rand::seq::index::sample(rng, pool_ids.len(), k)
        .into_iter()
        .map(|i| pool_ids[i])
        .collect())
}

/// The `k` least-confident candidates, i.e. smallest `|prob - 0.5|`, ties
/// going to the lower id.
pub fn select_uncertainty(candidates: &[ScoredCandidate], k: usize) -> Result<Vec<InstanceId>> {
    check_k(k, candidates.len())?;
    let mut ranked: Vec<&ScoredCandidate> = candidates.iter().collect();
    ranked.sort_by(|a, b| {
        (a.prob - 0.5)
            .abs()
            .total_cmp(&(b.prob - 0.5).abs())
            .then(a.instance_id.cmp(&b.instance_id))
    });
    Ok(ranked.into_iter().take(k).map(|c| c.instance_id).collect())
}

/// Shifted-normal selection: for each of `k` picks, draw a target from
/// `params` and take the remaining candidate nearest to it.
pub fn select_shifted_normal<R: Rng + ?Sized>(
    candidates: &[ScoredCandidate],
    k: usize,
    params: &BetaParams,
    rng: &mut R,
) -> Result<Vec<InstanceId>> {
    select_nearest_to_targets(candidates, k, || beta_sample(params, rng))
}

/// Picks `k` distinct candidates, each the one whose probability is nearest
/// to the next value produced by `next_target` (ties to the lower id).
pub fn select_nearest_to_targets<F: FnMut() -> f64>(
    candidates: &[ScoredCandidate],
    k: usize,
    mut next_target: F,
) -> Result<Vec<InstanceId>> {
    check_k(k, candidates.len())?;
    let mut taken = vec![false; candidates.len()];
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let target = next_target();
        let best = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .min_by(|(_, a), (_, b)| {
                (a.prob - target)
                    .abs()
                    .total_cmp(&(b.prob - target).abs())
                    .then(a.instance_id.cmp(&b.instance_id))
            })
            .map(|(i, _)| i)
            .expect("k <= candidate count leaves a candidate");
        taken[best] = true;
        chosen.push(candidates[best].instance_id);
    }
    Ok(chosen)
}

/// Dispatches to the selector configured by `strategy`.
pub fn select<R: Rng + ?Sized>(
    strategy: &QueryStrategy,
    candidates: &[ScoredCandidate],
    k: usize,
    rng: &mut R,
) -> Result<Vec<InstanceId>> {
    match *strategy {
        QueryStrategy::Random => {
            let ids: Vec<InstanceId> = candidates.iter().map(|c| c.instance_id).collect();
            select_random(&ids, k, rng)
        }
        QueryStrategy::Uncertainty => select_uncertainty(candidates, k),
        QueryStrategy::ShiftedNormal { mode, concentration } => {
            let params = beta_from_mode(mode, concentration)?;
            select_shifted_normal(candidates, k, &params, rng)
        }
    }
}
