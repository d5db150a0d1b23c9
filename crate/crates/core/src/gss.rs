//! Minimum-area floorplanning by golden-section search over the whitespace
//! ratio. Each trial ratio defines a fixed outline which is handed to the
//! fixed-outline driver; a legal result shrinks the feasible end of the
//! bracket, a failure raises the infeasible end.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffa::{ffa_cd_from, FfaConfig, FfaError, Stopwatch};
use crate::model::{bounding_area, total_module_area, Floorplan, ModelError, OutlineSpec, ProblemInstance};
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum GssError {
    #[error("no legal floorplan found up to whitespace ratio {cap}")]
    Infeasible { cap: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cost needs positive minima (W_min={w_min}, S_min={s_min})")]
    NonPositiveMinimum { w_min: f64, s_min: f64 },
    #[error(transparent)]
    Ffa(#[from] FfaError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GssConfig {
    /// Outline aspect ratio `R = H*/W*`.
    pub ratio: f64,
    /// Stop once `gamma_max - gamma_min < epsilon`.
    pub epsilon: f64,
    /// First feasible candidate; doubled until a trial succeeds.
    pub gamma_start: f64,
    pub gamma_cap: f64,
    /// Generation budget of every trial.
    pub trial_generations: usize,
    /// Seed member 0 of each trial with the best plan so far.
    pub warm_start: bool,
    /// Template for the inner driver; outline and budget are set per trial.
    pub inner: FfaConfig,
}

impl Default for GssConfig {
    fn default() -> Self {
        let mut inner = FfaConfig::new(OutlineSpec::new(1.0, 1.0).expect("unit outline"));
        inner.k_max_later = Some(35);
        Self {
            ratio: 1.0,
            epsilon: 0.002,
            gamma_start: 0.15,
            gamma_cap: 2.0,
            trial_generations: 60,
            warm_start: false,
            inner,
        }
    }
}

impl GssConfig {
    pub fn validate(&self) -> Result<(), GssError> {
        let bad = |m: &str| Err(GssError::Config(m.to_string()));
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return bad("aspect ratio must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.gamma_start > 0.0 && self.gamma_start <= self.gamma_cap && self.gamma_cap.is_finite()) {
            return bad("need 0 < gamma_start <= gamma_cap");
        }
        if self.trial_generations < 1 {
            return bad("trial_generations must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GssTrial {
    pub gamma: f64,
    pub feasible: bool,
    pub hpwl: f64,
    /// Bounding-box area of the trial's best plan.
    pub area: f64,
    pub generations: usize,
}

/// A legal plan backing a contraction of `gamma_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub gamma: f64,
    pub outline: OutlineSpec,
    pub plan: Floorplan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GssResult {
    pub plan: Floorplan,
    /// Outline of the final feasible ratio.
    pub outline: OutlineSpec,
    /// Final bracket.
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub hpwl: f64,
    /// Bounding-box area `S` of the plan.
    pub area: f64,
    /// Whitespace of the plan's bounding box, `(S - A)/A`.
    pub whitespace: f64,
    pub trials: Vec<GssTrial>,
    pub witnesses: Vec<Witness>,
    pub seconds: f64,
}

/// `0.618 (gamma_max - gamma_min) + gamma_min`
pub fn golden_point(gamma_min: f64, gamma_max: f64) -> f64 {
    0.618 * (gamma_max - gamma_min) + gamma_min
}

/// Worst-case number of contractions to shrink a bracket of `width` below
/// `epsilon`: every step keeps at least 0.618 of the width.
pub fn max_contractions(width: f64, epsilon: f64) -> usize {
    if width < epsilon {
        0
    } else {
        ((epsilon / width).ln() / 0.618f64.ln()).ceil() as usize
    }
}

/// `0.5 W/W_min + 0.5 S/S_min`.
pub fn cost(w: f64, w_min: f64, s: f64, s_min: f64) -> Result<f64, GssError> {
    if !(w_min > 0.0 && s_min > 0.0) {
        return Err(GssError::NonPositiveMinimum { w_min, s_min });
    }
    Ok(0.5 * w / w_min + 0.5 * s / s_min)
}

/// Cost with the wirelength term read as 1 when every compared run has
/// zero wirelength (an instance without nets).
pub fn session_cost(w: f64, w_min: f64, s: f64, s_min: f64) -> Result<f64, GssError> {
    if w == 0.0 && w_min == 0.0 {
        return cost(1.0, 1.0, s, s_min);
    }
    cost(w, w_min, s, s_min)
}

pub fn fa_gss(instance: &ProblemInstance, config: &GssConfig, seed: u64) -> Result<GssResult, GssError> {
    config.validate()?;
    let clock = Stopwatch::start();
    let area = total_module_area(instance);
    let mut trials = Vec::new();
    let mut witnesses = Vec::new();
    let mut best: Option<Floorplan> = None;

    let mut run = |gamma: f64, best: &Option<Floorplan>| -> Result<(OutlineSpec, crate::ffa::FfaResult), GssError> {
        let outline = OutlineSpec::from_ratio(area, config.ratio, gamma)?;
        let mut inner = config.inner.clone();
        inner.outline = outline;
        inner.max_generations = config.trial_generations;
        let start = if config.warm_start { best.as_ref() } else { None };
        let res = ffa_cd_from(instance, &inner, derive_seed(seed, &[trials.len() as u64]), start)?;
        trials.push(GssTrial {
            gamma,
            feasible: res.legal,
            hpwl: res.hpwl,
            area: bounding_area(instance, &res.plan),
            generations: res.generations,
        });
        Ok((outline, res))
    };

    let mut gamma_min = 0.0;
    let mut gamma_max = config.gamma_start;
    loop {
        let (outline, res) = run(gamma_max, &best)?;
        if res.legal {
            witnesses.push(Witness { gamma: gamma_max, outline, plan: res.plan.clone() });
            best = Some(res.plan);
            break;
        }
        if gamma_max >= config.gamma_cap {
            return Err(GssError::Infeasible { cap: config.gamma_cap });
        }
        gamma_min = gamma_max;
        gamma_max = (2.0 * gamma_max).min(config.gamma_cap);
    }

    while gamma_max - gamma_min >= config.epsilon {
        let gamma = golden_point(gamma_min, gamma_max);
        let (outline, res) = run(gamma, &best)?;
        if res.legal {
            gamma_max = gamma;
            witnesses.push(Witness { gamma, outline, plan: res.plan.clone() });
            best = Some(res.plan);
        } else {
            gamma_min = gamma;
        }
    }

    let last = witnesses.last().expect("a feasible trial precedes the search");
    let plan = last.plan.clone();
    let s = bounding_area(instance, &plan);
    Ok(GssResult {
        outline: last.outline,
        hpwl: crate::objective::hpwl(instance, &plan),
        area: s,
        whitespace: (s - area) / area,
        plan,
        gamma_min,
        gamma_max,
        trials,
        witnesses,
        seconds: clock.seconds(),
    })
}
