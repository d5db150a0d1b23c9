//! Fixed-outline floorplanning driver.
//!
//! A population of `np` members, each an orientation vector plus module
//! centers. Every generation the distribution population is explored and
//! sampled for new orientations, coordinates are optimized by the conjugate
//! subgradient method under the current penalty weights, overlapping results
//! escalate the weights while nearly-legal ones are legalized, and finally
//! the distributions are refined toward the surviving orientations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csa::{self, CsaConfig};
use crate::dea::{self, DeaParams, Solution};
use crate::legalize::{check_legality, legalize_within};
use crate::model::{total_module_area, Floorplan, ModelError, OutlineSpec, ProblemInstance};
use crate::objective::{Evaluator, PenaltyWeights};
use crate::rng::{stream, StreamRng};

#[derive(Debug, Error)]
pub enum FfaError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FfaConfig {
    /// Set per run from the instance; not read from configuration files.
    #[serde(skip, default = "unit_outline")]
    pub outline: OutlineSpec,
    pub weights: PenaltyWeights,
    /// Iteration budget of the coordinate solver on `f` in the first generation.
    pub k_max: usize,
    /// Budget after the first generation; `None` keeps `k_max`.
    pub k_max_later: Option<usize>,
    /// Iteration budget of the solver on `f~` before legalization.
    pub legal_k_max: usize,
    /// Lower bound on the step control used before legalization.
    pub legal_step_floor: f64,
    /// Stall limit of the legalization run; `None` spends the whole budget.
    pub legal_stall_limit: Option<usize>,
    /// Relation moves allowed to pull a packed plan back into the outline;
    /// 0 keeps plain graph packing.
    pub repair_moves: usize,
    /// Initial step control; `None` means half the longer outline side,
    /// at least `s_min`.
    pub s0: Option<f64>,
    pub s_min: f64,
    /// Per-generation decay of the step control.
    pub step_decay: f64,
    /// Threshold on overlap area relative to total module area.
    pub delta1: f64,
    /// Threshold on outline violation relative to the outline half-perimeter.
    pub delta2: f64,
    pub max_generations: usize,
    /// Generations without improvement before non-best coordinates are
    /// resampled; `None` disables resampling.
    pub stall_reinit: Option<usize>,
    /// Generations without improvement, once legal, before stopping.
    pub stall_terminate: usize,
    /// Solver constants; `k_max` and `s0` are overridden per call.
    pub csa: CsaConfig,
    pub dea: DeaParams,
}

fn unit_outline() -> OutlineSpec {
    OutlineSpec::new(1.0, 1.0).expect("unit outline")
}

impl Default for FfaConfig {
    fn default() -> Self {
        Self::new(unit_outline())
    }
}

impl FfaConfig {
    pub fn new(outline: OutlineSpec) -> Self {
        Self {
            outline,
            weights: PenaltyWeights::default(),
            k_max: 50,
            k_max_later: None,
            legal_k_max: 1000,
            legal_step_floor: 50.0,
            legal_stall_limit: None,
            repair_moves: 50,
            s0: None,
            s_min: 1.0,
            step_decay: 0.95,
            delta1: 1e-2,
            delta2: 1e-2,
            max_generations: 200,
            stall_reinit: None,
            stall_terminate: 10,
            csa: CsaConfig::default(),
            dea: DeaParams::default(),
        }
    }

    pub fn initial_step(&self) -> f64 {
        self.s0.unwrap_or((self.outline.width.max(self.outline.height) / 2.0).max(self.s_min))
    }

    pub fn validate(&self) -> Result<(), FfaError> {
        let bad = |m: &str| Err(FfaError::Config(m.to_string()));
        if self.k_max < 1 || self.k_max_later == Some(0) || self.legal_k_max < 1 {
            return bad("iteration budgets must be at least 1");
        }
        if !(self.s_min > 0.0) || !(self.initial_step() >= self.s_min) {
            return bad("step control must satisfy s >= s_min > 0");
        }
        if !(self.legal_step_floor > 0.0) {
            return bad("legal_step_floor must be positive");
        }
        if !(self.step_decay > 0.0 && self.step_decay <= 1.0) {
            return bad("step_decay must lie in (0, 1]");
        }
        if !(self.delta1 >= 0.0 && self.delta2 >= 0.0) {
            return bad("thresholds must be non-negative");
        }
        if self.max_generations < 1 || self.stall_reinit == Some(0) || self.stall_terminate < 1 {
            return bad("generation limits must be at least 1");
        }
        let w = &self.weights;
        if [w.alpha, w.lambda, w.mu, w.lambda0, w.mu0].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("penalty weights must be finite and non-negative");
        }
        self.csa.validate().map_err(|e| FfaError::Config(e.to_string()))?;
        self.dea.validate().map_err(FfaError::Config)?;
        Ok(())
    }
}

/// Quality of a plan: legal plans rank by wirelength, others by violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanScore {
    pub legal: bool,
    pub hpwl: f64,
    /// `D/A + B/(W*+H*)`.
    pub violation: f64,
}

impl PlanScore {
    pub fn better_than(&self, other: &PlanScore) -> bool {
        match (self.legal, other.legal) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.hpwl < other.hpwl,
            (false, false) => (self.violation, self.hpwl) < (other.violation, other.hpwl),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub best: PlanScore,
    pub lambda: f64,
    pub mu: f64,
    pub step: f64,
    pub reinitialized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfaResult {
    pub plan: Floorplan,
    pub legal: bool,
    pub hpwl: f64,
    pub score: PlanScore,
    pub generations: usize,
    pub seconds: f64,
    /// False when some module fits the outline under no orientation.
    pub admissible: bool,
    pub weights: PenaltyWeights,
    pub history: Vec<GenerationLog>,
}

/// Wall-clock timer; reads zero where no clock is available.
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

// stream purposes
const INIT_SAMPLE: u64 = 1;
const INIT_COORDS: u64 = 2;
const EXPLORE: u64 = 3;
const SAMPLE: u64 = 4;
const REFINE: u64 = 5;
const REINIT: u64 = 6;

/// Latin hypercube sampling of `np` coordinate vectors. On each axis a
/// module's range `[m, extent - m]`, `m` its half maximum dimension, is cut
/// into `np` strata which are dealt to the members in random order. A module
/// too large for the range sits at the outline center on that axis.
pub fn init_coordinates<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    outline: &OutlineSpec,
    np: usize,
    rng: &mut R,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = instance.len();
    let mut axes = [vec![vec![0.0; n]; np], vec![vec![0.0; n]; np]];
    let mut strata: Vec<usize> = (0..np).collect();
    for (j, m) in instance.modules().iter().enumerate() {
        let margin = m.max_dim() / 2.0;
        for (axis, extent) in [outline.width, outline.height].into_iter().enumerate() {
            let (lo, hi) = (margin, extent - margin);
            strata.shuffle(rng);
            for (i, &k) in strata.iter().enumerate() {
                axes[axis][i][j] = if hi <= lo {
                    extent / 2.0
                } else {
                    lo + (hi - lo) * (k as f64 + rng.random::<f64>()) / np as f64
                };
            }
        }
    }
    let [xs, ys] = axes;
    (xs, ys)
}

#[derive(Debug, Clone)]
struct Member {
    x: Vec<f64>,
    y: Vec<f64>,
    r: Solution,
    /// `f` at the weights it was last compared under; infinite after a reset.
    fitness: f64,
}

struct Outcome {
    accepted: Member,
    candidate: Floorplan,
    score: PlanScore,
    escalate_overlap: bool,
    escalate_outline: bool,
}

struct Context<'a> {
    instance: &'a ProblemInstance,
    config: &'a FfaConfig,
    area: f64,
}

impl Context<'_> {
    fn score(&self, plan: &Floorplan) -> PlanScore {
        let ev = Evaluator::for_plan(self.instance, plan, self.config.outline);
        let d = ev.overlap(&plan.x, &plan.y);
        let (b, _) = ev.boundary(&plan.x, &plan.y);
        PlanScore {
            legal: check_legality(self.instance, plan, Some(&self.config.outline)).is_legal(),
            hpwl: ev.wirelength(&plan.x, &plan.y),
            violation: d / self.area + b / self.config.outline.half_perimeter(),
        }
    }

    fn f_at(&self, x: &[f64], y: &[f64], r: &[crate::model::Orientation], w: &PenaltyWeights) -> f64 {
        Evaluator::new(self.instance, r, self.config.outline).breakdown(x, y, w).f
    }

    fn update_member(&self, inc: &Member, r: &Solution, w: &PenaltyWeights, s: f64, k_max: usize) -> Outcome {
        let cfg = self.config;
        let n = self.instance.len();
        let ev = Evaluator::new(self.instance, r, cfg.outline);
        let mut u: Vec<f64> = inc.x.iter().chain(&inc.y).copied().collect();

        let mut f = |u: &[f64], g: &mut [f64]| {
            let (x, y) = u.split_at(n);
            let (gx, gy) = g.split_at_mut(n);
            ev.global_with_subgradient(x, y, w, gx, gy).f
        };
        if let Ok(t) = csa::minimize(&mut f, &u, &CsaConfig { k_max, s0: s, ..cfg.csa }) {
            u = t.best;
        }

        let (x, y) = u.split_at(n);
        let d0 = ev.overlap(x, y) / self.area;
        let c0 = ev.boundary(x, y).0 / cfg.outline.half_perimeter();
        let (mut escalate_overlap, mut escalate_outline) = (false, false);
        let candidate = if d0 > cfg.delta1 {
            escalate_overlap = true;
            escalate_outline = c0 > cfg.delta2;
            Floorplan { x: x.to_vec(), y: y.to_vec(), r: r.clone() }
        } else {
            let mut f_tilde = |u: &[f64], g: &mut [f64]| {
                let (x, y) = u.split_at(n);
                let (gx, gy) = g.split_at_mut(n);
                ev.legalization_value_with_subgradient(x, y, w, gx, gy)
            };
            let legal_cfg = CsaConfig {
                k_max: cfg.legal_k_max,
                s0: (s / 2.0).max(cfg.legal_step_floor),
                stall_limit: cfg.legal_stall_limit.unwrap_or(cfg.legal_k_max),
                ..cfg.csa
            };
            if let Ok(t) = csa::minimize(&mut f_tilde, &u, &legal_cfg) {
                u = t.best;
            }
            let (x, y) = u.split_at(n);
            legalize_within(self.instance, &Floorplan { x: x.to_vec(), y: y.to_vec(), r: r.clone() }, &cfg.outline, cfg.repair_moves)
        };

        let cand_f = ev.breakdown(&candidate.x, &candidate.y, w).f;
        let inc_f = if inc.fitness.is_finite() { self.f_at(&inc.x, &inc.y, &inc.r, w) } else { f64::INFINITY };
        let score = self.score(&candidate);
        let accepted = if cand_f <= inc_f || !inc_f.is_finite() {
            Member { x: candidate.x.clone(), y: candidate.y.clone(), r: r.clone(), fitness: cand_f }
        } else {
            Member { fitness: inc_f, ..inc.clone() }
        };
        Outcome { accepted, candidate, score, escalate_overlap, escalate_outline }
    }
}

fn map_members<T, F>(np: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..np).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..np).map(f).collect()
    }
}

fn member_streams(seed: u64, purpose: u64, generation: u64, np: usize) -> Vec<StreamRng> {
    (0..np).map(|i| stream(seed, &[purpose, generation, i as u64])).collect()
}

/// Index of the lowest fitness, ties to the lower index.
fn best_member(members: &[Member]) -> usize {
    (0..members.len())
        .min_by(|&a, &b| members[a].fitness.total_cmp(&members[b].fitness).then(a.cmp(&b)))
        .unwrap_or(0)
}

pub fn ffa_cd(instance: &ProblemInstance, config: &FfaConfig, seed: u64) -> Result<FfaResult, FfaError> {
    ffa_cd_from(instance, config, seed, None)
}

/// As [`ffa_cd`], with member 0 optionally seeded from an existing plan.
pub fn ffa_cd_from(
    instance: &ProblemInstance,
    config: &FfaConfig,
    seed: u64,
    start: Option<&Floorplan>,
) -> Result<FfaResult, FfaError> {
    config.validate()?;
    if let Some(p) = start {
        p.check(instance)?;
    }
    let clock = Stopwatch::start();
    let n = instance.len();
    let np = config.dea.np;
    let ctx = Context { instance, config, area: total_module_area(instance) };
    let mut weights = config.weights;
    let mut s = config.initial_step();

    let mut q = dea::init_distribution(n, np);
    let (xs, ys) = init_coordinates(instance, &config.outline, np, &mut stream(seed, &[INIT_COORDS]));
    let mut members: Vec<Member> = q
        .iter()
        .zip(xs.into_iter().zip(ys))
        .enumerate()
        .map(|(i, (qi, (x, y)))| {
            let r = qi.sample(&mut stream(seed, &[INIT_SAMPLE, i as u64]));
            Member { x, y, r, fitness: 0.0 }
        })
        .collect();
    if let Some(p) = start {
        members[0] = Member { x: p.x.clone(), y: p.y.clone(), r: p.r.clone(), fitness: 0.0 };
    }
    for m in &mut members {
        m.fitness = ctx.f_at(&m.x, &m.y, &m.r, &weights);
    }

    let mut best_plan = Floorplan { x: members[0].x.clone(), y: members[0].y.clone(), r: members[0].r.clone() };
    let mut best = ctx.score(&best_plan);
    for m in &members[1..] {
        let plan = Floorplan { x: m.x.clone(), y: m.y.clone(), r: m.r.clone() };
        let sc = ctx.score(&plan);
        if sc.better_than(&best) {
            best = sc;
            best_plan = plan;
        }
    }

    let mut history = Vec::new();
    let mut since_improve = 0usize;
    let mut generation = 0usize;
    while generation < config.max_generations {
        generation += 1;
        let t = generation as u64;
        let k_max = if generation == 1 { config.k_max } else { config.k_max_later.unwrap_or(config.k_max) };

        let fitness: Vec<f64> = members.iter().map(|m| m.fitness).collect();
        let q_explored = dea::orth_exp_q(&q, &fitness, &mut stream(seed, &[EXPLORE, t]));
        let p_prev: Vec<Solution> = members.iter().map(|m| m.r.clone()).collect();
        let p_sampled =
            dea::sample_p(&q_explored, &p_prev, config.dea.inherit, &mut member_streams(seed, SAMPLE, t, np));

        let snapshot = weights;
        let outcomes = map_members(np, |i| ctx.update_member(&members[i], &p_sampled[i], &snapshot, s, k_max));

        let mut improved = false;
        for (i, out) in outcomes.into_iter().enumerate() {
            if out.escalate_overlap {
                weights.escalate_overlap();
                if out.escalate_outline {
                    weights.escalate_outline();
                }
            }
            if out.score.better_than(&best) {
                best = out.score;
                best_plan = out.candidate;
                improved = true;
            }
            members[i] = out.accepted;
        }
        s = (config.step_decay * s).max(config.s_min);

        since_improve = if improved { 0 } else { since_improve + 1 };
        let reinitialized = config.stall_reinit.is_some_and(|k| since_improve > 0 && since_improve.is_multiple_of(k));
        if reinitialized {
            let keep = best_member(&members);
            let (xs, ys) = init_coordinates(instance, &config.outline, np, &mut stream(seed, &[REINIT, t]));
            for (i, (x, y)) in xs.into_iter().zip(ys).enumerate() {
                if i != keep {
                    members[i].x = x;
                    members[i].y = y;
                    members[i].fitness = f64::INFINITY;
                }
            }
        }

        let p_new: Vec<Solution> = members.iter().map(|m| m.r.clone()).collect();
        q = dea::refine_q(&p_sampled, &p_new, &q_explored, &config.dea, &mut member_streams(seed, REFINE, t, np));

        history.push(GenerationLog {
            generation,
            best,
            lambda: weights.lambda,
            mu: weights.mu,
            step: s,
            reinitialized,
        });
        if best.legal && since_improve >= config.stall_terminate {
            break;
        }
    }

    Ok(FfaResult {
        legal: best.legal,
        hpwl: best.hpwl,
        score: best,
        plan: best_plan,
        generations: generation,
        seconds: clock.seconds(),
        admissible: config.outline.admits(instance),
        weights,
        history,
    })
}
