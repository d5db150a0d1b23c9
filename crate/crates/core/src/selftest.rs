//! Invariant suites behind the `selftest` command: subgradients against
//! central differences, unit-norm preservation of the distribution model,
//! and the legalizer against a brute-force geometric check.
//!
//! The overlap length function is a parameter so that a deliberately broken
//! variant can be shown to fail.

use rand::Rng;

use crate::dea::{self, Column, DeaParams, ProbabilityMatrix};
use crate::legalize::{build_relations, legalize_graph};
use crate::model::{Endpoint, Floorplan, Module, Orientation, OutlineSpec, ProblemInstance};
use crate::objective::{overlap_len, Evaluator, PenaltyWeights};
use crate::rng::{stream, StreamRng};
use crate::synth::{generate, SynthSpec};

pub type OverlapFn = fn(f64, f64, f64) -> f64;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfTestConfig {
    pub seed: u64,
    /// Random smooth points per instance size.
    pub points: usize,
    pub sizes: [usize; 2],
    /// Random distribution updates.
    pub operations: usize,
    /// Near-legal placements for the legalizer.
    pub placements: usize,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        Self { seed: 1, points: 1000, sizes: [10, 50], operations: 10_000, placements: 1000 }
    }
}

pub fn run(cfg: &SelfTestConfig) -> Vec<CheckReport> {
    run_with(cfg, overlap_len)
}

pub fn run_with(cfg: &SelfTestConfig, overlap: OverlapFn) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for &n in &cfg.sizes {
        let r = subgradient_check(n, cfg.points, cfg.seed, overlap);
        out.push(CheckReport {
            name: format!("subgradient n={n}"),
            passed: r.max_rel_error <= 1e-4 && r.points == cfg.points,
            detail: format!("{} points, max relative error {:.2e}", r.points, r.max_rel_error),
        });
    }
    let p = probability_check(cfg.operations, cfg.seed);
    out.push(CheckReport {
        name: "column norms".into(),
        passed: p.max_norm_deviation <= 1e-9,
        detail: format!("{} updates, max |norm - 1| {:.2e}", cfg.operations, p.max_norm_deviation),
    });
    out.push(CheckReport {
        name: "disturbance identity".into(),
        passed: p.max_identity_error <= 1e-12,
        detail: format!("max |sum - 1| {:.2e}", p.max_identity_error),
    });
    let l = legalizer_check(cfg.placements, 20, cfg.seed, overlap);
    out.push(CheckReport {
        name: "legalizer".into(),
        passed: l.failures() == 0,
        detail: format!(
            "{} placements: {} overlapping, {} not idempotent, {} relations broken",
            l.placements, l.overlapping, l.not_idempotent, l.broken_relations
        ),
    });
    out
}

/// Overlap length with the partial-overlap branch given the wrong slope.
/// Kept as a fixture: the suites must reject it.
pub fn corrupted_overlap(a: f64, b: f64, delta: f64) -> f64 {
    let delta = delta.abs();
    if delta <= (a - b).abs() / 2.0 {
        a.max(b)
    } else if delta <= (a + b) / 2.0 {
        (a + b - delta) / 2.0
    } else {
        0.0
    }
}

/// `D` by brute force over all pairs with a given interval-overlap function.
pub fn pairwise_overlap(dims: &[(f64, f64)], x: &[f64], y: &[f64], overlap: OverlapFn) -> f64 {
    let mut d = 0.0;
    for i in 0..dims.len() {
        for j in i + 1..dims.len() {
            d += overlap(dims[i].0, dims[j].0, x[i] - x[j]) * overlap(dims[i].1, dims[j].1, y[i] - y[j]);
        }
    }
    d
}

/// Overlap of module `i` with every other module, `i` moved to `(xi, yi)`.
fn overlap_row(dims: &[(f64, f64)], x: &[f64], y: &[f64], i: usize, (xi, yi): (f64, f64), overlap: OverlapFn) -> f64 {
    (0..dims.len())
        .filter(|&j| j != i)
        .map(|j| overlap(dims[i].0, dims[j].0, xi - x[j]) * overlap(dims[i].1, dims[j].1, yi - y[j]))
        .sum()
}

fn span(v: impl Iterator<Item = f64> + Clone) -> f64 {
    v.clone().fold(f64::NEG_INFINITY, f64::max) - v.fold(f64::INFINITY, f64::min)
}

/// Central differences of `(f, f~)` in one coordinate. Only the terms that
/// move with module `i` are recomputed: its overlap row, the nets it
/// touches, and the boundary terms.
#[allow(clippy::too_many_arguments)]
fn central_difference(
    ev: &Evaluator,
    pins: &[Vec<(f64, f64)>],
    x: &[f64],
    y: &[f64],
    d: f64,
    (i, axis): (usize, usize),
    h: f64,
    w: &PenaltyWeights,
    overlap: OverlapFn,
) -> (f64, f64) {
    let dims = ev.dims();
    let at = |c: f64| if axis == 0 { (c, y[i]) } else { (x[i], c) };
    let c = if axis == 0 { x[i] } else { y[i] };
    let row = |c: f64| overlap_row(dims, x, y, i, at(c), overlap);
    let dd = row(c + h) - row(c - h);
    let (dp, dm) = (d + dd / 2.0, d - dd / 2.0);
    // sqrt(D+) - sqrt(D-) without cancellation
    let droot = if dd == 0.0 { 0.0 } else { dd / (dp.max(0.0).sqrt() + dm.max(0.0).sqrt()) };

    let mut dw = 0.0;
    for (net, pos) in ev.instance().nets().iter().zip(pins) {
        if !net.pins.iter().any(|p| p.endpoint == Endpoint::Module(i)) {
            continue;
        }
        let coord = |shift: f64| {
            net.pins.iter().zip(pos).map(move |(p, q)| {
                let v = if axis == 0 { q.0 } else { q.1 };
                if p.endpoint == Endpoint::Module(i) { v + shift } else { v }
            })
        };
        dw += span(coord(h)) - span(coord(-h));
    }

    let moved = |c: f64| {
        let (mut xs, mut ys) = (x.to_vec(), y.to_vec());
        (xs[i], ys[i]) = at(c);
        ev.boundary(&xs, &ys)
    };
    let ((bp, bsp), (bm, bsm)) = (moved(c + h), moved(c - h));
    let f = w.alpha * dw + w.lambda * droot + w.mu * (bp - bm);
    let t = w.lambda0 * dd + w.mu0 * (bsp - bsm);
    (f / (2.0 * h), t / (2.0 * h))
}

/// Distance from `(x, y)` to the nearest kink of any term of the objective.
pub fn kink_distance(ev: &Evaluator, x: &[f64], y: &[f64]) -> f64 {
    let dims = ev.dims();
    let mut m = f64::INFINITY;
    for i in 0..dims.len() {
        for j in i + 1..dims.len() {
            for (a, b, d) in [(dims[i].0, dims[j].0, x[i] - x[j]), (dims[i].1, dims[j].1, y[i] - y[j])] {
                let d = d.abs();
                m = m.min(d).min((d - (a - b).abs() / 2.0).abs()).min((d - (a + b) / 2.0).abs());
            }
        }
        let o = ev.outline();
        let (w, h) = dims[i];
        for v in [w / 2.0 - x[i], w / 2.0 + x[i] - o.width, h / 2.0 - y[i], h / 2.0 + y[i] - o.height] {
            m = m.min(v.abs());
        }
    }
    // pin extremes must be unique in every net
    for net in ev.pin_positions(x, y) {
        for axis in 0..2 {
            let mut vals: Vec<f64> = net.iter().map(|p| if axis == 0 { p.0 } else { p.1 }).collect();
            vals.sort_by(f64::total_cmp);
            if vals.len() >= 2 {
                m = m.min(vals[1] - vals[0]).min(vals[vals.len() - 1] - vals[vals.len() - 2]);
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientReport {
    pub points: usize,
    pub max_rel_error: f64,
}

/// Draws placements of a synthetic `n`-module instance, keeps those at
/// least `1e-3` away from every kink, and compares both subgradients with
/// central differences (`h = 1e-6`) coordinate by coordinate.
pub fn subgradient_check(n: usize, points: usize, seed: u64, overlap: OverlapFn) -> SubgradientReport {
    let instance = generate(&SynthSpec { area_range: (4.0, 400.0), ..SynthSpec::gsrc_like(n) }, seed ^ n as u64);
    let area: f64 = instance.modules().iter().map(Module::area).sum();
    let outline = OutlineSpec::from_ratio(area, 1.0, 0.15).expect("positive area");
    let mut rng = stream(seed, &[0xfd, n as u64]);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < points && attempts < 100 * points {
        attempts += 1;
        let r: Vec<Orientation> = (0..n).map(|_| Orientation::ALL[rng.random_range(0..4)]).collect();
        let ev = Evaluator::new(&instance, &r, outline);
        let spread = 1.2;
        let x: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * spread - 0.1) * outline.width).collect();
        let y: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * spread - 0.1) * outline.height).collect();
        if kink_distance(&ev, &x, &y) < 1e-3 {
            continue;
        }
        let w = PenaltyWeights {
            alpha: 1.0,
            lambda: rng.random_range(1.0..200.0),
            mu: rng.random_range(1.0..200.0),
            lambda0: 1.0,
            mu0: rng.random_range(1.0..20.0),
        };
        let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
        let (mut tx, mut ty) = (vec![0.0; n], vec![0.0; n]);
        ev.global_with_subgradient(&x, &y, &w, &mut gx, &mut gy);
        ev.legalization_with_subgradient(&x, &y, &w, &mut tx, &mut ty);

        let d = pairwise_overlap(ev.dims(), &x, &y, overlap);
        let pins = ev.pin_positions(&x, &y);
        for axis in 0..2 {
            for i in 0..n {
                let (fd, td) = central_difference(&ev, &pins, &x, &y, d, (i, axis), h, &w, overlap);
                let (ga, ta) = if axis == 0 { (gx[i], tx[i]) } else { (gy[i], ty[i]) };
                for (analytic, numeric) in [(ga, fd), (ta, td)] {
                    let scale = analytic.abs().max(numeric.abs()).max(1.0);
                    worst = worst.max((analytic - numeric).abs() / scale);
                }
            }
        }
        accepted += 1;
    }
    SubgradientReport { points: accepted, max_rel_error: worst }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityReport {
    pub max_norm_deviation: f64,
    pub max_identity_error: f64,
}

fn random_unit_column<R: Rng>(rng: &mut R) -> Column {
    loop {
        let c: Column = std::array::from_fn(|_| rng.random::<f64>());
        let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-3 {
            return c.map(|v| v / n);
        }
    }
}

/// Applies random exploration and refinement steps to random unit columns
/// and tracks the largest norm drift; also checks that the disturbance
/// outputs, read as squares, sum to one.
pub fn probability_check(operations: usize, seed: u64) -> ProbabilityReport {
    let mut rng = stream(seed, &[0x9b]);
    let params = DeaParams::default();
    let (np, n) = (5, 12);
    let mut q: Vec<ProbabilityMatrix> = (0..np)
        .map(|_| ProbabilityMatrix::from_columns((0..n).map(|_| random_unit_column(&mut rng)).collect()).expect("unit"))
        .collect();
    let mut worst_norm = 0.0f64;
    let mut worst_identity = 0.0f64;
    for op in 0..operations {
        if op % 2 == 0 {
            let fitness: Vec<f64> = (0..np).map(|_| rng.random()).collect();
            q = dea::orth_exp_q(&q, &fitness, &mut rng);
        } else {
            let sol = |rng: &mut StreamRng| -> Vec<Orientation> {
                (0..n).map(|_| Orientation::ALL[rng.random_range(0..4)]).collect()
            };
            let p_new: Vec<_> = (0..np).map(|_| sol(&mut rng)).collect();
            let p_inc: Vec<_> = (0..np).map(|_| sol(&mut rng)).collect();
            let mut rngs: Vec<StreamRng> = (0..np).map(|i| stream(seed, &[0x9c, op as u64, i as u64])).collect();
            q = dea::refine_q(&p_new, &p_inc, &q, &params, &mut rngs);
        }
        worst_norm = worst_norm.max(q.iter().map(ProbabilityMatrix::max_norm_deviation).fold(0.0, f64::max));

        let col = random_unit_column(&mut rng);
        let l0 = rng.random_range(0..4);
        let sq = dea::disturbance_squares(&col, l0, rng.random_range(0.01..0.99));
        worst_identity = worst_identity.max((sq.iter().sum::<f64>() - 1.0).abs());
    }
    ProbabilityReport { max_norm_deviation: worst_norm, max_identity_error: worst_identity }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LegalizerReport {
    pub placements: usize,
    pub overlapping: usize,
    pub not_idempotent: usize,
    pub broken_relations: usize,
}

impl LegalizerReport {
    pub fn failures(&self) -> usize {
        self.overlapping + self.not_idempotent + self.broken_relations
    }
}

/// A random legal shelf packing of `n` modules, jittered so that
/// neighbours overlap slightly.
pub fn near_legal_placement<R: Rng>(n: usize, rng: &mut R) -> (ProblemInstance, Floorplan) {
    let modules: Vec<Module> = (0..n)
        .map(|i| Module::new(format!("m{i}"), rng.random_range(1.0..10.0), rng.random_range(1.0..10.0)).expect("positive"))
        .collect();
    let instance = ProblemInstance::new(modules, vec![], vec![]).expect("valid");
    let mut plan = Floorplan::zeros(n);
    for r in plan.r.iter_mut() {
        *r = Orientation::ALL[rng.random_range(0..4)];
    }
    let row_width = (n as f64).sqrt() * 7.0;
    let (mut cx, mut cy, mut row_h) = (0.0, 0.0, 0.0f64);
    for i in 0..n {
        let (w, h) = plan.dims(&instance)[i];
        if cx > 0.0 && cx + w > row_width {
            cy += row_h + rng.random_range(0.0..1.0);
            cx = 0.0;
            row_h = 0.0;
        }
        let jx = rng.random_range(-0.15..0.15) * w;
        let jy = rng.random_range(-0.15..0.15) * h;
        plan.set_lower_left(&instance, i, cx + jx, cy + jy);
        cx += w + rng.random_range(0.0..1.0);
        row_h = row_h.max(h);
    }
    (instance, plan)
}

/// Legalizes random near-legal placements and checks the output for
/// overlap (recomputed with `overlap`), a second pass for a fixed point,
/// and every input relation for being honoured.
pub fn legalizer_check(placements: usize, n: usize, seed: u64, overlap: OverlapFn) -> LegalizerReport {
    let mut rng = stream(seed, &[0x1e9]);
    let mut rep = LegalizerReport { placements, ..Default::default() };
    let tol = 1e-9;
    for _ in 0..placements {
        let (inst, plan) = near_legal_placement(n, &mut rng);
        let out = legalize_graph(&inst, &plan);
        let dims = out.dims(&inst);
        if pairwise_overlap(&dims, &out.x, &out.y, overlap) > tol {
            rep.overlapping += 1;
        }
        let again = legalize_graph(&inst, &out);
        if again.x.iter().zip(&out.x).chain(again.y.iter().zip(&out.y)).any(|(a, b)| (a - b).abs() > tol) {
            rep.not_idempotent += 1;
        }
        let rel = build_relations(&inst, &plan);
        let ll: Vec<(f64, f64)> = (0..n).map(|i| out.lower_left(&inst, i)).collect();
        let broken = (0..n).any(|j| {
            rel.left[j].iter().any(|&i| ll[i].0 + dims[i].0 > ll[j].0 + tol)
                || rel.below[j].iter().any(|&i| ll[i].1 + dims[i].1 > ll[j].1 + tol)
        });
        rep.broken_relations += broken as usize;
    }
    rep
}
