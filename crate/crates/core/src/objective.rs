//! Wirelength, overlap and outline-violation terms of the penalized
//! objective `f = alpha*W + lambda*sqrt(D) + mu*B` and the legalization
//! objective `f~ = lambda0*D + mu0*B~`, together with one subgradient of each.
//!
//! The hot path is [`Evaluator`], which caches effective dimensions and
//! resolved pin offsets for a fixed orientation vector and works on raw
//! coordinate slices. The free functions are thin wrappers over it.

use serde::{Deserialize, Serialize};

use crate::model::{Endpoint, Floorplan, Orientation, OutlineSpec, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyWeights {
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub lambda0: f64,
    pub mu0: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self { alpha: 1.0, lambda: 20.0, mu: 100.0, lambda0: 1.0, mu0: 10.0 }
    }
}

impl PenaltyWeights {
    /// `lambda <- min(1.5*lambda, lambda + 30)`
    pub fn escalate_overlap(&mut self) {
        self.lambda = (1.5 * self.lambda).min(self.lambda + 30.0);
    }

    /// `mu <- min(1.1*mu, mu + 10)`
    pub fn escalate_outline(&mut self) {
        self.mu = (1.1 * self.mu).min(self.mu + 10.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// Total HPWL `W`.
    pub wirelength: f64,
    /// Summed pairwise overlap `D`.
    pub overlap: f64,
    /// Outline violation `B`.
    pub boundary: f64,
    /// Squared outline violation `B~`.
    pub smooth_boundary: f64,
    pub f: f64,
    pub f_tilde: f64,
}

impl ObjectiveBreakdown {
    fn combine(wirelength: f64, overlap: f64, boundary: f64, smooth_boundary: f64, w: &PenaltyWeights) -> Self {
        Self {
            wirelength,
            overlap,
            boundary,
            smooth_boundary,
            f: w.alpha * wirelength + w.lambda * overlap.sqrt() + w.mu * boundary,
            f_tilde: w.lambda0 * overlap + w.mu0 * smooth_boundary,
        }
    }
}

/// Overlap length of two intervals of lengths `a`, `b` whose centers are
/// `delta` apart.
///
/// This is the three-branch formula verbatim. Note that the containment
/// branch returns `max(a, b)`, not the geometric `min(a, b)`.
pub fn overlap_len(a: f64, b: f64, delta: f64) -> f64 {
    let delta = delta.abs();
    if delta <= (a - b).abs() / 2.0 {
        a.max(b)
    } else if delta <= (a + b) / 2.0 {
        (a + b - 2.0 * delta) / 2.0
    } else {
        0.0
    }
}

/// d(overlap_len)/d(c_i) where `signed_delta = c_i - c_j`. Zero inside the
/// containment branch, `-sign(c_i - c_j)` on the middle branch including both
/// of its end points, zero once separated.
pub fn overlap_slope(a: f64, b: f64, signed_delta: f64) -> f64 {
    let delta = signed_delta.abs();
    if delta < (a - b).abs() / 2.0 || delta > (a + b) / 2.0 {
        0.0
    } else if signed_delta > 0.0 {
        -1.0
    } else if signed_delta < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Hinge terms of one module against the outline `[0,W*] x [0,H*]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryTerms {
    /// `max(0, w/2 - x)`
    pub left: f64,
    /// `max(0, w/2 + x - W*)`
    pub right: f64,
    /// `max(0, h/2 - y)`
    pub bottom: f64,
    /// `max(0, h/2 + y - H*)`
    pub top: f64,
}

impl BoundaryTerms {
    pub fn new(x: f64, y: f64, w: f64, h: f64, outline: &OutlineSpec) -> Self {
        Self {
            left: (w / 2.0 - x).max(0.0),
            right: (w / 2.0 + x - outline.width).max(0.0),
            bottom: (h / 2.0 - y).max(0.0),
            top: (h / 2.0 + y - outline.height).max(0.0),
        }
    }

    pub fn sum(&self) -> f64 {
        self.left + self.right + self.bottom + self.top
    }

    pub fn sum_sq(&self) -> f64 {
        self.left * self.left + self.right * self.right + self.bottom * self.bottom + self.top * self.top
    }
}

#[derive(Debug, Clone, Copy)]
enum PinPos {
    Module { id: usize, dx: f64, dy: f64 },
    Fixed { x: f64, y: f64 },
}

#[derive(Clone, Copy)]
struct Extreme {
    value: f64,
    /// `None` for a pad.
    module: Option<usize>,
}

impl Extreme {
    /// Pads win ties, then the lowest module id.
    fn beats(value: f64, module: Option<usize>, current: &Option<Extreme>, larger: bool) -> bool {
        let Some(cur) = current else { return true };
        let strictly = if larger { value > cur.value } else { value < cur.value };
        if strictly {
            return true;
        }
        if value != cur.value {
            return false;
        }
        match (module, cur.module) {
            (None, Some(_)) => true,
            (Some(a), Some(b)) => a < b,
            _ => false,
        }
    }
}

/// Objective evaluator for one instance, outline and orientation vector.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    instance: &'a ProblemInstance,
    outline: OutlineSpec,
    dims: Vec<(f64, f64)>,
    nets: Vec<Vec<PinPos>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a ProblemInstance, orientation: &[Orientation], outline: OutlineSpec) -> Self {
        assert_eq!(orientation.len(), instance.len(), "orientation vector length");
        let modules = instance.modules();
        let dims: Vec<(f64, f64)> =
            modules.iter().zip(orientation).map(|(m, &r)| crate::model::effective_dims(m, r)).collect();
        let nets = instance
            .nets()
            .iter()
            .map(|net| {
                net.pins
                    .iter()
                    .map(|pin| match pin.endpoint {
                        Endpoint::Module(id) => {
                            let m = &modules[id];
                            let raw = (pin.offset.0 / 100.0 * m.width / 2.0, pin.offset.1 / 100.0 * m.height / 2.0);
                            let (dx, dy) = orientation[id].rotate(raw);
                            PinPos::Module { id, dx, dy }
                        }
                        Endpoint::Pad(p) => {
                            let pad = &instance.pads()[p];
                            PinPos::Fixed { x: pad.x, y: pad.y }
                        }
                    })
                    .collect()
            })
            .collect();
        Self { instance, outline, dims, nets }
    }

    pub fn for_plan(instance: &'a ProblemInstance, plan: &Floorplan, outline: OutlineSpec) -> Self {
        Self::new(instance, &plan.r, outline)
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub fn outline(&self) -> &OutlineSpec {
        &self.outline
    }

    pub fn dims(&self) -> &[(f64, f64)] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// HPWL; with `grad` the `+scale/-scale` subgradient is accumulated.
    fn wirelength_impl(&self, x: &[f64], y: &[f64], mut grad: Option<(&mut [f64], &mut [f64], f64)>) -> f64 {
        let mut total = 0.0;
        for net in &self.nets {
            let (mut xmax, mut xmin, mut ymax, mut ymin) = (None, None, None, None);
            for pin in net {
                let (px, py, module) = match *pin {
                    PinPos::Module { id, dx, dy } => (x[id] + dx, y[id] + dy, Some(id)),
                    PinPos::Fixed { x, y } => (x, y, None),
                };
                if Extreme::beats(px, module, &xmax, true) {
                    xmax = Some(Extreme { value: px, module });
                }
                if Extreme::beats(px, module, &xmin, false) {
                    xmin = Some(Extreme { value: px, module });
                }
                if Extreme::beats(py, module, &ymax, true) {
                    ymax = Some(Extreme { value: py, module });
                }
                if Extreme::beats(py, module, &ymin, false) {
                    ymin = Some(Extreme { value: py, module });
                }
            }
            let (Some(xmax), Some(xmin), Some(ymax), Some(ymin)) = (xmax, xmin, ymax, ymin) else {
                continue;
            };
            total += xmax.value - xmin.value + ymax.value - ymin.value;
            if let Some((gx, gy, scale)) = grad.as_mut() {
                if let Some(i) = xmax.module {
                    gx[i] += *scale;
                }
                if let Some(i) = xmin.module {
                    gx[i] -= *scale;
                }
                if let Some(i) = ymax.module {
                    gy[i] += *scale;
                }
                if let Some(i) = ymin.module {
                    gy[i] -= *scale;
                }
            }
        }
        total
    }

    /// Absolute pin positions per net.
    pub fn pin_positions(&self, x: &[f64], y: &[f64]) -> Vec<Vec<(f64, f64)>> {
        self.nets
            .iter()
            .map(|net| {
                net.iter()
                    .map(|pin| match *pin {
                        PinPos::Module { id, dx, dy } => (x[id] + dx, y[id] + dy),
                        PinPos::Fixed { x, y } => (x, y),
                    })
                    .collect()
            })
            .collect()
    }

    pub fn wirelength(&self, x: &[f64], y: &[f64]) -> f64 {
        self.wirelength_impl(x, y, None)
    }

    /// Calls `visit(i, j)` (with `i < j`) for every pair whose closed x-extents
    /// intersect. Pairs outside this set have zero overlap and zero slope.
    fn for_each_candidate_pair(&self, x: &[f64], mut visit: impl FnMut(usize, usize)) {
        let n = self.dims.len();
        let left = |i: usize| x[i] - self.dims[i].0 / 2.0;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| left(a).total_cmp(&left(b)).then(a.cmp(&b)));
        for (k, &i) in order.iter().enumerate() {
            let right = x[i] + self.dims[i].0 / 2.0;
            for &j in &order[k + 1..] {
                if left(j) > right {
                    break;
                }
                visit(i.min(j), i.max(j));
            }
        }
    }

    /// `D`; with `grad` the subgradient of `D` itself is accumulated.
    fn overlap_impl(&self, x: &[f64], y: &[f64], mut grad: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let mut total = 0.0;
        self.for_each_candidate_pair(x, |i, j| {
            let (wi, hi) = self.dims[i];
            let (wj, hj) = self.dims[j];
            let (dx, dy) = (x[i] - x[j], y[i] - y[j]);
            let ox = overlap_len(wi, wj, dx);
            let oy = overlap_len(hi, hj, dy);
            total += ox * oy;
            if let Some((gx, gy)) = grad.as_mut() {
                let sx = oy * overlap_slope(wi, wj, dx);
                let sy = ox * overlap_slope(hi, hj, dy);
                gx[i] += sx;
                gx[j] -= sx;
                gy[i] += sy;
                gy[j] -= sy;
            }
        });
        total
    }

    pub fn overlap(&self, x: &[f64], y: &[f64]) -> f64 {
        self.overlap_impl(x, y, None)
    }

    pub fn boundary_terms(&self, x: &[f64], y: &[f64]) -> Vec<BoundaryTerms> {
        self.dims
            .iter()
            .enumerate()
            .map(|(i, &(w, h))| BoundaryTerms::new(x[i], y[i], w, h, &self.outline))
            .collect()
    }

    /// `(B, B~)`.
    pub fn boundary(&self, x: &[f64], y: &[f64]) -> (f64, f64) {
        self.dims.iter().enumerate().fold((0.0, 0.0), |(b, bs), (i, &(w, h))| {
            let t = BoundaryTerms::new(x[i], y[i], w, h, &self.outline);
            (b + t.sum(), bs + t.sum_sq())
        })
    }

    pub fn breakdown(&self, x: &[f64], y: &[f64], weights: &PenaltyWeights) -> ObjectiveBreakdown {
        let (b, bs) = self.boundary(x, y);
        ObjectiveBreakdown::combine(self.wirelength(x, y), self.overlap(x, y), b, bs, weights)
    }

    /// Evaluates `f` and writes one subgradient into `gx`, `gy`.
    pub fn global_with_subgradient(
        &self,
        x: &[f64],
        y: &[f64],
        weights: &PenaltyWeights,
        gx: &mut [f64],
        gy: &mut [f64],
    ) -> ObjectiveBreakdown {
        gx.fill(0.0);
        gy.fill(0.0);
        let wl = self.wirelength_impl(x, y, Some((&mut *gx, &mut *gy, weights.alpha)));

        let n = self.dims.len();
        let mut dgx = vec![0.0; n];
        let mut dgy = vec![0.0; n];
        let d = self.overlap_impl(x, y, Some((&mut dgx, &mut dgy)));
        if d > 0.0 {
            let scale = weights.lambda / (2.0 * d.sqrt());
            for i in 0..n {
                gx[i] += scale * dgx[i];
                gy[i] += scale * dgy[i];
            }
        }

        let (mut b, mut bs) = (0.0, 0.0);
        for (i, &(w, h)) in self.dims.iter().enumerate() {
            let t = BoundaryTerms::new(x[i], y[i], w, h, &self.outline);
            b += t.sum();
            bs += t.sum_sq();
            gx[i] += weights.mu * (hinge_sign(t.right) - hinge_sign(t.left));
            gy[i] += weights.mu * (hinge_sign(t.top) - hinge_sign(t.bottom));
        }
        ObjectiveBreakdown::combine(wl, d, b, bs, weights)
    }

    /// Evaluates `f~` (and `W`) and writes its subgradient into `gx`, `gy`.
    pub fn legalization_with_subgradient(
        &self,
        x: &[f64],
        y: &[f64],
        weights: &PenaltyWeights,
        gx: &mut [f64],
        gy: &mut [f64],
    ) -> ObjectiveBreakdown {
        let (d, b, bs) = self.legalization_terms(x, y, weights, gx, gy);
        ObjectiveBreakdown::combine(self.wirelength(x, y), d, b, bs, weights)
    }

    /// `f~` alone, skipping the wirelength.
    pub fn legalization_value_with_subgradient(
        &self,
        x: &[f64],
        y: &[f64],
        weights: &PenaltyWeights,
        gx: &mut [f64],
        gy: &mut [f64],
    ) -> f64 {
        let (d, _, bs) = self.legalization_terms(x, y, weights, gx, gy);
        weights.lambda0 * d + weights.mu0 * bs
    }

    fn legalization_terms(
        &self,
        x: &[f64],
        y: &[f64],
        weights: &PenaltyWeights,
        gx: &mut [f64],
        gy: &mut [f64],
    ) -> (f64, f64, f64) {
        gx.fill(0.0);
        gy.fill(0.0);
        let d = self.overlap_impl(x, y, Some((&mut *gx, &mut *gy)));
        for v in gx.iter_mut().chain(gy.iter_mut()) {
            *v *= weights.lambda0;
        }
        let (mut b, mut bs) = (0.0, 0.0);
        for (i, &(w, h)) in self.dims.iter().enumerate() {
            let t = BoundaryTerms::new(x[i], y[i], w, h, &self.outline);
            b += t.sum();
            bs += t.sum_sq();
            gx[i] += weights.mu0 * 2.0 * (t.right - t.left);
            gy[i] += weights.mu0 * 2.0 * (t.top - t.bottom);
        }
        (d, b, bs)
    }
}

fn hinge_sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn hpwl(instance: &ProblemInstance, plan: &Floorplan) -> f64 {
    // the outline plays no part in wirelength
    let outline = OutlineSpec { width: 1.0, height: 1.0, aspect_ratio: 1.0, whitespace: None };
    Evaluator::for_plan(instance, plan, outline).wirelength(&plan.x, &plan.y)
}

pub fn total_overlap(instance: &ProblemInstance, plan: &Floorplan) -> f64 {
    let outline = OutlineSpec { width: 1.0, height: 1.0, aspect_ratio: 1.0, whitespace: None };
    Evaluator::for_plan(instance, plan, outline).overlap(&plan.x, &plan.y)
}

pub fn boundary_terms(instance: &ProblemInstance, plan: &Floorplan, outline: &OutlineSpec) -> Vec<BoundaryTerms> {
    Evaluator::for_plan(instance, plan, *outline).boundary_terms(&plan.x, &plan.y)
}

pub fn boundary_sum(instance: &ProblemInstance, plan: &Floorplan, outline: &OutlineSpec) -> f64 {
    Evaluator::for_plan(instance, plan, *outline).boundary(&plan.x, &plan.y).0
}

pub fn smooth_boundary(instance: &ProblemInstance, plan: &Floorplan, outline: &OutlineSpec) -> f64 {
    Evaluator::for_plan(instance, plan, *outline).boundary(&plan.x, &plan.y).1
}

pub fn global_objective(
    instance: &ProblemInstance,
    plan: &Floorplan,
    weights: &PenaltyWeights,
    outline: &OutlineSpec,
) -> ObjectiveBreakdown {
    Evaluator::for_plan(instance, plan, *outline).breakdown(&plan.x, &plan.y, weights)
}

pub fn legalization_objective(
    instance: &ProblemInstance,
    plan: &Floorplan,
    weights: &PenaltyWeights,
    outline: &OutlineSpec,
) -> f64 {
    global_objective(instance, plan, weights, outline).f_tilde
}

/// One subgradient of `f` with respect to `(x, y)`, orientations held fixed.
pub fn subgradient_f(
    instance: &ProblemInstance,
    plan: &Floorplan,
    weights: &PenaltyWeights,
    outline: &OutlineSpec,
) -> (Vec<f64>, Vec<f64>) {
    let n = plan.len();
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    Evaluator::for_plan(instance, plan, *outline).global_with_subgradient(&plan.x, &plan.y, weights, &mut gx, &mut gy);
    (gx, gy)
}

/// One subgradient of `f~` with respect to `(x, y)`.
pub fn subgradient_f_tilde(
    instance: &ProblemInstance,
    plan: &Floorplan,
    weights: &PenaltyWeights,
    outline: &OutlineSpec,
) -> (Vec<f64>, Vec<f64>) {
    let n = plan.len();
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    Evaluator::for_plan(instance, plan, *outline)
        .legalization_with_subgradient(&plan.x, &plan.y, weights, &mut gx, &mut gy);
    (gx, gy)
}
