//! Constraint-graph legalization.
//!
//! Every pair of modules gets exactly one relation, either left-of or below,
//! and modules are then packed toward the origin by longest path: first along
//! x in ascending lower-left x order, then along y. Because each pair is
//! separated along its relation axis the output is overlap-free.
//!
//! Relations follow the geometry of the input:
//! - overlapping in y only: left-of, ordered by lower-left x;
//! - overlapping in x only: below, ordered by lower-left y;
//! - overlapping in both: the axis needing the smaller displacement;
//! - separated in both: the axis with the smaller center distance relative to
//!   the half extents. Touching neighbours therefore keep the relation that
//!   packed them, which makes the pass idempotent.
//!
//! Ties go to the x axis; within an axis order is by coordinate, then id.

use crate::model::{Floorplan, OutlineSpec, ProblemInstance};

/// `left[i]` holds the modules left of `i`, `below[i]` those below it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelationSets {
    pub left: Vec<Vec<usize>>,
    pub below: Vec<Vec<usize>>,
}

impl RelationSets {
    pub fn is_left_of(&self, i: usize, j: usize) -> bool {
        self.left[j].contains(&i)
    }

    pub fn is_below(&self, i: usize, j: usize) -> bool {
        self.below[j].contains(&i)
    }
}

/// Length tolerance used to decide whether two intervals overlap.
pub fn length_tolerance(instance: &ProblemInstance) -> f64 {
    let scale = instance.modules().iter().map(|m| m.max_dim()).fold(1.0, f64::max);
    1e-9 * scale
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

fn interval_overlap(a0: f64, a_len: f64, b0: f64, b_len: f64) -> f64 {
    (a0 + a_len).min(b0 + b_len) - a0.max(b0)
}

pub fn build_relations(instance: &ProblemInstance, plan: &Floorplan) -> RelationSets {
    let n = plan.len();
    let eps = length_tolerance(instance);
    let dims = plan.dims(instance);
    let ll: Vec<(f64, f64)> = (0..n).map(|i| plan.lower_left(instance, i)).collect();
    let mut rel = RelationSets { left: vec![Vec::new(); n], below: vec![Vec::new(); n] };

    for i in 0..n {
        for j in i + 1..n {
            let (wi, hi) = dims[i];
            let (wj, hj) = dims[j];
            let ox = interval_overlap(ll[i].0, wi, ll[j].0, wj);
            let oy = interval_overlap(ll[i].1, hi, ll[j].1, hj);
            let axis = match (ox > eps, oy > eps) {
                (false, true) => Axis::X,
                (true, false) => Axis::Y,
                (true, true) => {
                    if ox <= oy {
                        Axis::X
                    } else {
                        Axis::Y
                    }
                }
                (false, false) => {
                    let rx = (plan.x[i] - plan.x[j]).abs() / ((wi + wj) / 2.0);
                    let ry = (plan.y[i] - plan.y[j]).abs() / ((hi + hj) / 2.0);
                    if rx <= ry {
                        Axis::X
                    } else {
                        Axis::Y
                    }
                }
            };
            match axis {
                Axis::X => {
                    if ll[i].0 <= ll[j].0 {
                        rel.left[j].push(i);
                    } else {
                        rel.left[i].push(j);
                    }
                }
                Axis::Y => {
                    if ll[i].1 <= ll[j].1 {
                        rel.below[j].push(i);
                    } else {
                        rel.below[i].push(j);
                    }
                }
            }
        }
    }
    rel
}

/// Packs along one axis. `start[i]` is the input lower-left coordinate,
/// `size[i]` the extent, `preds[i]` the modules that must precede `i`.
fn pack_axis(start: &[f64], size: &[f64], preds: &[Vec<usize>]) -> Vec<f64> {
    let n = start.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| start[a].total_cmp(&start[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; n];
    for &i in &order {
        out[i] = preds[i].iter().map(|&j| out[j] + size[j]).fold(0.0, f64::max);
    }
    out
}

/// Removes all overlap by longest-path packing toward the origin.
pub fn legalize_graph(instance: &ProblemInstance, plan: &Floorplan) -> Floorplan {
    let n = plan.len();
    let rel = build_relations(instance, plan);
    let dims = plan.dims(instance);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n).map(|i| plan.lower_left(instance, i)).unzip();
    let widths: Vec<f64> = dims.iter().map(|d| d.0).collect();
    let heights: Vec<f64> = dims.iter().map(|d| d.1).collect();
    let new_x = pack_axis(&xs, &widths, &rel.left);
    let new_y = pack_axis(&ys, &heights, &rel.below);
    place(instance, plan, &new_x, &new_y)
}

fn place(instance: &ProblemInstance, plan: &Floorplan, x: &[f64], y: &[f64]) -> Floorplan {
    let mut out = plan.clone();
    for i in 0..plan.len() {
        out.set_lower_left(instance, i, x[i], y[i]);
    }
    out
}

/// Longest chain ending at the module that reaches furthest along the axis.
fn critical_path(out: &[f64], size: &[f64], preds: &[Vec<usize>], eps: f64) -> Vec<usize> {
    let Some(mut i) = (0..out.len()).max_by(|&a, &b| (out[a] + size[a]).total_cmp(&(out[b] + size[b])).then(b.cmp(&a)))
    else {
        return Vec::new();
    };
    let mut path = vec![i];
    while let Some(&j) = preds[i].iter().filter(|&&j| (out[j] + size[j] - out[i]).abs() <= eps).min() {
        path.push(j);
        i = j;
    }
    path.reverse();
    path
}

fn better(a: (f64, usize), b: (f64, usize), eps: f64) -> bool {
    a.0 < b.0 - eps || (a.0 <= b.0 + eps && a.1 < b.1)
}

/// Graph legalization followed by outline repair: while the packing sticks
/// out along one axis and has room along the other, the pair on the
/// critical path whose move to the other axis cuts the protrusion most is
/// moved, up to `max_moves` times. With `max_moves == 0` this is
/// [`legalize_graph`].
pub fn legalize_within(instance: &ProblemInstance, plan: &Floorplan, outline: &OutlineSpec, max_moves: usize) -> Floorplan {
    let n = plan.len();
    let eps = length_tolerance(instance);
    let mut rel = build_relations(instance, plan);
    let dims = plan.dims(instance);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n).map(|i| plan.lower_left(instance, i)).unzip();
    let widths: Vec<f64> = dims.iter().map(|d| d.0).collect();
    let heights: Vec<f64> = dims.iter().map(|d| d.1).collect();
    let span = |out: &[f64], size: &[f64]| out.iter().zip(size).map(|(o, s)| o + s).fold(0.0, f64::max);
    let excess = |px: &[f64], py: &[f64]| {
        ((span(px, &widths) - outline.width).max(0.0), (span(py, &heights) - outline.height).max(0.0))
    };
    // total protrusion, then the number of modules sticking out
    let measure = |px: &[f64], py: &[f64]| {
        let (ex, ey) = excess(px, py);
        let out = (0..px.len())
            .filter(|&i| px[i] + widths[i] > outline.width + eps || py[i] + heights[i] > outline.height + eps)
            .count();
        (ex + ey, out)
    };

    let mut px = pack_axis(&xs, &widths, &rel.left);
    let mut py = pack_axis(&ys, &heights, &rel.below);
    for _ in 0..max_moves {
        let (ex, ey) = excess(&px, &py);
        let along_x = match (ex > eps, ey > eps) {
            (true, false) => true,
            (false, true) => false,
            _ => break,
        };
        let path = if along_x {
            critical_path(&px, &widths, &rel.left, eps)
        } else {
            critical_path(&py, &heights, &rel.below, eps)
        };
        let current = measure(&px, &py);
        let mut best: Option<((f64, usize), RelationSets, Vec<f64>, Vec<f64>)> = None;
        for pair in path.windows(2) {
            let (j, i) = (pair[0], pair[1]);
            let mut cand = rel.clone();
            let (from, to, other) =
                if along_x { (&mut cand.left, &mut cand.below, &ys) } else { (&mut cand.below, &mut cand.left, &xs) };
            from[i].retain(|&k| k != j);
            if (other[j], j) < (other[i], i) {
                to[i].push(j);
            } else {
                to[j].push(i);
            }
            let cx = pack_axis(&xs, &widths, &cand.left);
            let cy = pack_axis(&ys, &heights, &cand.below);
            let m = measure(&cx, &cy);
            if best.as_ref().is_none_or(|b| better(m, b.0, eps)) {
                best = Some((m, cand, cx, cy));
            }
        }
        match best {
            Some((m, cand, cx, cy)) if better(m, current, eps) => {
                rel = cand;
                px = cx;
                py = cy;
            }
            _ => break,
        }
    }
    place(instance, plan, &px, &py)
}

/// Result of a brute-force geometric check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Legality {
    /// Number of module pairs overlapping by more than the tolerance on both axes.
    pub overlapping_pairs: usize,
    /// Largest distance by which any module leaves the outline.
    pub max_outside: f64,
}

impl Legality {
    pub fn is_legal(&self) -> bool {
        self.overlapping_pairs == 0 && self.max_outside == 0.0
    }
}

/// Pairwise rectangle intersection test plus outline containment.
pub fn check_legality(instance: &ProblemInstance, plan: &Floorplan, outline: Option<&OutlineSpec>) -> Legality {
    let eps = length_tolerance(instance);
    let rects = plan.rects(instance);
    let mut overlapping_pairs = 0;
    for i in 0..rects.len() {
        for j in i + 1..rects.len() {
            let (a, b) = (&rects[i], &rects[j]);
            let w = a.x1.min(b.x1) - a.x0.max(b.x0);
            let h = a.y1.min(b.y1) - a.y0.max(b.y0);
            if w > eps && h > eps {
                overlapping_pairs += 1;
            }
        }
    }
    let max_outside = outline.map_or(0.0, |o| {
        rects
            .iter()
            .map(|r| (-r.x0).max(-r.y0).max(r.x1 - o.width).max(r.y1 - o.height))
            .fold(0.0, f64::max)
    });
    let max_outside = if max_outside > eps { max_outside } else { 0.0 };
    Legality { overlapping_pairs, max_outside }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Module, Orientation};

    fn instance(dims: &[(f64, f64)]) -> ProblemInstance {
        let modules = dims.iter().enumerate().map(|(i, &(w, h))| Module::new(format!("m{i}"), w, h).unwrap()).collect();
        ProblemInstance::new(modules, vec![], vec![]).unwrap()
    }

    fn from_lower_left(inst: &ProblemInstance, ll: &[(f64, f64)]) -> Floorplan {
        let mut p = Floorplan::zeros(ll.len());
        for (i, &(x, y)) in ll.iter().enumerate() {
            p.set_lower_left(inst, i, x, y);
        }
        p
    }

    #[test]
    fn vertical_neighbours_get_below_relation() {
        let inst = instance(&[(2.0, 2.0), (2.0, 2.0)]);
        let p = from_lower_left(&inst, &[(0.0, 0.0), (1.0, 5.0)]);
        let rel = build_relations(&inst, &p);
        assert!(rel.is_below(0, 1));
        assert!(rel.left.iter().all(Vec::is_empty));
    }

    #[test]
    fn coincident_modules_fall_back_by_id() {
        let inst = instance(&[(2.0, 2.0), (2.0, 2.0)]);
        let p = from_lower_left(&inst, &[(3.0, 3.0), (3.0, 3.0)]);
        let rel = build_relations(&inst, &p);
        assert!(rel.is_left_of(0, 1));
        assert!(!rel.is_left_of(1, 0));
        let out = legalize_graph(&inst, &p);
        assert_eq!(out.lower_left(&inst, 0), (0.0, 0.0));
        assert_eq!(out.lower_left(&inst, 1), (2.0, 0.0));
    }

    #[test]
    fn horizontal_neighbours_get_left_relation() {
        let inst = instance(&[(2.0, 2.0), (2.0, 2.0)]);
        let p = from_lower_left(&inst, &[(5.0, 0.5), (0.0, 0.0)]);
        let rel = build_relations(&inst, &p);
        assert!(rel.is_left_of(1, 0));
        assert!(rel.below.iter().all(Vec::is_empty));
    }

    #[test]
    fn unconstrained_module_goes_to_origin() {
        let inst = instance(&[(1.0, 1.0)]);
        let p = from_lower_left(&inst, &[(5.0, 7.0)]);
        assert_eq!(legalize_graph(&inst, &p).lower_left(&inst, 0), (0.0, 0.0));
    }

    #[test]
    fn chain_packs_to_prefix_sums() {
        let inst = instance(&[(2.0, 2.0), (2.0, 2.0), (2.0, 2.0)]);
        let p = from_lower_left(&inst, &[(1.0, 0.0), (4.0, 0.0), (9.0, 0.0)]);
        let out = legalize_graph(&inst, &p);
        let xs: Vec<f64> = (0..3).map(|i| out.lower_left(&inst, i).0).collect();
        assert_eq!(xs, vec![0.0, 2.0, 4.0]);
    }

    #[test]
    fn packed_plan_is_a_fixed_point() {
        let inst = instance(&[(2.0, 1.0), (1.0, 3.0), (3.0, 2.0)]);
        let p = from_lower_left(&inst, &[(0.0, 0.0), (2.0, 0.0), (0.0, 3.0)]);
        assert_eq!(legalize_graph(&inst, &p), p);
    }

    #[test]
    fn uses_rotated_dimensions() {
        let inst = instance(&[(4.0, 1.0), (1.0, 1.0)]);
        let mut p = from_lower_left(&inst, &[(0.0, 0.0), (0.5, 0.2)]);
        p.r[0] = Orientation::R90;
        p.set_lower_left(&inst, 0, 0.0, 0.0);
        let out = legalize_graph(&inst, &p);
        assert!(check_legality(&inst, &out, None).is_legal());
        // rotated module is 1 wide, so its neighbour packs at x = 1
        assert_eq!(out.lower_left(&inst, 1).0, 1.0);
    }

    #[test]
    fn legality_check_reports_outline_violation() {
        let inst = instance(&[(2.0, 2.0)]);
        let p = from_lower_left(&inst, &[(9.0, 0.0)]);
        let o = OutlineSpec::new(10.0, 10.0).unwrap();
        let l = check_legality(&inst, &p, Some(&o));
        assert_eq!(l.max_outside, 1.0);
        assert!(!l.is_legal());
    }

    #[test]
    fn repair_stacks_a_row_that_is_too_wide() {
        let inst = instance(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]);
        let p = from_lower_left(&inst, &[(0.0, 0.0), (1.0, 0.2), (2.0, 0.4)]);
        let outline = OutlineSpec::new(2.0, 2.0).unwrap();
        assert!(!check_legality(&inst, &legalize_graph(&inst, &p), Some(&outline)).is_legal());
        let fixed = legalize_within(&inst, &p, &outline, 10);
        assert!(check_legality(&inst, &fixed, Some(&outline)).is_legal());
        assert_eq!(legalize_within(&inst, &p, &outline, 0), legalize_graph(&inst, &p));
    }

    #[test]
    fn repair_leaves_fitting_plans_alone() {
        let inst = instance(&[(2.0, 1.0), (1.0, 3.0)]);
        let p = from_lower_left(&inst, &[(0.5, 0.5), (3.0, 0.0)]);
        let outline = OutlineSpec::new(10.0, 10.0).unwrap();
        assert_eq!(legalize_within(&inst, &p, &outline, 10), legalize_graph(&inst, &p));
    }
}
