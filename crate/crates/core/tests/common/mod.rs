#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mixfloor::model::{Floorplan, OutlineSpec, ProblemInstance};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn tiny10_aux() -> PathBuf {
    fixtures().join("tiny10/tiny10.aux")
}

/// Directory holding GSRC `n10.aux` ... `n300.aux`, flat or one folder per
/// circuit. `GSRC_DIR` wins over `tests/fixtures/gsrc`.
pub fn gsrc_aux(name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os("GSRC_DIR").map(PathBuf::from).unwrap_or_else(|| fixtures().join("gsrc"));
    [dir.join(format!("{name}.aux")), dir.join(name).join(format!("{name}.aux"))].into_iter().find(|p| p.is_file())
}

/// Axis-aligned boxes `(x0, y0, x1, y1)` recomputed from the raw module
/// sizes, independent of the library's geometry helpers.
pub fn boxes(inst: &ProblemInstance, plan: &Floorplan) -> Vec<(f64, f64, f64, f64)> {
    inst.modules()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (w, h) = if plan.r[i].code() % 2 == 1 { (m.height, m.width) } else { (m.width, m.height) };
            (plan.x[i] - w / 2.0, plan.y[i] - h / 2.0, plan.x[i] + w / 2.0, plan.y[i] + h / 2.0)
        })
        .collect()
}

/// Largest pairwise intersection area.
pub fn worst_intersection(b: &[(f64, f64, f64, f64)]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            let w = b[i].2.min(b[j].2) - b[i].0.max(b[j].0);
            let h = b[i].3.min(b[j].3) - b[i].1.max(b[j].1);
            if w > 0.0 && h > 0.0 {
                worst = worst.max(w * h);
            }
        }
    }
    worst
}

/// Largest protrusion beyond `[0, W] x [0, H]`.
pub fn worst_protrusion(b: &[(f64, f64, f64, f64)], o: &OutlineSpec) -> f64 {
    b.iter().map(|r| (-r.0).max(-r.1).max(r.2 - o.width).max(r.3 - o.height).max(0.0)).fold(0.0, f64::max)
}

/// Zero overlap and full containment up to `tol` in length units.
pub fn legal_by_oracle(inst: &ProblemInstance, plan: &Floorplan, outline: &OutlineSpec, tol: f64) -> bool {
    let b = boxes(inst, plan);
    worst_intersection(&b) <= tol * tol && worst_protrusion(&b, outline) <= tol
}

/// Brute-force HPWL over module centers and pads.
pub fn hpwl_oracle(inst: &ProblemInstance, plan: &Floorplan) -> f64 {
    use mixfloor::model::Endpoint;
    inst.nets()
        .iter()
        .map(|net| {
            let pts: Vec<(f64, f64)> = net
                .pins
                .iter()
                .map(|p| match p.endpoint {
                    Endpoint::Module(i) => {
                        let m = &inst.modules()[i];
                        let (hw, hh) = (p.offset.0 / 100.0 * m.width / 2.0, p.offset.1 / 100.0 * m.height / 2.0);
                        let (dx, dy) = match plan.r[i].code() {
                            0 => (hw, hh),
                            1 => (-hh, hw),
                            2 => (-hw, -hh),
                            _ => (hh, -hw),
                        };
                        (plan.x[i] + dx, plan.y[i] + dy)
                    }
                    Endpoint::Pad(k) => (inst.pads()[k].x, inst.pads()[k].y),
                })
                .collect();
            let span = |f: fn(&(f64, f64)) -> f64| {
                let v = pts.iter().map(f);
                v.clone().fold(f64::NEG_INFINITY, f64::max) - v.fold(f64::INFINITY, f64::min)
            };
            span(|p| p.0) + span(|p| p.1)
        })
        .sum()
}

/// Overlap length of two intervals of lengths `a`, `b` with center distance
/// `d`, written out from the piecewise definition.
pub fn overlap_piecewise(a: f64, b: f64, d: f64) -> f64 {
    let d = d.abs();
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if d <= (hi - lo) / 2.0 {
        hi
    } else if d <= (hi + lo) / 2.0 {
        (hi + lo) / 2.0 - d
    } else {
        0.0
    }
}
