//! Browser bindings. Each entry point takes an instance (pasted Bookshelf
//! text, or a synthetic one when the blocks text is empty) and returns a JSON
//! string with the numbers and SVG drawings the page shows.

use mixfloor::ffa::{ffa_cd, FfaConfig};
use mixfloor::gss::{fa_gss, GssConfig};
use mixfloor::io::bookshelf::{assemble, parse_blocks, parse_nets, parse_pl};
use mixfloor::io::svg::render_svg;
use mixfloor::legalize::{check_legality, legalize_graph, legalize_within};
use mixfloor::model::{bounding_area, total_module_area, Floorplan, Orientation, OutlineSpec, ProblemInstance};
use mixfloor::rng::stream;
use mixfloor::synth::{generate, SynthSpec};
use rand::Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

pub fn instance(blocks: &str, nets: &str, pl: &str, modules: usize, seed: u64) -> Result<ProblemInstance, String> {
    if blocks.trim().is_empty() {
        if modules == 0 || modules > 300 {
            return Err("synthetic instances take 1 to 300 modules".into());
        }
        return Ok(generate(&SynthSpec::gsrc_like(modules), seed));
    }
    let b = parse_blocks(blocks).map_err(|e| e.to_string())?;
    let n = if nets.trim().is_empty() { Vec::new() } else { parse_nets(nets).map_err(|e| e.to_string())? };
    let p = if pl.trim().is_empty() { Vec::new() } else { parse_pl(pl).map_err(|e| e.to_string())? };
    assemble(b, &n, &p).map_err(|e| e.to_string())
}

fn outline(inst: &ProblemInstance, ratio: f64, gamma: f64) -> Result<OutlineSpec, String> {
    OutlineSpec::from_ratio(total_module_area(inst), ratio, gamma).map_err(|e| e.to_string())
}

pub fn run_fixed_outline(inst: &ProblemInstance, ratio: f64, gamma: f64, seed: u64, generations: usize) -> Result<Value, String> {
    let o = outline(inst, ratio, gamma)?;
    let mut cfg = FfaConfig::new(o);
    cfg.max_generations = generations;
    let r = ffa_cd(inst, &cfg, seed).map_err(|e| e.to_string())?;
    let history: Vec<Value> = r
        .history
        .iter()
        .map(|g| json!({"generation": g.generation, "legal": g.best.legal, "hpwl": g.best.hpwl, "violation": g.best.violation}))
        .collect();
    Ok(json!({
        "modules": inst.len(),
        "outline": [o.width, o.height],
        "legal": r.legal,
        "hpwl": r.hpwl,
        "generations": r.generations,
        "history": history,
        "svg": render_svg(inst, &r.plan, Some(&o)),
    }))
}

/// Modules dropped at random inside the outline with random orientations.
pub fn scatter(inst: &ProblemInstance, o: &OutlineSpec, seed: u64) -> Floorplan {
    let mut rng = stream(seed, &[0x5ca7]);
    let mut plan = Floorplan::zeros(inst.len());
    for i in 0..inst.len() {
        plan.r[i] = Orientation::new(rng.random_range(0..4)).expect("code below 4");
        plan.x[i] = rng.random_range(0.0..=o.width);
        plan.y[i] = rng.random_range(0.0..=o.height);
    }
    plan
}

pub fn run_legalize(inst: &ProblemInstance, ratio: f64, gamma: f64, seed: u64) -> Result<Value, String> {
    let o = outline(inst, ratio, gamma)?;
    let before = scatter(inst, &o, seed);
    let packed = legalize_graph(inst, &before);
    let repaired = legalize_within(inst, &before, &o, 50);
    let stats = |p: &Floorplan| {
        let l = check_legality(inst, p, Some(&o));
        json!({
            "legal": l.is_legal(),
            "overlapping_pairs": l.overlapping_pairs,
            "max_outside": l.max_outside,
            "area": bounding_area(inst, p),
            "svg": render_svg(inst, p, Some(&o)),
        })
    };
    Ok(json!({"before": stats(&before), "packed": stats(&packed), "repaired": stats(&repaired)}))
}

pub fn run_min_area(inst: &ProblemInstance, seed: u64, trial_generations: usize) -> Result<Value, String> {
    let cfg = GssConfig { trial_generations, ..Default::default() };
    let r = fa_gss(inst, &cfg, seed).map_err(|e| e.to_string())?;
    let trials: Vec<Value> =
        r.trials.iter().map(|t| json!({"gamma": t.gamma, "feasible": t.feasible, "hpwl": t.hpwl, "area": t.area})).collect();
    Ok(json!({
        "gamma_min": r.gamma_min,
        "gamma_max": r.gamma_max,
        "hpwl": r.hpwl,
        "area": r.area,
        "whitespace": r.whitespace,
        "trials": trials,
        "svg": render_svg(inst, &r.plan, Some(&r.outline)),
    }))
}

fn finish(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fixedOutline)]
#[allow(clippy::too_many_arguments)]
pub fn fixed_outline(
    blocks: &str,
    nets: &str,
    pl: &str,
    modules: u32,
    ratio: f64,
    gamma: f64,
    seed: u32,
    generations: u32,
) -> Result<String, JsError> {
    finish(
        instance(blocks, nets, pl, modules as usize, seed as u64)
            .and_then(|i| run_fixed_outline(&i, ratio, gamma, seed as u64, generations as usize)),
    )
}

#[wasm_bindgen]
pub fn legalize(blocks: &str, nets: &str, pl: &str, modules: u32, ratio: f64, gamma: f64, seed: u32) -> Result<String, JsError> {
    finish(instance(blocks, nets, pl, modules as usize, seed as u64).and_then(|i| run_legalize(&i, ratio, gamma, seed as u64)))
}

#[wasm_bindgen(js_name = minArea)]
pub fn min_area(blocks: &str, nets: &str, pl: &str, modules: u32, seed: u32, trial_generations: u32) -> Result<String, JsError> {
    finish(
        instance(blocks, nets, pl, modules as usize, seed as u64)
            .and_then(|i| run_min_area(&i, seed as u64, trial_generations as usize)),
    )
}
