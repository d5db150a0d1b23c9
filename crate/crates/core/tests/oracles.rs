mod common;

use common::{hpwl_oracle, legal_by_oracle, overlap_piecewise};
use mixfloor::csa::{minimize, CsaConfig};
use mixfloor::ffa::{ffa_cd, FfaConfig};
use mixfloor::gss::{fa_gss, GssConfig};
use mixfloor::io::bookshelf::{load, load_aux, parse_pl, plan_from_pl, write_pl};
use mixfloor::legalize::legalize_graph;
use mixfloor::model::{Endpoint, Module, Net, OutlineSpec, ProblemInstance};
use mixfloor::selftest::{legalizer_check, subgradient_check};
use mixfloor::synth::{generate, SynthSpec};

fn two_unit_squares() -> ProblemInstance {
    let modules = vec![Module::new("a", 1.0, 1.0).unwrap(), Module::new("b", 1.0, 1.0).unwrap()];
    ProblemInstance::new(modules, vec![], vec![Net::from_endpoints([Endpoint::Module(0), Endpoint::Module(1)])]).unwrap()
}

/// Minimum HPWL over lower-left corners on a grid of pitch `1/k`.
fn grid_optimum(k: usize) -> f64 {
    let pts: Vec<(f64, f64)> =
        (0..=k).flat_map(|i| (0..=k).map(move |j| (i as f64 / k as f64, j as f64 / k as f64))).collect();
    let mut best = f64::INFINITY;
    for &(ax, ay) in &pts {
        for &(bx, by) in &pts {
            let separated = (ax - bx).abs() >= 1.0 || (ay - by).abs() >= 1.0;
            if separated {
                best = best.min((ax - bx).abs() + (ay - by).abs());
            }
        }
    }
    best
}

#[test]
fn two_squares_reach_grid_optimum() {
    let inst = two_unit_squares();
    let optimum = grid_optimum(20);
    assert_eq!(optimum, 1.0);
    let outline = OutlineSpec::new(2.0, 2.0).unwrap();
    let cfg = FfaConfig::new(outline);
    let hits = (0..10)
        .filter(|&seed| {
            let r = ffa_cd(&inst, &cfg, seed).unwrap();
            r.legal && legal_by_oracle(&inst, &r.plan, &outline, 1e-9) && hpwl_oracle(&inst, &r.plan) <= optimum + 1e-6
        })
        .count();
    assert!(hits >= 9, "{hits}/10 seeds reached HPWL {optimum}");
}

#[test]
fn csa_quadratic_and_l1() {
    let u0 = vec![10f64.sqrt(); 10];
    let cfg = CsaConfig { k_max: 500, s0: 1.0, stall_limit: 500, ..Default::default() };
    let mut quad = |u: &[f64], g: &mut [f64]| {
        g.iter_mut().zip(u).for_each(|(g, u)| *g = 2.0 * u);
        u.iter().map(|v| v * v).sum::<f64>()
    };
    assert!(minimize(&mut quad, &u0, &cfg).unwrap().best_value < 1e-2);
    let mut l1 = |u: &[f64], g: &mut [f64]| {
        g.iter_mut().zip(u).for_each(|(g, u)| *g = u.signum() * (*u != 0.0) as u8 as f64);
        u.iter().map(|v| v.abs()).sum::<f64>()
    };
    assert!(minimize(&mut l1, &u0, &cfg).unwrap().best_value < 1e-1);
}

#[test]
fn ffa_result_is_legal_by_brute_force() {
    let inst = generate(&SynthSpec::gsrc_like(12), 3);
    let area: f64 = inst.modules().iter().map(Module::area).sum();
    let outline = OutlineSpec::from_ratio(area, 1.0, 0.15).unwrap();
    let r = ffa_cd(&inst, &FfaConfig::new(outline), 1).unwrap();
    assert!(r.legal);
    assert!(legal_by_oracle(&inst, &r.plan, &outline, 1e-6));
    assert!((hpwl_oracle(&inst, &r.plan) - r.hpwl).abs() <= 1e-6 * r.hpwl.max(1.0));
}

#[test]
fn subgradients_match_differences_of_transcribed_overlap() {
    let r = subgradient_check(10, 100, 11, overlap_piecewise);
    assert_eq!(r.points, 100);
    assert!(r.max_rel_error <= 1e-4, "{r:?}");
}

#[test]
fn legalizer_against_transcribed_overlap() {
    let r = legalizer_check(200, 20, 5, overlap_piecewise);
    assert_eq!(r.failures(), 0, "{r:?}");
}

#[test]
fn legalize_already_legal_layout_is_packed_not_scattered() {
    let inst = two_unit_squares();
    let mut plan = mixfloor::model::Floorplan::zeros(2);
    plan.set_lower_left(&inst, 0, 5.0, 5.0);
    plan.set_lower_left(&inst, 1, 8.0, 5.0);
    let out = legalize_graph(&inst, &plan);
    assert_eq!(out.lower_left(&inst, 0), (0.0, 0.0));
    assert_eq!(out.lower_left(&inst, 1), (1.0, 0.0));
}

#[test]
fn tiny10_loads_and_round_trips() {
    let files = load_aux(&common::tiny10_aux()).unwrap();
    let (inst, entries) = load(&files).unwrap();
    assert_eq!(inst.len(), 10);
    assert_eq!(inst.pads().len(), 8);
    assert_eq!(inst.nets().len(), 19);
    let mut plan = plan_from_pl(&inst, &entries);
    for i in 0..inst.len() {
        plan.set_lower_left(&inst, i, i as f64 * 1.234567, 10.0 - i as f64 / 3.0);
        plan.r[i] = mixfloor::model::Orientation::new((i % 4) as u8).unwrap();
    }
    let back = plan_from_pl(&inst, &parse_pl(&write_pl(&inst, &plan)).unwrap());
    for i in 0..inst.len() {
        assert_eq!(back.r[i], plan.r[i]);
        assert!((back.x[i] - plan.x[i]).abs() <= 1e-6 && (back.y[i] - plan.y[i]).abs() <= 1e-6);
    }
}

#[test]
fn malformed_fixtures_are_rejected() {
    use mixfloor::io::bookshelf::{parse_blocks, parse_nets};
    let dir = common::fixtures().join("malformed");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let err = match path.extension().and_then(|e| e.to_str()) {
            Some("blocks") => parse_blocks(&text).err().map(|e| e.to_string()),
            Some("nets") => parse_nets(&text).err().map(|e| e.to_string()),
            Some("pl") => parse_pl(&text).err().map(|e| e.to_string()),
            _ => continue,
        };
        let err = err.unwrap_or_else(|| panic!("{} was accepted", path.display()));
        assert!(err.contains("line"), "{}: {err}", path.display());
        seen += 1;
    }
    assert_eq!(seen, 6);
    let count = parse_blocks(&std::fs::read_to_string(dir.join("count_mismatch.blocks")).unwrap()).unwrap_err();
    assert!(count.to_string().contains('3') && count.to_string().contains('2'), "{count}");
}

#[test]
fn golden_section_on_tiny10() {
    let (inst, _) = load(&load_aux(&common::tiny10_aux()).unwrap()).unwrap();
    let cfg = GssConfig { trial_generations: 40, ..Default::default() };
    let res = fa_gss(&inst, &cfg, 2).unwrap();
    assert!(res.gamma_max - res.gamma_min < 0.002);
    let feasible: Vec<f64> = res.trials.iter().filter(|t| t.feasible).map(|t| t.gamma).collect();
    let witnessed: Vec<f64> = res.witnesses.iter().map(|w| w.gamma).collect();
    assert_eq!(feasible, witnessed);
    for w in &res.witnesses {
        assert!(legal_by_oracle(&inst, &w.plan, &w.outline, 1e-6));
    }
    assert_eq!(res.witnesses.last().unwrap().gamma, res.gamma_max);

    // same seeds per trial index, so a wider stopping width only cuts the tail
    let coarse = fa_gss(&inst, &GssConfig { epsilon: 0.005, ..cfg.clone() }, 2).unwrap();
    assert!(coarse.trials.len() <= res.trials.len());
    assert_eq!(coarse.trials[..], res.trials[..coarse.trials.len()]);
}

#[test]
fn wider_epsilon_needs_fewer_trials() {
    let inst = ProblemInstance::new(vec![Module::new("a", 2.0, 2.0).unwrap()], vec![], vec![]).unwrap();
    let fine = fa_gss(&inst, &GssConfig::default(), 0).unwrap();
    let coarse = fa_gss(&inst, &GssConfig { epsilon: 0.005, ..Default::default() }, 0).unwrap();
    // every trial is feasible: 1 + 9 and 1 + 8 contractions from 0.15
    assert_eq!(fine.trials.len(), 10);
    assert_eq!(coarse.trials.len(), 9);
}
