//! Random instances shaped like the GSRC hard-block suites: log-uniform
//! module areas, aspect ratios up to 3, I/O pads on the boundary of a square
//! with 15% whitespace, and nets of degree 2 to 6.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::model::{Endpoint, Module, Net, Pad, ProblemInstance};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub modules: usize,
    pub pads: usize,
    pub nets: usize,
    /// Smallest and largest module area.
    pub area_range: (f64, f64),
}

impl SynthSpec {
    /// Counts comparable to the GSRC suite of the same size.
    pub fn gsrc_like(n: usize) -> Self {
        let nets_per_module = (12.0 - n as f64 / 40.0).max(6.0);
        Self {
            modules: n,
            pads: (3 * n + 40).min(600),
            nets: (n as f64 * nets_per_module).round() as usize,
            area_range: (400.0, 40_000.0),
        }
    }
}

pub fn generate(spec: &SynthSpec, seed: u64) -> ProblemInstance {
    let mut rng = stream(seed, &[0x5e17]);
    let (a_lo, a_hi) = spec.area_range;
    let modules: Vec<Module> = (0..spec.modules)
        .map(|i| {
            let area = (a_lo.ln() + rng.random::<f64>() * (a_hi / a_lo).ln()).exp();
            let aspect: f64 = rng.random_range(1.0..3.0);
            let (w, h) = ((area * aspect).sqrt().round().max(1.0), (area / aspect).sqrt().round().max(1.0));
            let (w, h) = if rng.random::<bool>() { (w, h) } else { (h, w) };
            Module::new(format!("sb{i}"), w, h).expect("positive dimensions")
        })
        .collect();

    let area: f64 = modules.iter().map(Module::area).sum();
    let side = (1.15 * area).sqrt();
    let pads: Vec<Pad> = (0..spec.pads)
        .map(|i| {
            let t = rng.random::<f64>() * side;
            let (x, y) = match rng.random_range(0..4) {
                0 => (t, 0.0),
                1 => (side, t),
                2 => (t, side),
                _ => (0.0, t),
            };
            Pad::new(format!("p{}", i + 1), x.round(), y.round()).expect("finite pad")
        })
        .collect();

    let nets = (0..spec.nets)
        .map(|_| {
            let degree = rng.random_range(2..=6usize).min(spec.modules + spec.pads);
            let with_pad = spec.pads > 0 && rng.random::<f64>() < 0.3;
            let n_mod = if with_pad { degree - 1 } else { degree }.min(spec.modules);
            let mut ends: Vec<Endpoint> =
                sample_indices(&mut rng, spec.modules, n_mod).into_iter().map(Endpoint::Module).collect();
            if with_pad || ends.len() < 2 {
                ends.push(Endpoint::Pad(rng.random_range(0..spec.pads)));
            }
            Net::from_endpoints(ends)
        })
        .collect();

    ProblemInstance::new(modules, pads, nets).expect("generated instance is valid")
}
