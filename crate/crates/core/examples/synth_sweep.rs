//! Success rate and wirelength of the fixed-outline flow on synthetic
//! instances: `cargo run --release --example synth_sweep -- 30 1.0 10`.

use mixfloor::ffa::{ffa_cd, FfaConfig};
use mixfloor::model::{total_module_area, OutlineSpec};
use mixfloor::synth::{generate, SynthSpec};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|a| a.parse().ok()).unwrap_or(30);
    let ratio: f64 = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let runs: u64 = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(10);

    let inst = generate(&SynthSpec::gsrc_like(n), n as u64);
    let outline = OutlineSpec::from_ratio(total_module_area(&inst), ratio, 0.15).unwrap();
    let cfg = FfaConfig::new(outline);
    let mut legal = 0;
    for seed in 0..runs {
        let r = ffa_cd(&inst, &cfg, seed).unwrap();
        legal += r.legal as usize;
        println!(
            "seed {seed}: legal={} hpwl={:.0} violation={:.4} gens={} lambda={:.0} mu={:.0} {:.2}s",
            r.legal, r.hpwl, r.score.violation, r.generations, r.weights.lambda, r.weights.mu, r.seconds
        );
    }
    println!("n{n} R={ratio}: {legal}/{runs} legal");
}
