//! Command-line front end: instance loading, configuration layering, the
//! benchmark loops and artifact output.
//!
//! Settings come from three layers, later ones winning: built-in defaults,
//! a TOML file given with `--config`, and command-line flags. Every flag has
//! a file key of the same name (dashes become underscores); `--np`,
//! `--epsilon`, `--warm-start` and `--max-generations` are shorthands for
//! `dea.np`, `gss.epsilon`, `gss.warm_start` and `ffa.max_generations`.
//! Solver constants are reachable as `--<section>.<key> <value>` for the
//! sections `ffa`, `csa`, `dea`, `weights` and `gss`, which match the
//! `[ffa]`, `[csa]`, ... tables of the file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::ffa::{ffa_cd, FfaConfig};
use crate::gss::{fa_gss, session_cost, GssConfig, GssError};
use crate::io::bookshelf::{load, load_aux, parse_pl, plan_from_pl, write_pl, BenchmarkFiles};
use crate::io::metrics::{write_metrics_csv, RunRecord};
use crate::io::svg::render_svg;
use crate::io::IoError;
use crate::model::{bounding_area, total_module_area, OutlineSpec, Pad, ProblemInstance};
use crate::selftest::{self, SelfTestConfig};

pub const THREADS_ENV: &str = "MIXFLOOR_THREADS";

const SECTIONS: [&str; 5] = ["ffa", "csa", "dea", "weights", "gss"];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Write { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mixfloor",
    version,
    about = "Fixed-outline and minimum-area floorplanning of hard modules",
    after_help = "Solver constants: --ffa.<key>, --csa.<key>, --dea.<key>, --weights.<key>, --gss.<key> \
                  (same keys as the [ffa], [csa], ... tables of --config).\n\
                  Thread count: MIXFLOOR_THREADS.\n\
                  Exit codes: 0 success, 1 usage, 2 input, 3 runtime or failed self-test."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Floorplan every instance inside a fixed outline per aspect ratio.
    FixedOutline(RunArgs),
    /// Search the smallest feasible whitespace ratio per instance.
    MinArea(RunArgs),
    /// Run the built-in invariant checks.
    Selftest(RunArgs),
    /// Draw a placement given as a .pl file.
    Render(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalMode {
    /// Pad coordinates as given in the .pl file.
    #[default]
    Verbatim,
    /// Pads stretched affinely onto the outline.
    FitOutline,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bookshelf .aux file; repeat for several instances.
    #[arg(long)]
    pub aux: Vec<PathBuf>,
    #[arg(long)]
    pub blocks: Option<PathBuf>,
    #[arg(long)]
    pub nets: Option<PathBuf>,
    /// Terminal (and optional module) positions.
    #[arg(long)]
    pub pl: Option<PathBuf>,
    /// Outline aspect ratio H*/W*; repeat for a sweep.
    #[arg(long)]
    pub ratio: Vec<f64>,
    /// Whitespace ratio of the fixed outline.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Population size.
    #[arg(long)]
    pub np: Option<usize>,
    /// Seed of the first run; run k uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Metrics CSV; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// SVG of the returned plan (render: output file).
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// .pl file of the returned plan.
    #[arg(long)]
    pub pl_out: Option<PathBuf>,
    /// Golden-section stopping width.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_generations: Option<usize>,
    /// Leave the seconds column empty so repeated runs compare byte for byte.
    #[arg(long)]
    pub no_time: bool,
    /// Start every golden-section trial from the best plan so far.
    #[arg(long)]
    pub warm_start: bool,
    #[arg(long)]
    pub terminals: Option<TerminalMode>,
    /// Placement to draw (render).
    #[arg(long)]
    pub placement: Option<PathBuf>,
    /// Draw the fixed outline of the first ratio and gamma (render).
    #[arg(long)]
    pub frame: bool,
    /// Swap in a deliberately wrong overlap function (selftest).
    #[arg(long, hide = true)]
    pub corrupt_overlap: bool,
}

/// Golden-section settings exposed to configuration.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GssSection {
    pub epsilon: f64,
    pub gamma_start: f64,
    pub gamma_cap: f64,
    pub trial_generations: usize,
    pub warm_start: bool,
    /// Coordinate-solver budget after the first generation of a trial.
    pub k_max_later: usize,
}

impl Default for GssSection {
    fn default() -> Self {
        let g = GssConfig::default();
        Self {
            epsilon: g.epsilon,
            gamma_start: g.gamma_start,
            gamma_cap: g.gamma_cap,
            trial_generations: g.trial_generations,
            warm_start: g.warm_start,
            k_max_later: g.inner.k_max_later.unwrap_or(g.inner.k_max),
        }
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub aux: Vec<PathBuf>,
    pub blocks: Option<PathBuf>,
    pub nets: Option<PathBuf>,
    pub pl: Option<PathBuf>,
    pub ratio: Vec<f64>,
    pub gamma: f64,
    pub seed: u64,
    pub runs: usize,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub pl_out: Option<PathBuf>,
    pub no_time: bool,
    pub terminals: TerminalMode,
    pub placement: Option<PathBuf>,
    pub frame: bool,
    /// Holds the `[csa]`, `[dea]` and `[weights]` tables as well.
    pub ffa: FfaConfig,
    pub gss: GssSection,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            aux: Vec::new(),
            blocks: None,
            nets: None,
            pl: None,
            ratio: vec![1.0],
            gamma: 0.15,
            seed: 0,
            runs: 1,
            csv: None,
            svg: None,
            pl_out: None,
            no_time: false,
            terminals: TerminalMode::Verbatim,
            placement: None,
            frame: false,
            ffa: FfaConfig::default(),
            gss: GssSection::default(),
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.runs < 1 {
            return usage("runs must be at least 1".into());
        }
        if self.ratio.is_empty() || self.ratio.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return usage("every ratio must be positive".into());
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return usage("gamma must be non-negative".into());
        }
        self.ffa.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.ffa.dea.validate().map_err(CliError::Usage)?;
        self.gss_config(1.0).validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }

    pub fn gss_config(&self, ratio: f64) -> GssConfig {
        let mut inner = self.ffa.clone();
        inner.k_max_later = Some(self.gss.k_max_later);
        GssConfig {
            ratio,
            epsilon: self.gss.epsilon,
            gamma_start: self.gss.gamma_start,
            gamma_cap: self.gss.gamma_cap,
            trial_generations: self.gss.trial_generations,
            warm_start: self.gss.warm_start,
            inner,
        }
    }

    fn benchmark_files(&self) -> Result<Vec<(String, BenchmarkFiles)>, CliError> {
        let mut out = Vec::new();
        for aux in &self.aux {
            out.push((stem(aux), load_aux(aux)?));
        }
        match (&self.blocks, &self.nets, &self.pl) {
            (Some(b), Some(n), Some(p)) => {
                out.push((stem(b), BenchmarkFiles { blocks: b.clone(), nets: n.clone(), pl: p.clone() }))
            }
            (None, None, None) => {}
            _ => return Err(CliError::Usage("--blocks, --nets and --pl go together".into())),
        }
        if out.is_empty() {
            return Err(CliError::Usage("no instance given (use --aux or --blocks/--nets/--pl)".into()));
        }
        Ok(out)
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

/// Splits `--<section>.<key> value` and `--<section>.<key>=value` out of
/// the argument list.
pub fn extract_overrides(args: Vec<OsString>) -> Result<(Vec<OsString>, Vec<(String, String)>), CliError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.to_str().and_then(|s| s.strip_prefix("--")) else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        let Some((section, _)) = name.split_once('.') else {
            rest.push(arg);
            continue;
        };
        if !SECTIONS.contains(&section) {
            return Err(CliError::Usage(format!("unknown option --{name}")));
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .and_then(|v| v.into_string().ok())
                .ok_or_else(|| CliError::Usage(format!("--{name} needs a value")))?,
        };
        overrides.push((name, value));
    }
    Ok((rest, overrides))
}

/// Reads `raw` as a TOML value, falling back to a plain string.
fn toml_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("non-empty path");
    let mut t = table;
    for p in parts {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        t = entry.as_table_mut().ok_or_else(|| CliError::Usage(format!("{p} is not a table")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

/// Moves the top-level `csa`, `dea` and `weights` tables under `ffa`.
fn fold_sections(table: &mut toml::Table) -> Result<(), CliError> {
    for key in ["csa", "dea", "weights"] {
        let Some(v) = table.remove(key) else { continue };
        let toml::Value::Table(src) = v else {
            return Err(CliError::Usage(format!("{key} must be a table")));
        };
        for (k, v) in src {
            set_path(table, &format!("ffa.{key}.{k}"), v)?;
        }
    }
    Ok(())
}

/// Paths in a config file are taken relative to the file.
fn rebase_paths(table: &mut toml::Table, dir: &Path) {
    let rebase = |v: &mut toml::Value| {
        if let toml::Value::String(s) = v {
            if Path::new(s.as_str()).is_relative() {
                *s = dir.join(s.as_str()).to_string_lossy().into_owned();
            }
        }
    };
    for key in ["blocks", "nets", "pl", "csv", "svg", "pl_out", "placement"] {
        if let Some(v) = table.get_mut(key) {
            rebase(v);
        }
    }
    if let Some(toml::Value::Array(a)) = table.get_mut("aux") {
        a.iter_mut().for_each(rebase);
    }
}

/// Defaults, then the config file, then namespaced overrides, then flags.
pub fn resolve(args: &RunArgs, overrides: &[(String, String)]) -> Result<Settings, CliError> {
    let mut table = toml::Table::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        table = text.parse::<toml::Table>().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        rebase_paths(&mut table, path.parent().unwrap_or_else(|| Path::new(".")));
    }
    fold_sections(&mut table)?;
    for (name, raw) in overrides {
        let (section, key) = name.split_once('.').expect("checked on extraction");
        let path = if section == "ffa" || section == "gss" { name.clone() } else { format!("ffa.{section}.{key}") };
        set_path(&mut table, &path, toml_value(raw))?;
    }
    let mut s: Settings = table.try_into().map_err(|e: toml::de::Error| {
        let where_ = args.config.as_ref().map(|p| format!(" in {}", p.display())).unwrap_or_default();
        CliError::Usage(format!("invalid setting{where_}: {}", e.message()))
    })?;

    if !args.aux.is_empty() {
        s.aux = args.aux.clone();
    }
    macro_rules! take {
        ($($field:ident),*) => {$(
            if let Some(v) = &args.$field {
                s.$field = Some(v.clone());
            }
        )*};
    }
    take!(blocks, nets, pl, csv, svg, pl_out, placement);
    if !args.ratio.is_empty() {
        s.ratio = args.ratio.clone();
    }
    if let Some(v) = args.gamma {
        s.gamma = v;
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.runs {
        s.runs = v;
    }
    if let Some(v) = args.np {
        s.ffa.dea.np = v;
    }
    if let Some(v) = args.epsilon {
        s.gss.epsilon = v;
    }
    if let Some(v) = args.max_generations {
        s.ffa.max_generations = v;
    }
    if let Some(v) = args.terminals {
        s.terminals = v;
    }
    s.no_time |= args.no_time;
    s.gss.warm_start |= args.warm_start;
    s.frame |= args.frame;
    s.validate()?;
    Ok(s)
}

/// Maps the pads' bounding box onto `[0, W] x [0, H]`; a degenerate extent
/// goes to the middle of the outline.
pub fn fit_pads(instance: &ProblemInstance, outline: &OutlineSpec) -> ProblemInstance {
    let pads = instance.pads();
    if pads.is_empty() {
        return instance.clone();
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pads {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let map = |v: f64, lo: f64, hi: f64, len: f64| if hi > lo { (v - lo) / (hi - lo) * len } else { len / 2.0 };
    let pads = pads
        .iter()
        .map(|p| Pad {
            name: p.name.clone(),
            x: map(p.x, x0, x1, outline.width),
            y: map(p.y, y0, y1, outline.height),
        })
        .collect();
    ProblemInstance::new(instance.modules().to_vec(), pads, instance.nets().to_vec()).expect("same modules and nets")
}

fn prepare(instance: &ProblemInstance, outline: &OutlineSpec, mode: TerminalMode) -> ProblemInstance {
    match mode {
        TerminalMode::Verbatim => instance.clone(),
        TerminalMode::FitOutline => fit_pads(instance, outline),
    }
}

/// Inserts `.<tag>` before the extension unless only one artifact is written.
fn artifact_path(base: &Path, tag: &str, single: bool) -> PathBuf {
    if single {
        return base.to_path_buf();
    }
    let ext = base.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    base.with_file_name(format!("{}.{tag}{ext}", stem(base)))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| IoError::Write { path: path.to_path_buf(), source }.into())
}

fn emit_csv(settings: &Settings, records: &[RunRecord], out: &mut String) -> Result<(), CliError> {
    let csv = write_metrics_csv(records);
    match &settings.csv {
        Some(p) => write_file(p, &csv),
        None => {
            out.push_str(&csv);
            Ok(())
        }
    }
}

fn load_instances(settings: &Settings) -> Result<Vec<(String, ProblemInstance)>, CliError> {
    settings.benchmark_files()?.into_iter().map(|(name, files)| Ok((name, load(&files)?.0))).collect()
}

fn seconds(settings: &Settings, s: f64) -> Option<f64> {
    (!settings.no_time).then_some(s)
}

pub fn run_fixed_outline(settings: &Settings, out: &mut String, log: &mut dyn std::io::Write) -> Result<(), CliError> {
    let instances = load_instances(settings)?;
    let single = instances.len() * settings.ratio.len() * settings.runs == 1;
    let mut records = Vec::new();
    for (name, base) in &instances {
        for &ratio in &settings.ratio {
            let outline = OutlineSpec::from_ratio(total_module_area(base), ratio, settings.gamma)
                .map_err(|e| CliError::Runtime(format!("{name}: {e}")))?;
            let instance = prepare(base, &outline, settings.terminals);
            let mut cfg = settings.ffa.clone();
            cfg.outline = outline;
            for run in 0..settings.runs {
                let seed = settings.seed.wrapping_add(run as u64);
                let res = ffa_cd(&instance, &cfg, seed).map_err(|e| CliError::Runtime(format!("{name}: {e}")))?;
                let _ = writeln!(
                    log,
                    "{name} R={ratio} seed={seed}: legal={} hpwl={:.1} generations={}",
                    res.legal, res.hpwl, res.generations
                );
                let tag = format!("{name}.R{ratio}.{seed}");
                if let Some(p) = &settings.svg {
                    write_file(&artifact_path(p, &tag, single), &render_svg(&instance, &res.plan, Some(&outline)))?;
                }
                if let Some(p) = &settings.pl_out {
                    write_file(&artifact_path(p, &tag, single), &write_pl(&instance, &res.plan))?;
                }
                records.push(RunRecord {
                    instance: name.clone(),
                    mode: "fixed-outline".into(),
                    ratio,
                    gamma: settings.gamma,
                    seed,
                    legal: res.legal,
                    hpwl: res.hpwl,
                    area: bounding_area(&instance, &res.plan),
                    cost: None,
                    seconds: seconds(settings, res.seconds),
                });
            }
        }
    }
    emit_csv(settings, &records, out)
}

/// The `gamma` column holds the whitespace of the returned plan's bounding
/// box; cost uses the smallest wirelength and area over the legal runs of
/// the same instance and ratio in this session.
pub fn run_min_area(settings: &Settings, out: &mut String, log: &mut dyn std::io::Write) -> Result<(), CliError> {
    let instances = load_instances(settings)?;
    let single = instances.len() * settings.ratio.len() * settings.runs == 1;
    let mut records = Vec::new();
    for (name, base) in &instances {
        for &ratio in &settings.ratio {
            // pads are fitted to the outline of the starting ratio
            let outline = OutlineSpec::from_ratio(total_module_area(base), ratio, settings.gss.gamma_start)
                .map_err(|e| CliError::Runtime(format!("{name}: {e}")))?;
            let instance = prepare(base, &outline, settings.terminals);
            let cfg = settings.gss_config(ratio);
            let first = records.len();
            for run in 0..settings.runs {
                let seed = settings.seed.wrapping_add(run as u64);
                let mut rec = RunRecord {
                    instance: name.clone(),
                    mode: "min-area".into(),
                    ratio,
                    gamma: f64::NAN,
                    seed,
                    legal: false,
                    hpwl: f64::NAN,
                    area: f64::NAN,
                    cost: None,
                    seconds: None,
                };
                match fa_gss(&instance, &cfg, seed) {
                    Ok(res) => {
                        for (k, t) in res.trials.iter().enumerate() {
                            let _ = writeln!(
                                log,
                                "{name} R={ratio} seed={seed} trial {k}: gamma={:.5} feasible={} hpwl={:.1} area={:.1}",
                                t.gamma, t.feasible, t.hpwl, t.area
                            );
                        }
                        let _ = writeln!(
                            log,
                            "{name} R={ratio} seed={seed}: bracket [{:.5}, {:.5}] hpwl={:.1} area={:.1}",
                            res.gamma_min, res.gamma_max, res.hpwl, res.area
                        );
                        let tag = format!("{name}.R{ratio}.{seed}");
                        if let Some(p) = &settings.svg {
                            let svg = render_svg(&instance, &res.plan, Some(&res.outline));
                            write_file(&artifact_path(p, &tag, single), &svg)?;
                        }
                        if let Some(p) = &settings.pl_out {
                            write_file(&artifact_path(p, &tag, single), &write_pl(&instance, &res.plan))?;
                        }
                        rec.gamma = res.whitespace;
                        rec.legal = true;
                        rec.hpwl = res.hpwl;
                        rec.area = res.area;
                        rec.seconds = seconds(settings, res.seconds);
                    }
                    Err(GssError::Infeasible { cap }) => {
                        let _ = writeln!(log, "{name} R={ratio} seed={seed}: no legal plan up to gamma {cap}");
                    }
                    Err(e) => return Err(CliError::Runtime(format!("{name}: {e}"))),
                }
                records.push(rec);
            }
            let legal: Vec<&RunRecord> = records[first..].iter().filter(|r| r.legal).collect();
            let w_min = legal.iter().map(|r| r.hpwl).fold(f64::INFINITY, f64::min);
            let s_min = legal.iter().map(|r| r.area).fold(f64::INFINITY, f64::min);
            for r in records[first..].iter_mut().filter(|r| r.legal) {
                r.cost = session_cost(r.hpwl, w_min, r.area, s_min).ok();
            }
        }
    }
    emit_csv(settings, &records, out)
}

pub fn run_selftest(settings: &Settings, corrupt: bool, out: &mut String) -> Result<(), CliError> {
    let cfg = SelfTestConfig { seed: settings.seed, ..Default::default() };
    let reports = if corrupt { selftest::run_with(&cfg, selftest::corrupted_overlap) } else { selftest::run(&cfg) };
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &reports {
        let _ = writeln!(out, "{:<width$}  {}  {}", r.name, if r.passed { "pass" } else { "FAIL" }, r.detail);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}

pub fn run_render(settings: &Settings, out: &mut String) -> Result<(), CliError> {
    let mut instances = load_instances(settings)?;
    if instances.len() != 1 {
        return Err(CliError::Usage("render takes exactly one instance".into()));
    }
    let (_, base) = instances.pop().expect("one instance");
    let outline = OutlineSpec::from_ratio(total_module_area(&base), settings.ratio[0], settings.gamma)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let instance = prepare(&base, &outline, settings.terminals);
    let entries = match &settings.placement {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|source| IoError::Read { path: p.clone(), source })?;
            parse_pl(&text).map_err(|e| CliError::Input(format!("{e} ({})", p.display())))?
        }
        None => load(&settings.benchmark_files()?.remove(0).1)?.1,
    };
    let plan = plan_from_pl(&instance, &entries);
    let svg = render_svg(&instance, &plan, settings.frame.then_some(&outline));
    match &settings.svg {
        Some(p) => write_file(p, &svg),
        None => {
            out.push_str(&svg);
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Runs the command line with progress and diagnostics going to `log`;
/// returns stdout text and the exit code.
pub fn run<I, T>(args: I, log: &mut dyn std::io::Write) -> (String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut out = String::new();
    let result = (|| -> Result<(), CliError> {
        let (rest, overrides) = extract_overrides(args.into_iter().map(Into::into).collect())?;
        let cli = match Cli::try_parse_from(rest) {
            Ok(c) => c,
            Err(e) if !e.use_stderr() => {
                out.push_str(&e.render().to_string());
                return Ok(());
            }
            Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
        };
        configure_threads()?;
        match cli.command {
            Command::FixedOutline(a) => run_fixed_outline(&resolve(&a, &overrides)?, &mut out, log),
            Command::MinArea(a) => run_min_area(&resolve(&a, &overrides)?, &mut out, log),
            Command::Selftest(a) => run_selftest(&resolve(&a, &overrides)?, a.corrupt_overlap, &mut out),
            Command::Render(a) => run_render(&resolve(&a, &overrides)?, &mut out),
        }
    })();
    match result {
        Ok(()) => (out, 0),
        Err(e) => {
            let _ = writeln!(log, "error: {}", e.message());
            (out, e.exit_code())
        }
    }
}
