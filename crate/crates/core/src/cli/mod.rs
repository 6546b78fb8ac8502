//! The `dib` command line.
//!
//! Settings resolve in order: built-in defaults, the `--quick` profile, a
//! `--config` file of `key = value` lines, then explicit flags. The
//! effective settings are printed before any work starts.

pub mod pipelines;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{top_k_channels, InfoPlanePoint, MeasureConfig};
use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::kv::{join_list, KvMap};
use crate::miest::BenchConfig;
use crate::objective::TrainConfig;
pub use pipelines::{
    prepare_glass, run_circuit, run_glass, run_mi_bench, run_report, CircuitOptions, CircuitReport, GlassData,
    GlassOptions, GlassReport, GlassSource, Mode,
};

#[derive(Debug, Parser)]
#[command(name = "dib", version, about = "Distributed information bottleneck experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep beta on a Boolean circuit and compare with the exact subset front.
    Circuit(RunArgs),
    /// Sweep beta on glass neighborhoods (a dataset file, or synthetic data).
    Glass(RunArgs),
    /// Benchmark the MI bounds against a Monte Carlo oracle.
    #[command(name = "mi-bench")]
    MiBench(RunArgs),
    /// Rebuild plane.csv and alloc.csv of a measured run and print a summary.
    Report(RunArgs),
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Circuit description file (circuit only; default: the built-in 10-input circuit).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Neighborhood dataset file, or `synth` (glass only; default: synth).
    #[arg(long)]
    pub data: Option<String>,
    /// File of `key = value` settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (mi-bench: directory or .csv file).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Existing run directory, for --measure-only and report.
    #[arg(value_name = "RUN_DIR")]
    pub run_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optimizer steps (circuit) or epochs (glass).
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long = "beta-start")]
    pub beta_start: Option<f64>,
    #[arg(long = "beta-end")]
    pub beta_end: Option<f64>,
    /// Batch size of the MI bounds (mi-bench: a single K instead of the grid).
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Number of batches of the MI bounds.
    #[arg(long = "B")]
    pub b: Option<usize>,
    /// Run single-threaded; outputs are identical either way.
    #[arg(long)]
    pub serial: bool,
    /// Replace a non-empty output directory.
    #[arg(long)]
    pub force: bool,
    /// Re-measure the checkpoints of an existing run without training.
    #[arg(long = "measure-only")]
    pub measure_only: bool,
    /// Reduced profile for smoke runs.
    #[arg(long)]
    pub quick: bool,
}

/// Keys a config file may hold besides the training fields.
pub const RUN_KEYS: [&str; 11] = [
    "k",
    "b",
    "eval_samples",
    "epochs",
    "synth_n",
    "separation",
    "max_pool",
    "similarity",
    "probes",
    "disting_bits",
    "disting_channels",
];

fn load_config(path: Option<&Path>) -> Result<KvMap> {
    let Some(p) = path else {
        return Ok(KvMap::new("defaults"));
    };
    if !p.is_file() {
        return Err(Error::Config(format!("config file {} does not exist", p.display())));
    }
    let kv = KvMap::load(p)?;
    let known: Vec<&str> = TrainConfig::KEYS.iter().chain(RUN_KEYS.iter()).copied().collect();
    kv.check_known(&known)?;
    Ok(kv)
}

fn apply_measure(m: &mut MeasureConfig, kv: &KvMap, a: &RunArgs) -> Result<()> {
    if let Some(v) = kv.get("k")? {
        m.k = v;
    }
    if let Some(v) = kv.get("b")? {
        m.b = v;
    }
    if let Some(v) = kv.get("eval_samples")? {
        m.eval_samples = v;
    }
    if let Some(v) = a.k {
        m.k = v;
    }
    if let Some(v) = a.b {
        m.b = v;
    }
    if let Some(s) = a.seed {
        m.seed = s;
    }
    m.parallel = !a.serial;
    if m.k < 2 || m.b == 0 {
        return Err(Error::Config(format!("need K >= 2 and B >= 1, got K = {} and B = {}", m.k, m.b)));
    }
    Ok(())
}

fn apply_schedule_flags(cfg: &mut TrainConfig, a: &RunArgs) {
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(v) = a.beta_start {
        cfg.schedule.beta_start = v;
    }
    if let Some(v) = a.beta_end {
        cfg.schedule.beta_end = v;
    }
}

fn mode(a: &RunArgs) -> Mode {
    if a.measure_only {
        Mode::MeasureOnly
    } else {
        Mode::Train { force: a.force }
    }
}

fn out_dir(a: &RunArgs) -> Result<PathBuf> {
    a.out
        .clone()
        .or_else(|| a.run_dir.clone())
        .ok_or_else(|| Error::Config("an output directory is required (--out DIR)".into()))
}

fn print_settings(title: &str, kv: &KvMap) {
    println!("# {title}");
    print!("{}", kv.to_text());
    println!();
}

fn measure_kv(kv: &mut KvMap, m: &MeasureConfig) {
    kv.set("k", m.k);
    kv.set("b", m.b);
    kv.set("eval_samples", m.eval_samples);
}

pub fn circuit_options(a: &RunArgs) -> Result<CircuitOptions> {
    if a.data.is_some() {
        return Err(Error::Config("--data applies to the glass command".into()));
    }
    let spec = match &a.spec {
        Some(p) if !p.is_file() => {
            return Err(Error::Config(format!("circuit file {} does not exist", p.display())));
        }
        Some(p) => CircuitSpec::load(p)?,
        None => CircuitSpec::default_circuit(),
    };
    let kv = load_config(a.config.as_deref())?;
    let mut train = TrainConfig::circuit(spec.n_inputs);
    let mut measure = MeasureConfig::default();
    if a.quick {
        train.set_steps(2_000);
        train.checkpoints = 20;
    }
    train.apply_kv(&kv)?;
    if let Some(s) = a.steps {
        train.set_steps(s);
    }
    apply_schedule_flags(&mut train, a);
    apply_measure(&mut measure, &kv, a)?;
    train.validate()?;
    Ok(CircuitOptions {
        spec,
        out: out_dir(a)?,
        train,
        measure,
        mode: mode(a),
    })
}

pub fn glass_options(a: &RunArgs) -> Result<GlassOptions> {
    if a.spec.is_some() {
        return Err(Error::Config("--spec applies to the circuit command".into()));
    }
    let kv = load_config(a.config.as_deref())?;
    let mut n = kv.get("synth_n")?.unwrap_or(if a.quick { 600 } else { 4000 });
    let separation = kv.get("separation")?.unwrap_or(1.0);
    if a.quick {
        n = n.min(600);
    }
    let source = match a.data.as_deref() {
        None | Some("synth") => GlassSource::Synthetic { n, separation },
        Some(p) => {
            let p = PathBuf::from(p);
            if !p.is_file() {
                return Err(Error::Config(format!("dataset {} does not exist", p.display())));
            }
            GlassSource::File(p)
        }
    };
    let mut o = GlassOptions::new(source, out_dir(a)?);
    if a.quick {
        o.epochs = 40;
        o.train.encoder.hidden = vec![16];
        o.train.encoder.latent_dim = 4;
        o.train.decoder_hidden = vec![64, 64];
        o.train.checkpoints = 20;
        o.measure.k = 256;
        o.measure.b = 4;
    }
    o.train.apply_kv(&kv)?;
    if let Some(v) = kv.get("epochs")? {
        o.epochs = v;
    }
    if let Some(v) = kv.get("max_pool")? {
        o.max_pool = v;
    }
    if let Some(s) = kv.get_str("similarity") {
        o.similarity = s.parse()?;
    }
    if let Some(v) = kv.get("probes")? {
        o.probes = v;
    }
    if let Some(v) = kv.get("disting_bits")? {
        o.disting_bits = v;
    }
    if let Some(v) = kv.get("disting_channels")? {
        o.disting_channels = v;
    }
    if let Some(s) = a.steps {
        o.epochs = s;
    }
    apply_schedule_flags(&mut o.train, a);
    apply_measure(&mut o.measure, &kv, a)?;
    o.baseline.parallel = !a.serial;
    o.mode = mode(a);
    Ok(o)
}

pub fn bench_config(a: &RunArgs) -> Result<BenchConfig> {
    let mut cfg = if a.quick { BenchConfig::quick() } else { BenchConfig::default() };
    if let Some(k) = a.k {
        cfg.k_grid = vec![k];
    }
    if let Some(b) = a.b {
        cfg.b = b;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.parallel = !a.serial;
    if cfg.k_grid.iter().any(|&k| k < 2) || cfg.b == 0 {
        return Err(Error::Config("need K >= 2 and B >= 1".into()));
    }
    Ok(cfg)
}

fn print_plane(plane: &[InfoPlanePoint]) {
    println!("{:>12} {:>10} {:>10} {:>10} {:>9}  channels >= 0.1 bit", "beta", "total", "gap", "pred", "acc");
    for p in plane.iter().rev() {
        println!(
            "{:>12.4e} {:>10.4} {:>10.4} {:>10.4} {:>9.4}  {:?}",
            p.beta,
            p.total_bits,
            p.bound_gap_bits,
            p.predictive_bits,
            p.accuracy,
            top_k_channels(p, 5)
        );
    }
}

fn cmd_circuit(a: &RunArgs) -> Result<()> {
    let o = circuit_options(a)?;
    let mut kv = KvMap::new("settings");
    o.train.write_kv(&mut kv);
    measure_kv(&mut kv, &o.measure);
    print_settings("circuit settings", &kv);
    let r = run_circuit(&o)?;
    println!("H(Y) = {:.4} bits", r.h_y_bits);
    print_plane(&r.plane);
    println!("pareto front (size, bits): {:?}", r.front.iter().map(|f| (f.size_bits, f.mi_bits)).collect::<Vec<_>>());
    println!("wrote {}", r.run.path().display());
    Ok(())
}

fn cmd_glass(a: &RunArgs) -> Result<()> {
    let o = glass_options(a)?;
    let mut kv = KvMap::new("settings");
    o.train.write_kv(&mut kv);
    measure_kv(&mut kv, &o.measure);
    kv.set("epochs", o.epochs);
    kv.set("max_pool", o.max_pool);
    kv.set("similarity", o.similarity);
    kv.set("probes", o.probes);
    kv.set("disting_bits", o.disting_bits);
    kv.set("disting_channels", o.disting_channels);
    match &o.source {
        GlassSource::File(p) => kv.set("data", p.display()),
        GlassSource::Synthetic { n, separation } => {
            kv.set("data", "synth");
            kv.set("synth_n", n);
            kv.set("separation", separation);
        }
    }
    print_settings("glass settings", &kv);
    let r = run_glass(&o)?;
    print_plane(&r.plane);
    println!(
        "linear baseline: validation accuracy {:.4} (penalty {:e})",
        r.baseline.best_accuracy, r.baseline.best_penalty
    );
    println!("wrote {}", r.run.path().display());
    Ok(())
}

fn cmd_mi_bench(a: &RunArgs) -> Result<()> {
    let cfg = bench_config(a)?;
    let mut kv = KvMap::new("settings");
    kv.set("h_bits", join_list(&cfg.h_bits));
    kv.set("d_grid", join_list(&cfg.d_grid));
    kv.set("k_grid", join_list(&cfg.k_grid));
    kv.set("b", cfg.b);
    kv.set("dataset_size", cfg.dataset_size);
    kv.set("mc_samples", cfg.mc_samples);
    kv.set("seed", cfg.seed);
    print_settings("mi-bench settings", &kv);
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("bench.csv"));
    let (rows, path) = run_mi_bench(&cfg, &out, a.force)?;
    let bad = rows.iter().filter(|r| !r.sandwich_holds()).count();
    println!("{} rows, {} outside lower <= oracle <= upper within 3 sigma", rows.len(), bad);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_report(a: &RunArgs) -> Result<()> {
    let dir = a
        .run_dir
        .clone()
        .or_else(|| a.out.clone())
        .ok_or_else(|| Error::Config("report needs a run directory".into()))?;
    let (plane, _) = run_report(&dir)?;
    print_plane(&plane);
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Circuit(a) => cmd_circuit(a),
        Command::Glass(a) => cmd_glass(a),
        Command::MiBench(a) => cmd_mi_bench(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Exit code for an error: 2 for configuration and input problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        1
    }
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
