//! End-to-end experiments behind the subcommands, callable from code.

use std::fs::File;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use crate::analysis::{
    assemble_plane, channel_allocation, compression_branch, distinguishability, measure_run, nearest_point, quantile_probes,
    top_k_channels, Allocation, DistinguishabilityMatrix, InfoPlanePoint, MeasureConfig, MeasureContext,
    Similarity, DEFAULT_PROBES,
};
use crate::circuit::{pareto_front, subset_scatter, write_subsets_csv, CircuitSpec, FrontPoint, SubsetPoint, TruthTable};
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::glassfeat::{
    columns, feature_name, featurize_all, linear_baseline, load_dataset, synth_dataset, BaselineConfig,
    BaselineResult, GlassDataset, NormStats, ParticleType, Split,
};
use crate::miest::{bench_orthogonal, write_bench_csv, BenchConfig, BenchRow};
use crate::objective::{train_into, Dataset, DibModel, RunDir, TrainConfig};

pub const CIRCUIT_FILE: &str = "circuit.circ";
pub const SPLIT_FILE: &str = "split.txt";
pub const NORM_FILE: &str = "norm.json";
pub const BASELINE_FILE: &str = "baseline.json";
pub const BENCH_FILE: &str = "bench.csv";
pub const SOURCE_FILE: &str = "source.toml";

/// Where a run's parameters come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Create (or with `force`, recreate) the run directory and train.
    Train { force: bool },
    /// Reuse the checkpoints of an existing run.
    MeasureOnly,
}

fn open_run(out: &Path, mode: Mode) -> Result<RunDir> {
    match mode {
        Mode::Train { force } => RunDir::create(out, force),
        Mode::MeasureOnly => RunDir::open(out),
    }
}

/// Training config stored in a run, over `base`.
fn stored_config(run: &RunDir, mut base: TrainConfig) -> Result<TrainConfig> {
    let kv = run.read_config()?;
    kv.check_known(&TrainConfig::KEYS)?;
    base.apply_kv(&kv)?;
    base.validate()?;
    Ok(base)
}

#[derive(Clone, Debug)]
pub struct CircuitOptions {
    pub spec: CircuitSpec,
    pub out: PathBuf,
    pub train: TrainConfig,
    pub measure: MeasureConfig,
    pub mode: Mode,
}

#[derive(Clone, Debug)]
pub struct CircuitReport {
    pub run: RunDir,
    pub h_y_bits: f64,
    pub plane: Vec<InfoPlanePoint>,
    pub allocation: Allocation,
    pub subsets: Vec<SubsetPoint>,
    pub front: Vec<FrontPoint>,
}

/// Trains on the full truth table, measures every checkpoint, and writes
/// `plane.csv`, `alloc.csv` and `subsets.csv`.
pub fn run_circuit(opts: &CircuitOptions) -> Result<CircuitReport> {
    let run = open_run(&opts.out, opts.mode)?;
    let (spec, cfg) = match opts.mode {
        Mode::Train { .. } => {
            opts.spec.save(&run.path().join(CIRCUIT_FILE))?;
            (opts.spec.clone(), opts.train.clone())
        }
        Mode::MeasureOnly => {
            let spec = CircuitSpec::load(&run.path().join(CIRCUIT_FILE))?;
            let cfg = stored_config(&run, TrainConfig::circuit(spec.n_inputs))?;
            (spec, cfg)
        }
    };
    let table = TruthTable::build(&spec)?;
    let data = Dataset::from_truth_table(&table);
    if cfg.channels != data.channels() {
        return Err(Error::Config(format!(
            "config has {} channels but the circuit has {} inputs",
            cfg.channels,
            data.channels()
        )));
    }
    let mut run = run;
    if let Mode::Train { .. } = opts.mode {
        info!("training {} steps on {} rows", cfg.train_steps, data.rows());
        train_into(&cfg, &data, &mut run)?;
    }
    let model = DibModel::new(&cfg);
    let h_y_bits = data.label_entropy_bits();
    let ctx = MeasureContext {
        model: &model,
        pool: &data,
        eval: &data,
        h_y_bits,
        cfg: &opts.measure,
    };
    measure_run(&run, &cfg, &ctx)?;
    let plane = assemble_plane(&run)?;
    let labels: Vec<String> = (1..=cfg.channels).map(|i| format!("x{i}")).collect();
    let allocation = channel_allocation(&plane, Some(&labels));
    allocation.write_csv(&run.alloc_path())?;
    let subsets = subset_scatter(&table)?;
    write_subsets_csv(&subsets, File::create(run.subsets_path())?)?;
    let front = pareto_front(&subsets);
    Ok(CircuitReport {
        run,
        h_y_bits,
        plane,
        allocation,
        subsets,
        front,
    })
}

/// Source of glass neighborhoods.
#[derive(Clone, Debug, PartialEq)]
pub enum GlassSource {
    File(PathBuf),
    Synthetic { n: usize, separation: f64 },
}

#[derive(Clone, Debug)]
pub struct GlassOptions {
    pub source: GlassSource,
    pub out: PathBuf,
    /// Channel count and step count are filled in from the data.
    pub train: TrainConfig,
    pub epochs: u64,
    pub measure: MeasureConfig,
    /// Most training rows used as the MI pool.
    pub max_pool: usize,
    pub similarity: Similarity,
    pub probes: usize,
    /// Distinguishability is written for the checkpoint nearest this many
    /// total bits.
    pub disting_bits: f64,
    pub disting_channels: usize,
    pub baseline: BaselineConfig,
    pub mode: Mode,
}

impl GlassOptions {
    pub fn new(source: GlassSource, out: PathBuf) -> Self {
        Self {
            source,
            out,
            train: TrainConfig::glass(1, 1),
            epochs: 250,
            measure: MeasureConfig::default(),
            max_pool: 2048,
            similarity: Similarity::Bhattacharyya,
            probes: DEFAULT_PROBES,
            disting_bits: 1.0,
            disting_channels: 3,
            baseline: BaselineConfig::default(),
            mode: Mode::Train { force: false },
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlassReport {
    pub run: RunDir,
    pub plane: Vec<InfoPlanePoint>,
    pub allocation: Allocation,
    /// Feature index (0..100) of every channel.
    pub channel_features: Vec<usize>,
    pub baseline: BaselineResult,
    pub disting: Vec<(usize, DistinguishabilityMatrix)>,
    pub h_y_bits: f64,
}

fn read_source(path: &Path) -> Result<(GlassSource, u64)> {
    let kv = KvMap::load(path)?;
    let missing = |k: &str| Error::Config(format!("{} lacks `{k}`", path.display()));
    let seed = kv.get("seed")?.ok_or_else(|| missing("seed"))?;
    let source = match kv.get_str("data").ok_or_else(|| missing("data"))? {
        "synth" => GlassSource::Synthetic {
            n: kv.get("synth_n")?.ok_or_else(|| missing("synth_n"))?,
            separation: kv.get("separation")?.ok_or_else(|| missing("separation"))?,
        },
        p => GlassSource::File(PathBuf::from(p)),
    };
    Ok((source, seed))
}

/// Normalized train/validation splits of a glass dataset.
pub struct GlassData {
    pub train: Dataset,
    pub val: Dataset,
    pub norm: NormStats,
}

pub fn prepare_glass(ds: &GlassDataset, split: &Split, norm: Option<NormStats>, parallel: bool) -> Result<GlassData> {
    let train_ds = ds.subset(&split.train);
    let val_ds = ds.subset(&split.val);
    if train_ds.is_empty() || val_ds.is_empty() {
        return Err(Error::contract("glass run needs non-empty training and validation splits"));
    }
    let train_rows = featurize_all(&train_ds.neighborhoods, parallel);
    let val_rows = featurize_all(&val_ds.neighborhoods, parallel);
    let norm = match norm {
        Some(n) => n,
        None => NormStats::fit(&train_rows)?,
    };
    Ok(GlassData {
        train: Dataset::new(columns(&norm.apply_all(&train_rows)), train_ds.labels())?,
        val: Dataset::new(columns(&norm.apply_all(&val_rows)), val_ds.labels())?,
        norm,
    })
}

/// Featurize, normalize, train, measure; writes plane, allocation,
/// distinguishability and baseline files.
pub fn run_glass(opts: &GlassOptions) -> Result<GlassReport> {
    let mut run = open_run(&opts.out, opts.mode)?;
    let split_path = run.path().join(SPLIT_FILE);
    let source_path = run.path().join(SOURCE_FILE);
    let (source, seed) = match opts.mode {
        Mode::Train { .. } => {
            let mut kv = KvMap::new(SOURCE_FILE);
            match &opts.source {
                GlassSource::File(p) => kv.set("data", p.display()),
                GlassSource::Synthetic { n, separation } => {
                    kv.set("data", "synth");
                    kv.set("synth_n", n);
                    kv.set("separation", separation);
                }
            }
            kv.set("seed", opts.train.seed);
            std::fs::write(&source_path, kv.to_text())?;
            (opts.source.clone(), opts.train.seed)
        }
        Mode::MeasureOnly => read_source(&source_path)?,
    };
    let (ds, split) = match &source {
        GlassSource::File(p) => {
            let (ds, _) = load_dataset(p, None, seed)?;
            let ds = ds.with_center(ParticleType::A);
            let split = if split_path.exists() {
                Split::load(&split_path, ds.len())?
            } else {
                Split::stratified(&ds, 0.9, seed)?
            };
            (ds, split)
        }
        GlassSource::Synthetic { n, separation } => {
            let ds = synth_dataset(seed, *n, *separation)?;
            let split = Split::stratified(&ds, 0.9, seed)?;
            (ds, split)
        }
    };
    split.save(&split_path)?;
    let norm_path = run.path().join(NORM_FILE);
    let stored_norm = match opts.mode {
        Mode::MeasureOnly if norm_path.exists() => Some(NormStats::load(&norm_path)?),
        _ => None,
    };
    let data = prepare_glass(&ds, &split, stored_norm, opts.measure.parallel)?;
    data.norm.save(&norm_path)?;
    let channels = data.train.channels();

    let cfg = match opts.mode {
        Mode::Train { .. } => {
            let mut cfg = opts.train.clone();
            cfg.channels = channels;
            cfg.set_epochs(opts.epochs, data.train.rows());
            info!(
                "training {} channels, {} epochs ({} steps) on {} rows",
                channels,
                opts.epochs,
                cfg.train_steps,
                data.train.rows()
            );
            train_into(&cfg, &data.train, &mut run)?;
            cfg
        }
        Mode::MeasureOnly => stored_config(&run, TrainConfig::glass(channels, data.train.rows()))?,
    };
    if cfg.channels != channels {
        return Err(Error::Config(format!(
            "stored config has {} channels but the data gives {channels}",
            cfg.channels
        )));
    }

    let model = DibModel::new(&cfg);
    let pool = if data.train.rows() > opts.max_pool {
        let idx: Vec<usize> = (0..opts.max_pool).collect();
        let b = data.train.gather(&idx);
        Dataset::new(b.x, b.y)?
    } else {
        data.train.clone()
    };
    let h_y_bits = data.train.label_entropy_bits();
    let ctx = MeasureContext {
        model: &model,
        pool: &pool,
        eval: &data.val,
        h_y_bits,
        cfg: &opts.measure,
    };
    measure_run(&run, &cfg, &ctx)?;
    let plane = assemble_plane(&run)?;
    let labels: Vec<String> = data.norm.retained.iter().map(|&j| feature_name(j)).collect();
    let allocation = channel_allocation(&plane, Some(&labels));
    allocation.write_csv(&run.alloc_path())?;

    let mut disting = Vec::new();
    let branch = compression_branch(&plane);
    if let Some(point) = nearest_point(&branch, opts.disting_bits) {
        let store = run.load_checkpoint(point.step)?;
        for ch in top_k_channels(point, opts.disting_channels) {
            let probes = quantile_probes(data.train.column(ch), opts.probes)?;
            let m = distinguishability(&model.encoders[ch], &store, &probes, opts.similarity)?;
            m.write_csv(&run.disting_path(ch))?;
            disting.push((ch, m));
        }
    }

    let rows = |d: &Dataset| -> Vec<Vec<f64>> {
        (0..d.rows()).map(|r| (0..d.channels()).map(|c| d.column(c)[r]).collect()).collect()
    };
    let baseline = linear_baseline(
        &rows(&data.train),
        data.train.labels(),
        &rows(&data.val),
        data.val.labels(),
        &opts.baseline,
    )?;
    std::fs::write(run.path().join(BASELINE_FILE), serde_json::to_string_pretty(&baseline)?)?;

    Ok(GlassReport {
        run,
        plane,
        allocation,
        channel_features: data.norm.retained.clone(),
        baseline,
        disting,
        h_y_bits,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchSummary {
    pub rows: usize,
    pub sandwich_failures: usize,
}

/// Runs the synthetic benchmark and writes the CSV to `out` (a file, or
/// `bench.csv` inside a directory).
pub fn run_mi_bench(cfg: &BenchConfig, out: &Path, force: bool) -> Result<(Vec<BenchRow>, PathBuf)> {
    let path = if out.extension().is_some_and(|e| e == "csv") {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        out.to_path_buf()
    } else {
        std::fs::create_dir_all(out)?;
        out.join(BENCH_FILE)
    };
    if path.exists() && !force {
        return Err(Error::Config(format!("{} exists (use --force to overwrite)", path.display())));
    }
    let rows = bench_orthogonal(cfg)?;
    write_bench_csv(&rows, File::create(&path)?)?;
    let failures = rows.iter().filter(|r| !r.sandwich_holds()).count();
    if failures > 0 {
        warn!("{failures} of {} rows violate the sandwich check", rows.len());
    }
    Ok((rows, path))
}

/// Rebuilds `plane.csv` and `alloc.csv` of a measured run.
pub fn run_report(dir: &Path) -> Result<(Vec<InfoPlanePoint>, Allocation)> {
    let run = RunDir::open(dir)?;
    let plane = assemble_plane(&run)?;
    let labels = existing_labels(&run.alloc_path());
    let allocation = channel_allocation(&plane, labels.as_deref());
    allocation.write_csv(&run.alloc_path())?;
    Ok((plane, allocation))
}

/// Channel labels from the header of an existing `alloc.csv`.
fn existing_labels(path: &Path) -> Option<Vec<String>> {
    let mut r = csv::Reader::from_path(path).ok()?;
    let h = r.headers().ok()?;
    Some(h.iter().skip(1).map(str::to_string).collect())
}
