use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use sdgcl_core::checkpoint::Checkpoint;
use sdgcl_core::eval::{evaluate, MetricsReport};
use sdgcl_core::graph::{graph_from_edges, load_edge_list, split_edges, DataSplit, EdgeFormat, SignedDiGraph};
use sdgcl_core::spectral::{
    hermitian_adjacency, laplacian_normalized, laplacian_unnormalized, renormalized_propagation, PhaseSpec,
};
use sdgcl_core::training::{fit, EpochLog, TrainingData};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const CHECKPOINT: &str = "checkpoint.txt";
pub const METRICS: &str = "metrics.json";
pub const SUMMARY: &str = "summary.json";

/// Where edges come from: a raw edge list that is split per run, or a
/// directory holding a fixed split.
#[derive(Debug, Clone)]
pub enum DatasetSource {
    Raw(SignedDiGraph),
    Prepared { split: DataSplit, num_nodes: usize },
}

impl DatasetSource {
    pub fn open(path: &Path, format: EdgeFormat) -> Result<DatasetSource> {
        if path.is_dir() {
            let (split, num_nodes) = DataSplit::read_dir(path)?;
            return Ok(DatasetSource::Prepared { split, num_nodes });
        }
        let loaded = load_edge_list(path, format)?;
        Ok(DatasetSource::Raw(loaded.graph))
    }

    pub fn from_config(config: &RunConfig) -> Result<DatasetSource> {
        let path = config.dataset()?;
        DatasetSource::open(path, config.format_for(path))
    }

    /// Split and node count for one run.
    pub fn split(&self, split_seed: u64) -> Result<(DataSplit, usize)> {
        match self {
            DatasetSource::Raw(graph) => Ok((split_edges(graph, split_seed)?, graph.num_nodes())),
            DatasetSource::Prepared { split, num_nodes } => Ok((split.clone(), *num_nodes)),
        }
    }
}

fn split_seed(config: &RunConfig, run_seed: u64) -> u64 {
    config.split_seed.unwrap_or(run_seed)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// prepare

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepareReport {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub positive: usize,
    pub negative: usize,
    pub duplicates_skipped: usize,
    pub self_loops_skipped: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub seed: u64,
}

pub fn cmd_prepare(dataset: &Path, format: EdgeFormat, seed: u64, out: &Path) -> Result<PrepareReport> {
    let loaded = load_edge_list(dataset, format)?;
    let split = split_edges(&loaded.graph, seed)?;
    split.write_dir(out, loaded.graph.num_nodes())?;
    let counts = split.counts();
    Ok(PrepareReport {
        num_nodes: loaded.graph.num_nodes(),
        num_edges: loaded.graph.num_edges(),
        positive: loaded.graph.num_positive(),
        negative: loaded.graph.num_negative(),
        duplicates_skipped: loaded.duplicates_skipped,
        self_loops_skipped: loaded.self_loops_skipped,
        train: counts.train,
        valid: counts.valid,
        test: counts.test,
        seed,
    })
}

// ---------------------------------------------------------------------------
// train

/// Contents of a run's `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub split_seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_auc: Option<f64>,
    pub inference_q: f64,
    pub valid: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub auc: Stat,
    pub macro_f1: Stat,
    pub micro_f1: Stat,
    pub binary_f1: Stat,
}

impl MetricStats {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a MetricsReport>) -> MetricStats {
        let reports: Vec<&MetricsReport> = reports.into_iter().collect();
        let stat = |f: fn(&MetricsReport) -> f64| Stat::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        MetricStats {
            auc: stat(|r| r.auc),
            macro_f1: stat(|r| r.macro_f1),
            micro_f1: stat(|r| r.micro_f1),
            binary_f1: stat(|r| r.binary_f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub seeds: Vec<u64>,
    pub valid: MetricStats,
    pub test: MetricStats,
    pub runs: Vec<RunMetrics>,
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Trains one seed into `dir`: log, best checkpoint, metrics.
pub fn train_one(config: &RunConfig, source: &DatasetSource, seed: u64, dir: &Path) -> Result<RunMetrics> {
    create_dir(dir)?;
    let split_seed = split_seed(config, seed);
    let (split, num_nodes) = source.split(split_seed)?;
    let graph = graph_from_edges(num_nodes, &split.train)?;

    let log_path = dir.join(TRAIN_LOG);
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?);
    let write_line = |log: &mut BufWriter<File>, line: &EpochLog| -> std::io::Result<()> {
        serde_json::to_writer(&mut *log, line)?;
        log.write_all(b"\n")
    };
    let started = Instant::now();
    let fitted = fit(
        TrainingData {
            graph: &graph,
            train: &split.train,
            valid: &split.valid,
        },
        &config.dims(),
        &config.perturbation(seed),
        &config.train_config(seed),
        |line| {
            write_line(&mut log, line).map_err(|source| sdgcl_core::Error::Io {
                path: log_path.clone(),
                source,
            })
        },
    );
    log.flush().map_err(|e| CliError::io(&log_path, e))?;
    let fitted = fitted?;

    Checkpoint {
        params: fitted.params.clone(),
        inference_q: fitted.inference_q,
    }
    .save(dir.join(CHECKPOINT))?;

    let report = |edges| evaluate(&fitted.params, &graph, fitted.inference_q, edges, config.threshold, seed);
    let metrics = RunMetrics {
        seed,
        split_seed,
        best_epoch: fitted.best_epoch,
        epochs_run: fitted.epochs_run,
        best_val_auc: fitted.best_val_auc,
        inference_q: fitted.inference_q,
        valid: report(&split.valid)?,
        test: report(&split.test)?,
    };
    write_file(&dir.join(METRICS), &to_json(&metrics))?;
    eprintln!(
        "{}: test auc {:.4} macro-f1 {:.4} ({} epochs, best {}, {:.1}s)",
        dir.display(),
        metrics.test.auc,
        metrics.test.macro_f1,
        metrics.epochs_run,
        metrics.best_epoch,
        started.elapsed().as_secs_f64()
    );
    Ok(metrics)
}

/// Trains every configured seed under `out` and writes the config snapshot
/// and `summary.json`.
pub fn train_seeds(config: &RunConfig, source: &DatasetSource, out: &Path) -> Result<TrainSummary> {
    create_dir(out)?;
    write_file(&out.join(CONFIG_SNAPSHOT), &config.to_toml())?;
    let seeds = config.run_seeds();
    let runs = seeds
        .iter()
        .map(|&s| train_one(config, source, s, &seed_dir(out, s)))
        .collect::<Result<Vec<_>>>()?;
    let summary = TrainSummary {
        seeds,
        valid: MetricStats::of(runs.iter().map(|r| &r.valid)),
        test: MetricStats::of(runs.iter().map(|r| &r.test)),
        runs,
    };
    write_file(&out.join(SUMMARY), &to_json(&summary))?;
    Ok(summary)
}

pub fn cmd_train(config: &RunConfig, out: &Path) -> Result<TrainSummary> {
    config.validate()?;
    let source = DatasetSource::from_config(config)?;
    train_seeds(config, &source, out)
}

// ---------------------------------------------------------------------------
// eval

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl std::str::FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(SplitName::Train),
            "valid" | "validation" => Ok(SplitName::Valid),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split '{other}' (train, valid, test)")),
        }
    }
}

/// Scores one split with a saved checkpoint. The training graph is rebuilt
/// from the same split the run used (`--seed` selects it for raw files).
pub fn cmd_eval(config: &RunConfig, checkpoint: &Path, which: SplitName, out: Option<&Path>) -> Result<MetricsReport> {
    let ck = Checkpoint::load(checkpoint)?;
    let source = DatasetSource::from_config(config)?;
    let (split, num_nodes) = source.split(split_seed(config, config.seed))?;
    if ck.params.num_nodes() != num_nodes {
        return Err(sdgcl_core::Error::Shape(format!(
            "checkpoint has {} nodes, dataset has {num_nodes}",
            ck.params.num_nodes()
        ))
        .into());
    }
    let graph = graph_from_edges(num_nodes, &split.train)?;
    let edges = match which {
        SplitName::Train => &split.train,
        SplitName::Valid => &split.valid,
        SplitName::Test => &split.test,
    };
    let report = evaluate(&ck.params, &graph, ck.inference_q, edges, config.threshold, config.seed)?;
    if let Some(path) = out {
        write_file(path, &to_json(&report))?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    P,
    R,
    /// `p` and `r` together.
    Pr,
    QNoiseStd,
    Alpha,
    Tau,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "p" => SweepParam::P,
            "r" => SweepParam::R,
            "pr" => SweepParam::Pr,
            "q_noise_std" | "q-noise-std" => SweepParam::QNoiseStd,
            "alpha" => SweepParam::Alpha,
            "tau" => SweepParam::Tau,
            other => return Err(format!("unknown sweep parameter '{other}' (p, r, pr, q_noise_std, alpha, tau)")),
        })
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::P => "p",
            SweepParam::R => "r",
            SweepParam::Pr => "pr",
            SweepParam::QNoiseStd => "q_noise_std",
            SweepParam::Alpha => "alpha",
            SweepParam::Tau => "tau",
        }
    }

    /// Base config for the sweep: structure sweeps switch off the phase
    /// perturbation, the phase-noise sweep switches off edge perturbation.
    pub fn protocol(self, config: &RunConfig) -> RunConfig {
        match self {
            SweepParam::P | SweepParam::R | SweepParam::Pr => config.clone().without_laplacian_aug(),
            SweepParam::QNoiseStd => RunConfig {
                q_grid: vec![config.q_base],
                ..config.clone().without_structure_aug()
            },
            SweepParam::Alpha | SweepParam::Tau => config.clone(),
        }
    }

    pub fn apply(self, config: &mut RunConfig, value: f64) {
        match self {
            SweepParam::P => config.p = value,
            SweepParam::R => config.r = value,
            SweepParam::Pr => {
                config.p = value;
                config.r = value;
            }
            SweepParam::QNoiseStd => config.q_noise_std = value,
            SweepParam::Alpha => config.alpha = value,
            SweepParam::Tau => config.tau = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub seeds: usize,
    pub test: MetricStats,
}

pub fn cmd_sweep(config: &RunConfig, param: SweepParam, values: &[f64], out: &Path) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::Usage("--values is empty".into()));
    }
    let base = param.protocol(config);
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut point = base.clone();
        param.apply(&mut point, value);
        point.validate()?;
        points.push(point);
    }
    let source = DatasetSource::from_config(config)?;
    create_dir(out)?;
    write_file(&out.join(CONFIG_SNAPSHOT), &base.to_toml())?;

    let mut rows = Vec::with_capacity(values.len());
    for (point, &value) in points.iter().zip(values) {
        let dir = out.join(format!("{}-{value}", param.name()));
        let summary = train_seeds(point, &source, &dir)?;
        rows.push(SweepRow {
            parameter: param.name().to_string(),
            value,
            seeds: summary.seeds.len(),
            test: summary.test,
        });
    }
    write_file(&out.join("sweep.json"), &to_json(&rows))?;
    let mut tsv = String::from("parameter\tvalue\tseeds");
    tsv.push_str(&stats_header());
    for row in &rows {
        tsv.push_str(&format!("{}\t{}\t{}", row.parameter, row.value, row.seeds));
        tsv.push_str(&stats_cells(&row.test));
    }
    write_file(&out.join("sweep.tsv"), &tsv)?;
    Ok(rows)
}

fn stats_header() -> String {
    "\tauc_mean\tauc_std\tmacro_f1_mean\tmacro_f1_std\tmicro_f1_mean\tmicro_f1_std\tbinary_f1_mean\tbinary_f1_std\n".into()
}

fn stats_cells(s: &MetricStats) -> String {
    let mut line = String::new();
    for stat in [s.auc, s.macro_f1, s.micro_f1, s.binary_f1] {
        line.push_str(&format!("\t{:.6}\t{:.6}", stat.mean, stat.std));
    }
    line.push('\n');
    line
}

// ---------------------------------------------------------------------------
// ablate

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    NoStructureAug,
    NoLaplacianAug,
    NoAugmentation,
    NoContrastive,
    NoProjection,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Full,
        Variant::NoStructureAug,
        Variant::NoLaplacianAug,
        Variant::NoAugmentation,
        Variant::NoContrastive,
        Variant::NoProjection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoStructureAug => "no-structure-aug",
            Variant::NoLaplacianAug => "no-laplacian-aug",
            Variant::NoAugmentation => "no-augmentation",
            Variant::NoContrastive => "no-contrastive",
            Variant::NoProjection => "no-projection",
        }
    }

    pub fn configure(self, config: &RunConfig) -> RunConfig {
        let c = config.clone();
        match self {
            Variant::Full => c,
            Variant::NoStructureAug => c.without_structure_aug(),
            Variant::NoLaplacianAug => c.without_laplacian_aug(),
            Variant::NoAugmentation => c.without_structure_aug().without_laplacian_aug(),
            Variant::NoContrastive => RunConfig { alpha: 0.0, ..c },
            Variant::NoProjection => RunConfig {
                use_projection: false,
                ..c
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub dataset: String,
    pub variant: Variant,
    pub seeds: usize,
    pub test: MetricStats,
}

fn dataset_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs all six variants on every dataset with the same seeds.
pub fn cmd_ablate(config: &RunConfig, datasets: &[PathBuf], out: &Path) -> Result<Vec<AblationRow>> {
    if datasets.is_empty() {
        return Err(CliError::Usage("ablate needs at least one --dataset".into()));
    }
    for v in Variant::ALL {
        v.configure(config).validate()?;
    }
    create_dir(out)?;
    write_file(&out.join(CONFIG_SNAPSHOT), &config.to_toml())?;
    let mut rows = Vec::new();
    for path in datasets {
        let with_data = RunConfig {
            dataset: Some(path.clone()),
            ..config.clone()
        };
        let source = DatasetSource::from_config(&with_data)?;
        let label = dataset_label(path);
        for v in Variant::ALL {
            let summary = train_seeds(&v.configure(&with_data), &source, &out.join(&label).join(v.name()))?;
            rows.push(AblationRow {
                dataset: label.clone(),
                variant: v,
                seeds: summary.seeds.len(),
                test: summary.test,
            });
        }
    }
    write_file(&out.join("ablation.json"), &to_json(&rows))?;
    let mut tsv = String::from("dataset\tvariant\tseeds");
    tsv.push_str(&stats_header());
    for row in &rows {
        tsv.push_str(&format!("{}\t{}\t{}", row.dataset, row.variant.name(), row.seeds));
        tsv.push_str(&stats_cells(&row.test));
    }
    write_file(&out.join("ablation.tsv"), &tsv)?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// dump-operator

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Hermitian,
    LaplacianUnnormalized,
    LaplacianNormalized,
    Propagation,
}

impl std::str::FromStr for OperatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "hermitian" => OperatorKind::Hermitian,
            "laplacian" | "laplacian-unnormalized" => OperatorKind::LaplacianUnnormalized,
            "laplacian-normalized" => OperatorKind::LaplacianNormalized,
            "propagation" => OperatorKind::Propagation,
            other => {
                return Err(format!(
                    "unknown operator '{other}' (hermitian, laplacian-unnormalized, laplacian-normalized, propagation)"
                ))
            }
        })
    }
}

/// Writes the chosen operator of the whole graph at phase `q_pi · π`.
pub fn cmd_dump_operator(dataset: &Path, format: EdgeFormat, kind: OperatorKind, q_pi: f64, out: &Path) -> Result<usize> {
    let spec = PhaseSpec::new(q_pi * std::f64::consts::PI);
    spec.validate()?;
    let graph = load_edge_list(dataset, format)?.graph;
    let op = match kind {
        OperatorKind::Hermitian => hermitian_adjacency(&graph, &spec),
        OperatorKind::LaplacianUnnormalized => laplacian_unnormalized(&graph, &spec),
        OperatorKind::LaplacianNormalized => laplacian_normalized(&graph, &spec),
        OperatorKind::Propagation => renormalized_propagation(&graph, &spec),
    };
    op.write_text(out)?;
    Ok(op.nnz())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_of_known_values() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of(&[0.7]).std, 0.0);
    }

    #[test]
    fn variants_follow_their_definitions() {
        let base = RunConfig::default();
        let none = Variant::NoAugmentation.configure(&base);
        assert_eq!((none.p, none.r), (0.0, 0.0));
        assert_eq!(none.q_grid, vec![base.q_base]);
        assert_eq!(none.q_noise_std, 0.0);
        assert_eq!(Variant::NoContrastive.configure(&base).alpha, 0.0);
        assert!(!Variant::NoProjection.configure(&base).use_projection);
        assert_eq!(Variant::Full.configure(&base), base);
        let structure = Variant::NoStructureAug.configure(&base);
        assert_eq!(structure.q_grid, base.q_grid);
    }

    #[test]
    fn sweep_protocols() {
        let base = RunConfig::default();
        let mut c = SweepParam::P.protocol(&base);
        SweepParam::P.apply(&mut c, 0.2);
        assert_eq!((c.p, c.r), (0.2, base.r));
        assert_eq!(c.q_grid, vec![base.q_base]);

        let mut c = SweepParam::QNoiseStd.protocol(&base);
        SweepParam::QNoiseStd.apply(&mut c, 0.25);
        assert_eq!((c.p, c.r), (0.0, 0.0));
        assert_eq!(c.perturbation(0).q_noise_std, 0.25 * std::f64::consts::PI);
        assert_eq!(c.perturbation(0).inference_q(), 0.1 * std::f64::consts::PI);
        assert!("beta".parse::<SweepParam>().is_err());
    }
}
