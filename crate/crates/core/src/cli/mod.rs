//! The `pdsl` command line: simulate, train, infer, evaluate, report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::autodiff::OptimizerKind;
use crate::baselines::BaselineKind;
use crate::cascade::{read_dataset, write_dataset, DatasetBundle, DatasetHeader, Mechanism, SourceCount};
use crate::error::{Error, Result};
use crate::graph::{serialize_edge_list, Graph, NormalizedAdjacency};
use crate::inference::{BlockDistance, Representative};
use crate::metrics::{results_csv, MetricsReport, ResultRow};
use crate::model::{load_checkpoint, save_checkpoint, TrainReport};
use crate::pipeline::{self, ExperimentManifest, GraphSource, OutputPaths};

#[derive(Debug, Parser)]
#[command(name = "pdsl", version, about = "Diffusion source localization on graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the graph and a cascade dataset.
    Simulate(Common),
    /// Fit the model on the training split.
    Train(Common),
    /// Localize sources for every test cascade.
    Infer(Common),
    /// Score inference results and baselines.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Methods to score: `pdsl` or a baseline name.
        #[arg(long = "method", default_value = "pdsl")]
        methods: Vec<String>,
    },
    /// Run the whole pipeline for several seeds and emit one table.
    Report {
        #[command(flatten)]
        common: Common,
        /// Number of consecutive seeds starting at the master seed.
        #[arg(long, default_value_t = 10)]
        runs: u64,
        /// Baselines to score alongside the model.
        #[arg(long = "baseline")]
        baselines: Vec<BaselineKind>,
    },
}

/// Manifest source plus overrides shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML experiment manifest; defaults apply when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for all output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Edge-list file to use instead of the built-in generator.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub directed: bool,
    /// Node count of the generated graph.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub mechanism: Option<Mechanism>,
    #[arg(long)]
    pub source_ratio: Option<f64>,
    /// Snapshot groups per cascade, the last being the result.
    #[arg(long)]
    pub snapshots: Option<usize>,
    #[arg(long)]
    pub cascades: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// `adam` or `sgd` (plain gradient descent).
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    /// Snapshots fed to the model; 0 disables the dynamics input.
    #[arg(long)]
    pub snapshot_inputs: Option<usize>,
    #[arg(long)]
    pub refine_epochs: Option<usize>,
    #[arg(long)]
    pub refine_lr: Option<f64>,
    #[arg(long)]
    pub hamming: bool,
    #[arg(long)]
    pub min_member: bool,
}

impl Common {
    /// Load the manifest and apply every flag.
    pub fn manifest(&self) -> Result<ExperimentManifest> {
        let mut m = match &self.config {
            Some(p) => ExperimentManifest::load(p)?,
            None => ExperimentManifest::default(),
        };
        if let Some(s) = self.seed {
            m.seed = s;
        }
        if let Some(dir) = &self.out {
            m.paths = OutputPaths::under(dir);
        }
        if let Some(path) = &self.graph {
            m.graph = GraphSource::File {
                path: path.clone(),
                directed: self.directed,
            };
        }
        if let Some(n) = self.nodes {
            match &mut m.graph {
                GraphSource::BarabasiAlbert { nodes, .. } => *nodes = n,
                GraphSource::File { .. } => {
                    return Err(Error::Config("--nodes only applies to generated graphs".into()))
                }
            }
        }
        if let Some(x) = self.mechanism {
            m.sim.mechanism = x;
        }
        if let Some(r) = self.source_ratio {
            m.sim.sources = SourceCount::Ratio(r);
        }
        if let Some(t) = self.snapshots {
            m.sim.snapshots = t;
        }
        if let Some(c) = self.cascades {
            m.cascades = c;
        }
        if let Some(e) = self.epochs {
            m.model.epochs = e;
        }
        if let Some(lr) = self.lr {
            m.model.lr = lr;
        }
        if let Some(o) = self.optimizer {
            m.model.optimizer = o;
        }
        if let Some(c) = self.snapshot_inputs {
            m.model.snapshot_inputs = c;
        }
        if let Some(e) = self.refine_epochs {
            m.inference.epochs = e;
        }
        if let Some(lr) = self.refine_lr {
            m.inference.lr = lr;
        }
        if self.hamming {
            m.inference.distance = BlockDistance::Hamming;
        }
        if self.min_member {
            m.inference.representative = Representative::MinMember;
        }
        m.validate()?;
        Ok(m)
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Write the resolved manifest beside `output`.
fn echo_manifest(m: &ExperimentManifest, output: &Path) -> Result<()> {
    let dir = output.parent().unwrap_or(Path::new("."));
    write(&dir.join("manifest.toml"), &m.to_toml()?)
}

fn load_dataset(m: &ExperimentManifest) -> Result<DatasetBundle> {
    let (header, bundle) = read_dataset(&m.paths.dataset)?;
    if header.manifest_hash != m.dataset_hash() {
        return Err(Error::ManifestMismatch(m.paths.dataset.display().to_string()));
    }
    Ok(bundle)
}

pub fn cmd_simulate(m: &ExperimentManifest) -> Result<(Graph, DatasetBundle)> {
    let (g, bundle) = pipeline::simulate(m)?;
    write(&m.paths.graph, &serialize_edge_list(&g))?;
    let label = m.paths.graph.display().to_string();
    let header = DatasetHeader::new(&label, &bundle, &m.dataset_hash());
    ensure_parent(&m.paths.dataset)?;
    write_dataset(&m.paths.dataset, &header, &bundle)?;
    echo_manifest(m, &m.paths.dataset)?;
    Ok((g, bundle))
}

pub fn cmd_train(m: &ExperimentManifest, mut on_epoch: impl FnMut(usize, f64)) -> Result<TrainReport> {
    let bundle = load_dataset(m)?;
    let g = pipeline::build_graph(m)?;
    let adj = Arc::new(NormalizedAdjacency::build(&g));
    let report = pipeline::train(m, &bundle, &adj, &mut on_epoch)?;
    let mut trace = String::from("epoch,total,kl,re,fp,reg\n");
    for (e, (total, t)) in report.epoch_losses.iter().zip(&report.epoch_terms).enumerate() {
        let _ = writeln!(trace, "{e},{total},{},{},{},{}", t[0], t[1], t[2], t[3]);
    }
    write(&m.paths.trace, &trace)?;
    ensure_parent(&m.paths.checkpoint)?;
    save_checkpoint(&report.model, &m.dataset_hash(), &m.paths.checkpoint)?;
    echo_manifest(m, &m.paths.checkpoint)?;
    Ok(report)
}

pub fn cmd_infer(m: &ExperimentManifest) -> Result<Vec<crate::inference::InferenceRecord>> {
    let bundle = load_dataset(m)?;
    let g = pipeline::build_graph(m)?;
    let (model, hash) = load_checkpoint(&m.paths.checkpoint, g.node_count())?;
    if hash != m.dataset_hash() {
        return Err(Error::ManifestMismatch(m.paths.checkpoint.display().to_string()));
    }
    let adj = Arc::new(NormalizedAdjacency::build(&g));
    let records = pipeline::infer_all(&model, &adj, &bundle, &m.inference)?;
    write(&m.paths.results, &pipeline::results_to_string(&hash, &records)?)?;
    echo_manifest(m, &m.paths.results)?;
    Ok(records)
}

/// Per-method metrics for the test split, `pdsl` read from the results file.
pub fn cmd_evaluate(m: &ExperimentManifest, methods: &[String]) -> Result<Vec<(String, MetricsReport)>> {
    let bundle = load_dataset(m)?;
    let g = pipeline::build_graph(m)?;
    let mut out = Vec::new();
    for method in methods {
        let report = if method == "pdsl" {
            let (hash, records) = pipeline::results_from_str(&read(&m.paths.results)?)?;
            if hash != m.dataset_hash() {
                return Err(Error::ManifestMismatch(m.paths.results.display().to_string()));
            }
            pipeline::evaluate_records(&g, &bundle, &records)?
        } else {
            let kind: BaselineKind = method.parse()?;
            pipeline::evaluate_baseline(kind, &g, &bundle, m.seed)?
        };
        out.push((method.clone(), report));
    }
    let mechanism = m.sim.mechanism.to_string();
    let rows: Vec<ResultRow> = out
        .iter()
        .flat_map(|(method, r)| ResultRow::with_cascades(&m.dataset, &mechanism, method, Some(m.seed), r))
        .collect();
    write(&m.paths.metrics, &results_csv(&rows))?;
    echo_manifest(m, &m.paths.metrics)?;
    Ok(out)
}

/// Full pipeline for `runs` seeds; per-seed rows plus a mean row per method.
pub fn cmd_report(m: &ExperimentManifest, runs: u64, baselines: &[BaselineKind]) -> Result<Vec<ResultRow>> {
    let root = m
        .paths
        .metrics
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut methods = vec!["pdsl".to_string()];
    methods.extend(baselines.iter().map(|b| b.name().to_string()));
    let mechanism = m.sim.mechanism.to_string();
    let mut per_method: Vec<Vec<ResultRow>> = vec![Vec::new(); methods.len()];
    for seed in m.seed..m.seed + runs {
        let run = ExperimentManifest {
            seed,
            paths: OutputPaths::under(&root.join(format!("seed-{seed}"))),
            ..m.clone()
        };
        eprintln!("seed {seed}");
        cmd_simulate(&run)?;
        cmd_train(&run, |_, _| {})?;
        cmd_infer(&run)?;
        for (i, (method, r)) in cmd_evaluate(&run, &methods)?.into_iter().enumerate() {
            per_method[i].push(ResultRow::new(&m.dataset, &mechanism, &method, Some(seed), &r));
        }
    }
    let mut rows = Vec::new();
    for group in per_method {
        let mean = ResultRow::aggregate(&group);
        rows.extend(group);
        rows.extend(mean);
    }
    write(&m.paths.metrics, &results_csv(&rows))?;
    echo_manifest(m, &m.paths.metrics)?;
    Ok(rows)
}

fn summary(method: &str, r: &MetricsReport) -> String {
    format!(
        "{method}: macro-P {:.4} macro-R {:.4} macro-F1 {:.4} acc {:.4} AED {:.3}",
        r.macro_precision, r.macro_recall, r.macro_f1, r.accuracy, r.aed
    )
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let m = c.manifest()?;
            let (g, b) = cmd_simulate(&m)?;
            eprintln!(
                "{} nodes, {} edges; {} train / {} test cascades -> {}",
                g.node_count(),
                g.edge_count(),
                b.train.len(),
                b.test.len(),
                m.paths.dataset.display()
            );
        }
        Command::Train(c) => {
            let m = c.manifest()?;
            let epochs = m.model.epochs;
            cmd_train(&m, |e, loss| eprintln!("epoch {}/{epochs} loss {loss:.6}", e + 1))?;
            eprintln!("checkpoint -> {}", m.paths.checkpoint.display());
        }
        Command::Infer(c) => {
            let m = c.manifest()?;
            let records = cmd_infer(&m)?;
            eprintln!("{} cascades -> {}", records.len(), m.paths.results.display());
        }
        Command::Evaluate { common, methods } => {
            let m = common.manifest()?;
            for (method, r) in cmd_evaluate(&m, &methods)? {
                println!("{}", summary(&method, &r));
            }
        }
        Command::Report { common, runs, baselines } => {
            let m = common.manifest()?;
            let rows = cmd_report(&m, runs, &baselines)?;
            print!("{}", results_csv(&rows));
        }
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    match run(Cli::parse()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
