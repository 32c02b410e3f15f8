//! End-to-end experiment: manifest, graph, dataset, training, inference and scoring.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{run_baseline, BaselineKind};
use crate::cascade::{build_dataset, DatasetBundle, SimConfig};
use crate::error::{Error, Result};
use crate::graph::{barabasi_albert, load_edge_list, Graph, NormalizedAdjacency};
use crate::inference::{infer_cascade, InferenceConfig, InferenceRecord, MatchIndex};
use crate::metrics::{CascadeMetrics, MetricsReport};
use crate::model::{self, Batch, Model, ModelConfig, TrainReport};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSource {
    /// Built-in preferential attachment graph.
    BarabasiAlbert { nodes: usize, attachment: usize },
    /// Edge-list file; weights are drawn if the file has none.
    File {
        path: PathBuf,
        #[serde(default)]
        directed: bool,
    },
}

impl Default for GraphSource {
    fn default() -> Self {
        Self::BarabasiAlbert {
            nodes: 200,
            attachment: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub graph: PathBuf,
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub trace: PathBuf,
    pub results: PathBuf,
    pub metrics: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            graph: "out/graph.txt".into(),
            dataset: "out/dataset.jsonl".into(),
            checkpoint: "out/checkpoint.json".into(),
            trace: "out/train_trace.csv".into(),
            results: "out/results.jsonl".into(),
            metrics: "out/metrics.csv".into(),
        }
    }
}

impl OutputPaths {
    /// Default file names under `dir`.
    pub fn under(dir: &Path) -> Self {
        let d = Self::default();
        let join = |p: PathBuf| dir.join(p.file_name().expect("default paths have names"));
        Self {
            graph: join(d.graph),
            dataset: join(d.dataset),
            checkpoint: join(d.checkpoint),
            trace: join(d.trace),
            results: join(d.results),
            metrics: join(d.metrics),
        }
    }
}

/// Everything needed to reproduce a run from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentManifest {
    /// Label used in results tables.
    pub dataset: String,
    pub seed: u64,
    /// Cascades to simulate (split 80/20).
    pub cascades: usize,
    pub graph: GraphSource,
    pub sim: SimConfig,
    pub model: ModelConfig,
    pub inference: InferenceConfig,
    pub paths: OutputPaths,
}

impl Default for ExperimentManifest {
    fn default() -> Self {
        Self {
            dataset: "ba200".into(),
            seed: 0,
            cascades: 100,
            graph: GraphSource::default(),
            sim: SimConfig::default(),
            model: ModelConfig::default(),
            inference: InferenceConfig::default(),
            paths: OutputPaths::default(),
        }
    }
}

#[derive(Serialize)]
struct Hashed<'a> {
    dataset: &'a str,
    seed: u64,
    cascades: usize,
    graph: &'a GraphSource,
    sim: &'a SimConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inference: Option<&'a InferenceConfig>,
}

fn digest(h: &Hashed<'_>) -> String {
    let json = serde_json::to_string(h).expect("manifest serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

impl ExperimentManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.model.validate()?;
        self.inference.validate()?;
        if self.model.snapshot_inputs >= self.sim.snapshots {
            return Err(Error::Config(format!(
                "model uses {} snapshots but cascades only carry {}",
                self.model.snapshot_inputs,
                self.sim.snapshots - 1
            )));
        }
        Ok(())
    }

    /// Simulation settings with the master seed applied.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            seed: rng::derive_seed(self.seed, "sim", 0),
            ..self.sim.clone()
        }
    }

    /// SHA-256 over the settings that determine the graph and dataset.
    ///
    /// Every output file carries this value so that files from different
    /// experiments are never mixed.
    pub fn dataset_hash(&self) -> String {
        let h = Hashed {
            dataset: &self.dataset,
            seed: self.seed,
            cascades: self.cascades,
            graph: &self.graph,
            sim: &self.sim,
            model: None,
            inference: None,
        };
        digest(&h)
    }

    /// SHA-256 over every setting that affects outputs (paths excluded).
    pub fn hash(&self) -> String {
        let h = Hashed {
            dataset: &self.dataset,
            seed: self.seed,
            cascades: self.cascades,
            graph: &self.graph,
            sim: &self.sim,
            model: Some(&self.model),
            inference: Some(&self.inference),
        };
        digest(&h)
    }
}

/// The weighted graph described by the manifest.
pub fn build_graph(m: &ExperimentManifest) -> Result<Graph> {
    let g = match &m.graph {
        GraphSource::BarabasiAlbert { nodes, attachment } => {
            barabasi_albert(*nodes, *attachment, &mut rng::stream(m.seed, "graph", 0))?
        }
        GraphSource::File { path, directed } => load_edge_list(path, *directed)?,
    };
    Ok(if g.weights().is_some() {
        g
    } else {
        g.assign_edge_weights(&mut rng::stream(m.seed, "weights", 0))
    })
}

pub fn simulate(m: &ExperimentManifest) -> Result<(Graph, DatasetBundle)> {
    m.validate()?;
    let g = build_graph(m)?;
    let bundle = build_dataset(&g, &m.sim_config(), m.cascades)?;
    Ok((g, bundle))
}

pub fn train(
    m: &ExperimentManifest,
    bundle: &DatasetBundle,
    adj: &Arc<NormalizedAdjacency>,
    on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport> {
    let seed = rng::derive_seed(m.seed, "train", 0);
    let init = Model::init(&m.model, bundle.node_count, &mut rng::stream(seed, "init", 0))?;
    model::train_from(init, bundle, adj, seed, on_epoch)
}

/// Refine every test cascade of `bundle`.
pub fn infer_all(
    model: &Model,
    adj: &Arc<NormalizedAdjacency>,
    bundle: &DatasetBundle,
    cfg: &InferenceConfig,
) -> Result<Vec<InferenceRecord>> {
    let index = MatchIndex::from_bundle(bundle)?;
    bundle
        .test
        .iter()
        .map(|c| {
            let obs = Batch::observed(
                &c.snapshot_vectors(),
                &c.result_vector(),
                model.config.snapshot_inputs,
            )?;
            infer_cascade(model, adj, &index, &obs, cfg)
        })
        .collect()
}

/// Score predictions against the test cascades, one `(prediction, probabilities)` each.
pub fn evaluate_predictions(
    g: &Graph,
    bundle: &DatasetBundle,
    predictions: &[(Vec<bool>, Vec<f64>)],
) -> Result<MetricsReport> {
    if predictions.len() != bundle.test.len() {
        return Err(Error::Length {
            left: predictions.len(),
            right: bundle.test.len(),
        });
    }
    let per = bundle
        .test
        .iter()
        .zip(predictions)
        .map(|(c, (pred, probs))| CascadeMetrics::evaluate(g, &c.sources, pred, probs))
        .collect::<Result<_>>()?;
    Ok(MetricsReport::from_cascades(per))
}

pub fn evaluate_records(g: &Graph, bundle: &DatasetBundle, records: &[InferenceRecord]) -> Result<MetricsReport> {
    let preds: Vec<_> = records
        .iter()
        .map(|r| (r.refinement.prediction.clone(), r.refinement.probabilities.clone()))
        .collect();
    evaluate_predictions(g, bundle, &preds)
}

/// Run a baseline on every test cascade with `k` equal to its true source count.
pub fn evaluate_baseline(kind: BaselineKind, g: &Graph, bundle: &DatasetBundle, seed: u64) -> Result<MetricsReport> {
    let preds = bundle
        .test
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut r = rng::stream(seed, kind.name(), i as u64);
            let pred = run_baseline(kind, g, &c.result, c.source_count(), &mut r)?;
            let probs = crate::cascade::to_f64(&pred);
            Ok((pred, probs))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_predictions(g, bundle, &preds)
}

const RESULTS_FORMAT: &str = "pdsl-results";

#[derive(Serialize, Deserialize)]
struct ResultsHeader {
    format: String,
    version: u32,
    manifest_hash: String,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct ResultLine {
    cascade: usize,
    #[serde(flatten)]
    record: InferenceRecord,
}

/// One header line, then one record per test cascade.
pub fn results_to_string(manifest_hash: &str, records: &[InferenceRecord]) -> Result<String> {
    let header = ResultsHeader {
        format: RESULTS_FORMAT.into(),
        version: 1,
        manifest_hash: manifest_hash.into(),
        count: records.len(),
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for (cascade, record) in records.iter().enumerate() {
        out.push_str(&serde_json::to_string(&ResultLine {
            cascade,
            record: record.clone(),
        })?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse a results file into its manifest hash and records.
pub fn results_from_str(text: &str) -> Result<(String, Vec<InferenceRecord>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: ResultsHeader = serde_json::from_str(lines.next().unwrap_or("{}"))?;
    if header.format != RESULTS_FORMAT {
        return Err(Error::Config(format!("not a results file ({})", header.format)));
    }
    if header.version != 1 {
        return Err(Error::Version(header.version));
    }
    let mut records = Vec::with_capacity(header.count);
    for (i, line) in lines.enumerate() {
        let parsed: ResultLine = serde_json::from_str(line)?;
        if parsed.cascade != i {
            return Err(Error::Config(format!("record {i} is labelled cascade {}", parsed.cascade)));
        }
        records.push(parsed.record);
    }
    if records.len() != header.count {
        return Err(Error::Length {
            left: records.len(),
            right: header.count,
        });
    }
    Ok((header.manifest_hash, records))
}

/// In-memory outcome of a full run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub epoch_losses: Vec<f64>,
    pub records: Vec<InferenceRecord>,
    pub pdsl: MetricsReport,
}

/// Simulate, train, infer and score without touching the filesystem.
pub fn run(m: &ExperimentManifest) -> Result<RunSummary> {
    let (g, bundle) = simulate(m)?;
    let adj = Arc::new(NormalizedAdjacency::build(&g));
    let report = train(m, &bundle, &adj, |_, _| {})?;
    let records = infer_all(&report.model, &adj, &bundle, &m.inference)?;
    let pdsl = evaluate_records(&g, &bundle, &records)?;
    Ok(RunSummary {
        epoch_losses: report.epoch_losses,
        records,
        pdsl,
    })
}
