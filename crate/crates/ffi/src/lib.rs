//! C ABI over `pdsl`.
//!
//! Objects are exposed as opaque handles created by `pdsl_*_new`/`_load`
//! functions and released with the matching `_free`. Every fallible call
//! returns a [`PdslStatus`]; on failure the message is available from
//! [`pdsl_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use pdsl::autodiff::OptimizerKind;
use pdsl::cascade::{build_dataset, read_dataset, write_dataset, DatasetBundle, DatasetHeader, Mechanism, SimConfig, SourceCount};
use pdsl::graph::{barabasi_albert, load_edge_list, Graph, NormalizedAdjacency};
use pdsl::inference::{infer_cascade, InferenceConfig, MatchIndex};
use pdsl::metrics;
use pdsl::model::{load_checkpoint, save_checkpoint, Batch, Model, ModelConfig};
use pdsl::{rng, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdslStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Shape = 5,
    NonFinite = 6,
    Mismatch = 7,
    Simulation = 8,
    Panic = 99,
}

impl From<&Error> for PdslStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => Self::Io,
            Error::Parse { .. } | Error::Json(_) | Error::Version(_) | Error::Checkpoint(_) => Self::Parse,
            Error::Shape { .. } | Error::Length { .. } | Error::NonSquare { .. } | Error::NonScalarLoss { .. } => {
                Self::Shape
            }
            Error::NonFinite { .. } | Error::TrainingDiverged { .. } | Error::InferenceDiverged { .. } => {
                Self::NonFinite
            }
            Error::ManifestMismatch(_) => Self::Mismatch,
            Error::RetryBudget { .. } | Error::CascadeTooSmall { .. } | Error::SourcePool { .. } => Self::Simulation,
            _ => Self::InvalidArgument,
        }
    }
}

/// Two-class macro scores of one prediction.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PdslScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// A weighted graph.
pub struct PdslGraph {
    graph: Graph,
    adj: Arc<NormalizedAdjacency>,
}

/// A simulated train/test cascade dataset.
pub struct PdslDataset {
    bundle: DatasetBundle,
}

/// A trained model.
pub struct PdslModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(PdslStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(PdslStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PdslStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PdslStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PdslStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(PdslStatus::NullArgument, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(PdslStatus::InvalidArgument, "path is not UTF-8".into()))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn pdsl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdsl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn wrap_graph(graph: Graph) -> PdslGraph {
    let adj = Arc::new(NormalizedAdjacency::build(&graph));
    PdslGraph { graph, adj }
}

/// Weighted Barabási–Albert graph with `n` nodes and attachment `m`.
///
/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn pdsl_graph_barabasi_albert(n: usize, m: usize, seed: u64, out: *mut *mut PdslGraph) -> PdslStatus {
    guard(|| {
        let g = barabasi_albert(n, m, &mut rng::stream(seed, "graph", 0))?
            .assign_edge_weights(&mut rng::stream(seed, "weights", 0));
        put(out, wrap_graph(g))
    })
}

/// Load an edge list; weights are drawn from `seed` when the file has none.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdsl_graph_load(path: *const c_char, directed: bool, seed: u64, out: *mut *mut PdslGraph) -> PdslStatus {
    guard(|| {
        let g = load_edge_list(path_arg(path)?, directed)?;
        let g = if g.weights().is_some() {
            g
        } else {
            g.assign_edge_weights(&mut rng::stream(seed, "weights", 0))
        };
        put(out, wrap_graph(g))
    })
}

/// # Safety
/// `graph` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pdsl_graph_node_count(graph: *const PdslGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.node_count())
}

/// # Safety
/// `graph` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pdsl_graph_edge_count(graph: *const PdslGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.edge_count())
}

/// # Safety
/// `graph` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdsl_graph_free(graph: *mut PdslGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Diffusion mechanism selector.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum PdslMechanism {
    Si = 0,
    Sir = 1,
    Glt = 2,
}

/// Simulate `count` valid cascades (80/20 split) on `graph`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdsl_dataset_simulate(
    graph: *const PdslGraph,
    mechanism: PdslMechanism,
    source_ratio: f64,
    snapshots: usize,
    count: usize,
    seed: u64,
    out: *mut *mut PdslDataset,
) -> PdslStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let cfg = SimConfig {
            mechanism: match mechanism {
                PdslMechanism::Si => Mechanism::Si,
                PdslMechanism::Sir => Mechanism::Sir,
                PdslMechanism::Glt => Mechanism::Glt,
            },
            sources: SourceCount::Ratio(source_ratio),
            snapshots,
            seed,
            ..SimConfig::default()
        };
        put(out, PdslDataset { bundle: build_dataset(&g.graph, &cfg, count)? })
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdsl_dataset_load(path: *const c_char, out: *mut *mut PdslDataset) -> PdslStatus {
    guard(|| {
        let (_, bundle) = read_dataset(path_arg(path)?)?;
        put(out, PdslDataset { bundle })
    })
}

/// # Safety
/// `dataset` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pdsl_dataset_save(dataset: *const PdslDataset, path: *const c_char) -> PdslStatus {
    guard(|| {
        let d = deref(dataset, "dataset")?;
        let header = DatasetHeader::new("", &d.bundle, "");
        write_dataset(path_arg(path)?, &header, &d.bundle)?;
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdsl_dataset_train_count(dataset: *const PdslDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.bundle.train.len())
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdsl_dataset_test_count(dataset: *const PdslDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.bundle.test.len())
}

/// Copy the source indicator (0/1) of test cascade `index` into `out[0..n]`.
///
/// # Safety
/// `dataset` must be a live handle and `out` must hold `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn pdsl_dataset_test_sources(dataset: *const PdslDataset, index: usize, out: *mut u8, n: usize) -> PdslStatus {
    guard(|| {
        let d = deref(dataset, "dataset")?;
        let c = d
            .bundle
            .test
            .get(index)
            .ok_or_else(|| Fail(PdslStatus::InvalidArgument, format!("no test cascade {index}")))?;
        if n != c.sources.len() || out.is_null() {
            return Err(Fail(PdslStatus::Shape, format!("buffer must hold {} entries", c.sources.len())));
        }
        let dst = std::slice::from_raw_parts_mut(out, n);
        dst.iter_mut().zip(&c.sources).for_each(|(d, &s)| *d = s as u8);
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdsl_dataset_free(dataset: *mut PdslDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Training optimizer selector.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum PdslOptimizer {
    Adam = 0,
    /// Plain gradient descent.
    Sgd = 1,
}

/// Model hyperparameters accepted over the C boundary.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PdslModelConfig {
    pub latent_dim: usize,
    pub hidden: usize,
    pub prop_dim: usize,
    pub gcn_layers: usize,
    pub rk4_steps: usize,
    pub readout_hidden: usize,
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub snapshot_inputs: usize,
    pub optimizer: PdslOptimizer,
}

impl From<PdslModelConfig> for ModelConfig {
    fn from(c: PdslModelConfig) -> Self {
        ModelConfig {
            latent_dim: c.latent_dim,
            hidden: c.hidden,
            prop_dim: c.prop_dim,
            gcn_layers: c.gcn_layers,
            rk4_steps: c.rk4_steps,
            readout_hidden: c.readout_hidden,
            l2: c.l2,
            lr: c.lr,
            epochs: c.epochs,
            snapshot_inputs: c.snapshot_inputs,
            optimizer: match c.optimizer {
                PdslOptimizer::Adam => OptimizerKind::Adam,
                PdslOptimizer::Sgd => OptimizerKind::Sgd,
            },
        }
    }
}

/// Library defaults, to be adjusted before [`pdsl_model_train`].
#[no_mangle]
pub extern "C" fn pdsl_model_config_default() -> PdslModelConfig {
    let d = ModelConfig::default();
    PdslModelConfig {
        latent_dim: d.latent_dim,
        hidden: d.hidden,
        prop_dim: d.prop_dim,
        gcn_layers: d.gcn_layers,
        rk4_steps: d.rk4_steps,
        readout_hidden: d.readout_hidden,
        l2: d.l2,
        lr: d.lr,
        epochs: d.epochs,
        snapshot_inputs: d.snapshot_inputs,
        optimizer: match d.optimizer {
            OptimizerKind::Adam => PdslOptimizer::Adam,
            OptimizerKind::Sgd => PdslOptimizer::Sgd,
        },
    }
}

/// Train a model on the dataset's training split. `losses`, when non-null,
/// receives up to `losses_len` per-epoch mean losses.
///
/// # Safety
/// Handles must be live; `out` valid; `losses` null or holding `losses_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdsl_model_train(
    graph: *const PdslGraph,
    dataset: *const PdslDataset,
    config: *const PdslModelConfig,
    seed: u64,
    losses: *mut f64,
    losses_len: usize,
    out: *mut *mut PdslModel,
) -> PdslStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let d = deref(dataset, "dataset")?;
        let cfg: ModelConfig = (*deref(config, "config")?).into();
        cfg.validate()?;
        let report = pdsl::model::train(&d.bundle, &g.adj, &cfg, seed)?;
        if !losses.is_null() {
            let dst = std::slice::from_raw_parts_mut(losses, losses_len);
            dst.iter_mut().zip(&report.epoch_losses).for_each(|(d, &l)| *d = l);
        }
        put(out, PdslModel { model: report.model })
    })
}

/// # Safety
/// `model` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pdsl_model_save(model: *const PdslModel, path: *const c_char) -> PdslStatus {
    guard(|| {
        let m = deref(model, "model")?;
        save_checkpoint(&m.model, "", path_arg(path)?)?;
        Ok(())
    })
}

/// Load a checkpoint, checking it against a graph of `node_count` nodes.
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pdsl_model_load(path: *const c_char, node_count: usize, out: *mut *mut PdslModel) -> PdslStatus {
    guard(|| {
        let (model, _) = load_checkpoint(path_arg(path)?, node_count)?;
        put(out, PdslModel { model })
    })
}

/// # Safety
/// `model` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdsl_model_free(model: *mut PdslModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Localize the sources of test cascade `index`: writes refined source
/// probabilities to `probs[0..n]` and the 0.5-thresholded prediction to
/// `prediction[0..n]` (either may be null). `refine_epochs` < 0 uses the default.
///
/// # Safety
/// Handles must be live; non-null buffers must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn pdsl_infer_test_cascade(
    model: *const PdslModel,
    graph: *const PdslGraph,
    dataset: *const PdslDataset,
    index: usize,
    refine_epochs: i32,
    probs: *mut f64,
    prediction: *mut u8,
    n: usize,
    matched_block: *mut usize,
) -> PdslStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let g = deref(graph, "graph")?;
        let d = deref(dataset, "dataset")?;
        let c = d
            .bundle
            .test
            .get(index)
            .ok_or_else(|| Fail(PdslStatus::InvalidArgument, format!("no test cascade {index}")))?;
        if n != g.graph.node_count() {
            return Err(Fail(PdslStatus::Shape, format!("buffers must hold {} entries", g.graph.node_count())));
        }
        let mut cfg = InferenceConfig::default();
        if refine_epochs >= 0 {
            cfg.epochs = refine_epochs as usize;
        }
        let index = MatchIndex::from_bundle(&d.bundle)?;
        let obs = Batch::observed(&c.snapshot_vectors(), &c.result_vector(), m.model.config.snapshot_inputs)?;
        let rec = infer_cascade(&m.model, &g.adj, &index, &obs, &cfg)?;
        if !probs.is_null() {
            std::slice::from_raw_parts_mut(probs, n).copy_from_slice(&rec.refinement.probabilities);
        }
        if !prediction.is_null() {
            let dst = std::slice::from_raw_parts_mut(prediction, n);
            dst.iter_mut()
                .zip(&rec.refinement.prediction)
                .for_each(|(d, &p)| *d = p as u8);
        }
        if !matched_block.is_null() {
            *matched_block = rec.matched_block;
        }
        Ok(())
    })
}

/// Macro precision/recall/F1 and accuracy of 0/1 vectors of length `n`.
///
/// # Safety
/// `truth` and `pred` must hold `n` bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pdsl_macro_scores(truth: *const u8, pred: *const u8, n: usize, out: *mut PdslScores) -> PdslStatus {
    guard(|| {
        let t: Vec<bool> = slice(truth, n, "truth")?.iter().map(|&x| x != 0).collect();
        let p: Vec<bool> = slice(pred, n, "pred")?.iter().map(|&x| x != 0).collect();
        let s = metrics::macro_scores(&t, &p)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = PdslScores {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            accuracy: s.accuracy,
        };
        Ok(())
    })
}

/// Average Error Distance of the top-`k` entries of `probs` against `truth[0..k]`.
///
/// # Safety
/// `graph` must be live; `truth` must hold `k` ids, `probs` the node count; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pdsl_aed(graph: *const PdslGraph, truth: *const usize, k: usize, probs: *const f64, out: *mut f64) -> PdslStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let truth = slice(truth, k, "truth")?;
        let probs = slice(probs, g.graph.node_count(), "probs")?;
        let v = metrics::aed(&g.graph, truth, probs)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v;
        Ok(())
    })
}
