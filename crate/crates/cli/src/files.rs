//! Input loading and the trace file format.

use std::fs;
use std::path::Path;

use hmtm::diagnostics::{breakpoint_summary, waic, BreakSummary};
use hmtm::tensor::read_edge_list;
use hmtm::{degree_correct, CorrectedTensor, IndexBase, McmcTrace, NetworkTensor, NullKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AtStage, CliError, CliResult, Stage};

pub const TRACE_SCHEMA: &str = "hmtm-trace/1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&fs::read(path).at(Stage::Io)?))
}

/// Hash of the corrected data a trace was fitted to.
pub fn data_hash(b: &CorrectedTensor) -> CliResult<String> {
    Ok(sha256_hex(&serde_json::to_vec(&b.to_dump()).at(Stage::Io)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).at(Stage::Io)?;
    }
    fs::write(path, serde_json::to_vec_pretty(value).at(Stage::Io)?).at(Stage::Io)
}

/// What an input file turned out to hold.
pub enum Loaded {
    Raw(NetworkTensor),
    Corrected(CorrectedTensor),
}

/// Reads an edge list (`.csv`, `.tsv`, `.txt`) or a JSON dump of a raw or
/// corrected tensor; corrected dumps carry a `null_model` field.
pub fn load_input(path: &Path, base: IndexBase, n_nodes: Option<usize>, n_layers: Option<usize>) -> CliResult<Loaded> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext != "json" {
        return read_edge_list(path, n_nodes, n_layers, base).map(Loaded::Raw).at(Stage::Input);
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::new(Stage::Input, format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).at(Stage::Input)?;
    if value.get("null_model").is_some() {
        let dump = serde_json::from_value(value).at(Stage::Input)?;
        CorrectedTensor::from_dump(dump).map(Loaded::Corrected).at(Stage::Input)
    } else {
        let dump = serde_json::from_value(value).at(Stage::Input)?;
        NetworkTensor::from_dump(dump).map(Loaded::Raw).at(Stage::Input)
    }
}

/// Loads data ready for fitting, correcting raw tensors with `kind`.
pub fn load_corrected(
    path: &Path,
    base: IndexBase,
    n_nodes: Option<usize>,
    n_layers: Option<usize>,
    kind: NullKind,
) -> CliResult<CorrectedTensor> {
    match load_input(path, base, n_nodes, n_layers)? {
        Loaded::Corrected(b) => Ok(b),
        Loaded::Raw(y) => degree_correct(&y, kind).at(Stage::Correct),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceSummary {
    pub n_draws: usize,
    pub waic: f64,
    pub breakpoints: Vec<BreakSummary>,
    pub sigma2_mean: Vec<f64>,
    pub stay_mean: Vec<f64>,
}

/// A fitted chain on disk. `trace.config` echoes the sampler settings,
/// `trace.loglayer` is the full `G x T` matrix of per-layer log densities
/// and `trace.breakpoints` holds every sampled change point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceFile {
    pub schema: String,
    pub data_sha256: String,
    pub correction: NullKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<String>>,
    pub summary: TraceSummary,
    pub trace: McmcTrace,
}

impl TraceFile {
    pub fn new(b: &CorrectedTensor, trace: McmcTrace) -> CliResult<Self> {
        let g = trace.n_draws().max(1) as f64;
        let m = trace.n_regimes();
        let mut sigma2_mean = vec![0.0; m];
        let mut stay_mean = vec![0.0; m];
        for d in &trace.draws {
            for k in 0..m {
                sigma2_mean[k] += d.sigma2[k] / g;
                stay_mean[k] += d.path.stay[k] / g;
            }
        }
        Ok(TraceFile {
            schema: TRACE_SCHEMA.into(),
            data_sha256: data_hash(b)?,
            correction: b.null_model().kind(),
            node_labels: b.node_labels().map(<[String]>::to_vec),
            summary: TraceSummary {
                n_draws: trace.n_draws(),
                waic: waic(&trace).at(Stage::Fit)?,
                breakpoints: breakpoint_summary(&trace),
                sigma2_mean,
                stay_mean,
            },
            trace,
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::new(Stage::Input, format!("{}: {e}", path.display())))?;
        let file: TraceFile =
            serde_json::from_str(&text).map_err(|e| CliError::new(Stage::Input, format!("{}: {e}", path.display())))?;
        if file.schema != TRACE_SCHEMA {
            return Err(CliError::new(Stage::Input, format!("{}: unsupported schema `{}`", path.display(), file.schema)));
        }
        Ok(file)
    }
}
