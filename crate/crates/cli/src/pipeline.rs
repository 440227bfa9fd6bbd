//! generate → correct → fit → compare → export, driven by a [`RunConfig`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hmtm::diagnostics::ChibOptions;
use hmtm::{degree_correct, CorrectedTensor, NetworkTensor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{self, CompareReport, ExportWhat};
use crate::config::{InputSpec, RunConfig, StopAfter};
use crate::error::{AtStage, CliResult, Stage};
use crate::files::{load_input, sha256_file, write_json, Loaded, TraceFile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one pipeline run. Holds no timestamps or absolute paths, so
/// identical runs give identical manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub data_seed: Option<u64>,
    /// Chain seed per candidate, keyed `M<breaks>`.
    pub model_seeds: BTreeMap<String, u64>,
    pub files: Vec<FileEntry>,
}

pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub report: Option<CompareReport>,
}

/// Collects written files; all writes go through here, on one thread.
struct Writer {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<PathBuf> {
        let path = self.root.join(rel);
        write_json(&path, value)?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn text(&mut self, rel: &str, text: &str) -> CliResult<()> {
        let path = self.root.join(rel);
        fs::write(&path, text).at(Stage::Io)?;
        self.written.push(path);
        Ok(())
    }

    fn entries(&self) -> CliResult<Vec<FileEntry>> {
        let mut out: Vec<FileEntry> = self
            .written
            .iter()
            .map(|p| {
                let rel = p.strip_prefix(&self.root).unwrap_or(p);
                Ok(FileEntry {
                    path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
                    sha256: sha256_file(p)?,
                    bytes: fs::metadata(p).at(Stage::Io)?.len(),
                })
            })
            .collect::<CliResult<_>>()?;
        out.sort_by(|a, b| a.path.cmp(&b.path));
        out.dedup_by(|a, b| a.path == b.path);
        Ok(out)
    }
}

fn acquire(cfg: &RunConfig) -> CliResult<Loaded> {
    match &cfg.input {
        InputSpec::Synthetic { scenario, n, layers, p_in, p_out } => {
            commands::generate(*scenario, *n, *layers, *p_in, *p_out, cfg.seed).map(Loaded::Raw)
        }
        InputSpec::File { path, base, n_nodes, n_layers } => load_input(path, *base, *n_nodes, *n_layers),
    }
}

pub fn run_pipeline(cfg: &RunConfig) -> CliResult<PipelineOutcome> {
    fs::create_dir_all(&cfg.out_dir).at(Stage::Io)?;
    let mut w = Writer {
        root: cfg.out_dir.clone(),
        written: Vec::new(),
    };
    let finish = |w: &Writer, report: Option<CompareReport>| -> CliResult<PipelineOutcome> {
        let manifest = Manifest {
            tool: "hmtm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.resolved.clone(),
            data_seed: matches!(cfg.input, InputSpec::Synthetic { .. }).then_some(cfg.seed),
            model_seeds: if cfg.stop_after >= StopAfter::Fit {
                cfg.breaks.iter().map(|&k| (format!("M{k}"), cfg.model_config(k).seed)).collect()
            } else {
                BTreeMap::new()
            },
            files: w.entries()?,
        };
        write_json(&cfg.out_dir.join("manifest.json"), &manifest)?;
        Ok(PipelineOutcome {
            out_dir: cfg.out_dir.clone(),
            manifest,
            report,
        })
    };

    let b: CorrectedTensor = match acquire(cfg)? {
        Loaded::Raw(y) => {
            w.json("tensor.json", &y.to_dump())?;
            if cfg.stop_after == StopAfter::Generate {
                return finish(&w, None);
            }
            correct(&y, cfg)?
        }
        Loaded::Corrected(b) => b,
    };
    w.json("corrected.json", &b.to_dump())?;
    if cfg.stop_after == StopAfter::Correct {
        return finish(&w, None);
    }

    for &k in &cfg.breaks {
        cfg.model_config(k).validate(b.n_nodes(), b.n_layers()).at(Stage::Config)?;
    }
    let chib = ChibOptions {
        reduced_mcmc: cfg.reduced_mcmc,
        ..ChibOptions::default()
    };
    let want_compare = cfg.stop_after >= StopAfter::Compare;
    let results: Vec<(TraceFile, Option<hmtm::diagnostics::DiagnosticsReport>)> = cfg
        .breaks
        .par_iter()
        .map(|&k| {
            let trace = commands::fit(&b, &cfg.model_config(k))?;
            let report = want_compare
                .then(|| hmtm::diagnostics::diagnose(&trace.trace, cfg.marglik.then_some((&b, &chib))))
                .transpose()
                .at(Stage::Compare)?;
            Ok((trace, report))
        })
        .collect::<CliResult<_>>()?;
    for (trace, _) in &results {
        w.json(&format!("trace_m{}.json", trace.trace.n_regimes() - 1), trace)?;
    }
    if !want_compare {
        return finish(&w, None);
    }

    let models: Vec<_> = results.iter().filter_map(|(_, r)| r.clone()).collect();
    let comparison = hmtm::diagnostics::compare_models(&models).at(Stage::Compare)?;
    let report = CompareReport { models, comparison };
    w.json("report.json", &report)?;
    w.text("report.txt", &commands::render_text(&report))?;

    if cfg.stop_after == StopAfter::Export {
        for (trace, _) in &results {
            let dir = Path::new("exports").join(format!("m{}", trace.trace.n_regimes() - 1));
            let abs = cfg.out_dir.join(&dir);
            for what in [ExportWhat::Latent, ExportWhat::Rules] {
                w.written.extend(commands::export(trace, what, cfg.k, cfg.restarts, &abs)?);
            }
        }
    }
    finish(&w, Some(report))
}

fn correct(y: &NetworkTensor, cfg: &RunConfig) -> CliResult<CorrectedTensor> {
    degree_correct(y, cfg.correction).at(Stage::Correct)
}
