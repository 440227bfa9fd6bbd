//! The work behind each subcommand, shared with `pipeline`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hmtm::diagnostics::{compare_models, diagnose, ChibOptions, Comparison, DiagnosticsReport};
use hmtm::postprocess::{cluster_regimes, export_latent, export_rules, summarize_regimes};
use hmtm::{default_schedule, fit_hmtm, make_block_network_change, CorrectedTensor, EdgeProbabilities, HmtmConfig, NetworkTensor, Scenario};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AtStage, CliError, CliResult, Stage};
use crate::files::{data_hash, TraceFile};

pub fn generate(scenario: Scenario, n: usize, layers: usize, p_in: f64, p_out: f64, seed: u64) -> CliResult<NetworkTensor> {
    let schedule = default_schedule(scenario, n, layers).at(Stage::Generate)?;
    let probs = EdgeProbabilities::new(p_in, p_out).at(Stage::Generate)?;
    make_block_network_change(&schedule, probs, seed).at(Stage::Generate)
}

pub fn fit(b: &CorrectedTensor, config: &HmtmConfig) -> CliResult<TraceFile> {
    let trace = fit_hmtm(b, config).at(Stage::Fit)?;
    TraceFile::new(b, trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// One report per trace, in input order.
    pub models: Vec<DiagnosticsReport>,
    pub comparison: Comparison,
}

/// Diagnoses every trace (concurrently) and ranks the models. `data` is
/// needed only for the marginal likelihood.
pub fn compare(traces: &[TraceFile], data: Option<&CorrectedTensor>, chib: Option<&ChibOptions>) -> CliResult<CompareReport> {
    if chib.is_some() && data.is_none() {
        return Err(CliError::new(Stage::Config, "the marginal likelihood needs the fitted data; pass it or skip the marginal likelihood"));
    }
    if let Some(b) = data {
        let hash = data_hash(b)?;
        if let Some(t) = traces.iter().find(|t| t.data_sha256 != hash) {
            return Err(CliError::new(
                Stage::Compare,
                format!("trace with {} break(s) was fitted to different data", t.trace.n_regimes() - 1),
            ));
        }
    }
    let models = traces
        .par_iter()
        .map(|t| diagnose(&t.trace, data.zip(chib)))
        .collect::<Result<Vec<_>, _>>()
        .at(Stage::Compare)?;
    let comparison = compare_models(&models).at(Stage::Compare)?;
    Ok(CompareReport { models, comparison })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.1}"))
}

/// Aligned plain-text version of a comparison.
pub fn render_text(report: &CompareReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>12} {:>12} {:>12} {:>10}  {:<14} singleton",
        "model", "WAIC", "-2logML", "-2loglik", "avg.loss", "breaks"
    );
    for r in &report.models {
        let breaks = r.mode_breaks.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(
            out,
            "{:<6} {:>12.1} {:>12} {:>12} {:>10}  {:<14} {}",
            format!("M{}", r.n_breaks),
            r.waic,
            fmt_opt(r.neg2_log_marginal),
            fmt_opt(r.neg2_log_lik_at_means),
            r.average_loss.map_or_else(|| "-".into(), |v| format!("{v:.3}")),
            if breaks.is_empty() { "-".into() } else { breaks },
            if r.singleton_flag { "yes" } else { "no" },
        );
    }
    let c = &report.comparison;
    let _ = writeln!(out, "\nWAIC selects M{}", c.verdict);
    if let Some(ml) = c.marginal_choice {
        let _ = writeln!(out, "marginal likelihood selects M{ml}");
    }
    for note in &c.notes {
        let _ = writeln!(out, "note: {note}");
    }
    for r in &report.models {
        for w in &r.warnings {
            let _ = writeln!(out, "warning (M{}): {w}", r.n_breaks);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportWhat {
    Latent,
    Rules,
}

/// Writes the plot-ready CSVs of one trace into `dir`.
pub fn export(trace: &TraceFile, what: ExportWhat, k: Option<usize>, restarts: usize, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).at(Stage::Io)?;
    match what {
        ExportWhat::Latent => {
            let mut summaries = summarize_regimes(&trace.trace).at(Stage::Export)?;
            if let Some(k) = k {
                cluster_regimes(&mut summaries, k, restarts, trace.trace.config.seed).at(Stage::Export)?;
            }
            export_latent(&summaries, trace.node_labels.as_deref(), dir).at(Stage::Export)
        }
        ExportWhat::Rules => {
            let path = dir.join("rules.csv");
            export_rules(&trace.trace, &path).at(Stage::Export)?;
            Ok(vec![path])
        }
    }
}
