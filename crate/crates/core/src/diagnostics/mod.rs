//! Model comparison across candidate numbers of change points.

pub mod marginal;

use serde::{Deserialize, Serialize};

use crate::correction::CorrectedTensor;
use crate::dist::log_mean_exp;
use crate::error::{HmtmError, Result};
use crate::postprocess::singleton_flag;
use crate::sampler::state::McmcTrace;

pub use marginal::{chib_marginal_likelihood, BlockOrdinate, ChibOptions, MarginalLikelihood};

/// Log pointwise predictive density and variance penalty of a `G x T`
/// matrix of per-layer log densities.
pub fn waic_terms(loglayer: &[Vec<f64>]) -> Result<(f64, f64)> {
    let g = loglayer.len();
    if g < 2 {
        return Err(HmtmError::InsufficientDraws { needed: 2, got: g });
    }
    let t_len = loglayer[0].len();
    let mut lppd = 0.0;
    let mut penalty = 0.0;
    let mut column = vec![0.0; g];
    for t in 0..t_len {
        for (x, row) in column.iter_mut().zip(loglayer) {
            *x = row[t];
        }
        lppd += log_mean_exp(&column);
        let mean = column.iter().sum::<f64>() / g as f64;
        penalty += column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (g - 1) as f64;
    }
    Ok((lppd, penalty))
}

/// `-2 (lppd - p_waic)` over layers.
pub fn waic(trace: &McmcTrace) -> Result<f64> {
    let (lppd, penalty) = waic_terms(&trace.loglayer)?;
    Ok(-2.0 * (lppd - penalty))
}

/// Mean over breaks of the (population) variance of each sampled break
/// point; `None` for a model without breaks.
pub fn average_loss(trace: &McmcTrace) -> Option<f64> {
    let n_breaks = trace.n_regimes() - 1;
    let g = trace.breakpoints.len();
    if n_breaks == 0 || g == 0 {
        return None;
    }
    let total: f64 = (0..n_breaks)
        .map(|k| {
            let mean = trace.breakpoints.iter().map(|b| b[k] as f64).sum::<f64>() / g as f64;
            trace.breakpoints.iter().map(|b| (b[k] as f64 - mean).powi(2)).sum::<f64>() / g as f64
        })
        .sum();
    Some(total / n_breaks as f64)
}

/// Share of draws in which layer `t` starts a new regime; entry 0 is 0.
pub fn regime_change_prob(trace: &McmcTrace) -> Vec<f64> {
    let g = trace.draws.len().max(1) as f64;
    (0..trace.n_layers)
        .map(|t| {
            if t == 0 {
                return 0.0;
            }
            trace
                .draws
                .iter()
                .filter(|d| d.path.states[t] != d.path.states[t - 1])
                .count() as f64
                / g
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakSummary {
    /// 1-based last layer of the earlier regime.
    pub mean: f64,
    pub sd: f64,
}

pub fn breakpoint_summary(trace: &McmcTrace) -> Vec<BreakSummary> {
    let g = trace.breakpoints.len().max(1) as f64;
    (0..trace.n_regimes() - 1)
        .map(|k| {
            let mean = trace.breakpoints.iter().map(|b| b[k] as f64).sum::<f64>() / g;
            let var = trace.breakpoints.iter().map(|b| (b[k] as f64 - mean).powi(2)).sum::<f64>() / g;
            BreakSummary { mean, sd: var.sqrt() }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n_breaks: usize,
    pub waic: f64,
    pub neg2_log_marginal: Option<f64>,
    pub neg2_log_lik_at_means: Option<f64>,
    pub average_loss: Option<f64>,
    pub regime_change_prob: Vec<f64>,
    pub breakpoint_summary: Vec<BreakSummary>,
    /// Change points of the posterior-mode path (1-based last layer of each
    /// regime but the final one).
    pub mode_breaks: Vec<usize>,
    pub singleton_flag: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Computes every diagnostic of one fitted model. The marginal likelihood,
/// the only one that needs the data, is skipped when `chib` is `None`.
pub fn diagnose(trace: &McmcTrace, chib: Option<(&CorrectedTensor, &ChibOptions)>) -> Result<DiagnosticsReport> {
    let mut warnings = Vec::new();
    let (ml, ll) = match chib {
        Some((b, opts)) => {
            let res = chib_marginal_likelihood(b, trace, opts)?;
            warnings.extend(res.warnings.iter().cloned());
            (Some(res.neg2_log_marginal), Some(res.neg2_log_lik))
        }
        None => (None, None),
    };
    let mode = crate::postprocess::posterior_mode_path(trace);
    let mode_breaks = crate::sampler::state::RegimePath {
        stay: vec![1.0; trace.n_regimes()],
        states: mode,
    }
    .breakpoints();
    Ok(DiagnosticsReport {
        n_breaks: trace.n_regimes() - 1,
        waic: waic(trace)?,
        neg2_log_marginal: ml,
        neg2_log_lik_at_means: ll,
        average_loss: average_loss(trace),
        regime_change_prob: regime_change_prob(trace),
        breakpoint_summary: breakpoint_summary(trace),
        mode_breaks,
        singleton_flag: singleton_flag(trace),
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Indices into the input reports, by increasing WAIC.
    pub ranking: Vec<usize>,
    /// Break count of the WAIC-minimal model.
    pub verdict: usize,
    /// Break count preferred by the marginal likelihood, when computed.
    pub marginal_choice: Option<usize>,
    pub notes: Vec<String>,
}

/// Ranks models by WAIC and notes where the marginal likelihood disagrees.
pub fn compare_models(reports: &[DiagnosticsReport]) -> Result<Comparison> {
    if reports.is_empty() {
        return Err(HmtmError::InvalidConfig("no reports to compare".into()));
    }
    let mut ranking: Vec<usize> = (0..reports.len()).collect();
    ranking.sort_by(|&a, &b| reports[a].waic.total_cmp(&reports[b].waic));
    let verdict = reports[ranking[0]].n_breaks;
    let marginal_choice = if reports.iter().all(|r| r.neg2_log_marginal.is_some()) {
        reports
            .iter()
            .min_by(|a, b| a.neg2_log_marginal.unwrap().total_cmp(&b.neg2_log_marginal.unwrap()))
            .map(|r| r.n_breaks)
    } else {
        None
    };
    let mut notes = Vec::new();
    if let Some(ml) = marginal_choice.filter(|&ml| ml != verdict) {
        let flagged = reports.iter().find(|r| r.n_breaks == ml).is_some_and(|r| r.singleton_flag);
        if flagged {
            notes.push(format!(
                "marginal likelihood prefers {ml} break(s), but that model has a single-layer regime; the WAIC choice stands"
            ));
        } else {
            notes.push(format!("marginal likelihood prefers {ml} break(s); WAIC prefers {verdict}"));
        }
    }
    for r in reports.iter().filter(|r| r.singleton_flag) {
        notes.push(format!("model with {} break(s) has a single-layer regime", r.n_breaks));
    }
    Ok(Comparison {
        ranking,
        verdict,
        marginal_choice,
        notes,
    })
}
