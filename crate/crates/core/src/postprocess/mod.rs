//! Regime summaries, block recovery and CSV exports from a trace.

pub mod export;
pub mod identify;
pub mod kmeans;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HmtmError, Result};
use crate::sampler::state::{HmtmState, McmcTrace};

pub use export::{export_latent, export_rules, read_latent_csv, read_rules_csv};
pub use identify::{align_draw, alignment_map, identification_map, ColumnMap};
pub use kmeans::{adjusted_rand_index, kmeans_blocks, KMeansResult};

/// Pointwise majority regime per layer (ties toward the earlier regime),
/// repaired into a valid forward path: each step stays or advances by one,
/// and the path advances early enough to reach the last regime.
pub fn posterior_mode_path(trace: &McmcTrace) -> Vec<usize> {
    let m = trace.n_regimes();
    let t_len = trace.n_layers;
    let mut votes = vec![vec![0usize; m]; t_len];
    for d in &trace.draws {
        for (t, &s) in d.path.states.iter().enumerate() {
            votes[t][s] += 1;
        }
    }
    let mut path = vec![0usize; t_len];
    for t in 0..t_len {
        let mode = (0..m).fold(0, |best, k| if votes[t][k] > votes[t][best] { k } else { best });
        let s = if t == 0 {
            0
        } else {
            mode.clamp(path[t - 1], path[t - 1] + 1)
        };
        // Remaining layers must still host every later regime.
        path[t] = s.max((m - 1).saturating_sub(t_len - 1 - t));
    }
    path
}

/// Posterior means after aligning every draw to a reference draw.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosteriorMeans {
    pub u: Vec<DMatrix<f64>>,
    pub v: DMatrix<f64>,
    /// 2.5% and 97.5% quantiles of each generation rule.
    pub v_lower: DMatrix<f64>,
    pub v_upper: DMatrix<f64>,
    pub mu_u: Vec<DVector<f64>>,
    pub psi_u: Vec<DVector<f64>>,
    pub mu_v: Vec<DVector<f64>>,
    pub psi_v: Vec<DVector<f64>>,
    pub sigma2: Vec<f64>,
    pub beta: f64,
    pub stay: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Draws with signs and column order matched to the last draw.
pub fn aligned_draws(trace: &McmcTrace) -> Result<Vec<HmtmState>> {
    let reference = trace
        .draws
        .last()
        .ok_or(HmtmError::InsufficientDraws { needed: 1, got: 0 })?
        .u
        .clone();
    Ok(trace.draws.iter().map(|d| align_draw(d, &reference)).collect())
}

pub fn posterior_means(trace: &McmcTrace) -> Result<PosteriorMeans> {
    let draws = aligned_draws(trace)?;
    let g = draws.len() as f64;
    let first = &draws[0];
    let m = first.n_regimes();
    let mean_mats = |f: &dyn Fn(&HmtmState) -> &DMatrix<f64>| {
        draws.iter().skip(1).fold(f(first).clone(), |acc, d| acc + f(d)) / g
    };
    let mean_vecs = |f: &dyn Fn(&HmtmState, usize) -> &DVector<f64>| -> Vec<DVector<f64>> {
        (0..m)
            .map(|k| draws.iter().skip(1).fold(f(first, k).clone(), |acc, d| acc + f(d, k)) / g)
            .collect()
    };
    let mean_scalars = |f: &dyn Fn(&HmtmState) -> &[f64]| -> Vec<f64> {
        let len = f(first).len();
        (0..len).map(|i| draws.iter().map(|d| f(d)[i]).sum::<f64>() / g).collect()
    };
    let (t_len, rank) = first.v.shape();
    let mut v_lower = DMatrix::zeros(t_len, rank);
    let mut v_upper = DMatrix::zeros(t_len, rank);
    for t in 0..t_len {
        for r in 0..rank {
            let mut xs: Vec<f64> = draws.iter().map(|d| d.v[(t, r)]).collect();
            xs.sort_by(f64::total_cmp);
            v_lower[(t, r)] = quantile(&xs, 0.025);
            v_upper[(t, r)] = quantile(&xs, 0.975);
        }
    }
    Ok(PosteriorMeans {
        u: (0..m).map(|k| mean_mats(&|d| &d.u[k])).collect(),
        v: mean_mats(&|d| &d.v),
        v_lower,
        v_upper,
        mu_u: mean_vecs(&|d, k| &d.mu_u[k]),
        psi_u: mean_vecs(&|d, k| &d.psi_u[k]),
        mu_v: mean_vecs(&|d, k| &d.mu_v[k]),
        psi_v: mean_vecs(&|d, k| &d.psi_v[k]),
        sigma2: mean_scalars(&|d| &d.sigma2),
        beta: draws.iter().map(|d| d.beta).sum::<f64>() / g,
        stay: mean_scalars(&|d| &d.path.stay),
        gamma: mean_scalars(&|d| &d.gamma),
    })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSummary {
    /// 1-based regime number.
    pub regime: usize,
    pub u_mean: DMatrix<f64>,
    pub v_regime_avg: DVector<f64>,
    /// First and last layer (1-based, inclusive) under the posterior-mode path.
    pub layer_range: (usize, usize),
    /// Cluster of each node in `1..=k`, when clustering was requested.
    pub cluster_labels: Option<Vec<usize>>,
}

/// Per-regime posterior means under the posterior-mode path, with columns
/// ordered by descending `|v|` and signed so the largest loading is positive.
pub fn summarize_regimes(trace: &McmcTrace) -> Result<Vec<RegimeSummary>> {
    let means = posterior_means(trace)?;
    let path = posterior_mode_path(trace);
    Ok(summaries_from(&means, &path))
}

pub(crate) fn summaries_from(means: &PosteriorMeans, path: &[usize]) -> Vec<RegimeSummary> {
    let maps = regime_maps(means, path);
    (0..means.u.len())
        .map(|k| {
            let layers: Vec<usize> = (0..path.len()).filter(|&t| path[t] == k).collect();
            let v_avg = regime_average(&means.v, &layers);
            RegimeSummary {
                regime: k + 1,
                u_mean: maps[k].apply_u(&means.u[k]),
                v_regime_avg: DVector::from_vec(maps[k].apply_v_row(v_avg.as_slice())),
                layer_range: (layers.first().map_or(0, |t| t + 1), layers.last().map_or(0, |t| t + 1)),
                cluster_labels: None,
            }
        })
        .collect()
}

fn regime_average(v: &DMatrix<f64>, layers: &[usize]) -> DVector<f64> {
    let mut avg = DVector::zeros(v.ncols());
    for &t in layers {
        avg += v.row(t).transpose();
    }
    avg / layers.len().max(1) as f64
}

/// Identification map of every regime of the posterior-mode path.
pub(crate) fn regime_maps(means: &PosteriorMeans, path: &[usize]) -> Vec<ColumnMap> {
    (0..means.u.len())
        .map(|k| {
            let layers: Vec<usize> = (0..path.len()).filter(|&t| path[t] == k).collect();
            identification_map(&means.u[k], &regime_average(&means.v, &layers))
        })
        .collect()
}

/// Adds k-means labels of each regime's mean positions.
pub fn cluster_regimes(summaries: &mut [RegimeSummary], k: usize, restarts: usize, seed: u64) -> Result<()> {
    for s in summaries {
        s.cluster_labels = Some(kmeans_blocks(&s.u_mean, k, restarts, seed)?.labels);
    }
    Ok(())
}

/// Whether any regime of the posterior-mode path holds a single layer.
pub fn singleton_flag(trace: &McmcTrace) -> bool {
    let path = posterior_mode_path(trace);
    let mut counts = vec![0usize; trace.n_regimes()];
    for s in path {
        counts[s] += 1;
    }
    counts.contains(&1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::state::RegimePath;
    use crate::sampler::config::HmtmConfig;

    pub(crate) fn fake_trace(paths: &[Vec<usize>], m: usize) -> McmcTrace {
        let t_len = paths[0].len();
        let draws: Vec<HmtmState> = paths
            .iter()
            .enumerate()
            .map(|(g, s)| HmtmState {
                u: vec![DMatrix::from_fn(3, 2, |i, r| (i + 2 * r) as f64 + g as f64 * 0.01 + 0.1 * r as f64); m],
                mu_u: vec![DVector::zeros(2); m],
                psi_u: vec![DVector::from_element(2, 1.0); m],
                v: DMatrix::from_fn(t_len, 2, |t, r| if r == 0 { 3.0 } else { t as f64 * 0.1 }),
                mu_v: vec![DVector::zeros(2); m],
                psi_v: vec![DVector::from_element(2, 1.0); m],
                sigma2: vec![1.0; m],
                beta: 0.0,
                gamma: vec![1.0; t_len],
                path: RegimePath {
                    states: s.clone(),
                    stay: (0..m).map(|k| if k + 1 == m { 1.0 } else { 0.9 }).collect(),
                },
            })
            .collect();
        McmcTrace {
            config: HmtmConfig::new(m - 1, 2),
            n_nodes: 3,
            n_layers: t_len,
            loglayer: vec![vec![0.0; t_len]; draws.len()],
            breakpoints: draws.iter().map(|d| d.path.breakpoints()).collect(),
            final_state: draws.last().unwrap().clone(),
            draws,
        }
    }

    #[test]
    fn mode_path_majority() {
        let trace = fake_trace(
            &[vec![0, 0, 1, 1, 1], vec![0, 0, 1, 1, 1], vec![0, 0, 0, 1, 1]],
            2,
        );
        assert_eq!(posterior_mode_path(&trace), vec![0, 0, 1, 1, 1]);
        assert!(!singleton_flag(&trace));
    }

    #[test]
    fn mode_path_repairs_to_valid() {
        let trace = fake_trace(&[vec![0, 1, 1, 2, 2], vec![0, 0, 1, 1, 2], vec![0, 0, 0, 1, 2]], 3);
        let p = posterior_mode_path(&trace);
        RegimePath::check_states(&p, 3).unwrap();
    }

    #[test]
    fn single_regime_summary_spans_all_layers() {
        let trace = fake_trace(&[vec![0; 6], vec![0; 6]], 1);
        let s = summarize_regimes(&trace).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].layer_range, (1, 6));
        assert_eq!(s[0].regime, 1);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 1.0, 2.0], 0.5), 1.0);
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
    }
}
