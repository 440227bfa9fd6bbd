//! Hidden-state path updates for the forward-moving regime chain.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::dist::log_sum_exp;
use crate::error::{HmtmError, Result};

/// Log filtered probabilities `log p(S_t = m | B_1..t)` (normalized per layer)
/// for a chain started in regime 0. `loglik[t][m]` is the log density of
/// layer `t` under regime `m`. Returns the filter and the log predictive
/// density of each layer.
pub fn forward_filter(loglik: &[Vec<f64>], stay: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n_layers = loglik.len();
    let m = stay.len();
    let mut filter = Vec::with_capacity(n_layers);
    let mut predictive = Vec::with_capacity(n_layers);
    let mut prior = vec![f64::NEG_INFINITY; m];
    prior[0] = 0.0;
    for t in 0..n_layers {
        if t > 0 {
            let prev: &Vec<f64> = &filter[t - 1];
            for k in 0..m {
                let from_same = prev[k] + stay[k].ln();
                let from_below = if k > 0 {
                    prev[k - 1] + (1.0 - stay[k - 1]).ln()
                } else {
                    f64::NEG_INFINITY
                };
                prior[k] = log_sum_exp(&[from_same, from_below]);
            }
        }
        let joint: Vec<f64> = (0..m).map(|k| prior[k] + loglik[t][k]).collect();
        let norm = log_sum_exp(&joint);
        if !norm.is_finite() {
            return Err(HmtmError::FilterUnderflow { layer: t });
        }
        predictive.push(norm);
        filter.push(joint.iter().map(|x| x - norm).collect());
    }
    Ok((filter, predictive))
}

/// Forward filtering, backward sampling with `S_T` pinned to the last
/// regime. One uniform draw is consumed per layer except the last.
pub fn ffbs_states<R: Rng + ?Sized>(rng: &mut R, loglik: &[Vec<f64>], stay: &[f64]) -> Result<Vec<usize>> {
    let n_layers = loglik.len();
    let m = stay.len();
    let (filter, _) = forward_filter(loglik, stay)?;
    if !filter[n_layers - 1][m - 1].is_finite() {
        return Err(HmtmError::FilterUnderflow { layer: n_layers - 1 });
    }
    let mut states = vec![0; n_layers];
    states[n_layers - 1] = m - 1;
    for t in (0..n_layers - 1).rev() {
        let next = states[t + 1];
        let stay_w = filter[t][next] + stay[next].ln();
        let move_w = if next > 0 {
            filter[t][next - 1] + (1.0 - stay[next - 1]).ln()
        } else {
            f64::NEG_INFINITY
        };
        let norm = log_sum_exp(&[stay_w, move_w]);
        if !norm.is_finite() {
            return Err(HmtmError::FilterUnderflow { layer: t });
        }
        let u: f64 = rng.random();
        states[t] = if u < (stay_w - norm).exp() { next } else { next - 1 };
    }
    Ok(states)
}

/// Redraws the path when some regime holds a single layer.
///
/// Without weights the `M - 1` change points are a uniform random subset of
/// the `T - 1` feasible positions. With weights, `T` regime labels are drawn
/// with replacement and sorted, retrying until every regime appears.
pub fn perturb_singletons<R: Rng + ?Sized>(
    rng: &mut R,
    states: &[usize],
    n_regimes: usize,
    weights: Option<&[f64]>,
) -> Vec<usize> {
    let n_layers = states.len();
    let mut counts = vec![0usize; n_regimes];
    for &s in states {
        counts[s] += 1;
    }
    if n_regimes < 2 || !counts.contains(&1) {
        return states.to_vec();
    }
    if let Some(w) = weights.filter(|w| w.iter().any(|&x| (x - w[0]).abs() > 1e-12)) {
        let cdf: Vec<f64> = w
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        for _ in 0..1000 {
            let mut labels: Vec<usize> = (0..n_layers)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() * cdf[n_regimes - 1];
                    cdf.iter().position(|&c| u < c).unwrap_or(n_regimes - 1)
                })
                .collect();
            labels.sort_unstable();
            let mut seen = vec![false; n_regimes];
            for &l in &labels {
                seen[l] = true;
            }
            if seen.iter().all(|&s| s) {
                return labels;
            }
        }
    }
    let mut breaks: Vec<usize> = sample_indices(rng, n_layers - 1, n_regimes - 1)
        .into_iter()
        .map(|b| b + 1)
        .collect();
    breaks.sort_unstable();
    (0..n_layers)
        .map(|t| breaks.iter().filter(|&&b| t >= b).count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::state::RegimePath;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn filter_starts_in_first_regime() {
        let ll = vec![vec![0.0, 0.0]; 4];
        let (f, _) = forward_filter(&ll, &[0.5, 1.0]).unwrap();
        assert_eq!(f[0][0], 0.0);
        assert_eq!(f[0][1], f64::NEG_INFINITY);
    }

    #[test]
    fn ffbs_paths_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ll: Vec<Vec<f64>> = (0..10).map(|t| vec![-(t as f64), -(10.0 - t as f64), -3.0]).collect();
        for _ in 0..200 {
            let s = ffbs_states(&mut rng, &ll, &[0.8, 0.8, 1.0]).unwrap();
            RegimePath::check_states(&s, 3).unwrap();
        }
    }

    #[test]
    fn underflow_reports_layer() {
        let mut ll = vec![vec![0.0, 0.0]; 4];
        ll[2] = vec![f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert!(matches!(
            forward_filter(&ll, &[0.5, 1.0]),
            Err(HmtmError::FilterUnderflow { layer: 2 })
        ));
    }

    #[test]
    fn perturb_leaves_long_regimes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = vec![0, 0, 1, 1, 1];
        assert_eq!(perturb_singletons(&mut rng, &s, 2, None), s);
    }

    #[test]
    fn perturb_singleton_gives_valid_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = vec![0, 0, 0, 0, 1];
        for _ in 0..100 {
            let out = perturb_singletons(&mut rng, &s, 2, None);
            RegimePath::check_states(&out, 2).unwrap();
            let w = perturb_singletons(&mut rng, &s, 2, Some(&[0.3, 0.7]));
            RegimePath::check_states(&w, 2).unwrap();
        }
    }
}
