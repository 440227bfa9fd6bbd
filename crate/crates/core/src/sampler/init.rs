use nalgebra::{DMatrix, DVector, RowDVector};

use crate::correction::CorrectedTensor;
use crate::error::{HmtmError, Result};
use crate::spectral::sorted_eigenpairs;

use super::config::{FixedParams, HmtmConfig};
use super::likelihood::{layer_ssr, n_cells, shifted_layer, upper_gram, upper_projection};
use super::state::{HmtmState, RegimePath};

/// Starting values: equal partition of layers, spectral positions from each
/// segment's mean layer, least-squares generation rules, residual variances
/// and prior means for the hierarchy. Fixed parameters override all of it.
pub fn initialize_state(b: &CorrectedTensor, config: &HmtmConfig) -> Result<HmtmState> {
    let (n, t_len) = (b.n_nodes(), b.n_layers());
    config.validate(n, t_len)?;
    let m = config.n_regimes();
    let rank = config.rank;
    let priors = &config.priors;
    let fixed = &config.fixed;

    let mut path = RegimePath::equal_partition(t_len, m);
    if let Some(states) = &fixed.states {
        path.states = states.clone();
    }
    let beta = match (fixed.beta, config.with_intercept) {
        (Some(beta), _) => beta,
        (None, true) => priors.beta_mean,
        (None, false) => 0.0,
    };
    let shifted: Vec<DMatrix<f64>> = b.layers().iter().map(|l| shifted_layer(l, beta)).collect();

    let mut u = Vec::with_capacity(m);
    for k in 0..m {
        let layers = path.layers_of(k);
        let mut mean = DMatrix::zeros(n, n);
        for &t in &layers {
            mean += &shifted[t];
        }
        mean /= layers.len() as f64;
        let pairs = sorted_eigenpairs(&mean)?;
        let mut uk = DMatrix::zeros(n, rank);
        for r in 0..rank {
            uk.set_column(r, &(&pairs[r].vector * pairs[r].value.abs().sqrt()));
        }
        u.push(uk);
    }
    if let Some(fu) = &fixed.u {
        u = fu.clone();
    }

    let mut v = DMatrix::zeros(t_len, rank);
    for t in 0..t_len {
        let uk = &u[path.states[t]];
        let mut q = upper_gram(uk);
        let ridge = 1e-8 * q.trace().max(1e-12);
        for r in 0..rank {
            q[(r, r)] += ridge;
        }
        let l = upper_projection(&shifted[t], uk);
        let sol = q
            .cholesky()
            .map(|c| c.solve(&l))
            .ok_or_else(|| HmtmError::SingularPosterior {
                regime: path.states[t],
                context: "initial generation rules".into(),
            })?;
        v.set_row(t, &sol.transpose());
    }
    if let Some(fv) = &fixed.v {
        v = fv.clone();
    }

    let cells = n_cells(n);
    let mut sigma2 = vec![0.0; m];
    for k in 0..m {
        let layers = path.layers_of(k);
        let ssr: f64 = layers
            .iter()
            .map(|&t| layer_ssr(&shifted[t], &u[k], &RowDVector::from(v.row(t)), 0.0))
            .sum();
        sigma2[k] = (ssr / (cells * layers.len()).max(1) as f64).max(1e-10);
    }

    let prior_mean = |shape: f64, scale: f64| if shape > 2.0 { scale / (shape - 2.0) } else { scale / shape };
    let mut stay = path.stay.clone();
    if let Some(s) = &fixed.stay {
        stay = s.clone();
    }
    path.stay = stay;

    let mut state = HmtmState {
        u,
        mu_u: vec![priors.mu0_u(); m],
        psi_u: vec![DVector::from_element(rank, prior_mean(priors.u0, priors.u1)); m],
        v,
        mu_v: vec![priors.mu0_v(); m],
        psi_v: vec![DVector::from_element(rank, prior_mean(priors.v0, priors.v1)); m],
        sigma2,
        beta,
        gamma: vec![1.0; t_len],
        path,
    };
    apply_fixed(&mut state, fixed);
    Ok(state)
}

/// Overwrites the fixed blocks of `state`.
pub fn apply_fixed(state: &mut HmtmState, fixed: &FixedParams) {
    if let Some(x) = &fixed.u {
        state.u = x.clone();
    }
    if let Some(x) = &fixed.v {
        state.v = x.clone();
    }
    if let Some(x) = &fixed.mu_u {
        state.mu_u = x.clone();
    }
    if let Some(x) = &fixed.psi_u {
        state.psi_u = x.clone();
    }
    if let Some(x) = &fixed.mu_v {
        state.mu_v = x.clone();
    }
    if let Some(x) = &fixed.psi_v {
        state.psi_v = x.clone();
    }
    if let Some(x) = fixed.beta {
        state.beta = x;
    }
    if let Some(x) = &fixed.sigma2 {
        state.sigma2 = x.clone();
    }
    if let Some(x) = &fixed.gamma {
        state.gamma = x.clone();
    }
    if let Some(x) = &fixed.stay {
        state.path.stay = x.clone();
    }
    if let Some(x) = &fixed.states {
        state.path.states = x.clone();
    }
}
