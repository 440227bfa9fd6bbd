use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HmtmError, Result};

use super::config::HmtmConfig;

/// Hidden regime sequence of a forward-moving chain and its transition
/// probabilities. Regimes are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimePath {
    pub states: Vec<usize>,
    /// `p_kk` for each regime; the last entry is always 1.
    pub stay: Vec<f64>,
}

impl RegimePath {
    /// Equal-length partition of `n_layers` layers into `n_regimes` segments.
    pub fn equal_partition(n_layers: usize, n_regimes: usize) -> Self {
        let states: Vec<usize> = (0..n_layers).map(|t| t * n_regimes / n_layers).collect();
        let mut path = RegimePath {
            stay: vec![1.0; n_regimes],
            states,
        };
        let counts = path.counts();
        for k in 0..n_regimes.saturating_sub(1) {
            path.stay[k] = 1.0 - 1.0 / counts[k].max(2) as f64;
        }
        path
    }

    pub fn from_breaks(breaks: &[usize], n_layers: usize) -> Self {
        let states = (0..n_layers)
            .map(|t| breaks.iter().filter(|&&b| t >= b).count())
            .collect();
        let mut path = RegimePath {
            states,
            stay: vec![1.0; breaks.len() + 1],
        };
        let counts = path.counts();
        for k in 0..breaks.len() {
            path.stay[k] = 1.0 - 1.0 / counts[k].max(2) as f64;
        }
        path
    }

    pub fn n_regimes(&self) -> usize {
        self.stay.len()
    }

    pub fn n_layers(&self) -> usize {
        self.states.len()
    }

    /// Layers per regime.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_regimes()];
        for &s in &self.states {
            counts[s] += 1;
        }
        counts
    }

    /// Layers (0-based) assigned to regime `m`.
    pub fn layers_of(&self, m: usize) -> Vec<usize> {
        (0..self.states.len()).filter(|&t| self.states[t] == m).collect()
    }

    /// Change points as 1-based indices of the last layer of each regime
    /// except the final one (equivalently, the 0-based first layer of the
    /// next regime).
    pub fn breakpoints(&self) -> Vec<usize> {
        let counts = self.counts();
        let mut acc = 0;
        counts[..counts.len() - 1]
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect()
    }

    pub fn has_singleton(&self) -> bool {
        self.counts().contains(&1)
    }

    /// Upper-bidiagonal `M x M` transition matrix.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let m = self.n_regimes();
        let mut p = DMatrix::zeros(m, m);
        for k in 0..m {
            p[(k, k)] = self.stay[k];
            if k + 1 < m {
                p[(k, k + 1)] = 1.0 - self.stay[k];
            }
        }
        p
    }

    pub(crate) fn check_states(states: &[usize], n_regimes: usize) -> Result<()> {
        let first = states.first().copied();
        let last = states.last().copied();
        if first != Some(0) || last != Some(n_regimes - 1) {
            return Err(HmtmError::InvalidPath(format!(
                "path must start in regime 0 and end in regime {}",
                n_regimes - 1
            )));
        }
        for w in states.windows(2) {
            if w[1] != w[0] && w[1] != w[0] + 1 {
                return Err(HmtmError::InvalidPath(format!(
                    "step {} -> {} is not stay-or-advance",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_regimes();
        Self::check_states(&self.states, m)?;
        for (k, &p) in self.stay.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(HmtmError::InvalidPath(format!("stay probability {p} for regime {k}")));
            }
        }
        if self.stay[m - 1] != 1.0 {
            return Err(HmtmError::InvalidPath("final regime must be absorbing".into()));
        }
        Ok(())
    }
}

/// One complete set of sampled parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmtmState {
    /// Latent node positions per regime (`N x R`).
    pub u: Vec<DMatrix<f64>>,
    pub mu_u: Vec<DVector<f64>>,
    /// Diagonal of the row covariance of `U_m`.
    pub psi_u: Vec<DVector<f64>>,
    /// Generation rules, one row per layer (`T x R`).
    pub v: DMatrix<f64>,
    pub mu_v: Vec<DVector<f64>>,
    pub psi_v: Vec<DVector<f64>>,
    pub sigma2: Vec<f64>,
    /// Common intercept; 0 when disabled.
    pub beta: f64,
    /// Student-t precision weights per layer; all 1 under normal errors.
    pub gamma: Vec<f64>,
    pub path: RegimePath,
}

impl HmtmState {
    pub fn n_regimes(&self) -> usize {
        self.u.len()
    }

    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        self.path.validate()?;
        let positive = |x: &f64| *x > 0.0 && x.is_finite();
        if !(self.sigma2.iter().all(positive)
            && self.gamma.iter().all(positive)
            && self.psi_u.iter().flat_map(|p| p.iter()).all(positive)
            && self.psi_v.iter().flat_map(|p| p.iter()).all(positive))
        {
            return Err(HmtmError::InvalidConfig("variance parameters must be positive".into()));
        }
        for (m, u) in self.u.iter().enumerate() {
            if !columns_orthogonal(u, 1e-8) {
                return Err(HmtmError::InvalidConfig(format!("U_{m} columns not orthogonal")));
            }
        }
        Ok(())
    }
}

/// `|u_r . u_s| <= tol * |u_r| |u_s|` for all `r != s`.
pub fn columns_orthogonal(u: &DMatrix<f64>, tol: f64) -> bool {
    let gram = u.transpose() * u;
    (0..gram.nrows()).all(|r| {
        (0..r).all(|s| gram[(r, s)].abs() <= tol * (gram[(r, r)] * gram[(s, s)]).sqrt().max(f64::MIN_POSITIVE))
    })
}

/// Stored output of one chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McmcTrace {
    pub config: HmtmConfig,
    pub n_nodes: usize,
    pub n_layers: usize,
    pub draws: Vec<HmtmState>,
    /// `G x T` per-layer log densities over the strict upper triangle.
    pub loglayer: Vec<Vec<f64>>,
    /// `G x (M - 1)` change points, as in [`RegimePath::breakpoints`].
    pub breakpoints: Vec<Vec<usize>>,
    /// State after the last sweep; reduced runs start here.
    pub final_state: HmtmState,
}

impl McmcTrace {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn n_regimes(&self) -> usize {
        self.config.n_regimes()
    }

    /// Keeps every `k`-th draw.
    pub fn thinned(&self, k: usize) -> McmcTrace {
        let keep = |i: &usize| (i + 1).is_multiple_of(k);
        McmcTrace {
            config: self.config.clone(),
            n_nodes: self.n_nodes,
            n_layers: self.n_layers,
            draws: (0..self.draws.len()).filter(keep).map(|i| self.draws[i].clone()).collect(),
            loglayer: (0..self.loglayer.len()).filter(keep).map(|i| self.loglayer[i].clone()).collect(),
            breakpoints: (0..self.breakpoints.len()).filter(keep).map(|i| self.breakpoints[i].clone()).collect(),
            final_state: self.final_state.clone(),
        }
    }
}
