use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HmtmError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    #[default]
    Normal,
    StudentT,
}

impl std::str::FromStr for ErrorKind {
    type Err = HmtmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "gaussian" => Ok(ErrorKind::Normal),
            "t" | "student-t" | "studentt" => Ok(ErrorKind::StudentT),
            other => Err(HmtmError::Parse(format!("unknown error kind `{other}`"))),
        }
    }
}

/// Hyperparameters. Inverse-gamma priors are `IG(x0 / 2, x1 / 2)`; the
/// Student-t mixing weights are `Gamma(nu0 / 2, nu1 / 2)` (shape, rate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
    pub c0: f64,
    pub d0: f64,
    /// Beta prior on the probability of staying in a regime.
    pub a0: f64,
    pub b0: f64,
    pub nu0: f64,
    pub nu1: f64,
    pub mu0_u: Vec<f64>,
    pub mu0_v: Vec<f64>,
    pub beta_mean: f64,
    pub beta_var: f64,
}

impl Priors {
    pub fn weakly_informative(rank: usize) -> Self {
        Priors {
            u0: 10.0,
            u1: 1.0,
            v0: 10.0,
            v1: 1.0,
            c0: 1.0,
            d0: 1.0,
            a0: 1.0,
            b0: 1.0,
            nu0: 5.0,
            nu1: 5.0,
            mu0_u: vec![0.0; rank],
            mu0_v: vec![0.0; rank],
            beta_mean: 0.0,
            beta_var: 10.0,
        }
    }

    pub(crate) fn mu0_u(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mu0_u)
    }

    pub(crate) fn mu0_v(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mu0_v)
    }
}

/// Parameters held at given values instead of being sampled. Used for
/// conditional simulation studies and for the reduced runs of the marginal
/// likelihood estimator; a fixed block contributes nothing to the prior and
/// posterior ordinates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<DMatrix<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<DMatrix<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_u: Option<Vec<DVector<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_u: Option<Vec<DVector<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_v: Option<Vec<DVector<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_v: Option<Vec<DVector<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    /// Stay probabilities `p_kk`, one per regime (last entry 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stay: Option<Vec<f64>>,
    /// Regime of every layer (0-based).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<usize>>,
}

impl FixedParams {
    pub fn is_empty(&self) -> bool {
        *self == FixedParams::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmtmConfig {
    /// Number of change points; the model has `n_breaks + 1` regimes.
    pub n_breaks: usize,
    pub rank: usize,
    pub burnin: usize,
    pub mcmc: usize,
    pub thin: usize,
    pub priors: Priors,
    pub error_kind: ErrorKind,
    pub with_intercept: bool,
    /// Regime weights for redrawing singleton paths during burn-in; `None`
    /// means uniform over break positions.
    #[serde(default)]
    pub perturb_weights: Option<Vec<f64>>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "FixedParams::is_empty")]
    pub fixed: FixedParams,
}

impl HmtmConfig {
    pub fn new(n_breaks: usize, rank: usize) -> Self {
        HmtmConfig {
            n_breaks,
            rank,
            burnin: 1000,
            mcmc: 1000,
            thin: 1,
            priors: Priors::weakly_informative(rank),
            error_kind: ErrorKind::Normal,
            with_intercept: false,
            perturb_weights: None,
            seed: 1,
            fixed: FixedParams::default(),
        }
    }

    pub fn n_regimes(&self) -> usize {
        self.n_breaks + 1
    }

    pub fn with_run(mut self, burnin: usize, mcmc: usize, thin: usize) -> Self {
        self.burnin = burnin;
        self.mcmc = mcmc;
        self.thin = thin;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of stored draws.
    pub fn n_draws(&self) -> usize {
        self.mcmc / self.thin.max(1)
    }

    pub fn validate(&self, n_nodes: usize, n_layers: usize) -> Result<()> {
        let bad = |msg: String| Err(HmtmError::InvalidConfig(msg));
        let m = self.n_regimes();
        if self.rank == 0 || self.rank > n_nodes {
            return bad(format!("rank {} must lie in [1, {n_nodes}]", self.rank));
        }
        if n_layers < 2 * m {
            return bad(format!(
                "{n_layers} layers cannot host {m} regimes of at least two layers"
            ));
        }
        if self.thin == 0 || self.mcmc < self.thin {
            return bad(format!("mcmc ({}) must be >= thin ({}) >= 1", self.mcmc, self.thin));
        }
        let p = &self.priors;
        for (name, value) in [
            ("u0", p.u0),
            ("u1", p.u1),
            ("v0", p.v0),
            ("v1", p.v1),
            ("c0", p.c0),
            ("d0", p.d0),
            ("a0", p.a0),
            ("b0", p.b0),
            ("nu0", p.nu0),
            ("nu1", p.nu1),
            ("beta_var", p.beta_var),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(format!("prior {name} = {value} must be positive"));
            }
        }
        if p.mu0_u.len() != self.rank || p.mu0_v.len() != self.rank {
            return bad("prior means must have length rank".into());
        }
        if let Some(w) = &self.perturb_weights {
            let total: f64 = w.iter().sum();
            if w.len() != m || w.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-8 {
                return bad(format!("perturb_weights must be {m} non-negative values summing to 1"));
            }
        }
        self.validate_fixed(n_nodes, n_layers)
    }

    fn validate_fixed(&self, n: usize, t: usize) -> Result<()> {
        let (m, r) = (self.n_regimes(), self.rank);
        let f = &self.fixed;
        let bad = |what: &str| Err(HmtmError::InvalidConfig(format!("fixed {what} has the wrong shape")));
        if let Some(u) = &f.u {
            if u.len() != m || u.iter().any(|x| x.shape() != (n, r)) {
                return bad("u");
            }
        }
        if let Some(v) = &f.v {
            if v.shape() != (t, r) {
                return bad("v");
            }
        }
        for (name, vecs) in [
            ("mu_u", &f.mu_u),
            ("psi_u", &f.psi_u),
            ("mu_v", &f.mu_v),
            ("psi_v", &f.psi_v),
        ] {
            if let Some(vs) = vecs {
                if vs.len() != m || vs.iter().any(|x| x.len() != r) {
                    return bad(name);
                }
            }
        }
        if f.sigma2.as_ref().is_some_and(|s| s.len() != m) {
            return bad("sigma2");
        }
        if f.gamma.as_ref().is_some_and(|g| g.len() != t) {
            return bad("gamma");
        }
        if f.stay.as_ref().is_some_and(|p| p.len() != m) {
            return bad("stay");
        }
        if let Some(states) = &f.states {
            super::state::RegimePath::check_states(states, m)?;
            if states.len() != t {
                return bad("states");
            }
        }
        Ok(())
    }
}
