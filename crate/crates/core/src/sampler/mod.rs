//! Gibbs sampler for the regime-switching bilinear network model.
//!
//! One sweep updates, in order: per regime `psi_u`, `mu_u`, `U`; per regime
//! `psi_v`, `mu_v` and that regime's `v_t`; the intercept; `sigma2`; the
//! Student-t weights; the regime path (with singleton perturbation during
//! burn-in); and the stay probabilities. Fixed blocks are skipped. All
//! randomness comes from one `ChaCha8Rng` seeded with `config.seed`.

pub mod conditionals;
pub mod config;
pub mod ffbs;
pub mod init;
pub mod likelihood;
pub mod state;

use nalgebra::{DMatrix, RowDVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::correction::CorrectedTensor;
use crate::error::Result;

use conditionals::{BetaLayerStat, RegimeLayers};
use config::{ErrorKind, HmtmConfig};
use likelihood::{gaussian_loglik, layer_residual_sum, layer_ssr, n_cells, shifted_layer};
use state::{HmtmState, McmcTrace};

pub use config::{FixedParams, Priors};
pub use init::{apply_fixed, initialize_state};
pub use state::RegimePath;

pub struct Sampler<'a> {
    layers: &'a [DMatrix<f64>],
    config: HmtmConfig,
    state: HmtmState,
    shifted: Vec<DMatrix<f64>>,
    cells: usize,
    rng: ChaCha8Rng,
}

impl<'a> Sampler<'a> {
    pub fn new(b: &'a CorrectedTensor, config: HmtmConfig) -> Result<Self> {
        let state = initialize_state(b, &config)?;
        Ok(Self::from_state(b, config, state))
    }

    /// Starts from a given state; fixed blocks of `config` are applied on top.
    pub fn from_state(b: &'a CorrectedTensor, config: HmtmConfig, mut state: HmtmState) -> Self {
        apply_fixed(&mut state, &config.fixed);
        let shifted = b.layers().iter().map(|l| shifted_layer(l, state.beta)).collect();
        Sampler {
            layers: b.layers(),
            cells: n_cells(b.n_nodes()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            state,
            shifted,
        }
    }

    pub fn state(&self) -> &HmtmState {
        &self.state
    }

    pub fn config(&self) -> &HmtmConfig {
        &self.config
    }

    /// Sum of squared residuals of layer `t` under regime `k`.
    pub fn layer_ssr(&self, t: usize, k: usize) -> f64 {
        layer_ssr(&self.shifted[t], &self.state.u[k], &RowDVector::from(self.state.v.row(t)), 0.0)
    }

    /// Log density of each layer under its current regime, conditional on the
    /// Student-t weights.
    pub fn layer_logliks(&self) -> Vec<f64> {
        (0..self.layers.len())
            .map(|t| {
                let k = self.state.path.states[t];
                let var = self.state.sigma2[k] / self.state.gamma[t];
                gaussian_loglik(self.layer_ssr(t, k), self.cells, var)
            })
            .collect()
    }

    pub fn sweep(&mut self, burnin: bool) -> Result<()> {
        let m = self.config.n_regimes();
        let fixed = self.config.fixed.clone();
        let priors = self.config.priors.clone();
        let rng = &mut self.rng;
        let st = &mut self.state;
        let regimes: Vec<Vec<usize>> = (0..m).map(|k| st.path.layers_of(k)).collect();

        for (k, layers) in regimes.iter().enumerate() {
            if fixed.psi_u.is_none() {
                st.psi_u[k] = conditionals::sample_psi_u(rng, &st.u[k], &priors);
            }
            if fixed.mu_u.is_none() {
                st.mu_u[k] = conditionals::sample_mu_u(rng, &st.u[k], &st.psi_u[k], &priors);
            }
            if fixed.u.is_none() {
                let data = RegimeLayers {
                    regime: k,
                    shifted: &self.shifted,
                    v: &st.v,
                    gamma: &st.gamma,
                    layers,
                };
                st.u[k] = conditionals::sample_u(rng, &data, &st.u[k], &st.mu_u[k], &st.psi_u[k], st.sigma2[k])?;
                if fixed.v.is_none() {
                    rescale_columns(&mut st.u[k], &mut st.v, layers);
                }
            }
        }

        for (k, layers) in regimes.iter().enumerate() {
            if fixed.psi_v.is_none() {
                st.psi_v[k] = conditionals::sample_psi_v(rng, &st.v, layers, &priors);
            }
            if fixed.mu_v.is_none() {
                st.mu_v[k] = conditionals::sample_mu_v(rng, &st.v, layers, &st.psi_v[k], &priors);
            }
            if fixed.v.is_none() {
                for &t in layers {
                    let post = conditionals::v_posterior(
                        &self.shifted[t],
                        &st.u[k],
                        st.gamma[t],
                        st.sigma2[k],
                        &st.mu_v[k],
                        &st.psi_v[k],
                        k,
                    )?;
                    let draw = conditionals::sample_mvn(rng, &post, k)?;
                    st.v.set_row(t, &draw.transpose());
                }
            }
        }

        if self.config.with_intercept && fixed.beta.is_none() {
            let stats: Vec<BetaLayerStat> = (0..self.layers.len())
                .map(|t| {
                    let k = st.path.states[t];
                    BetaLayerStat {
                        residual_sum: layer_residual_sum(&self.layers[t], &st.u[k], &RowDVector::from(st.v.row(t))),
                        cells: self.cells,
                        precision: st.gamma[t] / st.sigma2[k],
                    }
                })
                .collect();
            st.beta = conditionals::sample_beta(rng, &stats, &priors);
            self.shifted = self.layers.iter().map(|l| shifted_layer(l, st.beta)).collect();
        }

        let ssr_at = |st: &HmtmState, t: usize, k: usize| {
            layer_ssr(&self.shifted[t], &st.u[k], &RowDVector::from(st.v.row(t)), 0.0)
        };

        if fixed.sigma2.is_none() {
            for (k, layers) in regimes.iter().enumerate() {
                let ssr: f64 = layers.iter().map(|&t| st.gamma[t] * ssr_at(st, t, k)).sum();
                st.sigma2[k] = conditionals::sample_sigma2(rng, ssr, self.cells * layers.len(), &priors);
            }
        }

        if self.config.error_kind == ErrorKind::StudentT && fixed.gamma.is_none() {
            for t in 0..self.layers.len() {
                let k = st.path.states[t];
                st.gamma[t] =
                    conditionals::sample_gamma_weight(rng, ssr_at(st, t, k), self.cells, st.sigma2[k], &priors);
            }
        }

        if m > 1 && fixed.states.is_none() {
            let loglik: Vec<Vec<f64>> = (0..self.layers.len())
                .map(|t| {
                    (0..m)
                        .map(|k| gaussian_loglik(ssr_at(st, t, k), self.cells, st.sigma2[k] / st.gamma[t]))
                        .collect()
                })
                .collect();
            let mut states = ffbs::ffbs_states(rng, &loglik, &st.path.stay)?;
            if burnin {
                states = ffbs::perturb_singletons(rng, &states, m, self.config.perturb_weights.as_deref());
            }
            st.path.states = states;
        }

        if m > 1 && fixed.stay.is_none() {
            st.path.stay = conditionals::sample_transition(rng, &st.path.states, m, &priors)?;
        }
        Ok(())
    }

    /// Runs burn-in and the recorded sweeps, calling `observe` after every
    /// recorded sweep (before thinning).
    pub fn run_with<F: FnMut(&Sampler<'a>) -> Result<()>>(mut self, mut observe: F) -> Result<McmcTrace> {
        for _ in 0..self.config.burnin {
            self.sweep(true)?;
        }
        let n_draws = self.config.n_draws();
        let mut draws = Vec::with_capacity(n_draws);
        let mut loglayer = Vec::with_capacity(n_draws);
        let mut breakpoints = Vec::with_capacity(n_draws);
        for i in 0..self.config.mcmc {
            self.sweep(false)?;
            observe(&self)?;
            if (i + 1) % self.config.thin == 0 {
                draws.push(self.state.clone());
                loglayer.push(self.layer_logliks());
                breakpoints.push(self.state.path.breakpoints());
            }
        }
        Ok(McmcTrace {
            n_nodes: self.layers[0].nrows(),
            n_layers: self.layers.len(),
            config: self.config,
            draws,
            loglayer,
            breakpoints,
            final_state: self.state,
        })
    }

    pub fn run(self) -> Result<McmcTrace> {
        self.run_with(|_| Ok(()))
    }
}

/// Scales every column of `u` to unit length and multiplies the matching
/// generation rules of `layers` by the squared former length, which leaves
/// `U diag(v_t) U^T` unchanged. Without this the column scale, which the
/// likelihood does not identify, drifts without bound.
pub fn rescale_columns(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>, layers: &[usize]) {
    for r in 0..u.ncols() {
        let norm2 = u.column(r).norm_squared();
        if norm2 > 0.0 && norm2.is_finite() {
            u.column_mut(r).unscale_mut(norm2.sqrt());
            for &t in layers {
                v[(t, r)] *= norm2;
            }
        }
    }
}

/// Fits the model from its default initialization.
pub fn fit_hmtm(b: &CorrectedTensor, config: &HmtmConfig) -> Result<McmcTrace> {
    Sampler::new(b, config.clone())?.run()
}
