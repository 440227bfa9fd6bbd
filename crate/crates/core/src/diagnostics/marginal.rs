//! Marginal likelihood from likelihood, prior and posterior ordinates at the
//! posterior means.
//!
//! The posterior ordinate factors into up to seven blocks, evaluated in the
//! order `mu_u`, `psi_u`, `mu_v`, `psi_v`, `beta` (with an intercept),
//! `sigma2`, stay probabilities (with more than one regime). The first block
//! is averaged over the main run; each later block comes from a reduced run
//! that holds all earlier blocks at their posterior means. Blocks fixed in
//! the configuration contribute to neither ordinate.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::correction::CorrectedTensor;
use crate::dist::{ln_beta_pdf, ln_inv_gamma_pdf, ln_normal, log_mean_exp};
use crate::error::Result;
use crate::postprocess::{align_draw, aligned_draws, posterior_means};
use crate::sampler::conditionals::{
    beta_posterior, ln_sigma2_density, ln_transition_density, mu_u_posterior, mu_v_posterior, psi_u_posterior,
    psi_v_posterior, BetaLayerStat, InvGammaParams,
};
use crate::sampler::config::{ErrorKind, FixedParams, HmtmConfig};
use crate::sampler::ffbs::forward_filter;
use crate::sampler::likelihood::{gaussian_loglik, layer_residual_sum, layer_ssr, n_cells, student_t_loglik};
use crate::sampler::state::{HmtmState, McmcTrace};
use crate::sampler::Sampler;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChibOptions {
    /// Recorded sweeps per reduced run; defaults to the main run's `mcmc`.
    pub reduced_mcmc: Option<usize>,
    /// Discarded sweeps per reduced run; defaults to a tenth of `mcmc`.
    pub reduced_burnin: Option<usize>,
    /// A block whose ordinate standard error (log units) exceeds this value
    /// produces a warning.
    pub mcse_warn: f64,
}

impl Default for ChibOptions {
    fn default() -> Self {
        ChibOptions {
            reduced_mcmc: None,
            reduced_burnin: None,
            mcse_warn: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockOrdinate {
    pub name: String,
    pub log_prior: f64,
    pub log_posterior: f64,
    /// Batch-means standard error of the posterior ordinate, log units.
    pub mcse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalLikelihood {
    pub neg2_log_marginal: f64,
    /// `-2` times the likelihood ordinate at the posterior means.
    pub neg2_log_lik: f64,
    pub log_lik: f64,
    pub log_prior: f64,
    pub log_posterior: f64,
    pub blocks: Vec<BlockOrdinate>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Block {
    MuU,
    PsiU,
    MuV,
    PsiV,
    Beta,
    Sigma2,
    Stay,
}

impl Block {
    fn name(self) -> &'static str {
        match self {
            Block::MuU => "mu_u",
            Block::PsiU => "psi_u",
            Block::MuV => "mu_v",
            Block::PsiV => "psi_v",
            Block::Beta => "beta",
            Block::Sigma2 => "sigma2",
            Block::Stay => "stay",
        }
    }

    fn is_fixed(self, f: &FixedParams) -> bool {
        match self {
            Block::MuU => f.mu_u.is_some(),
            Block::PsiU => f.psi_u.is_some(),
            Block::MuV => f.mu_v.is_some(),
            Block::PsiV => f.psi_v.is_some(),
            Block::Beta => f.beta.is_some(),
            Block::Sigma2 => f.sigma2.is_some(),
            Block::Stay => f.stay.is_some(),
        }
    }

    fn fix(self, f: &mut FixedParams, star: &Star) {
        match self {
            Block::MuU => f.mu_u = Some(star.mu_u.clone()),
            Block::PsiU => f.psi_u = Some(star.psi_u.clone()),
            Block::MuV => f.mu_v = Some(star.mu_v.clone()),
            Block::PsiV => f.psi_v = Some(star.psi_v.clone()),
            Block::Beta => f.beta = Some(star.beta),
            Block::Sigma2 => f.sigma2 = Some(star.sigma2.clone()),
            Block::Stay => f.stay = Some(star.stay.clone()),
        }
    }
}

/// Evaluation point.
struct Star {
    u: Vec<DMatrix<f64>>,
    v: DMatrix<f64>,
    mu_u: Vec<DVector<f64>>,
    psi_u: Vec<DVector<f64>>,
    mu_v: Vec<DVector<f64>>,
    psi_v: Vec<DVector<f64>>,
    beta: f64,
    sigma2: Vec<f64>,
    stay: Vec<f64>,
}

fn star_point(trace: &McmcTrace) -> Result<Star> {
    let means = posterior_means(trace)?;
    let f = &trace.config.fixed;
    Ok(Star {
        u: f.u.clone().unwrap_or(means.u),
        v: f.v.clone().unwrap_or(means.v),
        mu_u: f.mu_u.clone().unwrap_or(means.mu_u),
        psi_u: f.psi_u.clone().unwrap_or(means.psi_u),
        mu_v: f.mu_v.clone().unwrap_or(means.mu_v),
        psi_v: f.psi_v.clone().unwrap_or(means.psi_v),
        beta: f.beta.unwrap_or(means.beta),
        sigma2: f.sigma2.clone().unwrap_or(means.sigma2),
        stay: f.stay.clone().unwrap_or(means.stay),
    })
}

/// Log likelihood at the evaluation point with the regime path summed out
/// by the forward filter (or conditioned on, when the path is fixed).
fn log_likelihood(b: &CorrectedTensor, config: &HmtmConfig, star: &Star) -> Result<f64> {
    let m = config.n_regimes();
    let cells = n_cells(b.n_nodes());
    let fixed_gamma = config.fixed.gamma.as_ref();
    let p = &config.priors;
    let loglik: Vec<Vec<f64>> = (0..b.n_layers())
        .map(|t| {
            let v = RowDVector::from(star.v.row(t));
            (0..m)
                .map(|k| {
                    let ssr = layer_ssr(b.layer(t), &star.u[k], &v, star.beta);
                    match (config.error_kind, fixed_gamma) {
                        (_, Some(g)) => gaussian_loglik(ssr, cells, star.sigma2[k] / g[t]),
                        (ErrorKind::Normal, None) => gaussian_loglik(ssr, cells, star.sigma2[k]),
                        (ErrorKind::StudentT, None) => student_t_loglik(ssr, cells, star.sigma2[k], p.nu0, p.nu1),
                    }
                })
                .collect()
        })
        .collect();
    if let Some(states) = &config.fixed.states {
        return Ok(states.iter().enumerate().map(|(t, &k)| loglik[t][k]).sum());
    }
    if m == 1 {
        return Ok(loglik.iter().map(|l| l[0]).sum());
    }
    let (_, predictive) = forward_filter(&loglik, &star.stay)?;
    Ok(predictive.iter().sum())
}

fn log_prior(block: Block, config: &HmtmConfig, star: &Star) -> f64 {
    let p = &config.priors;
    let ig = |x: &[DVector<f64>], a: f64, b: f64| -> f64 {
        x.iter().flat_map(|v| v.iter()).map(|&y| ln_inv_gamma_pdf(y, a / 2.0, b / 2.0)).sum()
    };
    let normal = |x: &[DVector<f64>], mean: &[f64], var: &[DVector<f64>]| -> f64 {
        x.iter()
            .zip(var)
            .map(|(xm, vm)| (0..xm.len()).map(|r| ln_normal(xm[r], mean[r], vm[r])).sum::<f64>())
            .sum()
    };
    match block {
        Block::MuU => normal(&star.mu_u, &p.mu0_u, &star.psi_u),
        Block::PsiU => ig(&star.psi_u, p.u0, p.u1),
        Block::MuV => normal(&star.mu_v, &p.mu0_v, &star.psi_v),
        Block::PsiV => ig(&star.psi_v, p.v0, p.v1),
        Block::Beta => ln_normal(star.beta, p.beta_mean, p.beta_var),
        Block::Sigma2 => star.sigma2.iter().map(|&s| ln_inv_gamma_pdf(s, p.c0 / 2.0, p.d0 / 2.0)).sum(),
        Block::Stay => {
            let k = star.stay.len() - 1;
            star.stay[..k].iter().map(|&s| ln_beta_pdf(s, p.a0, p.b0)).sum()
        }
    }
}

/// Log density of the block's full conditional at the evaluation point,
/// given everything else in `st`.
fn log_ordinate(block: Block, b: &CorrectedTensor, config: &HmtmConfig, st: &HmtmState, star: &Star) -> Result<f64> {
    let p = &config.priors;
    let m = config.n_regimes();
    let layers: Vec<Vec<usize>> = (0..m).map(|k| st.path.layers_of(k)).collect();
    let per_regime = |f: &dyn Fn(usize) -> f64| -> f64 { (0..m).map(f).sum() };
    let cells = n_cells(b.n_nodes());
    Ok(match block {
        Block::MuU => per_regime(&|k| mu_u_posterior(&st.u[k], &st.psi_u[k], p).ln_pdf(&star.mu_u[k])),
        Block::PsiU => per_regime(&|k| psi_u_posterior(&st.u[k], p).ln_pdf(&star.psi_u[k])),
        Block::MuV => per_regime(&|k| mu_v_posterior(&st.v, &layers[k], &st.psi_v[k], p).ln_pdf(&star.mu_v[k])),
        Block::PsiV => per_regime(&|k| {
            let post: InvGammaParams = psi_v_posterior(&st.v, &layers[k], p);
            post.ln_pdf(&star.psi_v[k])
        }),
        Block::Beta => {
            let stats: Vec<BetaLayerStat> = (0..b.n_layers())
                .map(|t| {
                    let k = st.path.states[t];
                    BetaLayerStat {
                        residual_sum: layer_residual_sum(b.layer(t), &st.u[k], &RowDVector::from(st.v.row(t))),
                        cells,
                        precision: st.gamma[t] / st.sigma2[k],
                    }
                })
                .collect();
            let (mean, var) = beta_posterior(&stats, p);
            ln_normal(star.beta, mean, var)
        }
        Block::Sigma2 => per_regime(&|k| {
            let ssr: f64 = layers[k]
                .iter()
                .map(|&t| st.gamma[t] * layer_ssr(b.layer(t), &st.u[k], &RowDVector::from(st.v.row(t)), st.beta))
                .sum();
            ln_sigma2_density(star.sigma2[k], ssr, cells * layers[k].len(), p)
        }),
        Block::Stay => ln_transition_density(&star.stay, &st.path.states, p)?,
    })
}

/// Log of the mean of `exp(xs)` and its batch-means standard error.
fn rao_blackwell(xs: &[f64]) -> (f64, f64) {
    let est = log_mean_exp(xs);
    let n_batches = 20.min(xs.len());
    let size = xs.len() / n_batches;
    if size == 0 || n_batches < 2 {
        return (est, f64::NAN);
    }
    let batch: Vec<f64> = (0..n_batches)
        .map(|i| (log_mean_exp(&xs[i * size..(i + 1) * size]) - est).exp())
        .collect();
    let mean = batch.iter().sum::<f64>() / n_batches as f64;
    let var = batch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    (est, (var / n_batches as f64).sqrt() / mean)
}

fn reduced_seed(seed: u64, block: usize) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(block as u64 + 1))
}

/// Estimates `-2 log m(B)` for a completed run.
pub fn chib_marginal_likelihood(b: &CorrectedTensor, trace: &McmcTrace, opts: &ChibOptions) -> Result<MarginalLikelihood> {
    let config = &trace.config;
    let star = star_point(trace)?;
    let log_lik = log_likelihood(b, config, &star)?;

    let mut order = vec![Block::MuU, Block::PsiU, Block::MuV, Block::PsiV];
    if config.with_intercept {
        order.push(Block::Beta);
    }
    order.push(Block::Sigma2);
    if config.n_regimes() > 1 {
        order.push(Block::Stay);
    }
    let free: Vec<Block> = order.into_iter().filter(|blk| !blk.is_fixed(&config.fixed)).collect();

    let reduced_mcmc = opts.reduced_mcmc.unwrap_or(config.mcmc).max(2);
    let reduced_burnin = opts.reduced_burnin.unwrap_or(config.mcmc / 10);
    let aligned = aligned_draws(trace)?;
    let reference = aligned.last().map(|d| d.u.clone()).unwrap_or_default();
    let start = align_draw(&trace.final_state, &reference);

    let mut blocks = Vec::with_capacity(free.len());
    let mut warnings = Vec::new();
    let mut clamped = config.fixed.clone();
    for (j, &block) in free.iter().enumerate() {
        let ordinates: Vec<f64> = if j == 0 {
            aligned
                .iter()
                .map(|d| log_ordinate(block, b, config, d, &star))
                .collect::<Result<_>>()?
        } else {
            let mut reduced = config.clone();
            reduced.fixed = clamped.clone();
            reduced.burnin = reduced_burnin;
            reduced.mcmc = reduced_mcmc;
            reduced.thin = 1;
            reduced.seed = reduced_seed(config.seed, j);
            let mut sampler = Sampler::from_state(b, reduced.clone(), start.clone());
            for _ in 0..reduced_burnin {
                sampler.sweep(false)?;
            }
            let mut xs = Vec::with_capacity(reduced_mcmc);
            for _ in 0..reduced_mcmc {
                sampler.sweep(false)?;
                xs.push(log_ordinate(block, b, &reduced, sampler.state(), &star)?);
            }
            xs
        };
        let (log_posterior, mcse) = rao_blackwell(&ordinates);
        if mcse > opts.mcse_warn {
            warnings.push(format!(
                "{} ordinate standard error {mcse:.3} exceeds {}",
                block.name(),
                opts.mcse_warn
            ));
        }
        blocks.push(BlockOrdinate {
            name: block.name().into(),
            log_prior: log_prior(block, config, &star),
            log_posterior,
            mcse,
        });
        block.fix(&mut clamped, &star);
    }
    let log_prior_total: f64 = blocks.iter().map(|b| b.log_prior).sum();
    let log_post_total: f64 = blocks.iter().map(|b| b.log_posterior).sum();
    let log_marginal = log_lik + log_prior_total - log_post_total;
    Ok(MarginalLikelihood {
        neg2_log_marginal: -2.0 * log_marginal,
        neg2_log_lik: -2.0 * log_lik,
        log_lik,
        log_prior: log_prior_total,
        log_posterior: log_post_total,
        blocks,
        warnings,
    })
}
