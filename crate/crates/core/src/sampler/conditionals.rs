//! Full conditional distributions of the Gibbs sampler.
//!
//! Each block has a `*_posterior` function returning the parameters of its
//! conditional (used by the moment tests and the marginal-likelihood
//! ordinates) and a `sample_*` function drawing from it.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::dist::{
    self, ln_beta_pdf, ln_gamma_pdf, ln_inv_gamma_pdf, ln_normal, sample_gamma, sample_inv_gamma, standard_normal,
};
use crate::error::{HmtmError, Result};

use super::config::Priors;
use super::likelihood::{upper_gram, upper_projection};

/// Independent inverse-gamma conditionals, one per latent dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct InvGammaParams {
    pub shape: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InvGammaParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(
            self.shape.len(),
            self.shape.iter().zip(&self.scale).map(|(&a, &b)| sample_inv_gamma(rng, a, b)),
        )
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        (0..x.len()).map(|r| ln_inv_gamma_pdf(x[r], self.shape[r], self.scale[r])).sum()
    }
}

/// Normal with diagonal covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagNormalParams {
    pub mean: DVector<f64>,
    pub var: DVector<f64>,
}

impl DiagNormalParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(
            self.mean.len(),
            (0..self.mean.len()).map(|r| self.mean[r] + self.var[r].sqrt() * standard_normal(rng)),
        )
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        (0..x.len()).map(|r| ln_normal(x[r], self.mean[r], self.var[r])).sum()
    }
}

/// `psi_r ~ IG((u0 + N) / 2, (U_r^T U_r + u1) / 2)`.
pub fn psi_u_posterior(u: &DMatrix<f64>, priors: &Priors) -> InvGammaParams {
    let n = u.nrows() as f64;
    InvGammaParams {
        shape: vec![0.5 * (priors.u0 + n); u.ncols()],
        scale: u.column_iter().map(|c| 0.5 * (c.norm_squared() + priors.u1)).collect(),
    }
}

pub fn sample_psi_u<R: Rng + ?Sized>(rng: &mut R, u: &DMatrix<f64>, priors: &Priors) -> DVector<f64> {
    psi_u_posterior(u, priors).sample(rng)
}

/// `mu_u ~ N((U^T 1 + mu0) / (N + 1), Psi / (N + 1))`.
pub fn mu_u_posterior(u: &DMatrix<f64>, psi_u: &DVector<f64>, priors: &Priors) -> DiagNormalParams {
    let n1 = u.nrows() as f64 + 1.0;
    let sums: DVector<f64> = u.row_sum().transpose();
    DiagNormalParams {
        mean: (sums + priors.mu0_u()) / n1,
        var: psi_u / n1,
    }
}

pub fn sample_mu_u<R: Rng + ?Sized>(
    rng: &mut R,
    u: &DMatrix<f64>,
    psi_u: &DVector<f64>,
    priors: &Priors,
) -> DVector<f64> {
    mu_u_posterior(u, psi_u, priors).sample(rng)
}

/// Layers of one regime together with their generation rules and weights.
pub struct RegimeLayers<'a> {
    pub regime: usize,
    /// Intercept-shifted layers, indexed by layer.
    pub shifted: &'a [DMatrix<f64>],
    pub v: &'a DMatrix<f64>,
    pub gamma: &'a [f64],
    pub layers: &'a [usize],
}

/// Normal conditional of one row of `U_m` given the other rows.
pub fn u_row_posterior(
    data: &RegimeLayers<'_>,
    u: &DMatrix<f64>,
    i: usize,
    mu_u: &DVector<f64>,
    psi_u: &DVector<f64>,
    sigma2: f64,
) -> Result<MvNormalParams> {
    let rank = u.ncols();
    let mut gram = u.transpose() * u;
    let ui = u.row(i).transpose();
    gram -= &ui * ui.transpose();
    let mut w = DMatrix::<f64>::zeros(rank, rank);
    let mut rhs = DVector::<f64>::zeros(rank);
    for &t in data.layers {
        let vt = data.v.row(t).transpose();
        let g = data.gamma[t];
        w += &vt * vt.transpose() * g;
        let yu = data.shifted[t].row(i) * u;
        for r in 0..rank {
            rhs[r] += g * vt[r] * yu[r];
        }
    }
    let mut prec = gram.component_mul(&w) / sigma2;
    rhs /= sigma2;
    for r in 0..rank {
        prec[(r, r)] += 1.0 / psi_u[r];
        rhs[r] += mu_u[r] / psi_u[r];
    }
    let cov = invert_spd(prec, data.regime, "latent positions")?;
    Ok(MvNormalParams { mean: &cov * rhs, cov })
}

/// Draws the rows of `U_m` one node at a time, each from its conditional
/// given the current values of the others, then orthogonalizes the columns.
/// Each row consumes `R` standard normals.
pub fn sample_u<R: Rng + ?Sized>(
    rng: &mut R,
    data: &RegimeLayers<'_>,
    u: &DMatrix<f64>,
    mu_u: &DVector<f64>,
    psi_u: &DVector<f64>,
    sigma2: f64,
) -> Result<DMatrix<f64>> {
    let mut out = u.clone();
    for i in 0..u.nrows() {
        let post = u_row_posterior(data, &out, i, mu_u, psi_u, sigma2)?;
        let row = sample_mvn(rng, &post, data.regime)?;
        out.set_row(i, &row.transpose());
    }
    Ok(gram_schmidt(&out))
}

/// Modified Gram-Schmidt without normalization: each column is made
/// orthogonal to the preceding ones and keeps its remaining length.
pub fn gram_schmidt(u: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = u.clone();
    for r in 0..out.ncols() {
        for s in 0..r {
            let denom = out.column(s).norm_squared();
            if denom > 0.0 {
                let coef = out.column(r).dot(&out.column(s)) / denom;
                let prev = out.column(s).clone_owned();
                out.column_mut(r).axpy(-coef, &prev, 1.0);
            }
        }
    }
    out
}

/// `psi_{v,m,r} ~ IG((v0 + T_m) / 2, (Sum_{t in m} v_tr^2 + v1) / 2)`.
pub fn psi_v_posterior(v: &DMatrix<f64>, layers: &[usize], priors: &Priors) -> InvGammaParams {
    let tm = layers.len() as f64;
    InvGammaParams {
        shape: vec![0.5 * (priors.v0 + tm); v.ncols()],
        scale: (0..v.ncols())
            .map(|r| 0.5 * (layers.iter().map(|&t| v[(t, r)].powi(2)).sum::<f64>() + priors.v1))
            .collect(),
    }
}

pub fn sample_psi_v<R: Rng + ?Sized>(
    rng: &mut R,
    v: &DMatrix<f64>,
    layers: &[usize],
    priors: &Priors,
) -> DVector<f64> {
    psi_v_posterior(v, layers, priors).sample(rng)
}

/// `mu_{v,m} ~ N((Sum_{t in m} v_t + mu0) / (T_m + 1), Psi_{v,m} / (T_m + 1))`.
pub fn mu_v_posterior(
    v: &DMatrix<f64>,
    layers: &[usize],
    psi_v: &DVector<f64>,
    priors: &Priors,
) -> DiagNormalParams {
    let tm1 = layers.len() as f64 + 1.0;
    let mut sums = priors.mu0_v();
    for &t in layers {
        sums += v.row(t).transpose();
    }
    DiagNormalParams {
        mean: sums / tm1,
        var: psi_v / tm1,
    }
}

pub fn sample_mu_v<R: Rng + ?Sized>(
    rng: &mut R,
    v: &DMatrix<f64>,
    layers: &[usize],
    psi_v: &DVector<f64>,
    priors: &Priors,
) -> DVector<f64> {
    mu_v_posterior(v, layers, psi_v, priors).sample(rng)
}

/// Normal conditional of one generation rule `v_t`.
#[derive(Clone, Debug)]
pub struct MvNormalParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Conditional of `v_t` given the regime's positions, using the
/// upper-triangular likelihood.
#[allow(clippy::too_many_arguments)]
pub fn v_posterior(
    shifted: &DMatrix<f64>,
    u: &DMatrix<f64>,
    gamma: f64,
    sigma2: f64,
    mu_v: &DVector<f64>,
    psi_v: &DVector<f64>,
    regime: usize,
) -> Result<MvNormalParams> {
    let rank = u.ncols();
    let mut prec = upper_gram(u) * (gamma / sigma2);
    let mut rhs = upper_projection(shifted, u) * (gamma / sigma2);
    for r in 0..rank {
        prec[(r, r)] += 1.0 / psi_v[r];
        rhs[r] += mu_v[r] / psi_v[r];
    }
    let cov = invert_spd(prec, regime, "generation rule")?;
    Ok(MvNormalParams { mean: &cov * rhs, cov })
}

pub fn sample_mvn<R: Rng + ?Sized>(rng: &mut R, p: &MvNormalParams, regime: usize) -> Result<DVector<f64>> {
    let chol = Cholesky::new(p.cov.clone()).ok_or_else(|| singular(regime, "generation rule"))?;
    let z = DVector::from_iterator(p.mean.len(), (0..p.mean.len()).map(|_| standard_normal(rng)));
    Ok(&p.mean + chol.l() * z)
}

/// `sigma2_m ~ IG((c0 + E_m) / 2, (d0 + SSR_m) / 2)`, where `ssr` is the
/// gamma-weighted sum of squared residuals over the regime's `cells`.
pub fn sigma2_posterior(ssr: f64, cells: usize, priors: &Priors) -> (f64, f64) {
    (0.5 * (priors.c0 + cells as f64), 0.5 * (priors.d0 + ssr))
}

pub fn sample_sigma2<R: Rng + ?Sized>(rng: &mut R, ssr: f64, cells: usize, priors: &Priors) -> f64 {
    let (a, b) = sigma2_posterior(ssr, cells, priors);
    sample_inv_gamma(rng, a, b)
}

pub fn ln_sigma2_density(x: f64, ssr: f64, cells: usize, priors: &Priors) -> f64 {
    let (a, b) = sigma2_posterior(ssr, cells, priors);
    ln_inv_gamma_pdf(x, a, b)
}

/// Per-layer sufficient statistics for the intercept: the residual sum
/// (intercept excluded) and the layer's precision `gamma_t / sigma2`.
#[derive(Clone, Copy, Debug)]
pub struct BetaLayerStat {
    pub residual_sum: f64,
    pub cells: usize,
    pub precision: f64,
}

/// `beta ~ N(b1, B1)`, `B1 = (1/B0 + Sum_t prec_t D_t)^-1`,
/// `b1 = B1 (b0/B0 + Sum_t prec_t r_t)`.
pub fn beta_posterior(stats: &[BetaLayerStat], priors: &Priors) -> (f64, f64) {
    let mut prec = 1.0 / priors.beta_var;
    let mut num = priors.beta_mean / priors.beta_var;
    for s in stats {
        prec += s.precision * s.cells as f64;
        num += s.precision * s.residual_sum;
    }
    (num / prec, 1.0 / prec)
}

pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, stats: &[BetaLayerStat], priors: &Priors) -> f64 {
    let (mean, var) = beta_posterior(stats, priors);
    mean + var.sqrt() * standard_normal(rng)
}

/// `gamma_t ~ Gamma((nu0 + D_t) / 2, (nu1 + SSR_t / sigma2) / 2)` as
/// (shape, rate).
pub fn gamma_posterior(ssr: f64, cells: usize, sigma2: f64, priors: &Priors) -> (f64, f64) {
    (0.5 * (priors.nu0 + cells as f64), 0.5 * (priors.nu1 + ssr / sigma2))
}

pub fn sample_gamma_weight<R: Rng + ?Sized>(
    rng: &mut R,
    ssr: f64,
    cells: usize,
    sigma2: f64,
    priors: &Priors,
) -> f64 {
    let (a, b) = gamma_posterior(ssr, cells, sigma2, priors);
    sample_gamma(rng, a, b)
}

pub fn ln_gamma_weight_density(x: f64, ssr: f64, cells: usize, sigma2: f64, priors: &Priors) -> f64 {
    let (a, b) = gamma_posterior(ssr, cells, sigma2, priors);
    ln_gamma_pdf(x, a, b)
}

/// Beta parameters of each non-terminal stay probability:
/// `p_kk ~ Beta(a0 + j_kk - 1, b0 + j_k,k+1)`, with `j_kk` the number of
/// self-transitions of regime `k` and `j_k,k+1` its exits (always 1 on a
/// valid path). Fails when the first parameter is not positive, which with
/// `a0 <= 1` happens for a single-layer regime.
pub fn transition_posterior(states: &[usize], n_regimes: usize, priors: &Priors) -> Result<Vec<(f64, f64)>> {
    stay_params(states, n_regimes, priors)
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            if a <= 0.0 {
                Err(HmtmError::InsufficientDwell { regime: k, shape: a })
            } else {
                Ok((a, b))
            }
        })
        .collect()
}

fn stay_params(states: &[usize], n_regimes: usize, priors: &Priors) -> Vec<(f64, f64)> {
    let mut stays = vec![0usize; n_regimes];
    let mut exits = vec![0usize; n_regimes];
    for w in states.windows(2) {
        if w[0] == w[1] {
            stays[w[0]] += 1;
        } else {
            exits[w[0]] += 1;
        }
    }
    (0..n_regimes.saturating_sub(1))
        .map(|k| (priors.a0 + stays[k] as f64 - 1.0, priors.b0 + exits[k] as f64))
        .collect()
}

/// Parameters used inside the chain: as [`transition_posterior`], except that
/// a regime whose first parameter is not positive falls back to
/// `Beta(a0, b0 + j_k,k+1)` so that a single-layer regime does not stop the run.
pub fn stay_conditional(states: &[usize], n_regimes: usize, priors: &Priors) -> Vec<(f64, f64)> {
    stay_params(states, n_regimes, priors)
        .into_iter()
        .map(|(a, b)| if a > 0.0 { (a, b) } else { (priors.a0, b) })
        .collect()
}

/// Draws the stay probabilities; the terminal regime is absorbing.
pub fn sample_transition<R: Rng + ?Sized>(
    rng: &mut R,
    states: &[usize],
    n_regimes: usize,
    priors: &Priors,
) -> Result<Vec<f64>> {
    let mut stay: Vec<f64> = stay_conditional(states, n_regimes, priors)
        .into_iter()
        .map(|(a, b)| dist::sample_beta(rng, a, b))
        .collect();
    stay.push(1.0);
    Ok(stay)
}

pub fn ln_transition_density(stay: &[f64], states: &[usize], priors: &Priors) -> Result<f64> {
    let params = stay_conditional(states, stay.len(), priors);
    Ok(params.iter().zip(stay).map(|(&(a, b), &p)| ln_beta_pdf(p, a, b)).sum())
}

fn singular(regime: usize, context: &str) -> HmtmError {
    HmtmError::SingularPosterior {
        regime,
        context: context.to_string(),
    }
}

fn invert_spd(prec: DMatrix<f64>, regime: usize, context: &str) -> Result<DMatrix<f64>> {
    let chol: Cholesky<f64, Dyn> = Cholesky::new(prec).ok_or_else(|| singular(regime, context))?;
    let mut inv = chol.inverse();
    // Keep exact symmetry for the subsequent factorization.
    let n = inv.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = a;
            inv[(j, i)] = a;
        }
    }
    if inv.iter().all(|x| x.is_finite()) {
        Ok(inv)
    } else {
        Err(singular(regime, context))
    }
}
