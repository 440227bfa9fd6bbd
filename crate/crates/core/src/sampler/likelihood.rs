//! Per-layer Gaussian likelihood over the strict upper triangle.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, RowDVector};
use statrs::function::gamma::ln_gamma;

/// Dyads per layer, `N (N - 1) / 2`.
pub fn n_cells(n_nodes: usize) -> usize {
    n_nodes * n_nodes.saturating_sub(1) / 2
}

/// `U diag(v) U^T`.
pub fn mean_matrix(u: &DMatrix<f64>, v: &RowDVector<f64>) -> DMatrix<f64> {
    let mut scaled = u.clone();
    for (r, mut col) in scaled.column_iter_mut().enumerate() {
        col *= v[r];
    }
    scaled * u.transpose()
}

/// Sum of squared residuals `b_ij - beta - mu_ij` over `i < j`.
pub fn layer_ssr(b: &DMatrix<f64>, u: &DMatrix<f64>, v: &RowDVector<f64>, beta: f64) -> f64 {
    let mu = mean_matrix(u, v);
    let n = b.nrows();
    let mut ssr = 0.0;
    for j in 1..n {
        for i in 0..j {
            let e = b[(i, j)] - beta - mu[(i, j)];
            ssr += e * e;
        }
    }
    ssr
}

/// Sum of residuals over `i < j`, with the intercept excluded.
pub fn layer_residual_sum(b: &DMatrix<f64>, u: &DMatrix<f64>, v: &RowDVector<f64>) -> f64 {
    let mu = mean_matrix(u, v);
    let n = b.nrows();
    let mut s = 0.0;
    for j in 1..n {
        for i in 0..j {
            s += b[(i, j)] - mu[(i, j)];
        }
    }
    s
}

/// Gaussian log density of `cells` independent residuals with variance `var`
/// and the given sum of squares.
pub fn gaussian_loglik(ssr: f64, cells: usize, var: f64) -> f64 {
    -0.5 * cells as f64 * (2.0 * PI * var).ln() - ssr / (2.0 * var)
}

/// Layer log density with the precision weight `gamma ~ Gamma(nu0/2, nu1/2)`
/// integrated out: a multivariate t over the layer's cells.
pub fn student_t_loglik(ssr: f64, cells: usize, sigma2: f64, nu0: f64, nu1: f64) -> f64 {
    let d = cells as f64;
    let shape = 0.5 * (nu0 + d);
    -0.5 * d * (2.0 * PI * sigma2).ln() + 0.5 * nu0 * (0.5 * nu1).ln() - ln_gamma(0.5 * nu0)
        + ln_gamma(shape)
        - shape * (0.5 * (nu1 + ssr / sigma2)).ln()
}

/// `b - beta` off the diagonal, zero on it.
pub fn shifted_layer(b: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    let mut y = b.add_scalar(-beta);
    y.fill_diagonal(0.0);
    y
}

/// `Sum_{i<j} (u_i . u_j) (u_i . u_j)^T` restricted to matching columns:
/// entry `(r, s)` is `Sum_{i<j} u_ir u_jr u_is u_js`.
pub fn upper_gram(u: &DMatrix<f64>) -> DMatrix<f64> {
    let g = u.transpose() * u;
    let r = u.ncols();
    let mut q = g.component_mul(&g);
    for row in u.row_iter() {
        let sq: RowDVector<f64> = row.component_mul(&row);
        for a in 0..r {
            for b in 0..r {
                q[(a, b)] -= sq[a] * sq[b];
            }
        }
    }
    q * 0.5
}

/// Entry `r` is `Sum_{i<j} y_ij u_ir u_jr` for a symmetric `y` with zero
/// diagonal.
pub fn upper_projection(y: &DMatrix<f64>, u: &DMatrix<f64>) -> DVector<f64> {
    let yu = y * u;
    DVector::from_iterator(
        u.ncols(),
        (0..u.ncols()).map(|r| 0.5 * u.column(r).dot(&yu.column(r))),
    )
}
