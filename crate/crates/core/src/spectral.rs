//! Dense symmetric eigen-decomposition helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{HmtmError, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const TIE_TOL: f64 = 1e-10;

/// An eigenvalue with its unit eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DVector<f64>,
}

/// Eigenpairs of a symmetric matrix ordered by descending `|lambda|`, with
/// ties broken toward the positive eigenvalue. Each vector has unit norm and
/// its largest-magnitude component positive.
pub fn sorted_eigenpairs(a: &DMatrix<f64>) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(HmtmError::Shape(format!("{}x{} matrix is not square", n, a.ncols())));
    }
    let scale = a.amax().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (a[(i, j)], a[(j, i)]);
            if !x.is_finite() || !y.is_finite() {
                return Err(HmtmError::Eigen(format!("non-finite entry at ({i}, {j})")));
            }
            if (x - y).abs() > SYMMETRY_TOL * scale {
                return Err(HmtmError::Eigen(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| HmtmError::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|k| EigenPair {
            value: eig.eigenvalues[k],
            vector: fix_sign(eig.eigenvectors.column(k).normalize()),
        })
        .collect();
    let tol = TIE_TOL * scale;
    pairs.sort_by(|p, q| {
        let (ap, aq) = (p.value.abs(), q.value.abs());
        if (ap - aq).abs() <= tol {
            q.value.total_cmp(&p.value)
        } else {
            aq.total_cmp(&ap)
        }
    });
    Ok(pairs)
}

/// The eigenpair whose eigenvalue has maximum absolute value.
///
/// The zero matrix yields `(0, e_0)`.
pub fn principal_eigen(a: &DMatrix<f64>) -> Result<EigenPair> {
    let n = a.nrows();
    if n == 0 {
        return Err(HmtmError::Shape("empty matrix".into()));
    }
    let mut pairs = sorted_eigenpairs(a)?;
    let top = pairs.swap_remove(0);
    if top.value == 0.0 || a.iter().all(|&x| x == 0.0) {
        let mut e0 = DVector::zeros(n);
        e0[0] = 1.0;
        return Ok(EigenPair { value: 0.0, vector: e0 });
    }
    Ok(top)
}

/// Flips the vector so its largest-magnitude component (first one on ties)
/// is positive.
pub fn fix_sign(mut v: DVector<f64>) -> DVector<f64> {
    let max = v.amax();
    if max == 0.0 {
        return v;
    }
    let lead = v.iter().position(|x| (x.abs() - max).abs() <= 1e-12 * max).unwrap_or(0);
    if v[lead] < 0.0 {
        v.neg_mut();
    }
    v
}
