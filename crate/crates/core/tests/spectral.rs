use hmtm::spectral::{principal_eigen, sorted_eigenpairs};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi rotations; returns eigenvalues and eigenvectors (columns).
fn jacobi(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut vecs = DMatrix::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut rot = DMatrix::identity(n, n);
                rot[(p, p)] = c;
                rot[(q, q)] = c;
                rot[(p, q)] = s;
                rot[(q, p)] = -s;
                m = rot.transpose() * &m * &rot;
                vecs = &vecs * &rot;
            }
        }
    }
    ((0..n).map(|i| m[(i, i)]).collect(), vecs)
}

fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(n, n, |_, _| hmtm::dist::standard_normal(&mut rng));
    (&raw + raw.transpose()) * 0.5
}

#[test]
fn principal_pair_matches_jacobi_oracle() {
    for seed in 0..20 {
        let a = random_symmetric(5, seed);
        let (values, vectors) = jacobi(&a);
        let k = (0..5).max_by(|&i, &j| values[i].abs().total_cmp(&values[j].abs())).unwrap();
        let pair = principal_eigen(&a).unwrap();
        assert!((pair.value - values[k]).abs() < 1e-8, "seed {seed}");
        let oracle = vectors.column(k);
        let dot = pair.vector.dot(&oracle).abs();
        assert!((dot - 1.0).abs() < 1e-8, "seed {seed}: |<v, oracle>| = {dot}");
        let resid = (&a * &pair.vector - &pair.vector * pair.value).amax();
        assert!(resid <= 1e-8 * pair.value.abs().max(1.0));
    }
}

#[test]
fn full_spectrum_matches_jacobi_oracle() {
    let a = random_symmetric(5, 99);
    let (mut values, _) = jacobi(&a);
    values.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    let pairs = sorted_eigenpairs(&a).unwrap();
    for (p, v) in pairs.iter().zip(&values) {
        assert!((p.value - v).abs() < 1e-8);
        assert!((p.vector.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn two_by_two_swap_matrix() {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let p = principal_eigen(&a).unwrap();
    assert_eq!(p.value, 1.0);
    let h = 0.5f64.sqrt();
    assert!((p.vector[0] - h).abs() < 1e-12 && (p.vector[1] - h).abs() < 1e-12);
}
