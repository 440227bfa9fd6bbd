//! Randomized checks of the type invariants, 1000 cases each.

use hmtm::diagnostics::{average_loss, waic_terms};
use hmtm::postprocess::{identification_map, kmeans_blocks, ColumnMap};
use hmtm::sampler::conditionals::{gram_schmidt, sample_transition, sample_u, RegimeLayers};
use hmtm::sampler::ffbs::{ffbs_states, perturb_singletons};
use hmtm::sampler::state::columns_orthogonal;
use hmtm::{degree_correct, HmtmConfig, HmtmState, McmcTrace, NetworkTensor, NullKind, Priors, RegimePath};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(1000)
}

/// Random forward path over `t` layers through `m` regimes.
fn path_strategy() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (2usize..5, 0usize..8).prop_flat_map(|(m, extra)| {
        let t = m + extra;
        proptest::sample::subsequence((1..t).collect::<Vec<_>>(), m - 1)
            .prop_map(move |breaks| (m, RegimePath::from_breaks(&breaks, t).states))
    })
}

fn symmetric_tensor() -> impl Strategy<Value = NetworkTensor> {
    (2usize..7, 1usize..4).prop_flat_map(|(n, t)| {
        proptest::collection::vec(proptest::collection::vec(0.0f64..3.0, n * n), t).prop_map(move |raw| {
            let layers = raw
                .into_iter()
                .map(|vals| {
                    let a = DMatrix::from_vec(n, n, vals);
                    let mut s = DMatrix::from_fn(n, n, |i, j| if i < j { a[(i, j)].round() } else { a[(j, i)].round() });
                    s.fill_diagonal(0.0);
                    s
                })
                .collect();
            NetworkTensor::from_layers(layers).unwrap()
        })
    })
}

fn bare_state(t: usize, m: usize) -> HmtmState {
    HmtmState {
        u: vec![DMatrix::zeros(2, 1); m],
        mu_u: vec![DVector::zeros(1); m],
        psi_u: vec![DVector::from_element(1, 1.0); m],
        v: DMatrix::zeros(t, 1),
        mu_v: vec![DVector::zeros(1); m],
        psi_v: vec![DVector::from_element(1, 1.0); m],
        sigma2: vec![1.0; m],
        beta: 0.0,
        gamma: vec![1.0; t],
        path: RegimePath::equal_partition(t, m),
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn ffbs_paths_are_forward(seed in any::<u64>(), m in 1usize..4, extra in 0usize..6,
                              ll in proptest::collection::vec(-50.0f64..0.0, 40),
                              stay_raw in proptest::collection::vec(0.05f64..0.95, 3)) {
        let t = m + extra;
        let loglik: Vec<Vec<f64>> = (0..t).map(|i| (0..m).map(|k| ll[(i * m + k) % ll.len()]).collect()).collect();
        let mut stay: Vec<f64> = stay_raw[..m - 1].to_vec();
        stay.push(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = ffbs_states(&mut rng, &loglik, &stay).unwrap();
        let path = RegimePath { states, stay };
        prop_assert!(path.validate().is_ok());
    }

    #[test]
    fn transition_matrix_structure((m, states) in path_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stay = sample_transition(&mut rng, &states, m, &Priors::weakly_informative(1)).unwrap();
        let p = RegimePath { states, stay }.transition_matrix();
        for i in 0..m {
            let row_sum: f64 = p.row(i).iter().sum();
            prop_assert!((row_sum - 1.0).abs() < 1e-12);
            for j in 0..m {
                if j != i && j != i + 1 {
                    prop_assert_eq!(p[(i, j)], 0.0);
                }
            }
        }
        prop_assert_eq!(p[(m - 1, m - 1)], 1.0);
    }

    #[test]
    fn perturbation_keeps_paths_valid((m, states) in path_strategy(), seed in any::<u64>(), weighted in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..m).map(|k| (k + 1) as f64).collect();
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let out = perturb_singletons(&mut rng, &states, m, weighted.then_some(weights.as_slice()));
        let path = RegimePath { states: out.clone(), stay: vec![1.0; m] };
        prop_assert!(path.validate().is_ok());
        if !(RegimePath { states: states.clone(), stay: vec![1.0; m] }).has_singleton() {
            prop_assert_eq!(out, states);
        }
    }

    #[test]
    fn gram_schmidt_orthogonalizes(vals in proptest::collection::vec(-5.0f64..5.0, 24), rank in 1usize..4) {
        let u = DMatrix::from_fn(24 / rank, rank, |i, r| vals[(i * rank + r) % 24]);
        let q = gram_schmidt(&u);
        prop_assert!(columns_orthogonal(&q, 1e-8));
        let again = gram_schmidt(&q);
        prop_assert!((&again - &q).amax() <= 1e-12 * q.amax().max(1.0) * 10.0);
    }

    #[test]
    fn sampled_positions_orthogonal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 5;
        let layers: Vec<DMatrix<f64>> = (0..3).map(|_| {
            let a = DMatrix::from_fn(n, n, |_, _| hmtm::dist::standard_normal(&mut rng));
            let mut s = &a + a.transpose();
            s.fill_diagonal(0.0);
            s
        }).collect();
        let v = DMatrix::from_fn(3, 2, |_, _| hmtm::dist::standard_normal(&mut rng));
        let u0 = DMatrix::from_fn(n, 2, |_, _| hmtm::dist::standard_normal(&mut rng));
        let gamma = vec![1.0; 3];
        let data = RegimeLayers { regime: 0, shifted: &layers, v: &v, gamma: &gamma, layers: &[0, 1, 2] };
        let u = sample_u(&mut rng, &data, &u0, &DVector::zeros(2), &DVector::from_element(2, 1.0), 1.0).unwrap();
        prop_assert!(columns_orthogonal(&u, 1e-8));
    }

    #[test]
    fn correction_symmetric_and_reconstructs(y in symmetric_tensor(), modularity in any::<bool>()) {
        let kind = if modularity { NullKind::Modularity } else { NullKind::PrincipalEigen };
        let b = match degree_correct(&y, kind) {
            Ok(b) => b,
            // empty layers are degenerate under the modularity null
            Err(_) => { prop_assert!(modularity); return Ok(()); }
        };
        for t in 0..y.n_layers() {
            let layer = b.layer(t);
            prop_assert_eq!(layer, &layer.transpose());
            let back = b.reconstruct_layer(t);
            for i in 0..y.n_nodes() {
                prop_assert_eq!(layer[(i, i)], 0.0);
                for j in 0..y.n_nodes() {
                    if i != j {
                        prop_assert!((back[(i, j)] - y.get(i, j, t)).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn waic_penalty_non_negative(g in 2usize..20, t in 1usize..6, vals in proptest::collection::vec(-1e3f64..10.0, 120)) {
        let ll: Vec<Vec<f64>> = (0..g).map(|i| (0..t).map(|j| vals[(i * t + j) % vals.len()]).collect()).collect();
        let (lppd, penalty) = waic_terms(&ll).unwrap();
        prop_assert!(penalty >= 0.0);
        prop_assert!(lppd.is_finite());
    }

    #[test]
    fn average_loss_non_negative(m in 2usize..5, draws in proptest::collection::vec(proptest::collection::vec(1usize..30, 4), 1..30)) {
        let t = 40;
        let state = bare_state(t, m);
        let trace = McmcTrace {
            config: HmtmConfig::new(m - 1, 1),
            n_nodes: 2,
            n_layers: t,
            draws: vec![],
            loglayer: vec![],
            breakpoints: draws.iter().map(|d| d[..m - 1].to_vec()).collect(),
            final_state: state,
        };
        prop_assert!(average_loss(&trace).unwrap() >= 0.0);
    }

    #[test]
    fn kmeans_labels_invariant_to_flips_and_swaps(vals in proptest::collection::vec(-3.0f64..3.0, 30),
                                                  flip in any::<[bool; 2]>(), swap in any::<bool>(), seed in any::<u64>()) {
        let points = DMatrix::from_fn(15, 2, |i, r| vals[i * 2 + r]);
        let map = ColumnMap {
            perm: if swap { vec![1, 0] } else { vec![0, 1] },
            signs: flip.iter().map(|&f| if f { -1.0 } else { 1.0 }).collect(),
        };
        let moved = map.apply_u(&points);
        let a = kmeans_blocks(&points, 3, 3, seed).unwrap();
        let b = kmeans_blocks(&moved, 3, 3, seed).unwrap();
        prop_assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn identification_idempotent(vals in proptest::collection::vec(-3.0f64..3.0, 12), v in proptest::collection::vec(-3.0f64..3.0, 3)) {
        let u = DMatrix::from_fn(4, 3, |i, r| vals[i * 3 + r]);
        let v = DVector::from_vec(v);
        let map = identification_map(&u, &v);
        let u1 = map.apply_u(&u);
        let v1 = DVector::from_vec(map.apply_v_row(v.as_slice()));
        prop_assert_eq!(identification_map(&u1, &v1).apply_u(&u1), u1);
    }
}
