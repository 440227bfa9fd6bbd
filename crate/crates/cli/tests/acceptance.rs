//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances are pinned below.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use hmtm::diagnostics::{average_loss, chib_marginal_likelihood, waic_terms, ChibOptions, DiagnosticsReport};
use hmtm::postprocess::{adjusted_rand_index, kmeans_blocks, summarize_regimes};
use hmtm::sampler::conditionals::*;
use hmtm::sampler::ffbs::ffbs_states;
use hmtm::sampler::state::columns_orthogonal;
use hmtm::synth::{equal_blocks, make_layered_block_network};
use hmtm::{
    degree_correct, fit_hmtm, CorrectedTensor, EdgeProbabilities, FixedParams, HmtmConfig, HmtmState, McmcTrace,
    NetworkTensor, NullKind, NullModel, Priors, RegimePath,
};
use hmtm_cli::{run_pipeline, RunConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

/// Data seed shared by the scenario criteria.
const SCENARIO_SEED: u64 = 2;
const BURNIN: usize = 2000;
const MCMC: usize = 2000;
const BREAK_TOL: usize = 1;
const MAX_AVG_LOSS: f64 = 0.1;
const ARI_CORRECTED_MIN: f64 = 0.9;
const ARI_RAW_MAX: f64 = 0.7;
const MC_SIGMAS: f64 = 3.0;
const FFBS_DRAWS: usize = 100_000;
const MOMENT_DRAWS: usize = 100_000;
const CHIB_TOL: f64 = 1.0;
const PROP_CASES: u32 = 1000;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenario_reports(scenario: &str, marglik: bool, dir: &Path) -> Result<Vec<DiagnosticsReport>, String> {
    let text = format!(
        "scenario = {scenario}\nn = 10\nlayers = 40\np_in = 0.5\np_out = 0.05\nbreaks = 0,1,2,3\nrank = 2\n\
         burnin = {BURNIN}\nmcmc = {MCMC}\nseed = {SCENARIO_SEED}\nmarglik = {marglik}\nstop_after = compare\n"
    );
    let mut cfg = RunConfig::from_text(&text, &[]).map_err(|e| e.to_string())?;
    cfg.out_dir = dir.join(scenario);
    let outcome = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    Ok(outcome.report.ok_or("pipeline produced no report")?.models)
}

fn waic_argmin(reports: &[DiagnosticsReport]) -> usize {
    reports.iter().min_by(|a, b| a.waic.total_cmp(&b.waic)).unwrap().n_breaks
}

fn waics(reports: &[DiagnosticsReport]) -> String {
    reports.iter().map(|r| format!("M{} {:.1}", r.n_breaks, r.waic)).collect::<Vec<_>>().join(", ")
}

fn near(actual: usize, target: usize) -> bool {
    actual.abs_diff(target) <= BREAK_TOL
}

fn criterion_1(dir: &Path) -> Check {
    let r = scenario_reports("split", false, dir)?;
    ensure(waic_argmin(&r) == 1, || format!("WAIC minimal at M{} ({})", waic_argmin(&r), waics(&r)))?;
    let m1 = &r[1];
    ensure(m1.mode_breaks.len() == 1 && near(m1.mode_breaks[0], 20), || {
        format!("M1 mode break {:?}, expected 20 ± {BREAK_TOL}", m1.mode_breaks)
    })?;
    let loss = m1.average_loss.unwrap_or(f64::INFINITY);
    ensure(loss <= MAX_AVG_LOSS, || format!("M1 average loss {loss} > {MAX_AVG_LOSS}"))?;
    Ok(format!("{}; M1 break {:?}, average loss {loss:.3}", waics(&r), m1.mode_breaks))
}

fn criterion_2(dir: &Path) -> Check {
    let r = scenario_reports("merge-split", false, dir)?;
    let m2 = &r[2];
    ensure(m2.waic < r[0].waic && m2.waic < r[1].waic, || format!("M2 not below M0 and M1 ({})", waics(&r)))?;
    ensure(m2.mode_breaks.len() == 2 && near(m2.mode_breaks[0], 10) && near(m2.mode_breaks[1], 30), || {
        format!("M2 mode breaks {:?}, expected [10, 30] ± {BREAK_TOL}", m2.mode_breaks)
    })?;
    Ok(format!("{}; M2 breaks {:?}", waics(&r), m2.mode_breaks))
}

fn criterion_3(dir: &Path) -> Check {
    let r = scenario_reports("constant", true, dir)?;
    ensure(waic_argmin(&r) == 0, || format!("WAIC minimal at M{} ({})", waic_argmin(&r), waics(&r)))?;
    let ml: Vec<String> = r
        .iter()
        .map(|m| {
            format!(
                "M{} {:.1}{}",
                m.n_breaks,
                m.neg2_log_marginal.unwrap_or(f64::NAN),
                if m.singleton_flag { " (singleton)" } else { "" }
            )
        })
        .collect();
    let ml_choice = r
        .iter()
        .min_by(|a, b| a.neg2_log_marginal.unwrap().total_cmp(&b.neg2_log_marginal.unwrap()))
        .unwrap()
        .n_breaks;
    Ok(format!("{}; -2logML {} (prefers M{ml_choice})", waics(&r), ml.join(", ")))
}

fn block_recovery_ari(y: &NetworkTensor, kind: NullKind, truth: &[usize]) -> Result<f64, String> {
    let b = degree_correct(y, kind).map_err(|e| e.to_string())?;
    let cfg = HmtmConfig::new(0, 2).with_run(BURNIN, MCMC, 1).with_seed(SCENARIO_SEED);
    let trace = fit_hmtm(&b, &cfg).map_err(|e| e.to_string())?;
    let s = summarize_regimes(&trace).map_err(|e| e.to_string())?;
    let km = kmeans_blocks(&s[0].u_mean, 3, 20, SCENARIO_SEED).map_err(|e| e.to_string())?;
    Ok(adjusted_rand_index(&km.labels, truth))
}

fn criterion_4() -> Check {
    let truth = equal_blocks(3, 10);
    let layers = vec![
        (truth.clone(), EdgeProbabilities::new(0.5, 0.2).unwrap()),
        (truth.clone(), EdgeProbabilities::new(0.2, 0.5).unwrap()),
    ];
    let y = make_layered_block_network(&layers, SCENARIO_SEED).map_err(|e| e.to_string())?;
    let corrected = block_recovery_ari(&y, NullKind::PrincipalEigen, &truth)?;
    let raw = block_recovery_ari(&y, NullKind::None, &truth)?;
    let detail = format!("ARI corrected {corrected:.3} (need >= {ARI_CORRECTED_MIN}), uncorrected {raw:.3} (need <= {ARI_RAW_MAX})");
    ensure(corrected >= ARI_CORRECTED_MIN && raw <= ARI_RAW_MAX, || detail.clone())?;
    Ok(detail)
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = hmtm::dist::standard_normal(rng);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

fn criterion_5() -> Check {
    let (n, t_len) = (3, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(SCENARIO_SEED);
    let layers: Vec<DMatrix<f64>> = (0..t_len).map(|_| random_symmetric(n, &mut rng)).collect();
    let us: Vec<DMatrix<f64>> = (0..2)
        .map(|_| DMatrix::from_fn(n, 2, |_, _| hmtm::dist::standard_normal(&mut rng)))
        .collect();
    let sigma2 = [0.8, 1.1];
    let stay = [0.7f64, 1.0];
    let loglik: Vec<Vec<f64>> = (0..t_len)
        .map(|t| {
            (0..2)
                .map(|k| {
                    let mut ll = 0.0;
                    for i in 0..n {
                        for j in (i + 1)..n {
                            let mean: f64 = (0..2).map(|r| us[k][(i, r)] * (0.5 + 0.2 * t as f64) * us[k][(j, r)]).sum();
                            ll += -0.5 * (2.0 * std::f64::consts::PI * sigma2[k]).ln()
                                - (layers[t][(i, j)] - mean).powi(2) / (2.0 * sigma2[k]);
                        }
                    }
                    ll
                })
                .collect()
        })
        .collect();
    // Forward paths 0..0 1..1 with at least one layer in each regime.
    let paths: Vec<Vec<usize>> = (1..t_len).map(|b| (0..t_len).map(|t| usize::from(t >= b)).collect()).collect();
    let weights: Vec<f64> = paths
        .iter()
        .map(|p| {
            let mut w: f64 = p.iter().enumerate().map(|(t, &s)| loglik[t][s]).sum();
            for pair in p.windows(2) {
                w += if pair[0] == pair[1] { stay[pair[0]].ln() } else { (1.0 - stay[pair[0]]).ln() };
            }
            w
        })
        .collect();
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|w| (w - max).exp()).sum();
    let mut counts = vec![0usize; paths.len()];
    let mut draw_rng = ChaCha8Rng::seed_from_u64(SCENARIO_SEED + 1);
    for _ in 0..FFBS_DRAWS {
        let s = ffbs_states(&mut draw_rng, &loglik, &stay).map_err(|e| e.to_string())?;
        let idx = paths.iter().position(|p| *p == s).ok_or_else(|| format!("non-forward path {s:?}"))?;
        counts[idx] += 1;
    }
    let mut worst: f64 = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let p = (w - max).exp() / total;
        let freq = counts[k] as f64 / FFBS_DRAWS as f64;
        let sd = (p * (1.0 - p) / FFBS_DRAWS as f64).sqrt().max(1e-12);
        let z = (freq - p).abs() / sd;
        worst = worst.max(z);
        ensure(z <= MC_SIGMAS, || format!("path {:?}: frequency {freq:.5} vs {p:.5} ({z:.2} sd)", paths[k]))?;
    }
    Ok(format!("{} paths, largest deviation {worst:.2} sd", paths.len()))
}

/// Sample mean and variance each within `MC_SIGMAS` standard errors.
fn moments_ok(name: &str, xs: &[f64], mean: f64, var: f64) -> Result<(), String> {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let se_mean = (var / n).sqrt();
    let se_var = ((m4 - s2 * s2) / n).sqrt();
    ensure((m - mean).abs() < MC_SIGMAS * se_mean, || format!("{name}: mean {m} vs {mean}"))?;
    ensure((s2 - var).abs() < MC_SIGMAS * se_var, || format!("{name}: variance {s2} vs {var}"))
}

fn inv_gamma(shape: f64, scale: f64) -> (f64, f64) {
    let mean = scale / (shape - 1.0);
    (mean, mean * mean / (shape - 2.0))
}

fn criterion_6() -> Check {
    let priors = Priors::weakly_informative(2);
    let mut rng = ChaCha8Rng::seed_from_u64(SCENARIO_SEED);
    let draws = |f: &mut dyn FnMut(&mut ChaCha8Rng) -> f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..MOMENT_DRAWS).map(|_| f(rng)).collect()
    };
    let u = DMatrix::from_fn(12, 2, |_, _| hmtm::dist::standard_normal(&mut rng));
    let n = u.nrows() as f64;

    let ss = u.column(1).norm_squared();
    let (m, v) = inv_gamma((priors.u0 + n) / 2.0, (ss + priors.u1) / 2.0);
    moments_ok("psi_u", &draws(&mut |r| sample_psi_u(r, &u, &priors)[1], &mut rng), m, v)?;

    let psi = DVector::from_vec(vec![0.7, 1.9]);
    let mean = u.column(0).sum() / (n + 1.0);
    moments_ok("mu_u", &draws(&mut |r| sample_mu_u(r, &u, &psi, &priors)[0], &mut rng), mean, psi[0] / (n + 1.0))?;

    let vmat = DMatrix::from_fn(10, 2, |t, r| (t as f64 - 4.0) * 0.3 + r as f64);
    let layers = [2, 3, 4, 5, 6];
    let ss: f64 = layers.iter().map(|&t| vmat[(t, 1)].powi(2)).sum();
    let (m, v) = inv_gamma((priors.v0 + 5.0) / 2.0, (ss + priors.v1) / 2.0);
    moments_ok("psi_v", &draws(&mut |r| sample_psi_v(r, &vmat, &layers, &priors)[1], &mut rng), m, v)?;

    let sum: f64 = layers.iter().map(|&t| vmat[(t, 0)]).sum();
    moments_ok(
        "mu_v",
        &draws(&mut |r| sample_mu_v(r, &vmat, &layers, &psi, &priors)[0], &mut rng),
        sum / 6.0,
        psi[0] / 6.0,
    )?;

    let (ssr, cells) = (7.3, 18);
    let (m, v) = inv_gamma((priors.c0 + 18.0) / 2.0, (priors.d0 + ssr) / 2.0);
    moments_ok("sigma2", &draws(&mut |r| sample_sigma2(r, ssr, cells, &priors), &mut rng), m, v)?;

    let stats = [
        BetaLayerStat { residual_sum: 3.0, cells: 6, precision: 2.0 },
        BetaLayerStat { residual_sum: -1.0, cells: 6, precision: 0.5 },
    ];
    let b_var = 1.0 / (1.0 / priors.beta_var + 12.0 + 3.0);
    let b_mean = b_var * (priors.beta_mean / priors.beta_var + 6.0 - 0.5);
    moments_ok("beta", &draws(&mut |r| sample_beta(r, &stats, &priors), &mut rng), b_mean, b_var)?;

    let (ssr, cells, sigma2) = (40.0, 45, 0.8);
    let shape = (priors.nu0 + 45.0) / 2.0;
    let rate = (priors.nu1 + ssr / sigma2) / 2.0;
    moments_ok(
        "gamma_t",
        &draws(&mut |r| sample_gamma_weight(r, ssr, cells, sigma2, &priors), &mut rng),
        shape / rate,
        shape / (rate * rate),
    )?;

    let mut states = vec![0; 20];
    states.push(1);
    let (a, b) = (priors.a0 + 18.0, priors.b0 + 1.0);
    moments_ok(
        "p_kk",
        &draws(&mut |r| sample_transition(r, &states, 2, &priors).unwrap()[0], &mut rng),
        a / (a + b),
        a * b / ((a + b).powi(2) * (a + b + 1.0)),
    )?;
    Ok(format!("8 conditionals, {MOMENT_DRAWS} draws each"))
}

fn criterion_7() -> Check {
    let l0 = DMatrix::from_row_slice(3, 3, &[0.0, 0.9, -0.4, 0.9, 0.0, 1.3, -0.4, 1.3, 0.0]);
    let l1 = DMatrix::from_row_slice(3, 3, &[0.0, -0.2, 0.7, -0.2, 0.0, 0.1, 0.7, 0.1, 0.0]);
    let b = CorrectedTensor::from_layers(vec![l0, l1], NullModel::None).map_err(|e| e.to_string())?;
    let u = DMatrix::from_column_slice(3, 1, &[0.6, -0.5, 0.8]);
    let v = DMatrix::from_column_slice(2, 1, &[1.1, -0.3]);
    let fixed = FixedParams {
        u: Some(vec![u.clone()]),
        v: Some(v.clone()),
        mu_u: Some(vec![DVector::zeros(1)]),
        psi_u: Some(vec![DVector::from_element(1, 1.0)]),
        mu_v: Some(vec![DVector::zeros(1)]),
        psi_v: Some(vec![DVector::from_element(1, 1.0)]),
        ..FixedParams::default()
    };
    let mut ssr = 0.0;
    for t in 0..2 {
        for i in 0..3 {
            for j in (i + 1)..3 {
                ssr += (b.layer(t)[(i, j)] - u[(i, 0)] * v[(t, 0)] * u[(j, 0)]).powi(2);
            }
        }
    }
    let base = HmtmConfig::new(0, 1).with_run(500, 5000, 1);
    let (a, scale, d) = (base.priors.c0 / 2.0, base.priors.d0 / 2.0, 6.0);
    let log_m = -d / 2.0 * (2.0 * std::f64::consts::PI).ln() + a * scale.ln() - ln_gamma(a) + ln_gamma(a + d / 2.0)
        - (a + d / 2.0) * (scale + ssr / 2.0).ln();
    let mut worst: f64 = 0.0;
    for seed in 1..=5 {
        let mut cfg = base.clone().with_seed(seed);
        cfg.fixed = fixed.clone();
        let trace = fit_hmtm(&b, &cfg).map_err(|e| e.to_string())?;
        let ml = chib_marginal_likelihood(&b, &trace, &ChibOptions::default()).map_err(|e| e.to_string())?;
        let err = (ml.neg2_log_marginal + 2.0 * log_m).abs();
        worst = worst.max(err);
        ensure(err < CHIB_TOL, || format!("seed {seed}: {} vs {}", ml.neg2_log_marginal, -2.0 * log_m))?;
    }
    Ok(format!("analytic {:.3}, largest error {worst:.3} over 5 seeds", -2.0 * log_m))
}

fn forward_path() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (2usize..5, 0usize..8).prop_flat_map(|(m, extra)| {
        let t = m + extra;
        proptest::sample::subsequence((1..t).collect::<Vec<_>>(), m - 1)
            .prop_map(move |breaks| (m, RegimePath::from_breaks(&breaks, t).states))
    })
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(PropConfig {
        cases: PROP_CASES,
        failure_persistence: None,
        ..PropConfig::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn criterion_8() -> Check {
    run_property(
        "path monotonicity",
        (any::<u64>(), 1usize..4, 0usize..6, proptest::collection::vec(-50.0f64..0.0, 40), 0.05f64..0.95),
        |(seed, m, extra, ll, p)| {
            let t = m + extra;
            let loglik: Vec<Vec<f64>> = (0..t).map(|i| (0..m).map(|k| ll[(i * m + k) % 40]).collect()).collect();
            let mut stay = vec![p; m - 1];
            stay.push(1.0);
            let states = ffbs_states(&mut ChaCha8Rng::seed_from_u64(seed), &loglik, &stay).unwrap();
            let path = RegimePath { states, stay };
            prop_assert!(path.validate().is_ok());
            Ok(())
        },
    )?;
    run_property("transition structure", (forward_path(), any::<u64>()), |((m, states), seed)| {
        let stay = sample_transition(&mut ChaCha8Rng::seed_from_u64(seed), &states, m, &Priors::weakly_informative(1)).unwrap();
        let p = RegimePath { states, stay }.transition_matrix();
        for i in 0..m {
            prop_assert!((p.row(i).sum() - 1.0).abs() < 1e-12);
            for j in (0..m).filter(|&j| j != i && j != i + 1) {
                prop_assert_eq!(p[(i, j)], 0.0);
            }
        }
        prop_assert_eq!(p[(m - 1, m - 1)], 1.0);
        Ok(())
    })?;
    run_property(
        "U orthogonality",
        (proptest::collection::vec(-5.0f64..5.0, 24), 1usize..4),
        |(vals, rank)| {
            let u = DMatrix::from_fn(24 / rank, rank, |i, r| vals[(i * rank + r) % 24]);
            prop_assert!(columns_orthogonal(&gram_schmidt(&u), 1e-8));
            Ok(())
        },
    )?;
    run_property(
        "correction symmetry and round trip",
        (2usize..7, 1usize..4, any::<u64>(), any::<bool>()),
        |(n, t, seed, modularity)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layers: Vec<DMatrix<f64>> = (0..t)
                .map(|_| {
                    let mut m = random_symmetric(n, &mut rng).map(|x| (x.abs() * 2.0).round());
                    m[(0, n - 1)] = 1.0;
                    m[(n - 1, 0)] = 1.0;
                    m
                })
                .collect();
            let y = NetworkTensor::from_layers(layers).unwrap();
            let kind = if modularity { NullKind::Modularity } else { NullKind::PrincipalEigen };
            let b = degree_correct(&y, kind).unwrap();
            for t in 0..t {
                prop_assert_eq!(b.layer(t), &b.layer(t).transpose());
                let back = b.reconstruct_layer(t);
                for i in 0..n {
                    for j in (0..n).filter(|&j| j != i) {
                        prop_assert!((back[(i, j)] - y.get(i, j, t)).abs() < 1e-10);
                    }
                }
            }
            Ok(())
        },
    )?;
    run_property(
        "WAIC penalty non-negative",
        (2usize..20, 1usize..6, proptest::collection::vec(-1e3f64..10.0, 120)),
        |(g, t, vals)| {
            let ll: Vec<Vec<f64>> = (0..g).map(|i| (0..t).map(|j| vals[(i * t + j) % 120]).collect()).collect();
            prop_assert!(waic_terms(&ll).unwrap().1 >= 0.0);
            Ok(())
        },
    )?;
    run_property(
        "average loss non-negative",
        (2usize..5, proptest::collection::vec(proptest::collection::vec(1usize..30, 4), 1..30)),
        |(m, draws)| {
            let t = 40;
            let state = HmtmState {
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
            };
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
            Ok(())
        },
    )?;
    Ok(format!("6 properties, {PROP_CASES} cases each"))
}

fn criterion_9(dir: &Path) -> Check {
    let text = "scenario = split\nbreaks = 0,1,2\nburnin = 100\nmcmc = 100\nk = 2\nreduced_mcmc = 50\nseed = 11\n";
    let mut manifests = Vec::new();
    for name in ["first", "second"] {
        let out = dir.join(name);
        let overrides = [("out_dir".to_string(), out.display().to_string())];
        let cfg = RunConfig::from_text(text, &overrides).map_err(|e| e.to_string())?;
        run_pipeline(&cfg).map_err(|e| e.to_string())?;
        manifests.push(std::fs::read(out.join("manifest.json")).map_err(|e| e.to_string())?);
    }
    ensure(manifests[0] == manifests[1], || "manifests differ".into())?;
    let files = serde_json::from_slice::<serde_json::Value>(&manifests[0]).map_err(|e| e.to_string())?["files"]
        .as_array()
        .map_or(0, Vec::len);
    Ok(format!("identical manifests covering {files} files"))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<Criterion> = vec![
        ("split-scenario break recovery", Box::new(|| criterion_1(dir.path()))),
        ("two-break recovery", Box::new(|| criterion_2(dir.path()))),
        ("no-break robustness", Box::new(|| criterion_3(dir.path()))),
        ("degree-correction effect on block recovery", Box::new(criterion_4)),
        ("FFBS oracle equivalence", Box::new(criterion_5)),
        ("conditional-distribution moments", Box::new(criterion_6)),
        ("marginal-likelihood oracle", Box::new(criterion_7)),
        ("invariant property suite", Box::new(criterion_8)),
        ("pipeline determinism", Box::new(|| criterion_9(dir.path()))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
