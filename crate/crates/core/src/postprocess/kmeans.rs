//! Lloyd's k-means with k-means++ seeding and multiple restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HmtmError, Result};

const MAX_ITER: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    /// Cluster of each row, in `1..=k`, numbered by first appearance.
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of the winning restart.
    pub wcss: f64,
    /// Objective after every Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

/// Squared distance summed in sorted order so the result does not depend on
/// the column order.
fn dist2(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    let mut terms: Vec<f64> = (0..points.ncols())
        .map(|r| (points[(i, r)] - centers[(c, r)]).powi(2))
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn distinct_rows(points: &DMatrix<f64>) -> usize {
    let mut rows: Vec<Vec<u64>> = points
        .row_iter()
        .map(|r| r.iter().map(|x| x.to_bits()).collect())
        .collect();
    rows.sort();
    rows.dedup();
    rows.len()
}

/// Clusters the rows of `points` into `k` groups, keeping the restart with
/// the smallest within-cluster sum of squares (first on ties).
pub fn kmeans_blocks(points: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 || restarts == 0 {
        return Err(HmtmError::InvalidConfig("k and restarts must be positive".into()));
    }
    let distinct = distinct_rows(points);
    if k > distinct {
        return Err(HmtmError::TooFewDistinctRows { k, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts {
        let run = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    let mut best = best.unwrap();
    best.labels = first_appearance(&best.labels);
    Ok(best)
}

fn plus_plus_init(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, dim) = points.shape();
    let mut centers = DMatrix::zeros(k, dim);
    let first = rng.random_range(0..n);
    centers.set_row(0, &points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.set_row(c, &points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(points, i, &centers, c));
        }
    }
    centers
}

fn assign(points: &DMatrix<f64>, centers: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let labels = (0..points.nrows())
        .map(|i| {
            let mut best = (f64::INFINITY, 0);
            for c in 0..centers.nrows() {
                let d = dist2(points, i, centers, c);
                if d < best.0 {
                    best = (d, c);
                }
            }
            total += best.0;
            best.1
        })
        .collect();
    (labels, total)
}

fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let (n, dim) = points.shape();
    let mut centers = plus_plus_init(points, k, rng);
    let (mut labels, mut wcss) = assign(points, &centers);
    let mut history = vec![wcss];
    for _ in 0..MAX_ITER {
        let mut sums = DMatrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            let row = points.row(i);
            let mut target = sums.row_mut(labels[i]);
            target += row;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = sums.row(c) / counts[c] as f64;
                centers.set_row(c, &mean);
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist2(points, a, &centers, labels[a]).total_cmp(&dist2(points, b, &centers, labels[b]))
                    })
                    .unwrap();
                centers.set_row(c, &points.row(far));
            }
        }
        let (next, next_wcss) = assign(points, &centers);
        history.push(next_wcss);
        let converged = next == labels;
        labels = next;
        wcss = next_wcss;
        if converged {
            break;
        }
    }
    KMeansResult { labels, wcss, history }
}

fn first_appearance(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; labels.iter().max().map_or(0, |m| m + 1)];
    let mut next = 1;
    labels
        .iter()
        .map(|&l| {
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must have equal length");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_cells: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = table.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_cols: f64 = (0..kb).map(|j| choose2(table.iter().map(|row| row[j]).sum())).sum();
    let total = choose2(n as u64);
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        return 1.0;
    }
    (sum_cells - expected) / (max - expected)
}
