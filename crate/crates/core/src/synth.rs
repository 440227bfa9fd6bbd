//! Planted-partition generators for longitudinal block networks.
//!
//! Random streams come from `ChaCha8Rng` (rand_chacha 0.9) seeded with
//! `seed_from_u64(seed)`. Layers are generated in order `t = 0..T`, and within
//! a layer the dyads `(i, j)` with `i < j` in row-major order; each dyad
//! consumes exactly one `f64` draw from `Rng::random`, and the edge is present
//! when that draw is below the block probability. Reimplementations using the
//! same generator reproduce the tensors bit for bit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HmtmError, Result};
use crate::tensor::NetworkTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Constant,
    Split,
    Merge,
    MergeSplit,
    SplitMerge,
}

impl Scenario {
    pub fn n_breaks(self) -> usize {
        match self {
            Scenario::Constant => 0,
            Scenario::Split | Scenario::Merge => 1,
            Scenario::MergeSplit | Scenario::SplitMerge => 2,
        }
    }

    fn changes(self) -> &'static [Change] {
        match self {
            Scenario::Constant => &[],
            Scenario::Split => &[Change::Split],
            Scenario::Merge => &[Change::Merge],
            Scenario::MergeSplit => &[Change::Merge, Change::Split],
            Scenario::SplitMerge => &[Change::Split, Change::Merge],
        }
    }

    /// Block sizes (in units of `n`) of the first regime.
    fn initial_blocks(self) -> &'static [usize] {
        match self {
            Scenario::Constant | Scenario::Split | Scenario::SplitMerge => &[1, 2],
            Scenario::Merge | Scenario::MergeSplit => &[1, 1, 1],
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = HmtmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "constant" | "none" => Ok(Scenario::Constant),
            "split" => Ok(Scenario::Split),
            "merge" => Ok(Scenario::Merge),
            "merge-split" | "mergesplit" => Ok(Scenario::MergeSplit),
            "split-merge" | "splitmerge" => Ok(Scenario::SplitMerge),
            other => Err(HmtmError::Parse(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Change {
    Split,
    Merge,
}

/// Block memberships per regime and the layers at which they change.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    pub scenario: Scenario,
    pub base_block_size: usize,
    pub n_layers: usize,
    /// 1-based index of the last layer of each regime except the final one.
    pub break_times: Vec<usize>,
    /// One label vector per regime, labels `0..k` in order of first
    /// appearance.
    pub memberships: Vec<Vec<usize>>,
}

impl BlockSchedule {
    pub fn n_nodes(&self) -> usize {
        self.memberships[0].len()
    }

    /// Regime index (0-based) active at 0-based layer `t`.
    pub fn regime_at(&self, t: usize) -> usize {
        self.break_times.iter().filter(|&&b| t >= b).count()
    }

    pub fn n_groups(&self, regime: usize) -> usize {
        self.memberships[regime].iter().max().map_or(0, |m| m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.n_layers;
        if self.break_times.len() != self.scenario.n_breaks() {
            return Err(HmtmError::InvalidSchedule(format!(
                "{:?} needs {} breaks, got {}",
                self.scenario,
                self.scenario.n_breaks(),
                self.break_times.len()
            )));
        }
        if self.memberships.len() != self.break_times.len() + 1 {
            return Err(HmtmError::InvalidSchedule("one membership vector per regime".into()));
        }
        let mut prev = 0;
        for &b in &self.break_times {
            if b <= prev || b + 1 > t {
                return Err(HmtmError::InvalidSchedule(format!(
                    "break times {:?} must be strictly increasing within [1, {}]",
                    self.break_times,
                    t.saturating_sub(1)
                )));
            }
            prev = b;
        }
        let n = self.n_nodes();
        if self.memberships.iter().any(|m| m.len() != n) {
            return Err(HmtmError::InvalidSchedule("membership lengths differ".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbabilities {
    pub p_in: f64,
    pub p_out: f64,
}

impl EdgeProbabilities {
    pub fn new(p_in: f64, p_out: f64) -> Result<Self> {
        let probs = EdgeProbabilities { p_in, p_out };
        probs.validate()?;
        Ok(probs)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p_in, self.p_out] {
            if !(0.0..=1.0).contains(&p) {
                return Err(HmtmError::InvalidSchedule(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// `p_out <= p_in`; dissortative settings are allowed but reported here.
    pub fn is_assortative(&self) -> bool {
        self.p_out <= self.p_in
    }
}

/// Applies one split or merge to a block-size list. Split halves the largest
/// block (first one on ties); merge joins the two smallest (lowest labels on
/// ties) in place of the first of them.
fn apply_change(blocks: &[usize], change: Change) -> Result<Vec<usize>> {
    let mut out = blocks.to_vec();
    match change {
        Change::Split => {
            let (idx, &size) = blocks
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .ok_or_else(|| HmtmError::InvalidSchedule("no blocks".into()))?;
            if size < 2 || size % 2 != 0 {
                return Err(HmtmError::InvalidSchedule(format!(
                    "cannot split a block of size {size} into equal halves"
                )));
            }
            out[idx] = size / 2;
            out.insert(idx + 1, size / 2);
        }
        Change::Merge => {
            if blocks.len() < 2 {
                return Err(HmtmError::InvalidSchedule("merge needs two blocks".into()));
            }
            let mut order: Vec<usize> = (0..blocks.len()).collect();
            order.sort_by_key(|&k| (blocks[k], k));
            let (a, b) = (order[0].min(order[1]), order[0].max(order[1]));
            out[a] = blocks[a] + blocks[b];
            out.remove(b);
        }
    }
    Ok(out)
}

/// Node labels for a block-size list. Consecutive nodes share a block.
fn labels_from_blocks(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
        .collect()
}

/// Membership vectors for every regime. Blocks are tracked as node lists so
/// that merged blocks keep their members even when they are not adjacent.
fn build_memberships(scenario: Scenario, n: usize) -> Result<Vec<Vec<usize>>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    for &units in scenario.initial_blocks() {
        blocks.push((next..next + units * n).collect());
        next += units * n;
    }
    let mut memberships = vec![labels_of(&blocks, next)];
    for &change in scenario.changes() {
        let sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let new_sizes = apply_change(&sizes, change)?;
        blocks = match change {
            Change::Split => {
                let idx = (0..sizes.len())
                    .find(|&k| new_sizes.get(k) != Some(&sizes[k]))
                    .unwrap_or(sizes.len() - 1);
                let mut out = blocks.clone();
                let half = out[idx].split_off(sizes[idx] / 2);
                out.insert(idx + 1, half);
                out
            }
            Change::Merge => {
                let mut order: Vec<usize> = (0..sizes.len()).collect();
                order.sort_by_key(|&k| (sizes[k], k));
                let (a, b) = (order[0].min(order[1]), order[0].max(order[1]));
                let mut out = blocks.clone();
                let taken = out.remove(b);
                out[a].extend(taken);
                out[a].sort_unstable();
                out
            }
        };
        debug_assert_eq!(blocks.iter().map(Vec::len).collect::<Vec<_>>(), new_sizes);
        memberships.push(labels_of(&blocks, next));
    }
    Ok(memberships)
}

/// Labels in order of first appearance along the node index.
fn labels_of(blocks: &[Vec<usize>], n_nodes: usize) -> Vec<usize> {
    let mut raw = vec![0; n_nodes];
    for (k, block) in blocks.iter().enumerate() {
        for &node in block {
            raw[node] = k;
        }
    }
    canonical_labels(&raw)
}

pub(crate) fn canonical_labels(raw: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    raw.iter()
        .map(|&r| {
            let next = map.len();
            *map.entry(r).or_insert(next)
        })
        .collect()
}

/// The standard layout: single breaks at `T/2`, double breaks at `T/4` and
/// `3T/4`; the first regime has blocks `(n, 2n)` for split-first and constant
/// scenarios and `(n, n, n)` for merge-first ones, so `N = 3n` throughout.
pub fn default_schedule(scenario: Scenario, n: usize, n_layers: usize) -> Result<BlockSchedule> {
    if n < 2 {
        return Err(HmtmError::InvalidSchedule(format!("block size {n} < 2")));
    }
    if n_layers < 4 {
        return Err(HmtmError::InvalidSchedule(format!(
            "{n_layers} layers cannot host the required breaks (need >= 4)"
        )));
    }
    let break_times = match scenario.n_breaks() {
        0 => vec![],
        1 => vec![n_layers / 2],
        _ => vec![n_layers / 4, 3 * n_layers / 4],
    };
    let schedule = BlockSchedule {
        scenario,
        base_block_size: n,
        n_layers,
        break_times,
        memberships: build_memberships(scenario, n)?,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Planted-partition draw with membership-dependent edge probabilities.
pub fn make_block_network_change(
    schedule: &BlockSchedule,
    probs: EdgeProbabilities,
    seed: u64,
) -> Result<NetworkTensor> {
    schedule.validate()?;
    probs.validate()?;
    let layers: Vec<(Vec<usize>, EdgeProbabilities)> = (0..schedule.n_layers)
        .map(|t| (schedule.memberships[schedule.regime_at(t)].clone(), probs))
        .collect();
    make_layered_block_network(&layers, seed)
}

/// Planted-partition draw with an explicit membership and probability pair
/// per layer; used for homophily/heterophily mixtures.
pub fn make_layered_block_network(
    layers: &[(Vec<usize>, EdgeProbabilities)],
    seed: u64,
) -> Result<NetworkTensor> {
    let n = layers
        .first()
        .map(|(m, _)| m.len())
        .ok_or_else(|| HmtmError::InvalidSchedule("no layers".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(layers.len());
    for (membership, probs) in layers {
        if membership.len() != n {
            return Err(HmtmError::InvalidSchedule("membership lengths differ".into()));
        }
        probs.validate()?;
        let mut y = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let p = if membership[i] == membership[j] {
                    probs.p_in
                } else {
                    probs.p_out
                };
                let draw: f64 = rng.random();
                if draw < p {
                    y[(i, j)] = 1.0;
                    y[(j, i)] = 1.0;
                }
            }
        }
        out.push(y);
    }
    NetworkTensor::from_layers(out)
}

/// Labels for equal blocks; handy for building custom layer lists.
pub fn equal_blocks(n_blocks: usize, size: usize) -> Vec<usize> {
    labels_from_blocks(&vec![size; n_blocks])
}
