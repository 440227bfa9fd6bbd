//! Flat `key = value` run configuration.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Every key may also be overridden from the command line with
//! `--set key=value`. Recognized keys (defaults in brackets):
//!
//! | key | meaning |
//! |-----|---------|
//! | `scenario` | synthetic input: constant, split, merge, merge-split, split-merge |
//! | `n` | block unit size of the synthetic network [10] |
//! | `layers` | number of synthetic layers [40] |
//! | `p_in`, `p_out` | within / between block edge probabilities [0.5, 0.05] |
//! | `input` | edge list (`.csv`, `.txt`) or tensor JSON, instead of `scenario` |
//! | `index_base` | 0 or 1, for edge lists [0] |
//! | `n_nodes`, `n_layers` | edge-list dimensions [largest index seen] |
//! | `correction` | eigen, modularity or none [eigen] |
//! | `breaks` | comma-separated candidate break counts [0,1,2,3] |
//! | `rank` | latent dimension [2] |
//! | `burnin`, `mcmc`, `thin` | run lengths [1000, 1000, 1] |
//! | `error` | normal or t [normal] |
//! | `intercept` | true or false [false] |
//! | `seed` | base seed [1] |
//! | `u0` `u1` `v0` `v1` `c0` `d0` `a0` `b0` `nu0` `nu1` `beta_mean` `beta_var` | hyperpriors |
//! | `marglik` | compute the marginal likelihood [true] |
//! | `reduced_mcmc` | sweeps per reduced run [mcmc] |
//! | `k` | clusters for the latent export [none] |
//! | `restarts` | k-means restarts [10] |
//! | `stop_after` | generate, correct, fit, compare or export [export] |
//! | `out_dir` | output directory [hmtm-out] |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hmtm::{ErrorKind, HmtmConfig, IndexBase, NullKind, Priors, Scenario};

use crate::error::{AtStage, CliError, CliResult, Stage};

const KEYS: &[&str] = &[
    "scenario", "n", "layers", "p_in", "p_out", "input", "index_base", "n_nodes", "n_layers", "correction", "breaks",
    "rank", "burnin", "mcmc", "thin", "error", "intercept", "seed", "u0", "u1", "v0", "v1", "c0", "d0", "a0", "b0",
    "nu0", "nu1", "beta_mean", "beta_var", "marglik", "reduced_mcmc", "k", "restarts", "stop_after", "out_dir",
];

#[derive(Clone, Debug, PartialEq)]
pub enum InputSpec {
    Synthetic {
        scenario: Scenario,
        n: usize,
        layers: usize,
        p_in: f64,
        p_out: f64,
    },
    File {
        path: PathBuf,
        base: IndexBase,
        n_nodes: Option<usize>,
        n_layers: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum StopAfter {
    Generate,
    Correct,
    Fit,
    Compare,
    Export,
}

impl FromStr for StopAfter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "generate" => Ok(StopAfter::Generate),
            "correct" => Ok(StopAfter::Correct),
            "fit" => Ok(StopAfter::Fit),
            "compare" => Ok(StopAfter::Compare),
            "export" => Ok(StopAfter::Export),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: InputSpec,
    pub correction: NullKind,
    pub breaks: Vec<usize>,
    /// Sampler settings shared by every candidate; `n_breaks` and `seed` are
    /// set per candidate.
    pub sampler: HmtmConfig,
    pub seed: u64,
    pub marglik: bool,
    pub reduced_mcmc: Option<usize>,
    pub k: Option<usize>,
    pub restarts: usize,
    pub stop_after: StopAfter,
    pub out_dir: PathBuf,
    /// Every resolved setting, for the manifest.
    pub resolved: BTreeMap<String, String>,
}

/// Parses the `key = value` lines of a config file.
pub fn parse_kv(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::new(Stage::Config, format!("line {}: expected `key = value`", no + 1)))?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::new(Stage::Config, format!("line {}: `{key}` set twice", no + 1)));
        }
    }
    Ok(map)
}

/// Splits a `key=value` override.
pub fn parse_override(s: &str) -> CliResult<(String, String)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| CliError::new(Stage::Config, format!("override `{s}` is not key=value")))
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::new(Stage::Config, format!("`{key}`: {e}"))))
        .transpose()
}

fn get_bool(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<bool>> {
    map.get(key)
        .map(|v| match v.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(CliError::new(Stage::Config, format!("`{key}`: expected a boolean, got `{other}`"))),
        })
        .transpose()
}

/// Parses and validates a break list such as `0,1,2,3`.
pub fn parse_breaks(s: &str) -> CliResult<Vec<usize>> {
    let breaks: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::new(Stage::Config, format!("`breaks`: {e}")))?;
    if breaks.is_empty() {
        return Err(CliError::new(Stage::Config, "`breaks` is empty"));
    }
    let mut sorted = breaks.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != breaks.len() {
        return Err(CliError::new(Stage::Config, format!("`breaks` has duplicates: {s}")));
    }
    Ok(breaks)
}

impl RunConfig {
    /// Reads a config file and applies overrides on top of it.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).at(Stage::Config)?;
        Self::from_text(&text, overrides)
    }

    pub fn from_text(text: &str, overrides: &[(String, String)]) -> CliResult<Self> {
        let mut map = parse_kv(text)?;
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        Self::from_map(map)
    }

    pub fn from_map(map: BTreeMap<String, String>) -> CliResult<Self> {
        if let Some(bad) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::new(Stage::Config, format!("unknown key `{bad}`")));
        }
        let input = match (map.get("scenario"), map.get("input")) {
            (Some(_), Some(_)) => return Err(CliError::new(Stage::Config, "set either `scenario` or `input`, not both")),
            (None, None) => return Err(CliError::new(Stage::Config, "one of `scenario` or `input` is required")),
            (Some(s), None) => InputSpec::Synthetic {
                scenario: s.parse().at(Stage::Config)?,
                n: get(&map, "n")?.unwrap_or(10),
                layers: get(&map, "layers")?.unwrap_or(40),
                p_in: get(&map, "p_in")?.unwrap_or(0.5),
                p_out: get(&map, "p_out")?.unwrap_or(0.05),
            },
            (None, Some(p)) => InputSpec::File {
                path: PathBuf::from(p),
                base: match get::<u8>(&map, "index_base")?.unwrap_or(0) {
                    0 => IndexBase::Zero,
                    1 => IndexBase::One,
                    b => return Err(CliError::new(Stage::Config, format!("`index_base` must be 0 or 1, got {b}"))),
                },
                n_nodes: get(&map, "n_nodes")?,
                n_layers: get(&map, "n_layers")?,
            },
        };
        let breaks = match map.get("breaks") {
            Some(s) => parse_breaks(s)?,
            None => vec![0, 1, 2, 3],
        };
        let rank = get(&map, "rank")?.unwrap_or(2);
        let mut sampler = HmtmConfig::new(0, rank).with_run(
            get(&map, "burnin")?.unwrap_or(1000),
            get(&map, "mcmc")?.unwrap_or(1000),
            get(&map, "thin")?.unwrap_or(1),
        );
        sampler.error_kind = get::<ErrorKind>(&map, "error")?.unwrap_or_default();
        sampler.with_intercept = get_bool(&map, "intercept")?.unwrap_or(false);
        set_priors(&mut sampler.priors, &map)?;
        let seed = get(&map, "seed")?.unwrap_or(1);

        let cfg = RunConfig {
            input,
            correction: get(&map, "correction")?.unwrap_or(NullKind::PrincipalEigen),
            breaks,
            sampler,
            seed,
            marglik: get_bool(&map, "marglik")?.unwrap_or(true),
            reduced_mcmc: get(&map, "reduced_mcmc")?,
            k: get(&map, "k")?,
            restarts: get(&map, "restarts")?.unwrap_or(10),
            stop_after: get(&map, "stop_after")?.unwrap_or(StopAfter::Export),
            out_dir: map.get("out_dir").map_or_else(|| PathBuf::from("hmtm-out"), PathBuf::from),
            resolved: BTreeMap::new(),
        };
        Ok(RunConfig {
            resolved: cfg.canonical(),
            ..cfg
        })
    }

    /// Sampler configuration of the candidate with `n_breaks` breaks.
    pub fn model_config(&self, n_breaks: usize) -> HmtmConfig {
        let mut c = self.sampler.clone();
        c.n_breaks = n_breaks;
        c.seed = model_seed(self.seed, n_breaks);
        c
    }

    /// All settings with defaults filled in; `out_dir` is left out so the
    /// same run in another directory records the same configuration.
    fn canonical(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        match &self.input {
            InputSpec::Synthetic { scenario, n, layers, p_in, p_out } => {
                put("scenario", format!("{scenario:?}"));
                put("n", n.to_string());
                put("layers", layers.to_string());
                put("p_in", p_in.to_string());
                put("p_out", p_out.to_string());
            }
            InputSpec::File { path, base, n_nodes, n_layers } => {
                put("input", path.display().to_string());
                put("index_base", usize::from(*base == IndexBase::One).to_string());
                if let Some(n) = n_nodes {
                    put("n_nodes", n.to_string());
                }
                if let Some(t) = n_layers {
                    put("n_layers", t.to_string());
                }
            }
        }
        put("correction", format!("{:?}", self.correction));
        put("breaks", self.breaks.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(","));
        let s = &self.sampler;
        put("rank", s.rank.to_string());
        put("burnin", s.burnin.to_string());
        put("mcmc", s.mcmc.to_string());
        put("thin", s.thin.to_string());
        put("error", format!("{:?}", s.error_kind));
        put("intercept", s.with_intercept.to_string());
        put("seed", self.seed.to_string());
        let p = &s.priors;
        for (k, v) in [
            ("u0", p.u0),
            ("u1", p.u1),
            ("v0", p.v0),
            ("v1", p.v1),
            ("c0", p.c0),
            ("d0", p.d0),
            ("a0", p.a0),
            ("b0", p.b0),
            ("nu0", p.nu0),
            ("nu1", p.nu1),
            ("beta_mean", p.beta_mean),
            ("beta_var", p.beta_var),
        ] {
            put(k, v.to_string());
        }
        put("marglik", self.marglik.to_string());
        if let Some(r) = self.reduced_mcmc {
            put("reduced_mcmc", r.to_string());
        }
        if let Some(k) = self.k {
            put("k", k.to_string());
        }
        put("restarts", self.restarts.to_string());
        put("stop_after", format!("{:?}", self.stop_after));
        m
    }
}

/// Seed of the chain for `n_breaks` breaks. Candidates get distinct seeds,
/// so concurrent chains draw from independent ChaCha streams.
pub fn model_seed(base: u64, n_breaks: usize) -> u64 {
    base.wrapping_add(n_breaks as u64)
}

fn set_priors(p: &mut Priors, map: &BTreeMap<String, String>) -> CliResult<()> {
    for (key, slot) in [
        ("u0", &mut p.u0),
        ("u1", &mut p.u1),
        ("v0", &mut p.v0),
        ("v1", &mut p.v1),
        ("c0", &mut p.c0),
        ("d0", &mut p.d0),
        ("a0", &mut p.a0),
        ("b0", &mut p.b0),
        ("nu0", &mut p.nu0),
        ("nu1", &mut p.nu1),
        ("beta_mean", &mut p.beta_mean),
        ("beta_var", &mut p.beta_var),
    ] {
        if let Some(v) = get(map, key)? {
            *slot = v;
        }
    }
    Ok(())
}
