//! Longitudinal network data: an `N x N x T` stack of undirected layers.
//!
//! Layers are stored as dense symmetric matrices with a zero diagonal. All
//! likelihood computations downstream only look at the strict upper triangle.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HmtmError, Result};

/// One observed dyad-layer value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub t: usize,
    pub value: f64,
}

/// Index convention of an edge list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IndexBase {
    #[default]
    Zero,
    One,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkTensor {
    n_nodes: usize,
    layers: Vec<DMatrix<f64>>,
    node_labels: Option<Vec<String>>,
}

impl NetworkTensor {
    /// Builds a tensor from explicit layers, checking every invariant.
    pub fn from_layers(layers: Vec<DMatrix<f64>>) -> Result<Self> {
        let n_nodes = check_layers(&layers)?;
        Ok(NetworkTensor {
            n_nodes,
            layers,
            node_labels: None,
        })
    }

    pub fn zeros(n_nodes: usize, n_layers: usize) -> Self {
        NetworkTensor {
            n_nodes,
            layers: vec![DMatrix::zeros(n_nodes, n_nodes); n_layers],
            node_labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_nodes {
            return Err(HmtmError::Shape(format!(
                "{} node labels for {} nodes",
                labels.len(),
                self.n_nodes
            )));
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, t: usize) -> &DMatrix<f64> {
        &self.layers[t]
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    pub fn node_labels(&self) -> Option<&[String]> {
        self.node_labels.as_deref()
    }

    pub fn get(&self, i: usize, j: usize, t: usize) -> f64 {
        self.layers[t][(i, j)]
    }

    pub fn to_dump(&self) -> TensorDump {
        TensorDump {
            n_nodes: self.n_nodes,
            n_layers: self.n_layers(),
            layers: self.layers.iter().map(row_major).collect(),
            node_labels: self.node_labels.clone(),
        }
    }

    pub fn from_dump(dump: TensorDump) -> Result<Self> {
        let layers = layers_from_dump(dump.n_nodes, dump.n_layers, &dump.layers)?;
        let tensor = NetworkTensor::from_layers(layers)?;
        match dump.node_labels {
            Some(labels) => tensor.with_labels(labels),
            None => Ok(tensor),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_dump())
            .map_err(|e| HmtmError::Parse(e.to_string()))?;
        fs::write(path, text).map_err(|e| HmtmError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HmtmError::io(path, e))?;
        let dump: TensorDump =
            serde_json::from_str(&text).map_err(|e| HmtmError::Parse(format!("{}: {e}", path.display())))?;
        NetworkTensor::from_dump(dump)
    }
}

/// JSON layout shared by raw and corrected tensors. Each layer is a flat
/// row-major array of length `n_nodes * n_nodes`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorDump {
    pub n_nodes: usize,
    pub n_layers: usize,
    pub layers: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<String>>,
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn layers_from_dump(
    n_nodes: usize,
    n_layers: usize,
    layers: &[Vec<f64>],
) -> Result<Vec<DMatrix<f64>>> {
    if layers.len() != n_layers {
        return Err(HmtmError::Shape(format!(
            "n_layers = {n_layers} but {} layers present",
            layers.len()
        )));
    }
    layers
        .iter()
        .enumerate()
        .map(|(t, flat)| {
            if flat.len() != n_nodes * n_nodes {
                return Err(HmtmError::Shape(format!(
                    "layer {t} has {} entries, expected {}",
                    flat.len(),
                    n_nodes * n_nodes
                )));
            }
            Ok(DMatrix::from_row_slice(n_nodes, n_nodes, flat))
        })
        .collect()
}

fn check_layers(layers: &[DMatrix<f64>]) -> Result<usize> {
    let n = layers.first().map(|m| m.nrows()).unwrap_or(0);
    if n == 0 || layers.is_empty() {
        return Err(HmtmError::Shape("tensor must have at least one node and one layer".into()));
    }
    for (t, m) in layers.iter().enumerate() {
        if m.nrows() != n || m.ncols() != n {
            return Err(HmtmError::Shape(format!(
                "layer {t} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(HmtmError::SelfLoop { i, t });
            }
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(HmtmError::NonFinite { i, j, t });
                }
                if a != b {
                    return Err(HmtmError::NotSymmetric { i, j, t });
                }
            }
        }
    }
    Ok(n)
}

/// Assembles a symmetric tensor from an edge list.
///
/// Both orientations of each listed dyad are set; unlisted dyads are zero and
/// diagonal entries are dropped. Listing the same dyad-layer twice is allowed
/// only when the values agree.
pub fn load_tensor(
    edges: &[Edge],
    n_nodes: usize,
    n_layers: usize,
    base: IndexBase,
) -> Result<NetworkTensor> {
    if n_nodes == 0 || n_layers == 0 {
        return Err(HmtmError::Shape("n_nodes and n_layers must be positive".into()));
    }
    let offset = match base {
        IndexBase::Zero => 0,
        IndexBase::One => 1,
    };
    let mut seen: HashMap<(usize, usize, usize), f64> = HashMap::new();
    let mut tensor = NetworkTensor::zeros(n_nodes, n_layers);
    for e in edges {
        let out_of_range = || HmtmError::IndexOutOfRange {
            i: e.i,
            j: e.j,
            t: e.t,
            n_nodes,
            n_layers,
        };
        let i = e.i.checked_sub(offset).ok_or_else(out_of_range)?;
        let j = e.j.checked_sub(offset).ok_or_else(out_of_range)?;
        let t = e.t.checked_sub(offset).ok_or_else(out_of_range)?;
        if i >= n_nodes || j >= n_nodes || t >= n_layers {
            return Err(out_of_range());
        }
        if !e.value.is_finite() {
            return Err(HmtmError::NonFinite { i, j, t });
        }
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j), t);
        if let Some(&prev) = seen.get(&key) {
            if prev != e.value {
                return Err(HmtmError::ConflictingDuplicate {
                    i: key.0,
                    j: key.1,
                    t,
                    first: prev,
                    second: e.value,
                });
            }
            continue;
        }
        seen.insert(key, e.value);
        tensor.layers[t][(i, j)] = e.value;
        tensor.layers[t][(j, i)] = e.value;
    }
    Ok(tensor)
}

/// Parses an edge list: either CSV with an `i,j,t,value` header or
/// whitespace-delimited columns (an optional non-numeric header line is
/// skipped). Indices are returned exactly as written.
pub fn parse_edge_list(text: &str) -> Result<Vec<Edge>> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains(',') {
        parse_csv_edges(text)
    } else {
        parse_whitespace_edges(text)
    }
}

fn parse_csv_edges(text: &str) -> Result<Vec<Edge>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| HmtmError::Parse(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HmtmError::Parse(format!("edge list header lacks column `{name}`")))
    };
    let (ci, cj, ct, cv) = (col("i")?, col("j")?, col("t")?, col("value")?);
    let mut edges = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HmtmError::Parse(e.to_string()))?;
        let field = |c: usize| record.get(c).unwrap_or("");
        edges.push(Edge {
            i: parse_index(field(ci), line + 2)?,
            j: parse_index(field(cj), line + 2)?,
            t: parse_index(field(ct), line + 2)?,
            value: parse_value(field(cv), line + 2)?,
        });
    }
    Ok(edges)
}

fn parse_whitespace_edges(text: &str) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if edges.is_empty() && cols.first().is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        if cols.len() != 4 {
            return Err(HmtmError::Parse(format!(
                "line {}: expected 4 columns, found {}",
                n + 1,
                cols.len()
            )));
        }
        edges.push(Edge {
            i: parse_index(cols[0], n + 1)?,
            j: parse_index(cols[1], n + 1)?,
            t: parse_index(cols[2], n + 1)?,
            value: parse_value(cols[3], n + 1)?,
        });
    }
    Ok(edges)
}

fn parse_index(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| HmtmError::Parse(format!("line {line}: bad index `{s}`")))
}

fn parse_value(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| HmtmError::Parse(format!("line {line}: bad value `{s}`")))
}

/// Reads an edge list file, sizing the tensor from the largest indices when
/// dimensions are not given.
pub fn read_edge_list(
    path: &Path,
    n_nodes: Option<usize>,
    n_layers: Option<usize>,
    base: IndexBase,
) -> Result<NetworkTensor> {
    let text = fs::read_to_string(path).map_err(|e| HmtmError::io(path, e))?;
    let edges = parse_edge_list(&text)?;
    let offset = usize::from(base == IndexBase::One);
    let max_node = edges.iter().map(|e| e.i.max(e.j) + 1).max().unwrap_or(offset);
    let max_layer = edges.iter().map(|e| e.t + 1).max().unwrap_or(offset);
    let n = n_nodes.unwrap_or(max_node - offset);
    let t = n_layers.unwrap_or(max_layer - offset);
    load_tensor(&edges, n, t, base)
}
