//! Degree correction: subtract a per-layer null model so that latent positions
//! reflect group structure instead of degree heterogeneity.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HmtmError, Result};
use crate::spectral::principal_eigen;
use crate::tensor::{layers_from_dump, row_major, NetworkTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullKind {
    /// Rank-one principal eigenmatrix `lambda u u^T`.
    PrincipalEigen,
    /// Newman modularity expectation `k_i k_j / 2m`.
    Modularity,
    /// No correction; the data are used as-is.
    None,
}

impl std::str::FromStr for NullKind {
    type Err = HmtmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "principal" | "principal-eigen" | "eigen" => Ok(NullKind::PrincipalEigen),
            "modularity" => Ok(NullKind::Modularity),
            "none" => Ok(NullKind::None),
            other => Err(HmtmError::Parse(format!("unknown correction `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenNull {
    pub lambda: f64,
    pub vector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularityNull {
    pub degrees: Vec<f64>,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "layers", rename_all = "kebab-case")]
pub enum NullModel {
    PrincipalEigen(Vec<EigenNull>),
    Modularity(Vec<ModularityNull>),
    None,
}

impl NullModel {
    pub fn kind(&self) -> NullKind {
        match self {
            NullModel::PrincipalEigen(_) => NullKind::PrincipalEigen,
            NullModel::Modularity(_) => NullKind::Modularity,
            NullModel::None => NullKind::None,
        }
    }

    /// The null-model matrix `Omega_t` (diagonal included).
    pub fn layer_matrix(&self, t: usize, n: usize) -> DMatrix<f64> {
        match self {
            NullModel::PrincipalEigen(layers) => {
                let e = &layers[t];
                let u = DVector::from_column_slice(&e.vector);
                &u * u.transpose() * e.lambda
            }
            NullModel::Modularity(layers) => {
                let m = &layers[t];
                let k = DVector::from_column_slice(&m.degrees);
                &k * k.transpose() / (2.0 * m.total)
            }
            NullModel::None => DMatrix::zeros(n, n),
        }
    }
}

/// Degree-corrected data `B_t = Y_t - Omega_t` with the diagonal zeroed.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectedTensor {
    layers: Vec<DMatrix<f64>>,
    null_model: NullModel,
    node_labels: Option<Vec<String>>,
}

impl CorrectedTensor {
    /// Wraps already-corrected layers. Layers must be square, symmetric and
    /// finite; the diagonal is ignored and zeroed.
    pub fn from_layers(mut layers: Vec<DMatrix<f64>>, null_model: NullModel) -> Result<Self> {
        for layer in &mut layers {
            layer.fill_diagonal(0.0);
        }
        let tensor = NetworkTensor::from_layers(layers)?;
        Ok(CorrectedTensor {
            layers: tensor.layers().to_vec(),
            null_model,
            node_labels: None,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.layers[0].nrows()
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

    pub fn null_model(&self) -> &NullModel {
        &self.null_model
    }

    pub fn node_labels(&self) -> Option<&[String]> {
        self.node_labels.as_deref()
    }

    /// `B_t + Omega_t`, which reproduces the source layer off the diagonal.
    pub fn reconstruct_layer(&self, t: usize) -> DMatrix<f64> {
        let mut y = &self.layers[t] + self.null_model.layer_matrix(t, self.n_nodes());
        y.fill_diagonal(0.0);
        y
    }

    pub fn to_dump(&self) -> CorrectedDump {
        CorrectedDump {
            n_nodes: self.n_nodes(),
            n_layers: self.n_layers(),
            layers: self.layers.iter().map(row_major).collect(),
            null_model: self.null_model.clone(),
            node_labels: self.node_labels.clone(),
        }
    }

    pub fn from_dump(dump: CorrectedDump) -> Result<Self> {
        let layers = layers_from_dump(dump.n_nodes, dump.n_layers, &dump.layers)?;
        let mut b = CorrectedTensor::from_layers(layers, dump.null_model)?;
        b.node_labels = dump.node_labels;
        Ok(b)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_dump())
            .map_err(|e| HmtmError::Parse(e.to_string()))?;
        fs::write(path, text).map_err(|e| HmtmError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HmtmError::io(path, e))?;
        let dump: CorrectedDump = serde_json::from_str(&text)
            .map_err(|e| HmtmError::Parse(format!("{}: {e}", path.display())))?;
        CorrectedTensor::from_dump(dump)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrectedDump {
    pub n_nodes: usize,
    pub n_layers: usize,
    pub layers: Vec<Vec<f64>>,
    pub null_model: NullModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<String>>,
}

/// Applies a per-layer null model to every layer of `y`.
pub fn degree_correct(y: &NetworkTensor, kind: NullKind) -> Result<CorrectedTensor> {
    let n = y.n_nodes();
    let mut layers = Vec::with_capacity(y.n_layers());
    let null_model = match kind {
        NullKind::PrincipalEigen => {
            let mut nulls = Vec::with_capacity(y.n_layers());
            for layer in y.layers() {
                let p = principal_eigen(layer)?;
                let omega = &p.vector * p.vector.transpose() * p.value;
                layers.push(layer - omega);
                nulls.push(EigenNull {
                    lambda: p.value,
                    vector: p.vector.as_slice().to_vec(),
                });
            }
            NullModel::PrincipalEigen(nulls)
        }
        NullKind::Modularity => {
            let mut nulls = Vec::with_capacity(y.n_layers());
            for (t, layer) in y.layers().iter().enumerate() {
                let k: DVector<f64> = layer.column_sum();
                let total = k.sum() / 2.0;
                if total == 0.0 {
                    return Err(HmtmError::DegenerateLayer { t });
                }
                layers.push(layer - &k * k.transpose() / (2.0 * total));
                nulls.push(ModularityNull {
                    degrees: k.as_slice().to_vec(),
                    total,
                });
            }
            NullModel::Modularity(nulls)
        }
        NullKind::None => {
            layers.extend(y.layers().iter().cloned());
            NullModel::None
        }
    };
    for layer in &mut layers {
        layer.fill_diagonal(0.0);
        // Rank-one products are symmetric only up to rounding.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (layer[(i, j)] + layer[(j, i)]);
                layer[(i, j)] = v;
                layer[(j, i)] = v;
            }
        }
    }
    Ok(CorrectedTensor {
        layers,
        null_model,
        node_labels: y.node_labels().map(<[String]>::to_vec),
    })
}
