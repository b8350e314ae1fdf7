//! TOML model files.
//!
//! ```toml
//! schema_version = 1
//! kind = "gossip"          # or "fj"
//! n = 2
//! edges = [[1, 2], [2, 1]] # 1-based; self-loops are added if missing
//! u = [0.0, 1.0]
//! H = [0.5, 0.5]
//! Gamma = [[0.5, 0.5], [0.5, 0.5]]   # or Gamma_triplets = [[i, j, v], ...]
//! edge_weights = [0.25, 0.25, 0.25, 0.25]  # optional, canonical edge order
//!
//! [metadata]
//! name = "pair"
//! ```
//!
//! FJ models carry `W` (or `W_triplets`) instead of `H`/`Gamma`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{EdgeWeights, FjModel, GossipModel, ModelError};
use crate::graph::SocialGraph;
use crate::linalg::{renormalize_rows, DenseMatrix};

use super::IoError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fj,
    Gossip,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Fj => "fj",
            ModelKind::Gossip => "gossip",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// On-disk model. Matrices are either dense rows or 1-based `[i, j, v]`
/// triplets; exactly one form must be present for the model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub u: Vec<f64>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(
        rename = "W_triplets",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub w_triplets: Option<Vec<(usize, usize, f64)>>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(rename = "Gamma", default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Vec<f64>>>,
    #[serde(
        rename = "Gamma_triplets",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub gamma_triplets: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpinionModel {
    Fj(FjModel),
    Gossip(GossipModel),
}

impl OpinionModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            OpinionModel::Fj(_) => ModelKind::Fj,
            OpinionModel::Gossip(_) => ModelKind::Gossip,
        }
    }

    pub fn graph(&self) -> &SocialGraph {
        match self {
            OpinionModel::Fj(m) => m.graph(),
            OpinionModel::Gossip(m) => m.graph(),
        }
    }

    pub fn as_fj(&self) -> Option<&FjModel> {
        match self {
            OpinionModel::Fj(m) => Some(m),
            OpinionModel::Gossip(_) => None,
        }
    }

    pub fn as_gossip(&self) -> Option<&GossipModel> {
        match self {
            OpinionModel::Gossip(m) => Some(m),
            OpinionModel::Fj(_) => None,
        }
    }
}

/// A validated model plus everything that was adjusted on the way in.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub model: OpinionModel,
    pub metadata: Option<Metadata>,
    pub warnings: Vec<String>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| IoError::Parse(e.to_string().trim_end().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model files always serialize")
    }

    pub fn from_model(model: &OpinionModel, metadata: Option<Metadata>) -> Self {
        let graph = model.graph();
        let edges = graph.edges().iter().map(|&(i, j)| [i + 1, j + 1]).collect();
        let mut file = ModelFile {
            schema_version: SCHEMA_VERSION,
            kind: model.kind(),
            n: graph.n(),
            edges,
            u: Vec::new(),
            w: None,
            w_triplets: None,
            h: None,
            gamma: None,
            gamma_triplets: None,
            edge_weights: None,
            metadata,
        };
        match model {
            OpinionModel::Fj(m) => {
                file.u = m.u().to_vec();
                file.w = Some(m.w().to_rows());
            }
            OpinionModel::Gossip(m) => {
                file.u = m.u().to_vec();
                file.h = Some(m.h().to_vec());
                file.gamma = Some(m.gamma().to_rows());
                if let EdgeWeights::Custom(w) = m.weights() {
                    file.edge_weights = Some(w.clone());
                }
            }
        }
        file
    }

    /// Validates the file into a model. With `renormalize`, rows of `W`
    /// (or `Gamma`) are divided by their sums first and every adjusted row
    /// is reported as a warning.
    pub fn into_model(self, renormalize: bool) -> Result<LoadedModel, IoError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(validation(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        let n = self.n;
        if n <= 1 {
            return Err(validation(
                "n",
                format!("a model needs at least two agents, got {n}"),
            ));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, &[i, j]) in self.edges.iter().enumerate() {
            if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
                return Err(validation(
                    format!("edges[{}]", k + 1),
                    format!("[{i}, {j}] has an endpoint outside 1..={n}"),
                ));
            }
            edges.push((i - 1, j - 1));
        }
        let graph = SocialGraph::new(n, edges).map_err(|e| validation("edges", e.to_string()))?;
        let mut warnings = Vec::new();
        if !graph.added_self_loops().is_empty() {
            let ids: Vec<String> = graph
                .added_self_loops()
                .iter()
                .map(|i| (i + 1).to_string())
                .collect();
            warnings.push(format!(
                "added missing self-loops for agents {}",
                ids.join(", ")
            ));
        }
        if self.u.len() != n {
            return Err(validation(
                "u",
                format!("expected {n} entries, got {}", self.u.len()),
            ));
        }

        let model = match self.kind {
            ModelKind::Fj => {
                forbid("H", self.h.is_some(), self.kind)?;
                forbid(
                    "Gamma",
                    self.gamma.is_some() || self.gamma_triplets.is_some(),
                    self.kind,
                )?;
                forbid("edge_weights", self.edge_weights.is_some(), self.kind)?;
                let mut w = matrix_field("W", n, self.w, self.w_triplets)?;
                if renormalize {
                    for c in renormalize_rows(&mut w) {
                        warnings.push(format!(
                            "renormalized row {} of W (sum was {})",
                            c.row + 1,
                            c.original_sum
                        ));
                    }
                }
                OpinionModel::Fj(FjModel::new(graph, w, self.u).map_err(model_validation)?)
            }
            ModelKind::Gossip => {
                forbid(
                    "W",
                    self.w.is_some() || self.w_triplets.is_some(),
                    self.kind,
                )?;
                let h = self
                    .h
                    .ok_or_else(|| validation("H", "required for gossip models"))?;
                let mut gamma = matrix_field("Gamma", n, self.gamma, self.gamma_triplets)?;
                if renormalize {
                    for c in renormalize_rows(&mut gamma) {
                        warnings.push(format!(
                            "renormalized row {} of Gamma (sum was {})",
                            c.row + 1,
                            c.original_sum
                        ));
                    }
                }
                let weights = match self.edge_weights {
                    Some(w) => EdgeWeights::Custom(w),
                    None => EdgeWeights::Uniform,
                };
                OpinionModel::Gossip(
                    GossipModel::new(graph, h, gamma, self.u, weights).map_err(model_validation)?,
                )
            }
        };
        Ok(LoadedModel {
            model,
            metadata: self.metadata,
            warnings,
        })
    }
}

fn validation(field: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Validation(format!("{}: {}", field.into(), message.into()))
}

fn model_validation(e: ModelError) -> IoError {
    IoError::Validation(e.to_string())
}

fn forbid(field: &str, present: bool, kind: ModelKind) -> Result<(), IoError> {
    if present {
        Err(validation(
            field,
            format!("not allowed in a {} model", kind.as_str()),
        ))
    } else {
        Ok(())
    }
}

fn matrix_field(
    name: &str,
    n: usize,
    dense: Option<Vec<Vec<f64>>>,
    triplets: Option<Vec<(usize, usize, f64)>>,
) -> Result<DenseMatrix, IoError> {
    let mut m = DenseMatrix::zeros(n, n);
    match (dense, triplets) {
        (Some(_), Some(_)) => {
            return Err(validation(
                name,
                format!("give either {name} or {name}_triplets, not both"),
            ));
        }
        (None, None) => return Err(validation(name, "required")),
        (Some(rows), None) => {
            if rows.len() != n {
                return Err(validation(
                    name,
                    format!("expected {n} rows, got {}", rows.len()),
                ));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(validation(
                        format!("{name} row {}", i + 1),
                        format!("expected {n} entries, got {}", row.len()),
                    ));
                }
                m.row_mut(i).copy_from_slice(row);
            }
        }
        (None, Some(entries)) => {
            for (k, &(i, j, v)) in entries.iter().enumerate() {
                if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
                    return Err(validation(
                        format!("{name}_triplets[{}]", k + 1),
                        format!("index ({i}, {j}) outside 1..={n}"),
                    ));
                }
                m[(i - 1, j - 1)] += v;
            }
        }
    }
    if let Some(pos) = m.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(validation(
            format!("{name}[{}][{}]", pos / n + 1, pos % n + 1),
            "must be finite",
        ));
    }
    Ok(m)
}
