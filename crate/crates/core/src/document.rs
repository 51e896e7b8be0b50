//! Input and output documents.
//!
//! Inputs are JSON: a graph document (`nodes`, optional `edges`), one expert
//! document per expert, and merged-matrix documents written by the `merge`
//! step. Expert entries can also come from CSV (`src,dst,weight,confidence`).
//! The result document is what the UI consumes; it is serialized with a fixed
//! field order and canonical node/edge order so identical inputs give
//! byte-identical output.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::Role;
use crate::choquet::{PathContribution, TNorm};
use crate::elicitation::{
    ElicitationError, ExpertEvaluation, MergedEntry, MergedMatrix, DEFAULT_CONFIDENCE,
};
use crate::model::{Edge, FcmGraph, Hierarchy, ModelError, NodeId, RiskNode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("invalid JSON document: {0}")]
    Json(String),
    #[error("invalid CSV document: {0}")]
    Csv(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Elicitation(#[from] ElicitationError),
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        DocumentError::Json(e.to_string())
    }
}

/// Published figures kept next to a node for side-by-side reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceValues {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vulnerability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_degree: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_degree: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centrality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub level: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceValues>,
}

impl NodeRecord {
    fn to_node(&self) -> RiskNode {
        RiskNode {
            id: self.id.clone(),
            label: self.label.clone().unwrap_or_else(|| self.id.to_string()),
            level: self.level,
            parent: self.parent.clone(),
            value: self.value,
        }
    }
}

/// Hierarchy plus, optionally, a complete map (node values and edges).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    #[serde(default)]
    pub timestamp: String,
    pub nodes: Vec<NodeRecord>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

impl GraphDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn hierarchy(&self) -> Result<Hierarchy, DocumentError> {
        Ok(Hierarchy::new(
            self.nodes.iter().map(NodeRecord::to_node).collect(),
        )?)
    }

    pub fn graph(&self) -> Result<FcmGraph, DocumentError> {
        Ok(FcmGraph::new(
            self.hierarchy()?,
            self.edges.iter().cloned(),
            self.timestamp.clone(),
        )?)
    }

    /// Whether the document carries any values or edges of its own.
    pub fn has_map(&self) -> bool {
        !self.edges.is_empty() || self.nodes.iter().any(|n| n.value.is_some())
    }

    pub fn references(&self) -> BTreeMap<NodeId, ReferenceValues> {
        self.nodes
            .iter()
            .filter_map(|n| n.reference.clone().map(|r| (n.id.clone(), r)))
            .collect()
    }

    pub fn from_graph(graph: &FcmGraph) -> Self {
        GraphDocument {
            timestamp: graph.timestamp().to_owned(),
            nodes: graph
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    id: n.id.clone(),
                    label: Some(n.label.clone()),
                    level: n.level,
                    parent: n.parent.clone(),
                    value: n.value,
                    reference: None,
                })
                .collect(),
            edges: graph.entries().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryRecord {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertDocument {
    pub expert_id: String,
    #[serde(default)]
    pub unit_id: String,
    pub entries: Vec<EntryRecord>,
}

impl ExpertDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads `src,dst,weight[,confidence]` rows with a header line.
    pub fn from_csv<R: io::Read>(
        expert_id: impl Into<String>,
        unit_id: impl Into<String>,
        reader: R,
    ) -> Result<Self, DocumentError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut entries = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| DocumentError::Csv(e.to_string()))?;
            let field = |i: usize| row.get(i).filter(|s| !s.is_empty());
            let number = |i: usize, name: &str| -> Result<Option<f64>, DocumentError> {
                field(i)
                    .map(|s| {
                        s.parse::<f64>().map_err(|_| {
                            DocumentError::Csv(format!(
                                "row {}: {name} `{s}` is not a number",
                                line + 2
                            ))
                        })
                    })
                    .transpose()
            };
            let (Some(src), Some(dst)) = (field(0), field(1)) else {
                return Err(DocumentError::Csv(format!(
                    "row {}: missing src or dst",
                    line + 2
                )));
            };
            let weight = number(2, "weight")?
                .ok_or_else(|| DocumentError::Csv(format!("row {}: missing weight", line + 2)))?;
            entries.push(EntryRecord {
                src: src.into(),
                dst: dst.into(),
                weight,
                confidence: number(3, "confidence")?,
            });
        }
        Ok(ExpertDocument {
            expert_id: expert_id.into(),
            unit_id: unit_id.into(),
            entries,
        })
    }

    pub fn to_evaluation(&self) -> Result<ExpertEvaluation, DocumentError> {
        let mut eval = ExpertEvaluation::new(self.expert_id.clone(), self.unit_id.clone());
        for e in &self.entries {
            eval.insert(
                e.src.clone(),
                e.dst.clone(),
                e.weight,
                e.confidence.unwrap_or(DEFAULT_CONFIDENCE),
            )?;
        }
        Ok(eval)
    }

    pub fn from_evaluation(eval: &ExpertEvaluation) -> Self {
        ExpertDocument {
            expert_id: eval.expert_id.clone(),
            unit_id: eval.unit_id.clone(),
            entries: eval
                .entries()
                .iter()
                .map(|((src, dst), j)| EntryRecord {
                    src: src.clone(),
                    dst: dst.clone(),
                    weight: j.weight,
                    confidence: Some(j.confidence),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergedRecord {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
    #[serde(default = "one")]
    pub total_confidence: f64,
    #[serde(default = "one_count")]
    pub contributors: usize,
    #[serde(default)]
    pub stale: bool,
}

fn one() -> f64 {
    1.0
}

fn one_count() -> usize {
    1
}

/// A merged matrix on disk, e.g. the previous round's map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    #[serde(default)]
    pub timestamp: String,
    pub entries: Vec<MergedRecord>,
}

impl MatrixDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_merged(merged: &MergedMatrix, timestamp: impl Into<String>) -> Self {
        MatrixDocument {
            timestamp: timestamp.into(),
            entries: merged
                .entries()
                .iter()
                .map(|((src, dst), e)| MergedRecord {
                    src: src.clone(),
                    dst: dst.clone(),
                    weight: e.weight,
                    total_confidence: e.total_confidence,
                    contributors: e.contributors,
                    stale: e.stale,
                })
                .collect(),
        }
    }

    pub fn to_merged(&self, hierarchy: &Hierarchy) -> Result<MergedMatrix, DocumentError> {
        let mut m = MergedMatrix::new(hierarchy.nodes().iter().map(|n| n.id.clone()));
        for r in &self.entries {
            m.insert(
                r.src.clone(),
                r.dst.clone(),
                MergedEntry {
                    weight: r.weight,
                    total_confidence: r.total_confidence,
                    contributors: r.contributors,
                    stale: r.stale,
                },
            )?;
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub horizon: usize,
    pub tnorm: TNorm,
    pub smoothing: f64,
    pub previous_round: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityReport {
    pub unweighted: f64,
    pub weighted: f64,
    pub hierarchy_adjusted: f64,
    pub weighted_hierarchy_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultNode {
    pub id: NodeId,
    pub label: String,
    pub level: u32,
    pub parent: Option<NodeId>,
    /// Value from the input, if any.
    pub supplied: Option<f64>,
    /// Choquet aggregate over the qualifying paths, if any.
    pub aggregate: Option<f64>,
    /// Supplied value when present, aggregate otherwise.
    pub value: Option<f64>,
    pub in_degree: f64,
    pub out_degree: f64,
    pub centrality: f64,
    pub extended_in_degree: f64,
    pub extended_out_degree: f64,
    pub vulnerability: Option<f64>,
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceValues>,
    pub contributions: Vec<PathContribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

/// Everything one evaluation produced; the payload the UI renders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultDocument {
    pub timestamp: String,
    pub config: ConfigEcho,
    pub root: NodeId,
    pub systemic_risk: Option<f64>,
    pub density: DensityReport,
    pub nodes: Vec<ResultNode>,
    pub edges: Vec<ResultEdge>,
}

impl ResultDocument {
    /// Canonical JSON text, newline terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result document serializes");
        s.push('\n');
        s
    }

    pub fn node(&self, id: &str) -> Option<&ResultNode> {
        self.nodes.iter().find(|n| n.id.as_str() == id)
    }
}
