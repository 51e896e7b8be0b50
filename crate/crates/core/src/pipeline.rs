//! One evaluation round end to end, and what-if recomputation.
//!
//! `merge -> temporal update (when a previous round exists) -> hierarchical
//! evaluation -> analytics -> result document`. The CLI and the service both
//! go through here, so equal inputs give equal documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{self, AnalyticsError, DensityOptions, NodeMetrics};
use crate::choquet::{
    evaluate_hierarchy, AggregationError, ForecastPoint, HierarchyEvaluation, TNorm,
};
use crate::document::{
    ConfigEcho, DensityReport, ReferenceValues, ResultDocument, ResultEdge, ResultNode,
};
use crate::elicitation::{
    merge_evaluations, temporal_update, ElicitationError, ExpertEvaluation, MergedMatrix,
    DEFAULT_SMOOTHING,
};
use crate::model::{FcmGraph, Hierarchy, ModelError, NodeId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Elicitation(#[from] ElicitationError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub horizon: usize,
    pub tnorm: TNorm,
    pub smoothing: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            horizon: 2,
            tnorm: TNorm::Product,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.horizon == 0 {
            return Err(PipelineError::InvalidHorizon);
        }
        if !(0.0..=1.0).contains(&self.smoothing) {
            return Err(ElicitationError::InvalidSmoothing(self.smoothing).into());
        }
        Ok(())
    }
}

/// Merges the round's evaluations and folds in the previous round's map.
pub fn merge_round(
    hierarchy: &Hierarchy,
    evaluations: &[ExpertEvaluation],
    previous: Option<&MergedMatrix>,
    smoothing: f64,
) -> Result<MergedMatrix, PipelineError> {
    let fresh = merge_evaluations(evaluations, hierarchy)?;
    Ok(match previous {
        Some(prev) => temporal_update(prev, &fresh, smoothing)?,
        None => fresh,
    })
}

/// An evaluated map with everything the reports need.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub graph: FcmGraph,
    pub config: EngineConfig,
    pub evaluation: HierarchyEvaluation,
    pub metrics: Vec<NodeMetrics>,
    pub density: DensityReport,
}

impl Assessment {
    pub fn systemic_risk(&self) -> Option<f64> {
        self.evaluation.systemic_risk()
    }

    pub fn metrics_of(&self, id: &str) -> Option<&NodeMetrics> {
        self.metrics.iter().find(|m| m.id.as_str() == id)
    }

    pub fn document(
        &self,
        references: &BTreeMap<NodeId, ReferenceValues>,
        previous_round: bool,
    ) -> ResultDocument {
        let nodes = self
            .graph
            .nodes()
            .iter()
            .zip(&self.metrics)
            .map(|(node, m)| {
                let a = &self.evaluation.nodes[&node.id];
                ResultNode {
                    id: node.id.clone(),
                    label: node.label.clone(),
                    level: node.level,
                    parent: node.parent.clone(),
                    supplied: a.supplied,
                    aggregate: a.aggregate.as_ref().map(|r| r.value),
                    value: a.effective(),
                    in_degree: m.degree.in_degree,
                    out_degree: m.degree.out_degree,
                    centrality: m.degree.centrality,
                    extended_in_degree: m.extended.in_degree,
                    extended_out_degree: m.extended.out_degree,
                    vulnerability: m.vulnerability,
                    role: m.role,
                    reference: references.get(&node.id).cloned(),
                    contributions: a
                        .aggregate
                        .as_ref()
                        .map(|r| r.contributions.clone())
                        .unwrap_or_default(),
                }
            })
            .collect();
        ResultDocument {
            timestamp: self.graph.timestamp().to_owned(),
            config: ConfigEcho {
                horizon: self.config.horizon,
                tnorm: self.config.tnorm,
                smoothing: self.config.smoothing,
                previous_round,
            },
            root: self.evaluation.root.clone(),
            systemic_risk: self.systemic_risk(),
            density: self.density,
            nodes,
            edges: self
                .graph
                .entries()
                .map(|e| ResultEdge {
                    src: e.src,
                    dst: e.dst,
                    weight: e.weight,
                })
                .collect(),
        }
    }
}

fn density_report(graph: &FcmGraph) -> Result<DensityReport, AnalyticsError> {
    if graph.len() < 2 {
        return Ok(DensityReport {
            unweighted: 0.0,
            weighted: 0.0,
            hierarchy_adjusted: 0.0,
            weighted_hierarchy_adjusted: 0.0,
        });
    }
    let d = |weighted, hierarchy_adjusted| {
        analytics::density(
            graph,
            DensityOptions {
                weighted,
                hierarchy_adjusted,
            },
        )
    };
    Ok(DensityReport {
        unweighted: d(false, false)?,
        weighted: d(true, false)?,
        hierarchy_adjusted: d(false, true)?,
        weighted_hierarchy_adjusted: d(true, true)?,
    })
}

/// Hierarchical evaluation plus analytics on a complete map.
pub fn assess(graph: &FcmGraph, config: EngineConfig) -> Result<Assessment, PipelineError> {
    config.validate()?;
    let evaluation = evaluate_hierarchy(graph, config.horizon, config.tnorm)?;
    let metrics = analytics::node_metrics(graph, &evaluation, config.horizon, config.tnorm)?;
    Ok(Assessment {
        graph: graph.clone(),
        config,
        density: density_report(graph)?,
        evaluation,
        metrics,
    })
}

/// Merge, update and assess one round.
pub fn run_round(
    hierarchy: &Hierarchy,
    evaluations: &[ExpertEvaluation],
    previous: Option<&MergedMatrix>,
    timestamp: &str,
    config: EngineConfig,
) -> Result<(MergedMatrix, Assessment), PipelineError> {
    config.validate()?;
    let merged = merge_round(hierarchy, evaluations, previous, config.smoothing)?;
    let graph = merged.to_graph(hierarchy, timestamp)?;
    let assessment = assess(&graph, config)?;
    Ok((merged, assessment))
}

/// Systemic risk for horizons `1..=k_max`, evaluating the whole hierarchy at
/// each horizon.
pub fn forecast_systemic_risk(
    graph: &FcmGraph,
    k_max: usize,
    tnorm: TNorm,
) -> Result<Vec<ForecastPoint>, PipelineError> {
    if k_max == 0 {
        return Err(PipelineError::InvalidHorizon);
    }
    (1..=k_max)
        .map(|h| {
            let eval = evaluate_hierarchy(graph, h, tnorm)?;
            let root = &eval.nodes[&eval.root];
            let value = root.aggregate.as_ref().map(|a| a.value).ok_or_else(|| {
                AggregationError::NoIncomingPaths {
                    target: eval.root.clone(),
                    horizon: h,
                }
            })?;
            Ok(ForecastPoint { horizon: h, value })
        })
        .collect()
}

/// A replacement applied before recomputing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Override {
    NodeValue {
        node: NodeId,
        value: f64,
    },
    EdgeWeight {
        src: NodeId,
        dst: NodeId,
        weight: f64,
    },
}

pub fn apply_overrides(graph: &FcmGraph, overrides: &[Override]) -> Result<FcmGraph, ModelError> {
    overrides.iter().try_fold(graph.clone(), |g, o| match o {
        Override::NodeValue { node, value } => g.with_node_value(node.as_str(), Some(*value)),
        Override::EdgeWeight { src, dst, weight } => {
            g.with_edge_weight(src.as_str(), dst.as_str(), *weight)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeDelta {
    pub id: NodeId,
    pub before: Option<f64>,
    pub after: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhatIfReport {
    pub overrides: Vec<Override>,
    pub systemic_risk_before: Option<f64>,
    pub systemic_risk_after: Option<f64>,
    pub systemic_risk_delta: Option<f64>,
    /// Effective node values before and after, in node id order.
    pub nodes: Vec<NodeDelta>,
}

fn delta(before: Option<f64>, after: Option<f64>) -> Option<f64> {
    Some(after? - before?)
}

/// Recomputes the map under `overrides`; the input graph is untouched.
pub fn what_if(
    graph: &FcmGraph,
    overrides: &[Override],
    config: EngineConfig,
) -> Result<WhatIfReport, PipelineError> {
    config.validate()?;
    let before = evaluate_hierarchy(graph, config.horizon, config.tnorm)?;
    let changed = apply_overrides(graph, overrides)?;
    let after = evaluate_hierarchy(&changed, config.horizon, config.tnorm)?;
    let nodes = before
        .nodes
        .iter()
        .map(|(id, b)| {
            let (b, a) = (b.effective(), after.nodes[id].effective());
            NodeDelta {
                id: id.clone(),
                before: b,
                after: a,
                delta: delta(b, a),
            }
        })
        .collect();
    Ok(WhatIfReport {
        overrides: overrides.to_vec(),
        systemic_risk_before: before.systemic_risk(),
        systemic_risk_after: after.systemic_risk(),
        systemic_risk_delta: delta(before.systemic_risk(), after.systemic_risk()),
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, RiskNode};

    fn case_two() -> FcmGraph {
        let h = Hierarchy::new(vec![
            RiskNode::root("SR"),
            RiskNode::child("C1", "SR", 1).with_value(0.5),
            RiskNode::child("C2", "SR", 1).with_value(0.3),
        ])
        .unwrap();
        FcmGraph::new(
            h,
            vec![
                Edge::new("C1", "SR", 0.3),
                Edge::new("C2", "SR", 0.8),
                Edge::new("C2", "C1", 0.6),
            ],
            "t",
        )
        .unwrap()
    }

    #[test]
    fn what_if_raises_systemic_risk() {
        let o = [Override::NodeValue {
            node: "C1".into(),
            value: 0.9,
        }];
        let r = what_if(&case_two(), &o, EngineConfig::default()).unwrap();
        assert!((r.systemic_risk_before.unwrap() - 0.375).abs() < 1e-12);
        // 0.3*0.9 + 0.8*0.3 + 0.18*0.9 over 1.28
        let expected = (0.27 + 0.24 + 0.162) / 1.28;
        assert!((r.systemic_risk_after.unwrap() - expected).abs() < 1e-12);
        assert!(r.systemic_risk_delta.unwrap() >= 0.0);
    }

    #[test]
    fn empty_what_if_changes_nothing() {
        let r = what_if(&case_two(), &[], EngineConfig::default()).unwrap();
        assert_eq!(r.systemic_risk_delta, Some(0.0));
        assert!(r.nodes.iter().all(|n| n.delta == Some(0.0)));
    }

    #[test]
    fn what_if_on_absent_edge_names_the_pair() {
        let o = [Override::EdgeWeight {
            src: "C1".into(),
            dst: "C2".into(),
            weight: 0.4,
        }];
        let err = what_if(&case_two(), &o, EngineConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "no edge `C1` -> `C2`");
        let o = [Override::NodeValue {
            node: "C1".into(),
            value: 1.4,
        }];
        assert!(what_if(&case_two(), &o, EngineConfig::default()).is_err());
    }

    #[test]
    fn forecast_over_hierarchy() {
        let f = forecast_systemic_risk(&case_two(), 2, TNorm::Product).unwrap();
        assert!((f[0].value - 0.39 / 1.1).abs() < 1e-12);
        assert!((f[1].value - 0.375).abs() < 1e-12);
    }

    #[test]
    fn run_round_needs_evaluations() {
        let h = case_two().hierarchy().clone();
        assert!(matches!(
            run_round(&h, &[], None, "t", EngineConfig::default()),
            Err(PipelineError::Elicitation(ElicitationError::NoEvaluations))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = EngineConfig {
            horizon: 0,
            ..EngineConfig::default()
        };
        assert_eq!(bad.validate(), Err(PipelineError::InvalidHorizon));
        let bad = EngineConfig {
            smoothing: 2.0,
            ..EngineConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
