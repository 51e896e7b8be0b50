//! Expert evaluations: confidence-weighted merging, the update between
//! evaluation rounds and per-expert feedback.
//!
//! Every entry of an evaluation is keyed by an ordered node pair; `(s, s)` is
//! the vulnerability of `s`, any other pair is an impact weight. Each entry
//! carries its own confidence.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{Edge, FcmGraph, Hierarchy, ModelError, NodeId};

/// Confidence assumed when an input format omits it.
pub const DEFAULT_CONFIDENCE: f64 = 1.0;

/// Weight of the fresh round in [`temporal_update`].
pub const DEFAULT_SMOOTHING: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElicitationError {
    #[error("no evaluations")]
    NoEvaluations,
    #[error("expert `{expert}` refers to unknown node `{node}`")]
    UnknownNode { expert: String, node: NodeId },
    #[error("expert `{expert}`: weight {value} for ({src}, {dst}) is outside [0,1]")]
    WeightOutOfRange {
        expert: String,
        src: NodeId,
        dst: NodeId,
        value: f64,
    },
    #[error("expert `{expert}`: confidence {value} for ({src}, {dst}) must lie in (0,1]")]
    InvalidConfidence {
        expert: String,
        src: NodeId,
        dst: NodeId,
        value: f64,
    },
    #[error("expert `{expert}` gives ({src}, {dst}) more than once")]
    DuplicateEntry {
        expert: String,
        src: NodeId,
        dst: NodeId,
    },
    #[error("matrices cover different node sets")]
    UniverseMismatch,
    #[error("smoothing factor {0} is outside [0,1]")]
    InvalidSmoothing(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Judgement {
    pub weight: f64,
    pub confidence: f64,
}

/// One expert's sparse matrix of judgements.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertEvaluation {
    pub expert_id: String,
    pub unit_id: String,
    entries: BTreeMap<(NodeId, NodeId), Judgement>,
}

impl ExpertEvaluation {
    pub fn new(expert_id: impl Into<String>, unit_id: impl Into<String>) -> Self {
        ExpertEvaluation {
            expert_id: expert_id.into(),
            unit_id: unit_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(
        &mut self,
        src: impl Into<NodeId>,
        dst: impl Into<NodeId>,
        weight: f64,
        confidence: f64,
    ) -> Result<(), ElicitationError> {
        let (src, dst) = (src.into(), dst.into());
        if !(0.0..=1.0).contains(&weight) {
            return Err(ElicitationError::WeightOutOfRange {
                expert: self.expert_id.clone(),
                src,
                dst,
                value: weight,
            });
        }
        if !(confidence > 0.0 && confidence <= 1.0) {
            return Err(ElicitationError::InvalidConfidence {
                expert: self.expert_id.clone(),
                src,
                dst,
                value: confidence,
            });
        }
        if self.entries.contains_key(&(src.clone(), dst.clone())) {
            return Err(ElicitationError::DuplicateEntry {
                expert: self.expert_id.clone(),
                src,
                dst,
            });
        }
        self.entries
            .insert((src, dst), Judgement { weight, confidence });
        Ok(())
    }

    pub fn with(
        mut self,
        src: impl Into<NodeId>,
        dst: impl Into<NodeId>,
        weight: f64,
        confidence: f64,
    ) -> Result<Self, ElicitationError> {
        self.insert(src, dst, weight, confidence)?;
        Ok(self)
    }

    pub fn entries(&self) -> &BTreeMap<(NodeId, NodeId), Judgement> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that every referenced node exists in `hierarchy`.
    pub fn validate(&self, hierarchy: &Hierarchy) -> Result<(), ElicitationError> {
        for (src, dst) in self.entries.keys() {
            for id in [src, dst] {
                if !hierarchy.contains(id.as_str()) {
                    return Err(ElicitationError::UnknownNode {
                        expert: self.expert_id.clone(),
                        node: id.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergedEntry {
    pub weight: f64,
    /// Sum of contributing confidences.
    pub total_confidence: f64,
    pub contributors: usize,
    /// Carried forward from an earlier round without fresh input.
    pub stale: bool,
}

/// The merged map of one round, over a fixed node universe.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedMatrix {
    universe: BTreeSet<NodeId>,
    entries: BTreeMap<(NodeId, NodeId), MergedEntry>,
}

impl MergedMatrix {
    pub fn new(universe: impl IntoIterator<Item = NodeId>) -> Self {
        MergedMatrix {
            universe: universe.into_iter().collect(),
            entries: BTreeMap::new(),
        }
    }

    pub fn universe(&self) -> &BTreeSet<NodeId> {
        &self.universe
    }

    pub fn entries(&self) -> &BTreeMap<(NodeId, NodeId), MergedEntry> {
        &self.entries
    }

    pub fn get(&self, src: &str, dst: &str) -> Option<&MergedEntry> {
        self.entries.get(&(NodeId::from(src), NodeId::from(dst)))
    }

    pub fn insert(
        &mut self,
        src: impl Into<NodeId>,
        dst: impl Into<NodeId>,
        entry: MergedEntry,
    ) -> Result<(), ElicitationError> {
        let (src, dst) = (src.into(), dst.into());
        for id in [&src, &dst] {
            if !self.universe.contains(id) {
                return Err(ElicitationError::UnknownNode {
                    expert: "<merged>".into(),
                    node: id.clone(),
                });
            }
        }
        if !(0.0..=1.0).contains(&entry.weight) {
            return Err(ElicitationError::WeightOutOfRange {
                expert: "<merged>".into(),
                src,
                dst,
                value: entry.weight,
            });
        }
        self.entries.insert((src, dst), entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads a complete map back as a matrix: node values on the diagonal,
    /// explicit entries off it, each with unit support.
    pub fn from_graph(graph: &FcmGraph) -> Self {
        let mut m = MergedMatrix::new(graph.nodes().iter().map(|n| n.id.clone()));
        let unit = |weight| MergedEntry {
            weight,
            total_confidence: 1.0,
            contributors: 1,
            stale: false,
        };
        for node in graph.nodes() {
            if let Some(v) = node.value {
                m.entries
                    .insert((node.id.clone(), node.id.clone()), unit(v));
            }
        }
        for e in graph.entries() {
            m.entries.insert((e.src, e.dst), unit(e.weight));
        }
        m
    }

    /// Materialises the matrix on `hierarchy`. Values already present on the
    /// hierarchy are discarded; the matrix is the only source of numbers.
    pub fn to_graph(
        &self,
        hierarchy: &Hierarchy,
        timestamp: impl Into<String>,
    ) -> Result<FcmGraph, ElicitationError> {
        let ids: BTreeSet<NodeId> = hierarchy.nodes().iter().map(|n| n.id.clone()).collect();
        if ids != self.universe {
            return Err(ElicitationError::UniverseMismatch);
        }
        let mut nodes = hierarchy.without_values().nodes().to_vec();
        for node in &mut nodes {
            node.value = self
                .entries
                .get(&(node.id.clone(), node.id.clone()))
                .map(|e| e.weight);
        }
        let edges = self
            .entries
            .iter()
            .filter(|((s, d), _)| s != d)
            .map(|((s, d), e)| Edge::new(s.clone(), d.clone(), e.weight));
        Ok(FcmGraph::new(Hierarchy::new(nodes)?, edges, timestamp)?)
    }
}

/// Confidence-weighted average of all expert judgements, entry by entry.
///
/// Contributions are summed in a canonical order (expert id, unit id, value)
/// so the result does not depend on the order of `evals`.
pub fn merge_evaluations(
    evals: &[ExpertEvaluation],
    hierarchy: &Hierarchy,
) -> Result<MergedMatrix, ElicitationError> {
    if evals.is_empty() {
        return Err(ElicitationError::NoEvaluations);
    }
    // (expert, unit, judgement) per entry
    type Pool<'a> = BTreeMap<&'a (NodeId, NodeId), Vec<(&'a str, &'a str, Judgement)>>;
    let mut pooled: Pool = BTreeMap::new();
    for eval in evals {
        eval.validate(hierarchy)?;
        for (key, j) in &eval.entries {
            pooled
                .entry(key)
                .or_default()
                .push((&eval.expert_id, &eval.unit_id, *j));
        }
    }

    let mut merged = MergedMatrix::new(hierarchy.nodes().iter().map(|n| n.id.clone()));
    for (key, mut contributions) in pooled {
        contributions.sort_by(|a, b| {
            a.0.cmp(b.0)
                .then_with(|| a.1.cmp(b.1))
                .then_with(|| a.2.weight.total_cmp(&b.2.weight))
                .then_with(|| a.2.confidence.total_cmp(&b.2.confidence))
        });
        let total_confidence: f64 = contributions.iter().map(|c| c.2.confidence).sum();
        let lo = contributions
            .iter()
            .map(|c| c.2.weight)
            .fold(f64::INFINITY, f64::min);
        let hi = contributions
            .iter()
            .map(|c| c.2.weight)
            .fold(f64::NEG_INFINITY, f64::max);
        let weight = if lo == hi {
            lo
        } else {
            let num: f64 = contributions
                .iter()
                .map(|c| c.2.confidence * c.2.weight)
                .sum();
            // rounding must not push the quotient outside the contributors' range
            (num / total_confidence).clamp(lo, hi)
        };
        merged.entries.insert(
            key.clone(),
            MergedEntry {
                weight,
                total_confidence,
                contributors: contributions.len(),
                stale: false,
            },
        );
    }
    Ok(merged)
}

/// Combines the previous round's map with the fresh one. Shared entries are
/// smoothed as `smoothing * fresh + (1 - smoothing) * prev`; entries only in
/// `fresh` are taken as is; entries only in `prev` are carried forward and
/// marked stale.
pub fn temporal_update(
    prev: &MergedMatrix,
    fresh: &MergedMatrix,
    smoothing: f64,
) -> Result<MergedMatrix, ElicitationError> {
    if !(0.0..=1.0).contains(&smoothing) {
        return Err(ElicitationError::InvalidSmoothing(smoothing));
    }
    if prev.universe != fresh.universe {
        return Err(ElicitationError::UniverseMismatch);
    }
    let mut out = MergedMatrix::new(fresh.universe.iter().cloned());
    for (key, f) in &fresh.entries {
        let entry = match prev.entries.get(key) {
            Some(p) => MergedEntry {
                weight: (smoothing * f.weight + (1.0 - smoothing) * p.weight).clamp(0.0, 1.0),
                ..*f
            },
            None => *f,
        };
        out.entries.insert(key.clone(), entry);
    }
    for (key, p) in &prev.entries {
        if !fresh.entries.contains_key(key) {
            out.entries
                .insert(key.clone(), MergedEntry { stale: true, ..*p });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackRecord {
    pub src: NodeId,
    pub dst: NodeId,
    pub expert_weight: f64,
    /// `None` when the merged map lacks the entry.
    pub merged_weight: Option<f64>,
    pub divergence: Option<f64>,
    /// 1 for the largest divergence.
    pub rank: usize,
}

/// Compares an expert's own entries with the merged map, largest divergence
/// first. Ties are ordered by node pair.
pub fn feedback_report(expert: &ExpertEvaluation, merged: &MergedMatrix) -> Vec<FeedbackRecord> {
    let mut records: Vec<FeedbackRecord> = expert
        .entries
        .iter()
        .map(|((src, dst), j)| {
            let merged_weight = merged
                .entries
                .get(&(src.clone(), dst.clone()))
                .map(|m| m.weight);
            FeedbackRecord {
                src: src.clone(),
                dst: dst.clone(),
                expert_weight: j.weight,
                merged_weight,
                divergence: merged_weight.map(|m| (j.weight - m).abs()),
                rank: 0,
            }
        })
        .collect();
    records.sort_by(|a, b| {
        let key = |r: &FeedbackRecord| r.divergence.unwrap_or(f64::NEG_INFINITY);
        key(b)
            .total_cmp(&key(a))
            .then_with(|| (&a.src, &a.dst).cmp(&(&b.src, &b.dst)))
    });
    for (i, r) in records.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RiskNode;

    fn hierarchy() -> Hierarchy {
        Hierarchy::new(vec![
            RiskNode::root("SR"),
            RiskNode::child("A", "SR", 1),
            RiskNode::child("B", "SR", 1),
            RiskNode::child("C", "SR", 1),
        ])
        .unwrap()
    }

    #[test]
    fn two_experts_one_entry() {
        let e1 = ExpertEvaluation::new("e1", "u1")
            .with("A", "B", 0.4, 0.25)
            .unwrap();
        let e2 = ExpertEvaluation::new("e2", "u1")
            .with("A", "B", 0.8, 0.75)
            .unwrap();
        let m = merge_evaluations(&[e1, e2], &hierarchy()).unwrap();
        let entry = m.get("A", "B").unwrap();
        // same ratio as confidences 1 and 3
        assert!((entry.weight - 0.7).abs() < 1e-12);
        assert_eq!(entry.contributors, 2);
        assert!((entry.total_confidence - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_expert_passes_through() {
        let e = ExpertEvaluation::new("e", "u")
            .with("A", "SR", 0.37, 0.2)
            .unwrap();
        let m = merge_evaluations(&[e], &hierarchy()).unwrap();
        assert_eq!(m.get("A", "SR").unwrap().weight, 0.37);
        assert_eq!(m.len(), 1);
        assert!(m.get("B", "SR").is_none());
    }

    #[test]
    fn merge_errors() {
        assert_eq!(
            merge_evaluations(&[], &hierarchy()),
            Err(ElicitationError::NoEvaluations)
        );
        let bad = ExpertEvaluation::new("e", "u")
            .with("XX", "SR", 0.5, 1.0)
            .unwrap();
        assert!(matches!(
            merge_evaluations(&[bad], &hierarchy()),
            Err(ElicitationError::UnknownNode { node, .. }) if node.as_str() == "XX"
        ));
        let mut e = ExpertEvaluation::new("e", "u");
        assert!(matches!(
            e.insert("A", "B", 0.5, 0.0),
            Err(ElicitationError::InvalidConfidence { .. })
        ));
        assert!(matches!(
            e.insert("A", "B", 1.3, 1.0),
            Err(ElicitationError::WeightOutOfRange { .. })
        ));
        e.insert("A", "B", 0.3, 1.0).unwrap();
        assert!(matches!(
            e.insert("A", "B", 0.3, 1.0),
            Err(ElicitationError::DuplicateEntry { .. })
        ));
    }

    fn matrix(entries: &[(&str, &str, f64)]) -> MergedMatrix {
        let mut m = MergedMatrix::new(hierarchy().nodes().iter().map(|n| n.id.clone()));
        for &(s, d, w) in entries {
            m.insert(
                s,
                d,
                MergedEntry {
                    weight: w,
                    total_confidence: 1.0,
                    contributors: 1,
                    stale: false,
                },
            )
            .unwrap();
        }
        m
    }

    #[test]
    fn temporal_update_smooths_shared_entries() {
        let prev = matrix(&[("A", "B", 0.4), ("C", "SR", 0.2)]);
        let fresh = matrix(&[("A", "B", 0.8), ("B", "SR", 0.9)]);
        let s = temporal_update(&prev, &fresh, 0.7).unwrap();
        assert!((s.get("A", "B").unwrap().weight - 0.68).abs() < 1e-12);
        assert_eq!(s.get("B", "SR").unwrap().weight, 0.9);
        let carried = s.get("C", "SR").unwrap();
        assert_eq!(carried.weight, 0.2);
        assert!(carried.stale);
        assert!(!s.get("A", "B").unwrap().stale);

        let one = temporal_update(&prev, &fresh, 1.0).unwrap();
        assert_eq!(one.get("A", "B").unwrap().weight, 0.8);
        let zero = temporal_update(&prev, &fresh, 0.0).unwrap();
        assert_eq!(zero.get("A", "B").unwrap().weight, 0.4);
    }

    #[test]
    fn temporal_update_errors() {
        let prev = matrix(&[]);
        let other = MergedMatrix::new([NodeId::from("SR")]);
        assert_eq!(
            temporal_update(&prev, &other, 0.5),
            Err(ElicitationError::UniverseMismatch)
        );
        assert_eq!(
            temporal_update(&prev, &prev, 1.5),
            Err(ElicitationError::InvalidSmoothing(1.5))
        );
    }

    #[test]
    fn feedback_single_entry() {
        let e = ExpertEvaluation::new("e", "u")
            .with("A", "B", 0.4, 1.0)
            .unwrap();
        let report = feedback_report(&e, &matrix(&[("A", "B", 0.7)]));
        assert_eq!(report.len(), 1);
        assert!((report[0].divergence.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(report[0].rank, 1);
    }

    #[test]
    fn feedback_ranks_by_divergence() {
        let e = ExpertEvaluation::new("e", "u")
            .with("A", "SR", 0.50, 1.0)
            .and_then(|e| e.with("B", "SR", 0.50, 1.0))
            .and_then(|e| e.with("C", "SR", 0.50, 1.0))
            .unwrap();
        let merged = matrix(&[("A", "SR", 0.55), ("B", "SR", 0.80), ("C", "SR", 0.40)]);
        let report = feedback_report(&e, &merged);
        let ranks: BTreeMap<&str, usize> =
            report.iter().map(|r| (r.src.as_str(), r.rank)).collect();
        assert_eq!(ranks["A"], 3);
        assert_eq!(ranks["B"], 1);
        assert_eq!(ranks["C"], 2);
    }

    #[test]
    fn feedback_identical_is_zero_and_skips_missing() {
        let e = ExpertEvaluation::new("e", "u")
            .with("A", "B", 0.3, 1.0)
            .and_then(|e| e.with("B", "B", 0.6, 1.0))
            .unwrap();
        let m = merge_evaluations(std::slice::from_ref(&e), &hierarchy()).unwrap();
        assert!(feedback_report(&e, &m)
            .iter()
            .all(|r| r.divergence == Some(0.0)));
        assert_eq!(feedback_report(&e, &m).len(), 2);
    }

    #[test]
    fn graph_round_trip_through_matrix() {
        let e = ExpertEvaluation::new("e", "u")
            .with("A", "A", 0.5, 1.0)
            .and_then(|e| e.with("A", "SR", 0.3, 1.0))
            .unwrap();
        let m = merge_evaluations(&[e], &hierarchy()).unwrap();
        let g = m.to_graph(&hierarchy(), "t").unwrap();
        assert_eq!(g.value("A"), Some(0.5));
        assert_eq!(g.weight("A", "SR"), Some(0.3));
        assert_eq!(MergedMatrix::from_graph(&g), m);
    }
}
