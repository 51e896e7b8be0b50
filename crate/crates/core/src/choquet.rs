//! Path-induced fuzzy measures and Choquet aggregation of node risks.
//!
//! For a target node, every simple path of at most `k` edges ending there
//! gets a raw weight: its edge weights folded with a [`TNorm`]. Raw weights
//! divided by their total form a normalized measure. The risk carried by a
//! path is the largest value among its non-terminal nodes, so the aggregate
//!
//! ```text
//! risk(target) = sum over paths p of mu(p) * max { x(s) : s a source of p }
//! ```
//!
//! is the Choquet integral of the node values with respect to the measure
//! `A -> sum { mu(p) : p has a source in A }`. For `k <= 2` the same number
//! comes out of the 2-additive form with pairwise interactions combined
//! through `max`, see [`choquet_2additive`].
//!
//! Note that with a single incoming path the edge weight is normalized away:
//! the target simply inherits the source value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{check_unit, index_paths, FcmGraph, IndexPath, ModelError, NodeId, RiskPath};

/// Tolerance used when checking that a measure is normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no path of length <= {horizon} ends at `{target}`")]
    NoIncomingPaths { target: NodeId, horizon: usize },
    #[error("node `{node}` on a path into `{target}` has no value")]
    MissingValue { node: NodeId, target: NodeId },
    #[error("node `{0}` has no value and nothing to aggregate it from")]
    UnvaluedLeaf(NodeId),
    #[error("measure is not monotone: {0}")]
    NotMonotone(String),
    #[error("measure is not normalized: {0}")]
    NotNormalized(String),
    #[error("interaction between criteria {i} and {j} is negative ({value})")]
    NegativeInteraction { i: usize, j: usize, value: f64 },
    #[error("interaction matrix is not symmetric at ({i}, {j})")]
    AsymmetricInteraction { i: usize, j: usize },
    #[error("expected {expected} entries, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("{0} criteria exceed the supported maximum")]
    TooManyCriteria(usize),
    #[error("the 2-additive form only covers paths of length <= 2, measure has horizon {0}")]
    HorizonTooLong(usize),
}

/// Conjunction used to fold edge weights along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TNorm {
    #[default]
    Product,
    #[serde(alias = "minimum")]
    Min,
}

impl TNorm {
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Product => a * b,
            TNorm::Min => a.min(b),
        }
    }

    /// Folds a sequence; the empty fold is the neutral element 1.
    pub fn fold(self, weights: impl IntoIterator<Item = f64>) -> f64 {
        weights.into_iter().fold(1.0, |acc, w| self.combine(acc, w))
    }

    pub fn name(self) -> &'static str {
        match self {
            TNorm::Product => "product",
            TNorm::Min => "min",
        }
    }
}

impl fmt::Display for TNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "product" | "prod" => Ok(TNorm::Product),
            "min" | "minimum" => Ok(TNorm::Min),
            other => Err(format!(
                "unknown t-norm `{other}` (expected product or min)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPath {
    pub path: RiskPath,
    /// T-norm fold of the edge weights.
    pub raw: f64,
    /// Normalized measure value.
    pub measure: f64,
}

/// Normalized weights over the transmission paths ending at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyMeasure {
    pub target: NodeId,
    pub horizon: usize,
    pub tnorm: TNorm,
    pub paths: Vec<WeightedPath>,
}

impl FuzzyMeasure {
    pub fn total(&self) -> f64 {
        self.paths.iter().map(|p| p.measure).sum()
    }

    /// Source nodes of all paths in canonical order; the criteria of
    /// [`FuzzyMeasure::union_measure`].
    pub fn criteria(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self
            .paths
            .iter()
            .flat_map(|p| p.path.sources().cloned())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Set function over source nodes: a coalition is worth the measure of
    /// every path that passes through at least one of its members.
    pub fn union_measure(&self) -> Result<PathUnionMeasure, AggregationError> {
        let criteria = self.criteria();
        if criteria.len() > 64 {
            return Err(AggregationError::TooManyCriteria(criteria.len()));
        }
        let position: BTreeMap<&NodeId, usize> =
            criteria.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let paths = self
            .paths
            .iter()
            .map(|p| {
                let mask = p.path.sources().fold(0u64, |m, s| m | (1 << position[s]));
                (mask, p.measure)
            })
            .collect();
        Ok(PathUnionMeasure { criteria, paths })
    }

    /// Singleton values, Shapley-style importances and pairwise interactions
    /// of the measure, for horizons up to 2. Criteria are the source nodes;
    /// the direct edge `t -> target` is the singleton of `t` and the path
    /// `q -> t -> target` is the interaction of `{q, t}`.
    pub fn two_additive(&self) -> Result<TwoAdditive, AggregationError> {
        if let Some(p) = self.paths.iter().find(|p| p.path.len() > 2) {
            return Err(AggregationError::HorizonTooLong(p.path.len()));
        }
        let criteria = self.criteria();
        let n = criteria.len();
        let position: BTreeMap<&NodeId, usize> =
            criteria.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut singletons = vec![0.0; n];
        let mut interactions = vec![vec![0.0; n]; n];
        for p in &self.paths {
            let src: Vec<usize> = p.path.sources().map(|s| position[s]).collect();
            match src.as_slice() {
                [i] => singletons[*i] += p.measure,
                [i, j] => {
                    interactions[*i][*j] += p.measure;
                    interactions[*j][*i] += p.measure;
                }
                _ => unreachable!("length checked above"),
            }
        }
        let importance = (0..n)
            .map(|i| singletons[i] + 0.5 * interactions[i].iter().sum::<f64>())
            .collect();
        Ok(TwoAdditive {
            criteria,
            singletons,
            importance,
            interactions,
        })
    }
}

/// 2-additive description of a path measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAdditive {
    pub criteria: Vec<NodeId>,
    /// Measure of each singleton coalition.
    pub singletons: Vec<f64>,
    /// `v(c_i) = mu(c_i) + 1/2 * sum_j I(c_i, c_j)`.
    pub importance: Vec<f64>,
    pub interactions: Vec<Vec<f64>>,
}

/// A set function over at most 64 criteria, coalitions given as bitmasks.
pub trait SetFunction {
    fn criteria_count(&self) -> usize;
    fn measure(&self, coalition: u64) -> f64;
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// See [`FuzzyMeasure::union_measure`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathUnionMeasure {
    pub criteria: Vec<NodeId>,
    paths: Vec<(u64, f64)>,
}

impl SetFunction for PathUnionMeasure {
    fn criteria_count(&self) -> usize {
        self.criteria.len()
    }

    fn measure(&self, coalition: u64) -> f64 {
        self.paths
            .iter()
            .filter(|(mask, _)| mask & coalition != 0)
            .map(|(_, m)| m)
            .sum()
    }
}

/// A measure stored explicitly for every coalition; validated as a fuzzy
/// measure (zero on the empty set, one on the full set, monotone).
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMeasure {
    n: usize,
    values: Vec<f64>,
}

impl TabularMeasure {
    pub const MAX_CRITERIA: usize = 20;

    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, AggregationError> {
        if n > Self::MAX_CRITERIA {
            return Err(AggregationError::TooManyCriteria(n));
        }
        if values.len() != 1 << n {
            return Err(AggregationError::LengthMismatch {
                expected: 1 << n,
                found: values.len(),
            });
        }
        if values[0].abs() > NORMALIZATION_TOLERANCE {
            return Err(AggregationError::NotNormalized(format!(
                "measure of the empty set is {}",
                values[0]
            )));
        }
        let full = values[(1 << n) - 1];
        if (full - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(AggregationError::NotNormalized(format!(
                "measure of the full set is {full}"
            )));
        }
        for set in 0..values.len() {
            for i in 0..n {
                let bigger = set | (1 << i);
                if bigger != set && values[set] > values[bigger] + NORMALIZATION_TOLERANCE {
                    return Err(AggregationError::NotMonotone(format!(
                        "mu({set:#b}) = {} > mu({bigger:#b}) = {}",
                        values[set], values[bigger]
                    )));
                }
            }
        }
        Ok(TabularMeasure { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> f64) -> Result<Self, AggregationError> {
        if n > Self::MAX_CRITERIA {
            return Err(AggregationError::TooManyCriteria(n));
        }
        Self::new(n, (0..1u64 << n).map(f).collect())
    }

    /// Additive measure with the given singleton weights.
    pub fn additive(weights: &[f64]) -> Result<Self, AggregationError> {
        Self::from_fn(weights.len(), |set| {
            weights
                .iter()
                .enumerate()
                .filter(|(i, _)| set & (1 << i) != 0)
                .map(|(_, w)| w)
                .sum()
        })
    }
}

impl SetFunction for TabularMeasure {
    fn criteria_count(&self) -> usize {
        self.n
    }

    fn measure(&self, coalition: u64) -> f64 {
        self.values[coalition as usize]
    }
}

/// Discrete Choquet integral: values sorted ascending (`x_(0) = 0`), summing
/// `(x_(i) - x_(i-1)) * mu({c_(i), ..., c_(n)})`. Ties are broken by
/// criterion index, which does not change the result.
pub fn choquet_general<M: SetFunction + ?Sized>(
    values: &[f64],
    measure: &M,
) -> Result<f64, AggregationError> {
    let n = measure.criteria_count();
    if values.len() != n {
        return Err(AggregationError::LengthMismatch {
            expected: n,
            found: values.len(),
        });
    }
    if n > 64 {
        return Err(AggregationError::TooManyCriteria(n));
    }
    for (i, &x) in values.iter().enumerate() {
        check_unit(|| format!("criterion {i}"), x)?;
    }
    let mut coalition = full_mask(n);
    let empty = measure.measure(0);
    let full = measure.measure(coalition);
    if empty.abs() > NORMALIZATION_TOLERANCE || (full - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(AggregationError::NotNormalized(format!(
            "mu(empty) = {empty}, mu(full) = {full}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut previous_value = 0.0;
    let mut previous_measure = full;
    let mut sum = 0.0;
    for i in order {
        let mu = measure.measure(coalition);
        if mu > previous_measure + NORMALIZATION_TOLERANCE {
            return Err(AggregationError::NotMonotone(format!(
                "mu({coalition:#b}) = {mu} exceeds the measure of a superset ({previous_measure})"
            )));
        }
        sum += (values[i] - previous_value) * mu;
        previous_value = values[i];
        previous_measure = mu;
        coalition &= !(1u64 << i);
    }
    Ok(sum)
}

/// 2-additive Choquet integral with non-negative interactions combined
/// through `max`:
///
/// ```text
/// sum_i (v_i - 1/2 sum_j I_ij) x_i + sum_{i<j} I_ij max(x_i, x_j)
/// ```
///
/// `importance` holds `v_i`; `interactions` is a symmetric matrix with a zero
/// diagonal. The inputs must describe a normalized monotone measure.
pub fn choquet_2additive(
    values: &[f64],
    importance: &[f64],
    interactions: &[Vec<f64>],
) -> Result<f64, AggregationError> {
    let n = values.len();
    for len in [importance.len(), interactions.len()] {
        if len != n {
            return Err(AggregationError::LengthMismatch {
                expected: n,
                found: len,
            });
        }
    }
    for row in interactions {
        if row.len() != n {
            return Err(AggregationError::LengthMismatch {
                expected: n,
                found: row.len(),
            });
        }
    }
    for (i, &x) in values.iter().enumerate() {
        check_unit(|| format!("criterion {i}"), x)?;
    }
    for (i, row) in interactions.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            if i != j && value < 0.0 {
                return Err(AggregationError::NegativeInteraction { i, j, value });
            }
            if (value - interactions[j][i]).abs() > 1e-12 || (i == j && value != 0.0) {
                return Err(AggregationError::AsymmetricInteraction { i, j });
            }
        }
    }
    let total: f64 = importance.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(AggregationError::NotNormalized(format!(
            "importances sum to {total}"
        )));
    }

    let mut sum = 0.0;
    for i in 0..n {
        let half_interaction = 0.5 * interactions[i].iter().sum::<f64>();
        let singleton = importance[i] - half_interaction;
        if singleton < -NORMALIZATION_TOLERANCE {
            return Err(AggregationError::NotMonotone(format!(
                "criterion {i} has negative singleton measure {singleton}"
            )));
        }
        sum += singleton * values[i];
    }
    for i in 0..n {
        for j in i + 1..n {
            sum += interactions[i][j] * values[i].max(values[j]);
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathContribution {
    /// Path nodes from the first source to the target.
    pub nodes: Vec<NodeId>,
    pub measure: f64,
    /// Largest source value on the path.
    pub risk: f64,
    pub product: f64,
}

/// Aggregated risk of one node together with its per-path breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationResult {
    pub target: NodeId,
    pub value: f64,
    pub horizon: usize,
    pub contributions: Vec<PathContribution>,
}

fn measure_from_paths(
    graph: &FcmGraph,
    target: usize,
    horizon: usize,
    tnorm: TNorm,
    paths: &[IndexPath],
) -> Result<FuzzyMeasure, AggregationError> {
    let raw: Vec<f64> = paths
        .iter()
        .map(|p| tnorm.fold(p.weights.iter().copied()))
        .collect();
    let total: f64 = raw.iter().sum();
    if paths.is_empty() || total <= 0.0 {
        return Err(AggregationError::NoIncomingPaths {
            target: graph.node_at(target).id.clone(),
            horizon,
        });
    }
    Ok(FuzzyMeasure {
        target: graph.node_at(target).id.clone(),
        horizon,
        tnorm,
        paths: paths
            .iter()
            .zip(raw)
            .map(|(p, raw)| WeightedPath {
                path: p.to_risk_path(graph),
                raw,
                measure: raw / total,
            })
            .collect(),
    })
}

fn aggregate_over(
    graph: &FcmGraph,
    target: usize,
    horizon: usize,
    tnorm: TNorm,
    paths: &[IndexPath],
    value_of: impl Fn(usize) -> Option<f64>,
) -> Result<AggregationResult, AggregationError> {
    let measure = measure_from_paths(graph, target, horizon, tnorm, paths)?;
    let mut contributions = Vec::with_capacity(paths.len());
    let mut value = 0.0;
    for (ip, wp) in paths.iter().zip(&measure.paths) {
        let mut risk = f64::NEG_INFINITY;
        for &s in ip.sources() {
            let x = value_of(s).ok_or_else(|| AggregationError::MissingValue {
                node: graph.node_at(s).id.clone(),
                target: measure.target.clone(),
            })?;
            risk = risk.max(x);
        }
        let product = wp.measure * risk;
        value += product;
        contributions.push(PathContribution {
            nodes: ip
                .nodes
                .iter()
                .map(|&i| graph.node_at(i).id.clone())
                .collect(),
            measure: wp.measure,
            risk,
            product,
        });
    }
    Ok(AggregationResult {
        target: measure.target,
        value,
        horizon,
        contributions,
    })
}

/// Normalized measure over every path of at most `k` edges into `target`.
pub fn build_path_measure(
    graph: &FcmGraph,
    target: &str,
    k: usize,
    tnorm: TNorm,
) -> Result<FuzzyMeasure, AggregationError> {
    if k == 0 {
        return Err(ModelError::InvalidPathLength.into());
    }
    let t = graph.index_of(target)?;
    measure_from_paths(graph, t, k, tnorm, &index_paths(graph, t, k))
}

/// Choquet aggregate of the node values feeding `target` through paths of at
/// most `k` edges. Every source node must carry a value.
pub fn aggregate_node(
    graph: &FcmGraph,
    target: &str,
    k: usize,
    tnorm: TNorm,
) -> Result<AggregationResult, AggregationError> {
    if k == 0 {
        return Err(ModelError::InvalidPathLength.into());
    }
    let t = graph.index_of(target)?;
    let paths = index_paths(graph, t, k);
    aggregate_over(graph, t, k, tnorm, &paths, |i| graph.node_at(i).value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeAssessment {
    pub id: NodeId,
    pub level: u32,
    /// Value supplied in the input.
    pub supplied: Option<f64>,
    /// Value aggregated from the paths into this node, when any qualify.
    pub aggregate: Option<AggregationResult>,
}

impl NodeAssessment {
    /// The supplied value when present, the aggregate otherwise.
    pub fn effective(&self) -> Option<f64> {
        self.supplied.or(self.aggregate.as_ref().map(|a| a.value))
    }
}

/// Result of a bottom-up pass over the hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyEvaluation {
    pub horizon: usize,
    pub tnorm: TNorm,
    pub root: NodeId,
    pub nodes: BTreeMap<NodeId, NodeAssessment>,
}

impl HierarchyEvaluation {
    /// Aggregated risk of the root node.
    pub fn systemic_risk(&self) -> Option<f64> {
        self.nodes[&self.root].aggregate.as_ref().map(|a| a.value)
    }

    pub fn effective_values(&self) -> BTreeMap<NodeId, f64> {
        self.nodes
            .iter()
            .filter_map(|(id, a)| a.effective().map(|v| (id.clone(), v)))
            .collect()
    }

    /// `graph` with every node carrying its effective value.
    pub fn filled_graph(&self, graph: &FcmGraph) -> Result<FcmGraph, ModelError> {
        graph.with_values(&self.effective_values())
    }
}

/// Evaluates the hierarchy from the deepest level up to the root.
///
/// A node at level `L` aggregates over the paths whose sources all lie deeper
/// than `L` or carry a supplied value, so unvalued peers never feed each other
/// and the pass needs no fixed point. Supplied values are kept as they are;
/// the aggregate is reported next to them. A node with neither a supplied
/// value nor a qualifying path is an error.
pub fn evaluate_hierarchy(
    graph: &FcmGraph,
    k: usize,
    tnorm: TNorm,
) -> Result<HierarchyEvaluation, AggregationError> {
    if k == 0 {
        return Err(ModelError::InvalidPathLength.into());
    }
    let n = graph.len();
    let mut effective: Vec<Option<f64>> = graph.nodes().iter().map(|n| n.value).collect();
    let mut assessments: Vec<Option<NodeAssessment>> = vec![None; n];

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        graph
            .node_at(b)
            .level
            .cmp(&graph.node_at(a).level)
            .then(a.cmp(&b))
    });

    for i in order {
        let node = graph.node_at(i);
        let eligible: Vec<IndexPath> = index_paths(graph, i, k)
            .into_iter()
            .filter(|p| {
                p.sources().iter().all(|&s| {
                    let src = graph.node_at(s);
                    src.level > node.level || src.value.is_some()
                })
            })
            .collect();
        let aggregate = if eligible.is_empty() {
            None
        } else {
            Some(aggregate_over(graph, i, k, tnorm, &eligible, |s| {
                effective[s]
            })?)
        };
        if node.value.is_none() {
            match &aggregate {
                Some(a) => effective[i] = Some(a.value),
                None => return Err(AggregationError::UnvaluedLeaf(node.id.clone())),
            }
        }
        assessments[i] = Some(NodeAssessment {
            id: node.id.clone(),
            level: node.level,
            supplied: node.value,
            aggregate,
        });
    }

    Ok(HierarchyEvaluation {
        horizon: k,
        tnorm,
        root: graph.root().id.clone(),
        nodes: assessments
            .into_iter()
            .map(|a| {
                let a = a.expect("every node visited");
                (a.id.clone(), a)
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastPoint {
    pub horizon: usize,
    pub value: f64,
}

/// Aggregates `target` with horizons `1..=k_max`: the risk expected `h` time
/// units ahead when risk travels one edge per unit.
pub fn forecast(
    graph: &FcmGraph,
    target: &str,
    k_max: usize,
    tnorm: TNorm,
) -> Result<Vec<ForecastPoint>, AggregationError> {
    if k_max == 0 {
        return Err(ModelError::InvalidPathLength.into());
    }
    (1..=k_max)
        .map(|h| {
            aggregate_node(graph, target, h, tnorm).map(|r| ForecastPoint {
                horizon: h,
                value: r.value,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, Hierarchy, RiskNode};

    fn two_countries(case: u8) -> FcmGraph {
        let nodes = vec![
            RiskNode::root("SR"),
            RiskNode::child("C1", "SR", 1).with_value(0.5),
            RiskNode::child("C2", "SR", 1).with_value(0.3),
        ];
        let mut edges = vec![Edge::new("C1", "SR", 0.3), Edge::new("C2", "SR", 0.8)];
        if case >= 2 {
            edges.push(Edge::new("C2", "C1", 0.6));
        }
        if case >= 3 {
            edges.push(Edge::new("C1", "C2", 0.2));
        }
        FcmGraph::new(Hierarchy::new(nodes).unwrap(), edges, "t").unwrap()
    }

    fn measure_of(m: &FuzzyMeasure, shown: &str) -> f64 {
        m.paths
            .iter()
            .find(|p| p.path.to_string() == shown)
            .unwrap()
            .measure
    }

    #[test]
    fn case_two_measure() {
        let m = build_path_measure(&two_countries(2), "SR", 2, TNorm::Product).unwrap();
        assert_eq!(m.paths.len(), 3);
        assert!((measure_of(&m, "C1 -> SR") - 0.3 / 1.28).abs() < 1e-12);
        assert!((measure_of(&m, "C2 -> SR") - 0.8 / 1.28).abs() < 1e-12);
        assert!((measure_of(&m, "C2 -> C1 -> SR") - 0.18 / 1.28).abs() < 1e-12);
        assert!((m.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn case_three_measure() {
        let m = build_path_measure(&two_countries(3), "SR", 2, TNorm::Product).unwrap();
        let expect = [
            ("C1 -> SR", 0.3),
            ("C2 -> SR", 0.8),
            ("C2 -> C1 -> SR", 0.18),
            ("C1 -> C2 -> SR", 0.16),
        ];
        for (shown, raw) in expect {
            assert!(
                (measure_of(&m, shown) - raw / 1.44).abs() < 1e-12,
                "{shown}"
            );
        }
        assert!((m.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge_measure_is_one() {
        let h = Hierarchy::new(vec![RiskNode::root("SR"), RiskNode::child("A", "SR", 1)]).unwrap();
        let g = FcmGraph::new(h, vec![Edge::new("A", "SR", 0.05)], "t").unwrap();
        let m = build_path_measure(&g, "SR", 1, TNorm::Product).unwrap();
        assert_eq!(m.paths[0].measure, 1.0);
    }

    #[test]
    fn no_paths_is_an_error() {
        let g = two_countries(1);
        assert!(matches!(
            build_path_measure(&g, "C2", 2, TNorm::Product),
            Err(AggregationError::NoIncomingPaths { .. })
        ));
    }

    #[test]
    fn worked_example_values() {
        let expected = [(1, 0.39 / 1.1), (2, 0.48 / 1.28), (3, 0.56 / 1.44)];
        for (case, sr) in expected {
            let r = aggregate_node(&two_countries(case), "SR", 2, TNorm::Product).unwrap();
            assert!((r.value - sr).abs() < 1e-12, "case {case}: {}", r.value);
        }
    }

    #[test]
    fn two_additive_matches_closed_form_on_worked_example() {
        for case in 1..=3 {
            let g = two_countries(case);
            let m = build_path_measure(&g, "SR", 2, TNorm::Product).unwrap();
            let t = m.two_additive().unwrap();
            let x: Vec<f64> = t
                .criteria
                .iter()
                .map(|c| g.value(c.as_str()).unwrap())
                .collect();
            let two = choquet_2additive(&x, &t.importance, &t.interactions).unwrap();
            let direct = aggregate_node(&g, "SR", 2, TNorm::Product).unwrap().value;
            assert!((two - direct).abs() < 1e-12);
            let general = choquet_general(&x, &m.union_measure().unwrap()).unwrap();
            assert!((general - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn additive_choquet_is_weighted_average() {
        let mu = TabularMeasure::additive(&[0.3 / 1.1, 0.8 / 1.1]).unwrap();
        let v = choquet_general(&[0.5, 0.3], &mu).unwrap();
        assert!((v - 0.39 / 1.1).abs() < 1e-12);
        assert!((v - 0.3545).abs() < 5e-5);
    }

    #[test]
    fn choquet_is_idempotent() {
        let mu = TabularMeasure::from_fn(3, |s| match s.count_ones() {
            0 => 0.0,
            1 => 0.2,
            2 => 0.5,
            _ => 1.0,
        })
        .unwrap();
        let v = choquet_general(&[0.42, 0.42, 0.42], &mu).unwrap();
        assert!((v - 0.42).abs() < 1e-15);
    }

    #[test]
    fn tabular_measure_validation() {
        assert!(matches!(
            TabularMeasure::new(1, vec![0.0, 0.9]),
            Err(AggregationError::NotNormalized(_))
        ));
        assert!(matches!(
            TabularMeasure::new(3, vec![0.0, 0.6, 0.3, 0.9, 0.1, 0.4, 0.5, 1.0]),
            Err(AggregationError::NotMonotone(_))
        ));
        assert!(matches!(
            TabularMeasure::new(2, vec![0.0, 0.5]),
            Err(AggregationError::LengthMismatch { .. })
        ));
    }

    struct Raw(Vec<f64>);
    impl SetFunction for Raw {
        fn criteria_count(&self) -> usize {
            1 + (self.0.len() == 4) as usize
        }
        fn measure(&self, c: u64) -> f64 {
            self.0[c as usize]
        }
    }

    #[test]
    fn choquet_general_rejects_invalid_measures() {
        // not monotone along the chain used for values (0.1, 0.9)
        let bad = Raw(vec![0.0, 0.1, 1.2, 1.0]);
        assert!(matches!(
            choquet_general(&[0.1, 0.9], &bad),
            Err(AggregationError::NotMonotone(_))
        ));
        let unnormalized = Raw(vec![0.0, 0.5, 0.5, 0.9]);
        assert!(matches!(
            choquet_general(&[0.1, 0.9], &unnormalized),
            Err(AggregationError::NotNormalized(_))
        ));
    }

    #[test]
    fn two_additive_zero_interaction_is_weighted_average() {
        let zeros = vec![vec![0.0; 3]; 3];
        let w = [0.2, 0.5, 0.3];
        let x = [0.9, 0.1, 0.4];
        let v = choquet_2additive(&x, &w, &zeros).unwrap();
        assert!((v - (0.18 + 0.05 + 0.12)).abs() < 1e-12);
    }

    #[test]
    fn two_additive_rejects_negative_interaction() {
        let inter = vec![vec![0.0, -0.1], vec![-0.1, 0.0]];
        assert!(matches!(
            choquet_2additive(&[0.2, 0.4], &[0.5, 0.5], &inter),
            Err(AggregationError::NegativeInteraction { .. })
        ));
    }

    #[test]
    fn two_additive_refuses_long_paths() {
        let m = build_path_measure(&two_countries(3), "SR", 3, TNorm::Product).unwrap();
        // length-3 paths would need C1 and C2 twice, so none exist here
        assert!(m.two_additive().is_ok());
        let h = Hierarchy::new(vec![
            RiskNode::root("R"),
            RiskNode::child("A", "R", 1).with_value(0.1),
            RiskNode::child("B", "R", 1).with_value(0.2),
            RiskNode::child("C", "R", 1).with_value(0.3),
        ])
        .unwrap();
        let g = FcmGraph::new(
            h,
            vec![
                Edge::new("A", "B", 0.5),
                Edge::new("B", "C", 0.5),
                Edge::new("C", "R", 0.5),
            ],
            "t",
        )
        .unwrap();
        let m = build_path_measure(&g, "R", 3, TNorm::Product).unwrap();
        assert_eq!(m.two_additive(), Err(AggregationError::HorizonTooLong(3)));
    }

    #[test]
    fn min_tnorm_folds_with_minimum() {
        let m = build_path_measure(&two_countries(2), "SR", 2, TNorm::Min).unwrap();
        // raw weights 0.3, 0.8, min(0.6, 0.3)
        assert!((measure_of(&m, "C2 -> C1 -> SR") - 0.3 / 1.4).abs() < 1e-12);
        assert_eq!(TNorm::Min.fold([0.4, 1.0]), 0.4);
        assert_eq!(TNorm::Product.fold([0.4, 1.0]), 0.4);
        assert_eq!("min".parse::<TNorm>(), Ok(TNorm::Min));
        assert!("max".parse::<TNorm>().is_err());
    }

    #[test]
    fn missing_source_value() {
        let h = Hierarchy::new(vec![RiskNode::root("SR"), RiskNode::child("A", "SR", 1)]).unwrap();
        let g = FcmGraph::new(h, vec![Edge::new("A", "SR", 0.5)], "t").unwrap();
        assert!(matches!(
            aggregate_node(&g, "SR", 1, TNorm::Product),
            Err(AggregationError::MissingValue { .. })
        ));
        assert_eq!(
            evaluate_hierarchy(&g, 1, TNorm::Product),
            Err(AggregationError::UnvaluedLeaf("A".into()))
        );
    }

    #[test]
    fn forecast_on_case_two() {
        let f = forecast(&two_countries(2), "SR", 2, TNorm::Product).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f[0].value - 0.39 / 1.1).abs() < 1e-12);
        assert!((f[1].value - 0.375).abs() < 1e-12);
    }

    #[test]
    fn hierarchy_keeps_supplied_values() {
        let g = two_countries(3);
        let eval = evaluate_hierarchy(&g, 2, TNorm::Product).unwrap();
        assert!((eval.systemic_risk().unwrap() - 0.56 / 1.44).abs() < 1e-12);
        let c1 = &eval.nodes[&NodeId::from("C1")];
        assert_eq!(c1.supplied, Some(0.5));
        assert_eq!(c1.effective(), Some(0.5));
        // C1 only hears from C2
        assert!((c1.aggregate.as_ref().unwrap().value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn hierarchy_fills_intermediate_levels() {
        let h = Hierarchy::new(vec![
            RiskNode::root("R"),
            RiskNode::child("S1", "R", 1),
            RiskNode::child("S2", "R", 1),
            RiskNode::child("a", "S1", 2).with_value(0.8),
            RiskNode::child("b", "S1", 2).with_value(0.2),
            RiskNode::child("c", "S2", 2).with_value(0.4),
        ])
        .unwrap();
        let g = FcmGraph::new(
            h,
            vec![
                Edge::new("a", "S1", 0.5),
                Edge::new("b", "S1", 0.5),
                Edge::new("c", "S2", 1.0),
                Edge::new("S1", "R", 0.5),
                Edge::new("S2", "R", 0.5),
                Edge::new("S1", "S2", 0.4),
                Edge::new("S2", "S1", 0.4),
            ],
            "t",
        )
        .unwrap();
        let eval = evaluate_hierarchy(&g, 2, TNorm::Product).unwrap();
        let s1 = eval.nodes[&NodeId::from("S1")].effective().unwrap();
        let s2 = eval.nodes[&NodeId::from("S2")].effective().unwrap();
        // peers S1/S2 are unvalued, so each is built from its own sectors
        assert!((s1 - 0.5).abs() < 1e-12);
        assert!((s2 - 0.4).abs() < 1e-12);
        let sr = eval.systemic_risk().unwrap();
        let filled = eval.filled_graph(&g).unwrap();
        let direct = aggregate_node(&filled, "R", 2, TNorm::Product)
            .unwrap()
            .value;
        assert!((sr - direct).abs() < 1e-12);
    }
}
