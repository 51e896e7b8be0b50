//! Graph analytics on the risk map: density, weighted degrees, receiver and
//! transmitter classification, node vulnerability.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use serde::Serialize;
use thiserror::Error;

use crate::choquet::{aggregate_node, AggregationError, HierarchyEvaluation, TNorm};
use crate::model::{index_paths, FcmGraph, Hierarchy, NodeId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("density needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error("csv export failed: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DensityOptions {
    /// Sum edge weights instead of counting edges.
    pub weighted: bool,
    /// Only count node pairs the hierarchy template allows.
    pub hierarchy_adjusted: bool,
}

/// Ordered pairs the hierarchy template allows an edge on: siblings under
/// one parent, and a child pointing at its parent.
pub fn template_allows(hierarchy: &Hierarchy, src: &str, dst: &str) -> bool {
    let (Some(a), Some(b)) = (hierarchy.get(src), hierarchy.get(dst)) else {
        return false;
    };
    if a.id == b.id {
        return false;
    }
    let siblings = a.parent.is_some() && a.parent == b.parent;
    let to_parent = a.parent.as_ref() == Some(&b.id);
    siblings || to_parent
}

fn template_pairs(hierarchy: &Hierarchy) -> usize {
    let mut children: BTreeMap<&NodeId, usize> = BTreeMap::new();
    for n in hierarchy.nodes() {
        if let Some(p) = &n.parent {
            *children.entry(p).or_default() += 1;
        }
    }
    children.values().map(|&c| c * (c - 1) + c).sum()
}

/// Edge count (or weight sum) over the number of possible ordered pairs,
/// `N(N-1)` or the template's pair count when hierarchy-adjusted. In the
/// adjusted variant edges outside the template are not counted.
pub fn density(graph: &FcmGraph, options: DensityOptions) -> Result<f64, AnalyticsError> {
    let n = graph.len();
    if n < 2 {
        return Err(AnalyticsError::TooFewNodes(n));
    }
    let h = graph.hierarchy();
    let counted = graph
        .edges()
        .filter(|e| {
            !options.hierarchy_adjusted || template_allows(h, e.src.as_str(), e.dst.as_str())
        })
        .map(|e| if options.weighted { e.weight } else { 1.0 })
        .fold(0.0, |a, b| a + b);
    let possible = if options.hierarchy_adjusted {
        template_pairs(h)
    } else {
        n * (n - 1)
    };
    if possible == 0 {
        return Ok(0.0);
    }
    Ok(counted / possible as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Degree {
    pub in_degree: f64,
    pub out_degree: f64,
    pub centrality: f64,
}

impl Degree {
    pub fn new(in_degree: f64, out_degree: f64) -> Self {
        Degree {
            in_degree,
            out_degree,
            centrality: in_degree + out_degree,
        }
    }
}

/// Weighted in- and out-degree of every node over all incident edges.
pub fn degrees(graph: &FcmGraph) -> BTreeMap<NodeId, Degree> {
    (0..graph.len())
        .map(|i| {
            // fold from +0.0: an empty `sum` would give -0.0
            let in_degree = graph.incoming_at(i).iter().fold(0.0, |a, &(_, w)| a + w);
            let out_degree = graph.outgoing_at(i).iter().fold(0.0, |a, &(_, w)| a + w);
            (
                graph.node_at(i).id.clone(),
                Degree::new(in_degree, out_degree),
            )
        })
        .collect()
}

/// Degrees that also count indirect links: every simple path of at most `k`
/// edges contributes its t-norm folded weight to the in-degree of its end and
/// the out-degree of its start. With `k = 1` this equals [`degrees`].
pub fn extended_degrees(graph: &FcmGraph, k: usize, tnorm: TNorm) -> BTreeMap<NodeId, Degree> {
    let n = graph.len();
    let mut inward = vec![0.0; n];
    let mut outward = vec![0.0; n];
    for (t, into) in inward.iter_mut().enumerate() {
        for p in index_paths(graph, t, k.max(1)) {
            let w = tnorm.fold(p.weights.iter().copied());
            *into += w;
            outward[p.nodes[0]] += w;
        }
    }
    (0..n)
        .map(|i| {
            (
                graph.node_at(i).id.clone(),
                Degree::new(inward[i], outward[i]),
            )
        })
        .collect()
}

/// Choquet vulnerability of `node` after `k` periods: the aggregate over the
/// paths of at most `k` edges ending at it.
pub fn node_vulnerability(
    graph: &FcmGraph,
    node: &str,
    k: usize,
    tnorm: TNorm,
) -> Result<f64, AggregationError> {
    aggregate_node(graph, node, k, tnorm).map(|r| r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Receiver,
    Transmitter,
    Ordinary,
}

impl Role {
    pub fn of(degree: &Degree) -> Role {
        if degree.in_degree > degree.out_degree {
            Role::Receiver
        } else if degree.out_degree > degree.in_degree {
            Role::Transmitter
        } else {
            Role::Ordinary
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Receiver => "receiver",
            Role::Transmitter => "transmitter",
            Role::Ordinary => "ordinary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeMetrics {
    pub id: NodeId,
    pub level: u32,
    #[serde(flatten)]
    pub degree: Degree,
    pub extended: Degree,
    /// `None` when no path reaches the node within the horizon.
    pub vulnerability: Option<f64>,
    pub role: Role,
}

/// Per-node metrics on an evaluated map. Vulnerabilities are computed on the
/// graph filled with effective node values.
pub fn node_metrics(
    graph: &FcmGraph,
    evaluation: &HierarchyEvaluation,
    k: usize,
    tnorm: TNorm,
) -> Result<Vec<NodeMetrics>, AnalyticsError> {
    let filled = evaluation
        .filled_graph(graph)
        .map_err(AggregationError::from)?;
    let plain = degrees(graph);
    let extended = extended_degrees(graph, k, tnorm);
    graph
        .nodes()
        .iter()
        .map(|node| {
            let vulnerability = match node_vulnerability(&filled, node.id.as_str(), k, tnorm) {
                Ok(v) => Some(v),
                Err(AggregationError::NoIncomingPaths { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let degree = plain[&node.id];
            Ok(NodeMetrics {
                id: node.id.clone(),
                level: node.level,
                degree,
                extended: extended[&node.id],
                vulnerability,
                role: Role::of(&degree),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "level")]
pub enum Scope {
    Global,
    Level(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedNode {
    pub id: NodeId,
    pub role: Role,
    /// Rank by in-degree, 1 = strongest receiver.
    pub receiver_rank: usize,
    /// Rank by out-degree, 1 = strongest transmitter.
    pub transmitter_rank: usize,
    pub centrality_rank: usize,
}

fn ranks(metrics: &[&NodeMetrics], key: impl Fn(&NodeMetrics) -> f64) -> BTreeMap<NodeId, usize> {
    let mut sorted: Vec<&&NodeMetrics> = metrics.iter().collect();
    sorted.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.id.cmp(&b.id)));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, m)| (m.id.clone(), i + 1))
        .collect()
}

/// Receiver, transmitter and centrality rankings within `scope`, in node id
/// order. Ties rank by node id.
pub fn classify_nodes(metrics: &[NodeMetrics], scope: Scope) -> Vec<RankedNode> {
    let selected: Vec<&NodeMetrics> = metrics
        .iter()
        .filter(|m| match scope {
            Scope::Global => true,
            Scope::Level(l) => m.level == l,
        })
        .collect();
    let by_in = ranks(&selected, |m| m.degree.in_degree);
    let by_out = ranks(&selected, |m| m.degree.out_degree);
    let by_centrality = ranks(&selected, |m| m.degree.centrality);
    let mut out: Vec<RankedNode> = selected
        .iter()
        .map(|m| RankedNode {
            id: m.id.clone(),
            role: m.role,
            receiver_rank: by_in[&m.id],
            transmitter_rank: by_out[&m.id],
            centrality_rank: by_centrality[&m.id],
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Writes `node,level,in,out,centrality,vulnerability_k,class`.
pub fn write_metrics_csv<W: io::Write>(
    metrics: &[NodeMetrics],
    writer: W,
) -> Result<(), AnalyticsError> {
    let err = |e: csv::Error| AnalyticsError::Csv(e.to_string());
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "node",
        "level",
        "in",
        "out",
        "centrality",
        "vulnerability_k",
        "class",
    ])
    .map_err(err)?;
    for m in metrics {
        wtr.write_record([
            m.id.to_string(),
            m.level.to_string(),
            m.degree.in_degree.to_string(),
            m.degree.out_degree.to_string(),
            m.degree.centrality.to_string(),
            m.vulnerability.map(|v| v.to_string()).unwrap_or_default(),
            m.role.to_string(),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| AnalyticsError::Csv(e.to_string()))
}
