//! Hierarchical fuzzy cognitive map: nodes, weighted edges, the adjacency
//! matrix view and enumeration of risk-transmission paths.
//!
//! Nodes are stored in lexicographic id order and every deterministic output
//! of this crate follows that order. The graph is immutable once built; the
//! `with_*` methods return modified copies.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(NodeId),
    #[error("hierarchy has no root node (level 0)")]
    NoRoot,
    #[error("hierarchy has more than one root node: {0:?}")]
    MultipleRoots(Vec<NodeId>),
    #[error("root node `{0}` must not declare a parent")]
    RootWithParent(NodeId),
    #[error("node `{0}` has no parent but is not at level 0")]
    MissingParent(NodeId),
    #[error("node `{node}` references unknown parent `{parent}`")]
    UnknownParent { node: NodeId, parent: NodeId },
    #[error(
        "node `{node}` is at level {level} but its parent `{parent}` is at level {parent_level}"
    )]
    LevelMismatch {
        node: NodeId,
        level: u32,
        parent: NodeId,
        parent_level: u32,
    },
    #[error("matrix is {rows}x{cols} but the hierarchy has {nodes} nodes")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        nodes: usize,
    },
    #[error("matrix node ids do not match the hierarchy: {0}")]
    MatrixIdMismatch(String),
    #[error("{entry} = {value} is outside [0,1]")]
    OutOfRange { entry: String, value: f64 },
    #[error("duplicate edge `{src}` -> `{dst}`")]
    DuplicateEdge { src: NodeId, dst: NodeId },
    #[error("self-loop on `{0}`: node values belong on the diagonal, not on edges")]
    SelfLoop(NodeId),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("no edge `{src}` -> `{dst}`")]
    UnknownEdge { src: NodeId, dst: NodeId },
    #[error("maximum path length must be at least 1")]
    InvalidPathLength,
    #[error("malformed matrix CSV: {0}")]
    Csv(String),
}

/// Identifier of a node in the map.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub(crate) fn check_unit(entry: impl FnOnce() -> String, value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            entry: entry(),
            value,
        })
    }
}

/// One component of the system: the root, a first-level segment or a
/// second-level sub-segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskNode {
    pub id: NodeId,
    pub label: String,
    /// Depth in the hierarchy; 0 is the system root.
    pub level: u32,
    pub parent: Option<NodeId>,
    /// Vulnerability in `[0,1]`, absent until evaluated.
    pub value: Option<f64>,
}

impl RiskNode {
    pub fn root(id: impl Into<NodeId>) -> Self {
        let id = id.into();
        RiskNode {
            label: id.to_string(),
            id,
            level: 0,
            parent: None,
            value: None,
        }
    }

    pub fn child(id: impl Into<NodeId>, parent: impl Into<NodeId>, level: u32) -> Self {
        let id = id.into();
        RiskNode {
            label: id.to_string(),
            id,
            level,
            parent: Some(parent.into()),
            value: None,
        }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// A validated node tree with exactly one root.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    nodes: Vec<RiskNode>,
    index: HashMap<NodeId, usize>,
    root: usize,
}

impl Hierarchy {
    pub fn new(mut nodes: Vec<RiskNode>) -> Result<Self, ModelError> {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateNode(node.id.clone()));
            }
        }

        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].level == 0).collect();
        let root = match roots.as_slice() {
            [] => return Err(ModelError::NoRoot),
            [r] => *r,
            many => {
                return Err(ModelError::MultipleRoots(
                    many.iter().map(|&i| nodes[i].id.clone()).collect(),
                ))
            }
        };

        for node in &nodes {
            if let Some(v) = node.value {
                check_unit(|| format!("value of `{}`", node.id), v)?;
            }
            match (&node.parent, node.level) {
                (Some(_), 0) => return Err(ModelError::RootWithParent(node.id.clone())),
                (None, 0) => {}
                (None, _) => return Err(ModelError::MissingParent(node.id.clone())),
                (Some(p), level) => {
                    let parent = index.get(p).map(|&i| &nodes[i]).ok_or_else(|| {
                        ModelError::UnknownParent {
                            node: node.id.clone(),
                            parent: p.clone(),
                        }
                    })?;
                    if parent.level + 1 != level {
                        return Err(ModelError::LevelMismatch {
                            node: node.id.clone(),
                            level,
                            parent: p.clone(),
                            parent_level: parent.level,
                        });
                    }
                }
            }
        }

        Ok(Hierarchy { nodes, index, root })
    }

    /// Nodes in lexicographic id order.
    pub fn nodes(&self) -> &[RiskNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &RiskNode {
        &self.nodes[self.root]
    }

    pub fn get(&self, id: &str) -> Option<&RiskNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a RiskNode> + 'a {
        self.nodes
            .iter()
            .filter(move |n| n.parent.as_ref().map(NodeId::as_str) == Some(id))
    }

    pub fn max_level(&self) -> u32 {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// Same tree with every node value cleared.
    pub fn without_values(&self) -> Hierarchy {
        let mut h = self.clone();
        for n in &mut h.nodes {
            n.value = None;
        }
        h
    }

    pub(crate) fn node_at(&self, i: usize) -> &RiskNode {
        &self.nodes[i]
    }
}

/// A directed impact `src -> dst` with strength in `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: impl Into<NodeId>, dst: impl Into<NodeId>, weight: f64) -> Self {
        Edge {
            src: src.into(),
            dst: dst.into(),
            weight,
        }
    }
}

/// Square adjacency matrix: off-diagonal cells are edge weights, diagonal
/// cells are node values, `None` marks an absent entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub ids: Vec<NodeId>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl WeightMatrix {
    pub fn empty(ids: Vec<NodeId>) -> Self {
        let n = ids.len();
        WeightMatrix {
            ids,
            cells: vec![vec![None; n]; n],
        }
    }

    /// Reads a CSV matrix whose header row lists node ids after one leading
    /// label cell, with the same ids down the first column. Empty cells are
    /// absent entries.
    pub fn from_csv<R: io::Read>(reader: R) -> Result<Self, ModelError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = rdr.records();
        let header = rows
            .next()
            .ok_or_else(|| ModelError::Csv("missing header row".into()))?
            .map_err(|e| ModelError::Csv(e.to_string()))?;
        let ids: Vec<NodeId> = header.iter().skip(1).map(NodeId::from).collect();
        let n = ids.len();
        let mut cells = Vec::with_capacity(n);
        for (r, record) in rows.enumerate() {
            let record = record.map_err(|e| ModelError::Csv(e.to_string()))?;
            if record.len() != n + 1 {
                return Err(ModelError::DimensionMismatch {
                    rows: r + 1,
                    cols: record.len().saturating_sub(1),
                    nodes: n,
                });
            }
            let row_id = record.get(0).unwrap_or_default();
            if ids.get(r).map(NodeId::as_str) != Some(row_id) {
                return Err(ModelError::Csv(format!(
                    "row {} is labelled `{row_id}`, expected `{}`",
                    r + 1,
                    ids.get(r).map(NodeId::as_str).unwrap_or("<none>")
                )));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>()
                            .map(Some)
                            .map_err(|_| ModelError::Csv(format!("`{cell}` is not a number")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            cells.push(row);
        }
        if cells.len() != n {
            return Err(ModelError::DimensionMismatch {
                rows: cells.len(),
                cols: n,
                nodes: n,
            });
        }
        Ok(WeightMatrix { ids, cells })
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), ModelError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| ModelError::Csv(e.to_string());
        let mut header = vec![String::new()];
        header.extend(self.ids.iter().map(|id| id.to_string()));
        wtr.write_record(&header).map_err(csv_err)?;
        for (id, row) in self.ids.iter().zip(&self.cells) {
            let mut record = vec![id.to_string()];
            record.extend(
                row.iter()
                    .map(|c| c.map(|v| v.to_string()).unwrap_or_default()),
            );
            wtr.write_record(&record).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| ModelError::Csv(e.to_string()))
    }
}

/// The weighted directed graph plus hierarchy metadata.
///
/// Explicit zero-weight entries are kept (they round-trip through the matrix
/// view) but only strictly positive edges take part in paths and degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct FcmGraph {
    hierarchy: Hierarchy,
    entries: BTreeMap<(usize, usize), f64>,
    incoming: Vec<Vec<(usize, f64)>>,
    outgoing: Vec<Vec<(usize, f64)>>,
    timestamp: String,
}

impl FcmGraph {
    pub fn new(
        hierarchy: Hierarchy,
        edges: impl IntoIterator<Item = Edge>,
        timestamp: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let mut entries = BTreeMap::new();
        for e in edges {
            let s = hierarchy
                .index_of(e.src.as_str())
                .ok_or_else(|| ModelError::UnknownNode(e.src.clone()))?;
            let d = hierarchy
                .index_of(e.dst.as_str())
                .ok_or_else(|| ModelError::UnknownNode(e.dst.clone()))?;
            if s == d {
                return Err(ModelError::SelfLoop(e.src));
            }
            check_unit(|| format!("weight of `{}` -> `{}`", e.src, e.dst), e.weight)?;
            if entries.insert((s, d), e.weight).is_some() {
                return Err(ModelError::DuplicateEdge {
                    src: e.src,
                    dst: e.dst,
                });
            }
        }
        Ok(Self::from_entries(hierarchy, entries, timestamp.into()))
    }

    /// Builds a graph from a node list and an adjacency matrix. Diagonal cells
    /// become node values (replacing any value on the node list), off-diagonal
    /// cells become edges.
    pub fn build(
        mut nodes: Vec<RiskNode>,
        matrix: &WeightMatrix,
        timestamp: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let n = matrix.ids.len();
        if n != nodes.len() || matrix.cells.len() != n || matrix.cells.iter().any(|r| r.len() != n)
        {
            return Err(ModelError::DimensionMismatch {
                rows: matrix.cells.len(),
                cols: matrix.cells.first().map_or(0, Vec::len),
                nodes: nodes.len(),
            });
        }
        let mut position = HashMap::with_capacity(n);
        for (i, id) in matrix.ids.iter().enumerate() {
            if position.insert(id.clone(), i).is_some() {
                return Err(ModelError::DuplicateNode(id.clone()));
            }
        }
        for node in &mut nodes {
            let i = *position.get(&node.id).ok_or_else(|| {
                ModelError::MatrixIdMismatch(format!("`{}` has no matrix row", node.id))
            })?;
            node.value = matrix.cells[i][i];
        }
        let hierarchy = Hierarchy::new(nodes)?;
        let mut edges = Vec::new();
        for (r, row) in matrix.cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if let (Some(w), true) = (cell, r != c) {
                    edges.push(Edge::new(matrix.ids[r].clone(), matrix.ids[c].clone(), *w));
                }
            }
        }
        Self::new(hierarchy, edges, timestamp)
    }

    fn from_entries(
        hierarchy: Hierarchy,
        entries: BTreeMap<(usize, usize), f64>,
        timestamp: String,
    ) -> Self {
        let n = hierarchy.len();
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        for (&(s, d), &w) in &entries {
            if w > 0.0 {
                incoming[d].push((s, w));
                outgoing[s].push((d, w));
            }
        }
        FcmGraph {
            hierarchy,
            entries,
            incoming,
            outgoing,
            timestamp,
        }
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn nodes(&self) -> &[RiskNode] {
        self.hierarchy.nodes()
    }

    pub fn node(&self, id: &str) -> Option<&RiskNode> {
        self.hierarchy.get(id)
    }

    pub fn root(&self) -> &RiskNode {
        self.hierarchy.root()
    }

    pub fn timestamp(&self) -> &str {
        &self.timestamp
    }

    pub fn len(&self) -> usize {
        self.hierarchy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hierarchy.is_empty()
    }

    /// Node value, `None` when the node is unknown or unvalued.
    pub fn value(&self, id: &str) -> Option<f64> {
        self.node(id).and_then(|n| n.value)
    }

    /// Explicit entry for `src -> dst`, including zero weights.
    pub fn weight(&self, src: &str, dst: &str) -> Option<f64> {
        let s = self.hierarchy.index_of(src)?;
        let d = self.hierarchy.index_of(dst)?;
        self.entries.get(&(s, d)).copied()
    }

    /// Every explicit off-diagonal entry in canonical `(src, dst)` order.
    pub fn entries(&self) -> impl Iterator<Item = Edge> + '_ {
        self.entries.iter().map(|(&(s, d), &w)| {
            Edge::new(
                self.hierarchy.node_at(s).id.clone(),
                self.hierarchy.node_at(d).id.clone(),
                w,
            )
        })
    }

    /// Edges with strictly positive weight in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.entries().filter(|e| e.weight > 0.0)
    }

    pub fn edge_count(&self) -> usize {
        self.incoming.iter().map(Vec::len).sum()
    }

    pub(crate) fn incoming_at(&self, i: usize) -> &[(usize, f64)] {
        &self.incoming[i]
    }

    pub(crate) fn outgoing_at(&self, i: usize) -> &[(usize, f64)] {
        &self.outgoing[i]
    }

    pub(crate) fn node_at(&self, i: usize) -> &RiskNode {
        self.hierarchy.node_at(i)
    }

    pub(crate) fn index_of(&self, id: &str) -> Result<usize, ModelError> {
        self.hierarchy
            .index_of(id)
            .ok_or_else(|| ModelError::UnknownNode(NodeId::from(id)))
    }

    /// Matrix view in canonical node order; absent entries stay absent.
    pub fn to_matrix(&self) -> WeightMatrix {
        let ids: Vec<NodeId> = self.nodes().iter().map(|n| n.id.clone()).collect();
        let mut m = WeightMatrix::empty(ids);
        for (i, node) in self.nodes().iter().enumerate() {
            m.cells[i][i] = node.value;
        }
        for (&(s, d), &w) in &self.entries {
            m.cells[s][d] = Some(w);
        }
        m
    }

    pub fn with_node_value(&self, id: &str, value: Option<f64>) -> Result<FcmGraph, ModelError> {
        let i = self.index_of(id)?;
        if let Some(v) = value {
            check_unit(|| format!("value of `{id}`"), v)?;
        }
        let mut g = self.clone();
        g.hierarchy.nodes[i].value = value;
        Ok(g)
    }

    /// Replaces the weight of an existing entry.
    pub fn with_edge_weight(
        &self,
        src: &str,
        dst: &str,
        weight: f64,
    ) -> Result<FcmGraph, ModelError> {
        let s = self.index_of(src)?;
        let d = self.index_of(dst)?;
        if !self.entries.contains_key(&(s, d)) {
            return Err(ModelError::UnknownEdge {
                src: src.into(),
                dst: dst.into(),
            });
        }
        check_unit(|| format!("weight of `{src}` -> `{dst}`"), weight)?;
        let mut entries = self.entries.clone();
        entries.insert((s, d), weight);
        Ok(Self::from_entries(
            self.hierarchy.clone(),
            entries,
            self.timestamp.clone(),
        ))
    }

    /// Same graph with node values replaced wholesale.
    pub fn with_values(&self, values: &BTreeMap<NodeId, f64>) -> Result<FcmGraph, ModelError> {
        let mut g = self.clone();
        for (id, &v) in values {
            let i = self.index_of(id.as_str())?;
            check_unit(|| format!("value of `{id}`"), v)?;
            g.hierarchy.nodes[i].value = Some(v);
        }
        Ok(g)
    }
}

/// A valued node whose antecedent chain to the root is broken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConnectivityViolation {
    pub node: NodeId,
    /// First missing link `(child, parent)` on the way up.
    pub missing_link: (NodeId, NodeId),
}

impl fmt::Display for ConnectivityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: no edge {} -> {} on the path to the root",
            self.node, self.missing_link.0, self.missing_link.1
        )
    }
}

/// Reports every valued node that does not reach the root through edges along
/// its chain of antecedents. An empty report means the map is connected.
pub fn validate_connectivity(graph: &FcmGraph) -> Vec<ConnectivityViolation> {
    let mut report = Vec::new();
    for node in graph.nodes() {
        if node.value.is_none() {
            continue;
        }
        let mut current = node;
        while let Some(parent_id) = &current.parent {
            let linked = graph
                .weight(current.id.as_str(), parent_id.as_str())
                .is_some_and(|w| w > 0.0);
            if !linked {
                report.push(ConnectivityViolation {
                    node: node.id.clone(),
                    missing_link: (current.id.clone(), parent_id.clone()),
                });
                break;
            }
            current = graph.node(parent_id.as_str()).expect("validated parent");
        }
    }
    report
}

/// A simple directed path ending at a target node.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskPath {
    pub edges: Vec<Edge>,
}

impl RiskPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn terminal(&self) -> &NodeId {
        &self.edges.last().expect("paths have at least one edge").dst
    }

    /// Non-terminal nodes in path order.
    pub fn sources(&self) -> impl Iterator<Item = &NodeId> + '_ {
        self.edges.iter().map(|e| &e.src)
    }
}

impl fmt::Display for RiskPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            write!(f, "{} -> ", e.src)?;
        }
        write!(f, "{}", self.terminal())
    }
}

/// Index form of a path: `nodes` runs source-first and ends at the target,
/// `weights[i]` is the weight of `nodes[i] -> nodes[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct IndexPath {
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
}

impl IndexPath {
    pub fn sources(&self) -> &[usize] {
        &self.nodes[..self.nodes.len() - 1]
    }

    pub fn to_risk_path(&self, graph: &FcmGraph) -> RiskPath {
        let edges = self
            .nodes
            .windows(2)
            .zip(&self.weights)
            .map(|(pair, &w)| {
                Edge::new(
                    graph.node_at(pair[0]).id.clone(),
                    graph.node_at(pair[1]).id.clone(),
                    w,
                )
            })
            .collect();
        RiskPath { edges }
    }
}

pub(crate) fn index_paths(graph: &FcmGraph, target: usize, max_len: usize) -> Vec<IndexPath> {
    // Walk incoming edges backwards from the target; `stack` holds the path
    // terminal-first.
    fn walk(
        graph: &FcmGraph,
        max_len: usize,
        stack: &mut Vec<usize>,
        weights: &mut Vec<f64>,
        on_path: &mut [bool],
        out: &mut Vec<IndexPath>,
    ) {
        let head = *stack.last().expect("non-empty");
        for &(src, w) in graph.incoming_at(head) {
            if on_path[src] {
                continue;
            }
            stack.push(src);
            weights.push(w);
            on_path[src] = true;
            out.push(IndexPath {
                nodes: stack.iter().rev().copied().collect(),
                weights: weights.iter().rev().copied().collect(),
            });
            if weights.len() < max_len {
                walk(graph, max_len, stack, weights, on_path, out);
            }
            on_path[src] = false;
            weights.pop();
            stack.pop();
        }
    }

    let mut out = Vec::new();
    let mut on_path = vec![false; graph.len()];
    on_path[target] = true;
    walk(
        graph,
        max_len,
        &mut vec![target],
        &mut Vec::new(),
        &mut on_path,
        &mut out,
    );
    // Node indices follow lexicographic id order, so this is the canonical
    // (length, source ids) order.
    out.sort_by(|a, b| {
        a.weights
            .len()
            .cmp(&b.weights.len())
            .then_with(|| a.sources().cmp(b.sources()))
    });
    out
}

/// All simple directed paths of at most `max_len` edges that end at `target`,
/// ordered by length and then by source ids.
pub fn enumerate_paths(
    graph: &FcmGraph,
    target: &str,
    max_len: usize,
) -> Result<Vec<RiskPath>, ModelError> {
    if max_len == 0 {
        return Err(ModelError::InvalidPathLength);
    }
    let t = graph.index_of(target)?;
    Ok(index_paths(graph, t, max_len)
        .iter()
        .map(|p| p.to_risk_path(graph))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn build_from_matrix_case_two() {
        let ids: Vec<NodeId> = ["C1", "C2", "SR"].into_iter().map(NodeId::from).collect();
        let mut m = WeightMatrix::empty(ids);
        m.cells[0][0] = Some(0.5);
        m.cells[1][1] = Some(0.3);
        m.cells[0][2] = Some(0.3);
        m.cells[1][2] = Some(0.8);
        m.cells[1][0] = Some(0.6);
        let nodes = vec![
            RiskNode::root("SR"),
            RiskNode::child("C1", "SR", 1),
            RiskNode::child("C2", "SR", 1),
        ];
        let g = FcmGraph::build(nodes, &m, "t").unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.value("C1"), Some(0.5));
        assert_eq!(g.value("SR"), None);
        assert_eq!(g.to_matrix(), m);
    }

    #[test]
    fn single_root_graph() {
        let g = FcmGraph::new(
            Hierarchy::new(vec![RiskNode::root("SR")]).unwrap(),
            Vec::new(),
            "t",
        )
        .unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(validate_connectivity(&g).is_empty());
    }

    #[test]
    fn build_rejects_bad_input() {
        let ids: Vec<NodeId> = ["A", "SR"].into_iter().map(NodeId::from).collect();
        let nodes = || vec![RiskNode::root("SR"), RiskNode::child("A", "SR", 1)];

        let mut m = WeightMatrix::empty(ids.clone());
        m.cells[0][1] = Some(1.3);
        assert!(matches!(
            FcmGraph::build(nodes(), &m, "t"),
            Err(ModelError::OutOfRange { .. })
        ));

        let small = WeightMatrix::empty(vec![NodeId::from("SR")]);
        assert!(matches!(
            FcmGraph::build(nodes(), &small, "t"),
            Err(ModelError::DimensionMismatch { .. })
        ));

        let dup = vec![RiskNode::root("SR"), RiskNode::child("SR", "SR", 1)];
        assert!(matches!(
            FcmGraph::build(dup, &WeightMatrix::empty(ids.clone()), "t"),
            Err(ModelError::MatrixIdMismatch(_)) | Err(ModelError::DuplicateNode(_))
        ));
        let dup_ids = WeightMatrix::empty(vec![NodeId::from("SR"), NodeId::from("SR")]);
        assert!(matches!(
            FcmGraph::build(nodes(), &dup_ids, "t"),
            Err(ModelError::DuplicateNode(_))
        ));

        let two_roots = vec![RiskNode::root("SR"), RiskNode::root("A")];
        assert!(matches!(
            FcmGraph::build(two_roots, &WeightMatrix::empty(ids), "t"),
            Err(ModelError::MultipleRoots(_))
        ));
    }

    #[test]
    fn hierarchy_rejects_level_gaps() {
        let nodes = vec![RiskNode::root("SR"), RiskNode::child("s", "SR", 2)];
        assert!(matches!(
            Hierarchy::new(nodes),
            Err(ModelError::LevelMismatch { .. })
        ));
        let nodes = vec![RiskNode::root("SR"), RiskNode::child("s", "X", 1)];
        assert!(matches!(
            Hierarchy::new(nodes),
            Err(ModelError::UnknownParent { .. })
        ));
    }

    #[test]
    fn edges_reject_self_loops_and_duplicates() {
        let h = Hierarchy::new(vec![RiskNode::root("SR"), RiskNode::child("A", "SR", 1)]).unwrap();
        assert!(matches!(
            FcmGraph::new(h.clone(), vec![Edge::new("A", "A", 0.1)], "t"),
            Err(ModelError::SelfLoop(_))
        ));
        assert!(matches!(
            FcmGraph::new(
                h.clone(),
                vec![Edge::new("A", "SR", 0.1), Edge::new("A", "SR", 0.2)],
                "t"
            ),
            Err(ModelError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            FcmGraph::new(h, vec![Edge::new("A", "B", 0.1)], "t"),
            Err(ModelError::UnknownNode(_))
        ));
    }

    #[test]
    fn zero_weight_entries_round_trip_but_carry_no_paths() {
        let h = Hierarchy::new(vec![RiskNode::root("SR"), RiskNode::child("A", "SR", 1)]).unwrap();
        let g = FcmGraph::new(h, vec![Edge::new("A", "SR", 0.0)], "t").unwrap();
        assert_eq!(g.weight("A", "SR"), Some(0.0));
        assert_eq!(g.weight("SR", "A"), None);
        assert_eq!(g.edge_count(), 0);
        assert!(enumerate_paths(&g, "SR", 2).unwrap().is_empty());
        assert_eq!(g.to_matrix().cells[0][1], Some(0.0));
    }

    #[test]
    fn connectivity_flags_unlinked_sector() {
        let nodes = vec![
            RiskNode::root("SR"),
            RiskNode::child("S1", "SR", 1),
            RiskNode::child("s11", "S1", 2).with_value(0.4),
            RiskNode::child("s12", "S1", 2).with_value(0.6),
        ];
        let edges = vec![
            Edge::new("S1", "SR", 0.9),
            Edge::new("s12", "S1", 0.5),
            Edge::new("s11", "s12", 0.5),
        ];
        let g = FcmGraph::new(Hierarchy::new(nodes).unwrap(), edges, "t").unwrap();
        let report = validate_connectivity(&g);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].node.as_str(), "s11");
        assert_eq!(report[0].missing_link, ("s11".into(), "S1".into()));
        assert!(validate_connectivity(&two_countries(2)).is_empty());
    }

    #[test]
    fn case_three_has_four_paths_into_root() {
        let g = two_countries(3);
        let paths = enumerate_paths(&g, "SR", 2).unwrap();
        let shown: Vec<String> = paths.iter().map(ToString::to_string).collect();
        assert_eq!(
            shown,
            vec!["C1 -> SR", "C2 -> SR", "C1 -> C2 -> SR", "C2 -> C1 -> SR"]
        );
        assert!(paths.iter().all(|p| p.terminal().as_str() == "SR"));
    }

    #[test]
    fn max_len_one_gives_direct_in_edges() {
        let g = two_countries(3);
        let paths = enumerate_paths(&g, "C1", 1).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].edges[0], Edge::new("C2", "C1", 0.6));
    }

    #[test]
    fn cycles_are_not_revisited() {
        let g = two_countries(3);
        let paths = enumerate_paths(&g, "SR", 5).unwrap();
        assert_eq!(paths.len(), 4);
    }

    #[test]
    fn enumerate_errors() {
        let g = two_countries(1);
        assert!(matches!(
            enumerate_paths(&g, "nope", 2),
            Err(ModelError::UnknownNode(_))
        ));
        assert!(matches!(
            enumerate_paths(&g, "SR", 0),
            Err(ModelError::InvalidPathLength)
        ));
    }

    #[test]
    fn csv_matrix_round_trip() {
        let g = two_countries(2);
        let mut buf = Vec::new();
        g.to_matrix().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), ",C1,C2,SR");
        let back = WeightMatrix::from_csv(buf.as_slice()).unwrap();
        assert_eq!(back, g.to_matrix());
    }

    #[test]
    fn with_edge_weight_requires_existing_entry() {
        let g = two_countries(1);
        assert!(matches!(
            g.with_edge_weight("C2", "C1", 0.5),
            Err(ModelError::UnknownEdge { .. })
        ));
        let g2 = g.with_edge_weight("C1", "SR", 0.9).unwrap();
        assert_eq!(g2.weight("C1", "SR"), Some(0.9));
    }
}
