#![allow(dead_code)]

use fcmrisk_core::model::{Edge, FcmGraph, Hierarchy, RiskNode};
use proptest::prelude::*;

/// A random map in dense form. Node `i` is `n{i}`; node 0 is the root and
/// every other node hangs off `parents[i]`.
#[derive(Debug, Clone)]
pub struct RandomMap {
    pub parents: Vec<usize>,
    pub weights: Vec<Vec<Option<f64>>>,
    pub values: Vec<Option<f64>>,
}

pub fn id(i: usize) -> String {
    format!("n{i}")
}

impl RandomMap {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn levels(&self) -> Vec<u32> {
        let mut levels = vec![0u32; self.len()];
        for i in 1..self.len() {
            levels[i] = levels[self.parents[i]] + 1;
        }
        levels
    }

    pub fn nodes(&self) -> Vec<RiskNode> {
        let levels = self.levels();
        (0..self.len())
            .map(|i| {
                let mut node = if i == 0 {
                    RiskNode::root(id(0))
                } else {
                    RiskNode::child(id(i), id(self.parents[i]), levels[i])
                };
                node.value = self.values[i];
                node
            })
            .collect()
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for (i, row) in self.weights.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                if let (true, Some(w)) = (i != j, w) {
                    out.push(Edge::new(id(i), id(j), *w));
                }
            }
        }
        out
    }

    pub fn graph(&self) -> FcmGraph {
        FcmGraph::new(
            Hierarchy::new(self.nodes()).unwrap(),
            self.edges(),
            "random",
        )
        .unwrap()
    }

    /// Dense weights for the oracle: zero where there is no active edge.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, w)| if i == j { 0.0 } else { w.unwrap_or(0.0) })
                    .collect()
            })
            .collect()
    }

    pub fn value_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn weight_cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        3 => Just(None),
        1 => Just(Some(0.0)),
        6 => (0.01..=1.0f64).prop_map(Some),
    ]
}

/// Flat map: root plus `n - 1` valued children, arbitrary edges.
pub fn flat_map(min_nodes: usize, max_nodes: usize) -> impl Strategy<Value = RandomMap> {
    (min_nodes..=max_nodes).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(weight_cell(), n), n),
            prop::collection::vec(unit(), n),
        )
            .prop_map(move |(weights, values)| RandomMap {
                parents: vec![0; n],
                weights,
                values: (0..n).map(|i| (i > 0).then(|| values[i])).collect(),
            })
    })
}

/// Up to three levels; leaves are valued, inner nodes randomly so.
pub fn layered_map(max_nodes: usize) -> impl Strategy<Value = RandomMap> {
    (2..=max_nodes).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<prop::sample::Index>(), n),
            prop::collection::vec(prop::collection::vec(weight_cell(), n), n),
            prop::collection::vec(unit(), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(picks, weights, values, keep)| {
                let mut parents = vec![0usize; n];
                let mut levels = vec![0u32; n];
                for i in 1..n {
                    let eligible: Vec<usize> = (0..i).filter(|&p| levels[p] < 2).collect();
                    parents[i] = *picks[i].get(&eligible);
                    levels[i] = levels[parents[i]] + 1;
                }
                let values = (0..n)
                    .map(|i| {
                        let leaf = !(1..n).any(|c| parents[c] == i);
                        (i > 0 && (leaf || keep[i])).then(|| values[i])
                    })
                    .collect();
                RandomMap {
                    parents,
                    weights,
                    values,
                }
            })
    })
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}
