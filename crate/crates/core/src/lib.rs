//! Expert-driven systemic risk evaluation on hierarchical fuzzy cognitive maps.
//!
//! A financial system is modelled as a weighted directed graph whose nodes are
//! risk segments arranged in a hierarchy (system root, first-level components,
//! second-level sub-components). Experts supply node vulnerabilities and edge
//! impact strengths with per-entry confidence; those opinions are merged into
//! one map and node risks are aggregated along transmission paths with a
//! Choquet integral over a normalized, path-induced fuzzy measure.
//!
//! Module map:
//!
//! - [`model`]: hierarchy, graph, adjacency-matrix view, path enumeration
//! - [`elicitation`]: confidence-weighted merge, temporal update, feedback
//! - [`choquet`]: fuzzy measures, Choquet integrals, hierarchical evaluation
//! - [`analytics`]: density, degrees, classification, node vulnerability
//! - [`document`]: JSON/CSV input documents and the result document
//! - [`pipeline`]: end-to-end evaluation rounds and what-if scenarios
//! - [`datasets`]: the bundled example maps

pub mod analytics;
pub mod choquet;
pub mod datasets;
pub mod document;
pub mod elicitation;
pub mod model;
pub mod pipeline;

pub use choquet::TNorm;
pub use model::{Edge, FcmGraph, Hierarchy, NodeId, RiskNode, RiskPath};
