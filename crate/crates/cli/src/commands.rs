//! The subcommands, as functions from parsed arguments to output text.

use std::fs;
use std::path::{Path, PathBuf};

use fcmrisk_core::analytics::{classify_nodes, write_metrics_csv, Scope};
use fcmrisk_core::datasets;
use fcmrisk_core::document::{ExpertDocument, GraphDocument, MatrixDocument};
use fcmrisk_core::elicitation::{ExpertEvaluation, MergedMatrix};
use fcmrisk_core::model::{validate_connectivity, FcmGraph, Hierarchy, WeightMatrix};
use fcmrisk_core::pipeline::{
    self, assess, forecast_systemic_risk, merge_round, what_if, Assessment, EngineConfig, Override,
};
use serde::Serialize;

use crate::args::{AnalyzeArgs, Format, InputArgs, MergeArgs, RunArgs, ValidateArgs, WhatIfArgs};
use crate::error::{CliError, Kind};
use crate::report;

/// Text to emit and the exit status to finish with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub status: u8,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome { output, status: 0 }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_hierarchy_doc(
    path: Option<&Path>,
    dataset: Option<&str>,
) -> Result<GraphDocument, CliError> {
    match (path, dataset) {
        (Some(p), _) => {
            GraphDocument::from_json(&read(p)?).map_err(|e| CliError::from(e).in_file(p))
        }
        (None, Some(name)) => datasets::by_name(name)
            .ok_or_else(|| {
                CliError::new(
                    Kind::Schema,
                    "datasets",
                    format!(
                        "unknown dataset `{name}` (known: {})",
                        datasets::NAMES.join(", ")
                    ),
                )
            })?
            .map_err(CliError::from),
        (None, None) => Err(CliError::new(Kind::Schema, "cli", "no hierarchy given")),
    }
}

pub fn load_expert(path: &Path) -> Result<ExpertDocument, CliError> {
    let text = read(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let doc = if is_csv {
        // CSV files carry no ids; the file stem names the expert
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        ExpertDocument::from_csv(stem, "", text.as_bytes())
    } else {
        ExpertDocument::from_json(&text)
    };
    doc.map_err(|e| CliError::from(e).in_file(path))
}

fn load_evaluations(paths: &[PathBuf]) -> Result<Vec<ExpertEvaluation>, CliError> {
    paths
        .iter()
        .map(|p| {
            load_expert(p)?
                .to_evaluation()
                .map_err(|e| CliError::from(e).in_file(p))
        })
        .collect()
}

fn load_prev(path: &Path, hierarchy: &Hierarchy) -> Result<MergedMatrix, CliError> {
    MatrixDocument::from_json(&read(path)?)
        .and_then(|d| d.to_merged(hierarchy))
        .map_err(|e| CliError::from(e).in_file(path))
}

/// The map to evaluate, after merging when expert files are given.
pub struct Loaded {
    pub doc: GraphDocument,
    pub graph: FcmGraph,
    pub merged: Option<MergedMatrix>,
    pub previous_round: bool,
}

/// Resolves the inputs to one complete map.
///
/// With `--matrix` the numbers come from the CSV; with `--experts` from the
/// merged evaluations (blended with `--prev`); otherwise from the hierarchy
/// document itself.
pub fn load_map(input: &InputArgs, config: EngineConfig) -> Result<Loaded, CliError> {
    config.validate()?;
    let doc = load_hierarchy_doc(input.hierarchy.as_deref(), input.dataset.as_deref())?;
    let hierarchy = doc.hierarchy()?;
    if let Some(path) = &input.matrix {
        let matrix = WeightMatrix::from_csv(read(path)?.as_bytes())
            .map_err(|e| CliError::from(e).in_file(path))?;
        let nodes = hierarchy.without_values().nodes().to_vec();
        let graph = FcmGraph::build(nodes, &matrix, doc.timestamp.clone())
            .map_err(|e| CliError::from(e).in_file(path))?;
        return Ok(Loaded {
            doc,
            graph,
            merged: None,
            previous_round: false,
        });
    }
    if !input.experts.is_empty() || input.prev.is_some() || !doc.has_map() {
        let evals = load_evaluations(&input.experts)?;
        let prev = input
            .prev
            .as_deref()
            .map(|p| load_prev(p, &hierarchy))
            .transpose()?;
        let merged = merge_round(&hierarchy, &evals, prev.as_ref(), config.smoothing)?;
        let graph = merged.to_graph(&hierarchy, doc.timestamp.clone())?;
        return Ok(Loaded {
            doc,
            graph,
            merged: Some(merged),
            previous_round: prev.is_some(),
        });
    }
    let graph = doc.graph()?;
    Ok(Loaded {
        doc,
        graph,
        merged: None,
        previous_round: false,
    })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct Violation {
    kind: &'static str,
    node: String,
    detail: String,
}

pub fn validate(args: &ValidateArgs) -> Result<Outcome, CliError> {
    let input = &args.input;
    let doc = load_hierarchy_doc(input.hierarchy.as_deref(), input.dataset.as_deref())?;
    let hierarchy = doc.hierarchy()?;
    let mut violations = Vec::new();
    let mut evals = Vec::new();
    for path in &input.experts {
        let eval = load_expert(path)?
            .to_evaluation()
            .map_err(|e| CliError::from(e).in_file(path))?;
        for (src, dst) in eval.entries().keys() {
            for id in [src, dst] {
                if !hierarchy.contains(id.as_str()) {
                    violations.push(Violation {
                        kind: "unknown-node",
                        node: id.to_string(),
                        detail: format!(
                            "{}: expert `{}` entry ({src}, {dst})",
                            path.display(),
                            eval.expert_id
                        ),
                    });
                }
            }
        }
        evals.push(eval);
    }
    let graph = if !evals.is_empty() && violations.is_empty() {
        let merged = merge_round(&hierarchy, &evals, None, 1.0)?;
        Some(merged.to_graph(&hierarchy, doc.timestamp.clone())?)
    } else if evals.is_empty() && doc.has_map() {
        Some(doc.graph()?)
    } else {
        None
    };
    if let Some(g) = &graph {
        for v in validate_connectivity(g) {
            violations.push(Violation {
                kind: "unconnected",
                node: v.node.to_string(),
                detail: format!("no edge {} -> {}", v.missing_link.0, v.missing_link.1),
            });
        }
    }
    let status = if violations.is_empty() { 0 } else { 1 };
    let output = match args.output.format {
        Format::Machine => json(&serde_json::json!({
            "valid": violations.is_empty(),
            "violations": violations,
        })),
        Format::Text => {
            let mut s = String::new();
            for v in &violations {
                s.push_str(&format!("{}\t{}\t{}\n", v.kind, v.node, v.detail));
            }
            if violations.is_empty() {
                s.push_str(&format!(
                    "ok: {} nodes, {} edges, {} expert file(s)\n",
                    hierarchy.len(),
                    graph.as_ref().map_or(0, FcmGraph::edge_count),
                    evals.len()
                ));
            }
            s
        }
    };
    Ok(Outcome { output, status })
}

pub fn merge(args: &MergeArgs) -> Result<Outcome, CliError> {
    let input = &args.input;
    let doc = load_hierarchy_doc(input.hierarchy.as_deref(), input.dataset.as_deref())?;
    let hierarchy = doc.hierarchy()?;
    let evals = load_evaluations(&input.experts)?;
    let prev = input
        .prev
        .as_deref()
        .map(|p| load_prev(p, &hierarchy))
        .transpose()?;
    let merged = merge_round(&hierarchy, &evals, prev.as_ref(), args.lambda)?;
    let matrix = MatrixDocument::from_merged(&merged, doc.timestamp);
    Ok(Outcome::ok(match args.output.format {
        Format::Machine => json(&matrix),
        Format::Text => report::merged_table(&matrix, args.output.precision),
    }))
}

fn assessment(args: &RunArgs) -> Result<(Loaded, Assessment), CliError> {
    let config = args.engine.config();
    let loaded = load_map(&args.input, config)?;
    let a = assess(&loaded.graph, config)?;
    Ok((loaded, a))
}

pub fn evaluate(args: &RunArgs) -> Result<Outcome, CliError> {
    let (loaded, a) = assessment(args)?;
    let doc = a.document(&loaded.doc.references(), loaded.previous_round);
    Ok(Outcome::ok(match args.output.format {
        Format::Machine => doc.to_json(),
        Format::Text => report::evaluation(&doc, &loaded.graph, args.output.precision),
    }))
}

pub fn export(args: &RunArgs) -> Result<Outcome, CliError> {
    let (loaded, a) = assessment(args)?;
    Ok(Outcome::ok(
        a.document(&loaded.doc.references(), loaded.previous_round)
            .to_json(),
    ))
}

/// Parses `NODE=VALUE` or `SRC->DST=WEIGHT`.
pub fn parse_override(text: &str) -> Result<Override, CliError> {
    let bad = || {
        CliError::new(
            Kind::Schema,
            "cli",
            format!("override `{text}` is not NODE=VALUE or SRC->DST=WEIGHT"),
        )
    };
    let (target, number) = text.rsplit_once('=').ok_or_else(bad)?;
    let number: f64 = number.trim().parse().map_err(|_| bad())?;
    if !(0.0..=1.0).contains(&number) {
        return Err(CliError::new(
            Kind::Schema,
            "cli",
            format!("override `{text}`: {number} is outside [0,1]"),
        ));
    }
    Ok(match target.split_once("->") {
        Some((src, dst)) => Override::EdgeWeight {
            src: src.trim().into(),
            dst: dst.trim().into(),
            weight: number,
        },
        None if !target.trim().is_empty() => Override::NodeValue {
            node: target.trim().into(),
            value: number,
        },
        None => return Err(bad()),
    })
}

pub fn whatif(args: &WhatIfArgs) -> Result<Outcome, CliError> {
    let config = args.run.engine.config();
    let loaded = load_map(&args.run.input, config)?;
    let mut overrides = Vec::new();
    if let Some(path) = &args.overrides {
        let list: Vec<Override> = serde_json::from_str(&read(path)?)
            .map_err(|e| CliError::new(Kind::Schema, "document", e.to_string()).in_file(path))?;
        overrides.extend(list);
    }
    for s in &args.set {
        overrides.push(parse_override(s)?);
    }
    let r = what_if(&loaded.graph, &overrides, config)?;
    Ok(Outcome::ok(match args.run.output.format {
        Format::Machine => json(&r),
        Format::Text => report::what_if(&r, &loaded.graph, args.run.output.precision),
    }))
}

pub fn forecast(args: &RunArgs) -> Result<Outcome, CliError> {
    let config = args.engine.config();
    let loaded = load_map(&args.input, config)?;
    let points = forecast_systemic_risk(&loaded.graph, config.horizon, config.tnorm)?;
    Ok(Outcome::ok(match args.output.format {
        Format::Machine => json(&points),
        Format::Text => report::forecast(
            &points,
            loaded.graph.root().id.as_str(),
            args.output.precision,
        ),
    }))
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Outcome, CliError> {
    let (_, a) = assessment(&args.run)?;
    let scope = args.level.map_or(Scope::Global, Scope::Level);
    Ok(Outcome::ok(match args.run.output.format {
        Format::Machine => {
            let mut buf = Vec::new();
            let metrics: Vec<_> = a
                .metrics
                .iter()
                .filter(|m| args.level.is_none_or(|l| m.level == l))
                .cloned()
                .collect();
            write_metrics_csv(&metrics, &mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Text => {
            let ranked = classify_nodes(&a.metrics, scope);
            report::analysis(&a, &ranked, args.run.output.precision)
        }
    }))
}

/// Evaluates a graph document directly; used by tests and the service.
pub fn evaluate_document(doc: &GraphDocument, config: EngineConfig) -> Result<String, CliError> {
    let a = pipeline::assess(&doc.graph()?, config)?;
    Ok(a.document(&doc.references(), false).to_json())
}
