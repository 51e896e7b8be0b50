//! Plain-text renderings of command results.

use std::fmt::Write;

use fcmrisk_core::analytics::RankedNode;
use fcmrisk_core::choquet::ForecastPoint;
use fcmrisk_core::document::{MatrixDocument, ReferenceValues, ResultDocument, ResultNode};
use fcmrisk_core::model::FcmGraph;
use fcmrisk_core::pipeline::{Assessment, WhatIfReport};

/// Fixed-point with `precision` decimals; never prints a negative zero.
pub fn num(v: f64, precision: usize) -> String {
    let s = format!("{v:.precision$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_owned()
    } else {
        s
    }
}

fn opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |v| num(v, precision))
}

fn signed(v: Option<f64>, precision: usize) -> String {
    match v {
        Some(v) if num(v, precision).starts_with('-') => num(v, precision),
        Some(v) => format!("+{}", num(v, precision)),
        None => "-".to_owned(),
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    /// First column left-aligned, the rest right-aligned.
    fn render(&self, out: &mut String) {
        let cols = self.header.len();
        let width: Vec<usize> = (0..cols)
            .map(|c| {
                std::iter::once(&self.header)
                    .chain(&self.rows)
                    .map(|r| r.get(c).map_or(0, |s| s.chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    let _ = write!(line, "{cell:<w$}", w = width[0]);
                } else {
                    let _ = write!(line, "  {cell:>w$}", w = width[c]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
    }
}

/// Parents whose children are worth a table: the root, and every node with
/// at least one child that had to be aggregated.
fn groups(doc: &ResultDocument) -> Vec<&ResultNode> {
    let mut out: Vec<&ResultNode> = doc
        .nodes
        .iter()
        .filter(|p| {
            p.id == doc.root
                || doc
                    .nodes
                    .iter()
                    .any(|c| c.parent.as_ref() == Some(&p.id) && c.supplied.is_none())
        })
        .collect();
    out.sort_by(|a, b| a.level.cmp(&b.level).then_with(|| a.id.cmp(&b.id)));
    out
}

fn metric_rows(
    t: &mut Table,
    name: &str,
    cols: &[&ResultNode],
    value: impl Fn(&ResultNode) -> Option<f64>,
    reference: impl Fn(&ReferenceValues) -> Option<f64>,
    p: usize,
) {
    let mut cells = vec![name.to_owned()];
    cells.extend(cols.iter().map(|n| opt(value(n), p)));
    t.row(cells);
    let refs: Vec<Option<f64>> = cols
        .iter()
        .map(|n| n.reference.as_ref().and_then(&reference))
        .collect();
    if refs.iter().any(Option::is_some) {
        let mut cells = vec!["  reference".to_owned()];
        cells.extend(refs.into_iter().map(|r| opt(r, p)));
        t.row(cells);
    }
}

/// The evaluation report: headline, then one table per parent with its
/// children and itself as columns, then the paths into the root.
pub fn evaluation(doc: &ResultDocument, graph: &FcmGraph, p: usize) -> String {
    let mut s = String::new();
    let c = &doc.config;
    let _ = writeln!(
        s,
        "round {}  k={}  t-norm {}  lambda {}{}",
        if doc.timestamp.is_empty() {
            "-"
        } else {
            &doc.timestamp
        },
        c.horizon,
        c.tnorm,
        num(c.smoothing, 2),
        if c.previous_round {
            "  (blended with previous round)"
        } else {
            ""
        }
    );
    let root = doc.node(doc.root.as_str()).expect("root present");
    let _ = write!(
        s,
        "systemic risk {}: {}",
        root.label,
        opt(doc.systemic_risk, p)
    );
    if let Some(r) = root.reference.as_ref().and_then(|r| r.vulnerability) {
        let _ = write!(s, "  (reference {})", num(r, p));
    }
    s.push('\n');
    let d = &doc.density;
    let _ = writeln!(
        s,
        "density: {} unweighted, {} weighted, {} hierarchy-adjusted, {} weighted hierarchy-adjusted",
        num(d.unweighted, p),
        num(d.weighted, p),
        num(d.hierarchy_adjusted, p),
        num(d.weighted_hierarchy_adjusted, p)
    );

    for parent in groups(doc) {
        let mut cols: Vec<&ResultNode> = doc
            .nodes
            .iter()
            .filter(|n| n.parent.as_ref() == Some(&parent.id))
            .collect();
        cols.push(parent);
        let _ = writeln!(s, "\n{}", parent.label);
        let mut header = vec![String::new()];
        header.extend(cols.iter().map(|n| n.label.clone()));
        let mut t = Table::new(header);
        metric_rows(
            &mut t,
            "vulnerability",
            &cols,
            |n| n.value,
            |r| r.vulnerability,
            p,
        );
        if cols
            .iter()
            .any(|n| n.supplied.is_some() && n.aggregate.is_some())
        {
            let mut cells = vec!["  aggregate".to_owned()];
            cells.extend(cols.iter().map(|n| opt(n.aggregate, p)));
            t.row(cells);
        }
        metric_rows(
            &mut t,
            "out-degree",
            &cols,
            |n| Some(n.out_degree),
            |r| r.out_degree,
            p,
        );
        metric_rows(
            &mut t,
            "in-degree",
            &cols,
            |n| Some(n.in_degree),
            |r| r.in_degree,
            p,
        );
        metric_rows(
            &mut t,
            "centrality",
            &cols,
            |n| Some(n.centrality),
            |r| r.centrality,
            p,
        );
        let mut cells = vec!["class".to_owned()];
        cells.extend(cols.iter().map(|n| n.role.to_string()));
        t.row(cells);
        t.render(&mut s);
    }

    if !root.contributions.is_empty() {
        let _ = writeln!(s, "\npaths into {}", root.label);
        let mut t = Table::new(
            ["path", "measure", "risk", "contribution"]
                .map(String::from)
                .to_vec(),
        );
        for c in &root.contributions {
            let path = c
                .nodes
                .iter()
                .map(|id| {
                    graph
                        .node(id.as_str())
                        .map_or(id.as_str(), |n| n.label.as_str())
                })
                .collect::<Vec<_>>()
                .join(" -> ");
            t.row(vec![
                path,
                num(c.measure, 4),
                num(c.risk, p),
                num(c.product, 4),
            ]);
        }
        t.render(&mut s);
    }
    s
}

pub fn what_if(r: &WhatIfReport, graph: &FcmGraph, p: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "systemic risk {}: {} -> {} ({})",
        graph.root().label,
        opt(r.systemic_risk_before, p),
        opt(r.systemic_risk_after, p),
        signed(r.systemic_risk_delta, p)
    );
    let mut t = Table::new(
        ["node", "before", "after", "delta"]
            .map(String::from)
            .to_vec(),
    );
    for n in &r.nodes {
        t.row(vec![
            n.id.to_string(),
            opt(n.before, p),
            opt(n.after, p),
            signed(n.delta, p),
        ]);
    }
    s.push('\n');
    t.render(&mut s);
    s
}

pub fn forecast(points: &[ForecastPoint], root: &str, p: usize) -> String {
    let mut t = Table::new(vec!["h".to_owned(), format!("risk {root}")]);
    for f in points {
        t.row(vec![f.horizon.to_string(), num(f.value, p)]);
    }
    let mut s = String::new();
    t.render(&mut s);
    s
}

pub fn analysis(a: &Assessment, ranked: &[RankedNode], p: usize) -> String {
    let mut t = Table::new(
        [
            "node",
            "level",
            "in",
            "out",
            "centrality",
            "ext in",
            "ext out",
            "vulnerability",
            "class",
            "recv#",
            "trans#",
            "cent#",
        ]
        .map(String::from)
        .to_vec(),
    );
    for r in ranked {
        let m = a
            .metrics_of(r.id.as_str())
            .expect("ranked nodes have metrics");
        t.row(vec![
            m.id.to_string(),
            m.level.to_string(),
            num(m.degree.in_degree, p),
            num(m.degree.out_degree, p),
            num(m.degree.centrality, p),
            num(m.extended.in_degree, p),
            num(m.extended.out_degree, p),
            opt(m.vulnerability, p),
            r.role.to_string(),
            r.receiver_rank.to_string(),
            r.transmitter_rank.to_string(),
            r.centrality_rank.to_string(),
        ]);
    }
    let mut s = String::new();
    t.render(&mut s);
    s
}

pub fn merged_table(m: &MatrixDocument, p: usize) -> String {
    let mut t = Table::new(
        ["src", "dst", "weight", "confidence", "experts", "stale"]
            .map(String::from)
            .to_vec(),
    );
    for e in &m.entries {
        t.row(vec![
            e.src.to_string(),
            e.dst.to_string(),
            num(e.weight, p),
            num(e.total_confidence, p),
            e.contributors.to_string(),
            if e.stale { "yes" } else { "" }.to_owned(),
        ]);
    }
    let mut s = String::new();
    t.render(&mut s);
    s
}
