//! Text formats: edge lists with arbitrary node identifiers, opinion and
//! partition files, contraction plans, and transition-matrix exports.
//!
//! Edge lists hold one `u v [w]` record per line, whitespace separated,
//! with `#` starting a comment and the weight defaulting to 1.0. Node
//! identifiers may be arbitrary tokens: they are remapped to contiguous ids
//! (numeric sort when every token is an unsigned integer, lexicographic
//! otherwise) and the original tokens are kept as labels.

use std::fs;
use std::path::Path;

use nalgebra::DVector;

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::graph::{Directedness, WeightedGraph};
use crate::interventions::ContractionPlan;
use crate::opinion::OpinionVector;
use crate::partition::{Group, Partition};

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

pub fn parse_edge_list(text: &str, directedness: Directedness) -> Result<WeightedGraph> {
    let mut raw_edges: Vec<(String, String, f64)> = Vec::new();
    for (line, tokens) in records(text) {
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `u v [w]`, got {} tokens", tokens.len()),
            });
        }
        let w = match tokens.get(2) {
            Some(t) => t.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid weight `{t}`"),
            })?,
            None => 1.0,
        };
        raw_edges.push((tokens[0].to_string(), tokens[1].to_string(), w));
    }
    let mut ids: Vec<String> = raw_edges
        .iter()
        .flat_map(|(u, v, _)| [u.clone(), v.clone()])
        .collect();
    ids.sort();
    ids.dedup();
    // Numeric identifiers sort by value so files with gaps (common in
    // published datasets) keep their natural order.
    if ids.iter().all(|t| t.parse::<u128>().is_ok()) {
        ids.sort_by_key(|t| t.parse::<u128>().unwrap());
    }
    let index: std::collections::HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let edges: Vec<(usize, usize, f64)> = raw_edges
        .iter()
        .map(|(u, v, w)| (index[u.as_str()], index[v.as_str()], *w))
        .collect();
    WeightedGraph::new(ids.len(), directedness, edges)?.with_labels(ids)
}

pub fn read_edge_list(path: impl AsRef<Path>, directedness: Directedness) -> Result<WeightedGraph> {
    parse_edge_list(&fs::read_to_string(path)?, directedness)
}

/// Serializes a graph with one `u v w` line per edge, using node labels
/// when present. `f64` display output round-trips exactly, so
/// parse(write(g)) reproduces the graph.
pub fn write_edge_list(g: &WeightedGraph) -> String {
    let mut out = String::new();
    for e in g.edges() {
        out.push_str(&format!("{} {} {}\n", g.label(e.u), g.label(e.v), e.w));
    }
    out
}

/// One `id label` line per node, mapping contiguous ids back to the
/// original identifiers.
pub fn write_label_map(g: &WeightedGraph) -> String {
    (0..g.n())
        .map(|i| format!("{} {}\n", i, g.label(i)))
        .collect()
}

/// One real number per line, `#` comments allowed.
pub fn parse_opinions(text: &str) -> Result<DVector<f64>> {
    let mut values = Vec::new();
    for (line, tokens) in records(text) {
        if tokens.len() != 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected one value, got {} tokens", tokens.len()),
            });
        }
        values.push(tokens[0].parse::<f64>().map_err(|_| Error::Parse {
            line,
            msg: format!("invalid value `{}`", tokens[0]),
        })?);
    }
    if values.is_empty() {
        return Err(Error::param("opinions", "file holds no values".to_string()));
    }
    Ok(DVector::from_vec(values))
}

pub fn read_opinions_raw(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    parse_opinions(&fs::read_to_string(path)?)
}

pub fn read_opinions(path: impl AsRef<Path>) -> Result<OpinionVector> {
    OpinionVector::new(read_opinions_raw(path)?)
}

pub fn write_opinions(s: &OpinionVector) -> String {
    s.as_vector().iter().map(|v| format!("{v}\n")).collect()
}

/// One `A` or `B` token per line, in node order.
pub fn parse_partition(text: &str) -> Result<Partition> {
    let mut membership = Vec::new();
    for (line, tokens) in records(text) {
        if tokens.len() != 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected one group token, got {} tokens", tokens.len()),
            });
        }
        let group: Group = tokens[0].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("invalid group `{}`", tokens[0]),
        })?;
        membership.push(group);
    }
    Partition::from_membership(membership)
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<Partition> {
    parse_partition(&fs::read_to_string(path)?)
}

pub fn write_partition(p: &Partition) -> String {
    (0..p.len()).map(|i| format!("{}\n", p.group(i))).collect()
}

pub fn read_plan(path: impl AsRef<Path>) -> Result<ContractionPlan> {
    ContractionPlan::parse(&fs::read_to_string(path)?)
}

/// One `i j value` line per stored transition entry, row-major with columns
/// ascending, diagonals included. Values round-trip exactly.
pub fn write_chain(t: &TransitionMatrix) -> String {
    let mut out = String::new();
    for i in 0..t.n() {
        let mut row: Vec<(usize, f64)> = t.row(i).to_vec();
        row.sort_by_key(|&(j, _)| j);
        for (j, v) in row {
            out.push_str(&format!("{i} {j} {v}\n"));
        }
    }
    out
}

/// Reads the `write_chain` format back into a validated transition matrix.
pub fn parse_chain(text: &str) -> Result<TransitionMatrix> {
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut n = 0;
    for (line, tokens) in records(text) {
        if tokens.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `i j value`, got {} tokens", tokens.len()),
            });
        }
        let parse_idx = |t: &str| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid state id `{t}`"),
            })
        };
        let i = parse_idx(tokens[0])?;
        let j = parse_idx(tokens[1])?;
        let v = tokens[2].parse::<f64>().map_err(|_| Error::Parse {
            line,
            msg: format!("invalid probability `{}`", tokens[2]),
        })?;
        n = n.max(i + 1).max(j + 1);
        entries.push((i, j, v));
    }
    let mut rows = vec![Vec::new(); n];
    for (i, j, v) in entries {
        rows[i].push((j, v));
    }
    TransitionMatrix::from_rows(n, rows)
}

/// Graphviz rendering of a chain: directed edges labeled with transition
/// probabilities, using node labels when given.
pub fn write_chain_dot(t: &TransitionMatrix, labels: Option<&[String]>) -> String {
    let name = |i: usize| match labels {
        Some(l) => l[i].clone(),
        None => i.to_string(),
    };
    let mut out = String::from("digraph chain {\n");
    for i in 0..t.n() {
        let mut row: Vec<(usize, f64)> = t.row(i).to_vec();
        row.sort_by_key(|&(j, _)| j);
        for (j, v) in row {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{:.6}\"];\n",
                name(i),
                name(j),
                v
            ));
        }
    }
    out.push_str("}\n");
    out
}
