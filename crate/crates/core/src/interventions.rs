//! Structural interventions: norm-preserving vertex contraction with an
//! empirical monotonicity check on the minimum achievable disparity.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::opinion::OpinionVector;
use crate::partition::{Group, Partition};
use crate::spectral::{laplacian_lambda_max, SpectralConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContractionInstruction {
    pub u: usize,
    pub v: usize,
    /// Group assigned to the merged node.
    pub target: Group,
}

/// An ordered list of merges. Node ids always refer to the original graph:
/// a merge keeps the smaller id alive, and later instructions may reference
/// it; referencing a merged-away id is an error naming the instruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractionPlan {
    instructions: Vec<ContractionInstruction>,
}

impl ContractionPlan {
    pub fn new(instructions: Vec<ContractionInstruction>) -> Result<Self> {
        for (i, ins) in instructions.iter().enumerate() {
            if ins.u == ins.v {
                return Err(Error::param(
                    "plan",
                    format!("instruction {i} merges node {} with itself", ins.u),
                ));
            }
        }
        Ok(ContractionPlan { instructions })
    }

    /// Parses one `u v A|B` instruction per line; `#` starts a comment and
    /// blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut instructions = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected `u v A|B`, got {} tokens", tokens.len()),
                });
            }
            let parse_node = |t: &str| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("invalid node id `{t}`"),
                })
            };
            let u = parse_node(tokens[0])?;
            let v = parse_node(tokens[1])?;
            let target: Group = tokens[2].parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("invalid group `{}`", tokens[2]),
            })?;
            instructions.push(ContractionInstruction { u, v, target });
        }
        Self::new(instructions)
    }

    pub fn instructions(&self) -> &[ContractionInstruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}

/// How a merge treats parallel edges to a shared neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContractionStyle {
    /// Parallel edges combine by adding weights (standard contraction
    /// semantics, the default).
    WeightSum,
    /// Before merging, the first node's edges to neighbors shared with the
    /// second are deleted, so the merged neighborhoods are disjoint and no
    /// weights add up.
    DeleteThenContract,
}

/// Contracts node pairs per the plan with weight-summing semantics. The
/// merged node's opinion is the Euclidean combination
/// `sqrt(s_u^2 + s_v^2)`, which preserves the opinion norm exactly, and its
/// group is the instruction's target. Any edge between the merged pair
/// vanishes. Surviving nodes are renumbered in ascending order of their
/// original ids.
pub fn contract(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
    plan: &ContractionPlan,
) -> Result<(WeightedGraph, OpinionVector, Partition)> {
    contract_with_style(g, s, p, plan, ContractionStyle::WeightSum)
}

pub fn contract_with_style(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
    plan: &ContractionPlan,
    style: ContractionStyle,
) -> Result<(WeightedGraph, OpinionVector, Partition)> {
    if !g.is_undirected() {
        return Err(Error::DirectedUnsupported { op: "contract" });
    }
    let n = g.n();
    if s.len() != n || p.len() != n {
        return Err(Error::DimensionMismatch {
            what: "opinions/partition",
            expected: n,
            got: s.len().min(p.len()),
        });
    }
    if plan.len() >= n {
        return Err(Error::param(
            "plan",
            format!("{} merges would empty a {n}-node graph", plan.len()),
        ));
    }

    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for e in g.edges() {
        adj[e.u].insert(e.v, e.w);
        adj[e.v].insert(e.u, e.w);
    }
    let mut alive = vec![true; n];
    let mut opinions: Vec<f64> = s.as_vector().iter().copied().collect();
    let mut groups: Vec<Group> = (0..n).map(|i| p.group(i)).collect();
    let mut labels: Option<Vec<String>> = g.labels().map(|l| l.to_vec());

    for (index, ins) in plan.instructions().iter().enumerate() {
        for node in [ins.u, ins.v] {
            if node >= n || !alive[node] {
                return Err(Error::StaleContraction { index, node });
            }
        }
        if style == ContractionStyle::DeleteThenContract {
            let shared: Vec<usize> = adj[ins.u]
                .keys()
                .filter(|&&c| c != ins.v && adj[ins.v].contains_key(&c))
                .copied()
                .collect();
            for c in shared {
                adj[ins.u].remove(&c);
                adj[c].remove(&ins.u);
            }
        }
        let keep = ins.u.min(ins.v);
        let gone = ins.u.max(ins.v);
        let absorbed = std::mem::take(&mut adj[gone]);
        for (c, w) in absorbed {
            adj[c].remove(&gone);
            if c == keep {
                continue;
            }
            *adj[keep].entry(c).or_insert(0.0) += w;
            *adj[c].entry(keep).or_insert(0.0) = adj[keep][&c];
        }
        adj[keep].remove(&gone);
        opinions[keep] = opinions[keep].hypot(opinions[gone]);
        groups[keep] = ins.target;
        alive[gone] = false;
        if let Some(l) = labels.as_mut() {
            l[keep] = format!("{}+{}", l[keep], l[gone]);
        }
    }

    let mut new_id = vec![usize::MAX; n];
    let mut count = 0;
    for i in 0..n {
        if alive[i] {
            new_id[i] = count;
            count += 1;
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        if !alive[i] {
            continue;
        }
        for (&j, &w) in &adj[i] {
            if j > i {
                edges.push((new_id[i], new_id[j], w));
            }
        }
    }
    let mut graph = WeightedGraph::new_undirected(count, edges)?;
    if let Some(l) = labels {
        let kept: Vec<String> = (0..n).filter(|&i| alive[i]).map(|i| l[i].clone()).collect();
        graph = graph.with_labels(kept)?;
    }
    let s_out = OpinionVector::new(nalgebra::DVector::from_iterator(
        count,
        (0..n).filter(|&i| alive[i]).map(|i| opinions[i]),
    ))?;
    let p_out = Partition::from_membership(
        (0..n).filter(|&i| alive[i]).map(|i| groups[i]).collect(),
    )?;
    Ok((graph, s_out, p_out))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionCheckReport {
    /// Minimum achievable disparity `1/(1 + λ_max)²` before contraction.
    pub before: f64,
    /// The same quantity on the contracted graph.
    pub after: f64,
    /// Whether the contraction kept the floor from dropping:
    /// `after >= before - 1e-10`.
    pub holds: bool,
    pub lambda_before: f64,
    pub lambda_after: f64,
}

/// Contracts per the plan and compares the minimum achievable disparity
/// before and after. Contracting is expected to raise this floor; the
/// report records whether it actually did.
pub fn contraction_monotonicity_check(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
    plan: &ContractionPlan,
    cfg: &SpectralConfig,
) -> Result<ContractionCheckReport> {
    contraction_monotonicity_check_with(g, s, p, plan, ContractionStyle::WeightSum, cfg)
}

pub fn contraction_monotonicity_check_with(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
    plan: &ContractionPlan,
    style: ContractionStyle,
    cfg: &SpectralConfig,
) -> Result<ContractionCheckReport> {
    let lambda_before = laplacian_lambda_max(g, cfg)?.value;
    let (contracted, _, _) = contract_with_style(g, s, p, plan, style)?;
    let lambda_after = laplacian_lambda_max(&contracted, cfg)?.value;
    let before = (1.0 + lambda_before).powi(-2);
    let after = (1.0 + lambda_after).powi(-2);
    Ok(ContractionCheckReport {
        before,
        after,
        holds: after >= before - 1e-10,
        lambda_before,
        lambda_after,
    })
}
