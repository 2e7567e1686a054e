//! Friedkin-Johnsen operations: consensus, disparity, the spectral
//! constructions minimizing/maximizing disparity, the edge-weight gradient
//! with projected descent, the closed-form expected gradient under balanced
//! random opinions, and effective-resistance sparsification.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::opinion::OpinionVector;
use crate::partition::Partition;
use crate::report::{DisparityReport, Model};
use crate::spectral::{fiedler_pair, laplacian_lambda_max, IPlusLSolver, SpectralConfig};

/// Per-edge derivatives of the disparity with respect to edge weight,
/// aligned with the graph's canonical edge order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeGradient {
    values: Vec<f64>,
}

impl EdgeGradient {
    fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        EdgeGradient { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Friedkin-Johnsen equilibrium: solves `(I + L) z = s`, the limit of the
/// repeated-averaging-with-anchoring iteration.
pub fn fj_consensus(g: &WeightedGraph, s: &DVector<f64>) -> Result<DVector<f64>> {
    if s.len() != g.n() {
        return Err(Error::DimensionMismatch {
            what: "opinions",
            expected: g.n(),
            got: s.len(),
        });
    }
    IPlusLSolver::new(g)?.solve(s)
}

/// Friedkin-Johnsen disparity `(s_A - s_B)^T (I+L)^{-2} (s_A - s_B)`,
/// computed as the squared norm of one `(I + L)` solve.
pub fn disparity_fj(g: &WeightedGraph, s: &OpinionVector, p: &Partition) -> Result<f64> {
    let y = s.signed_difference(p)?;
    if y.len() != g.n() {
        return Err(Error::DimensionMismatch {
            what: "opinions",
            expected: g.n(),
            got: y.len(),
        });
    }
    let u = IPlusLSolver::new(g)?.solve(&y)?;
    Ok(u.dot(&u))
}

fn sign_split(vector: &DVector<f64>, tie_tol: f64, context: &'static str) -> Result<Partition> {
    let indicator: Vec<bool> = vector.iter().map(|&v| v >= -tie_tol).collect();
    let p = Partition::from_indicator(&indicator)?;
    p.require_both_nonempty(context)?;
    Ok(p)
}

/// The opinion/partition pair minimizing the disparity over unit opinion
/// vectors: group by the sign of the top Laplacian eigenvector `v_max` and
/// take opinions `|v_max|`, which makes the signed difference the
/// eigenvector itself, so the value is `1/(1 + lambda_max)^2`.
pub fn fj_min_opinions_partition(g: &WeightedGraph, cfg: &SpectralConfig) -> Result<DisparityReport> {
    g.require_connected()?;
    let pair = laplacian_lambda_max(g, cfg)?;
    let p = sign_split(&pair.vector, cfg.tie_tol, "top-eigenvector sign split")?;
    let s = OpinionVector::new(pair.vector.abs())?;
    let value = (1.0 + pair.value).powi(-2);
    let reproduced = disparity_fj(g, &s, &p)?;
    Ok(DisparityReport::new(Model::FriedkinJohnsen, value)
        .with_opinions(&s)
        .with_partition(&p)
        .with_diagnostic("lambda_max", pair.value)
        .with_diagnostic("reproduced_value", reproduced))
}

/// The opinion/partition pair maximizing the disparity subject to equal
/// group sentiment: group by the sign of the Fiedler vector `v_2` and take
/// opinions `|v_2|`. Orthogonality to the all-ones vector makes the two
/// groups' sentiments equal, and the value is `1/(1 + lambda_2)^2`.
pub fn fj_max_balanced(g: &WeightedGraph, cfg: &SpectralConfig) -> Result<DisparityReport> {
    let pair = fiedler_pair(g, cfg)?;
    let p = sign_split(&pair.vector, cfg.tie_tol, "fiedler sign split")?;
    let s = OpinionVector::new(pair.vector.abs())?;
    let y = s.signed_difference(&p)?;
    let sentiment_gap = y.sum().abs();
    if sentiment_gap > 1e-8 {
        return Err(Error::param(
            "fiedler",
            format!("sign split leaves sentiment gap {sentiment_gap:.3e}"),
        ));
    }
    let value = (1.0 + pair.value).powi(-2);
    let reproduced = disparity_fj(g, &s, &p)?;
    Ok(DisparityReport::new(Model::FriedkinJohnsen, value)
        .with_opinions(&s)
        .with_partition(&p)
        .with_diagnostic("lambda_2", pair.value)
        .with_diagnostic("sentiment_gap", sentiment_gap)
        .with_diagnostic("reproduced_value", reproduced))
}

/// The extremal instance achieving the smallest possible disparity for a
/// given even population size: the complete bipartite graph with equal
/// sides, uniform opinions, and one side per group. Its value is
/// `1/(n + 1)^2`, the minimum over all graphs and unit opinion vectors.
pub fn build_min_disparity_instance(
    n: usize,
) -> Result<(WeightedGraph, OpinionVector, Partition)> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::param("n", format!("{n} must be even and at least 2")));
    }
    let half = n / 2;
    let mut edges = Vec::with_capacity(half * half);
    for i in 0..half {
        for j in half..n {
            edges.push((i, j, 1.0));
        }
    }
    let g = WeightedGraph::new_undirected(n, edges)?;
    let s = OpinionVector::uniform(n)?;
    let p = Partition::from_a_indices(n, &(0..half).collect::<Vec<_>>())?;
    Ok((g, s, p))
}

/// Gradient of the disparity with respect to each edge weight for a raw
/// signed difference vector `y`: with `u = (I+L)^{-1} y` and
/// `t = (I+L)^{-1} u`, the derivative at edge (a, b) is
/// `-2 (u_a - u_b)(t_a - t_b)`.
pub fn fj_gradient_of_difference(g: &WeightedGraph, y: &DVector<f64>) -> Result<EdgeGradient> {
    if y.len() != g.n() {
        return Err(Error::DimensionMismatch {
            what: "difference vector",
            expected: g.n(),
            got: y.len(),
        });
    }
    let solver = IPlusLSolver::new(g)?;
    let u = solver.solve(y)?;
    let t = solver.solve(&u)?;
    Ok(gradient_from_solves(g.edges().iter().map(|e| (e.u, e.v)), &u, &t))
}

fn gradient_from_solves(
    edges: impl Iterator<Item = (usize, usize)>,
    u: &DVector<f64>,
    t: &DVector<f64>,
) -> EdgeGradient {
    EdgeGradient::new(
        edges
            .map(|(a, b)| -2.0 * (u[a] - u[b]) * (t[a] - t[b]))
            .collect(),
    )
}

/// Gradient of `disparity_fj(g, s, p)` with respect to each edge weight.
pub fn fj_disparity_gradient(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
) -> Result<EdgeGradient> {
    fj_gradient_of_difference(g, &s.signed_difference(p)?)
}

/// Expected gradient of the disparity at edge `e` when opinions are drawn
/// as the absolute values of `v ~ N(0, I/n)` and the groups split by the
/// sign of `v`: the closed form is `-(2/n) b_e^T (I+L)^{-3} b_e`, which is
/// never positive.
pub fn expected_gradient(g: &WeightedGraph, e: (usize, usize)) -> Result<f64> {
    let b = g.incidence_vector(e.0, e.1)?;
    let solver = IPlusLSolver::new(g)?;
    let w1 = solver.solve(&b)?;
    let w2 = solver.solve(&w1)?;
    let w3 = solver.solve(&w2)?;
    Ok(-(2.0 / g.n() as f64) * b.dot(&w3))
}

/// One Monte-Carlo estimate per edge of the expected disparity gradient
/// under the balanced random-opinion model (`v ~ N(0, I/n)`, opinions
/// `|v|`, groups by sign of `v`, so the signed difference is `v` itself).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Estimates the expected gradient on every edge from `trials` independent
/// draws. Trials use per-trial seeds `seed + t` and are accumulated in
/// fixed block order, so results are identical regardless of thread count.
pub fn sample_expected_gradients(
    g: &WeightedGraph,
    trials: usize,
    seed: u64,
) -> Result<Vec<GradientEstimate>> {
    if trials < 2 {
        return Err(Error::param("trials", format!("{trials} below minimum 2")));
    }
    let n = g.n();
    let m = g.edges().len();
    let solver = IPlusLSolver::new(g)?;
    let scale = (1.0 / n as f64).sqrt();
    let normal = Normal::new(0.0, scale).map_err(|e| Error::param("normal", e.to_string()))?;
    let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();

    const BLOCK: usize = 512;
    let blocks = trials.div_ceil(BLOCK);
    let partials: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut sum = vec![0.0; m];
            let mut sumsq = vec![0.0; m];
            let start = blk * BLOCK;
            let end = ((blk + 1) * BLOCK).min(trials);
            for t in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
                let y = DVector::from_fn(n, |_, _| normal.sample(&mut rng));
                let u = solver.solve(&y)?;
                let w = solver.solve(&u)?;
                for (e, &(a, b)) in pairs.iter().enumerate() {
                    let grad = -2.0 * (u[a] - u[b]) * (w[a] - w[b]);
                    sum[e] += grad;
                    sumsq[e] += grad * grad;
                }
            }
            Ok((sum, sumsq))
        })
        .collect();

    let mut sum = vec![0.0; m];
    let mut sumsq = vec![0.0; m];
    for partial in partials {
        let (ps, pq) = partial?;
        for e in 0..m {
            sum[e] += ps[e];
            sumsq[e] += pq[e];
        }
    }
    let t = trials as f64;
    Ok((0..m)
        .map(|e| {
            let mean = sum[e] / t;
            let var = ((sumsq[e] - sum[e] * sum[e] / t) / (t - 1.0)).max(0.0);
            GradientEstimate {
                mean,
                stderr: (var / t).sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightOptimizeOptions {
    pub steps: usize,
    pub step_size: f64,
}

impl Default for WeightOptimizeOptions {
    fn default() -> Self {
        WeightOptimizeOptions {
            steps: 200,
            step_size: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeightOptimizeReport {
    pub graph: WeightedGraph,
    /// Objective value before any step, then after each accepted step;
    /// non-increasing by construction.
    pub trace: Vec<f64>,
    /// True when backtracking exhausted its budget without an acceptable
    /// step; the returned graph is the last accepted iterate.
    pub stalled: bool,
}

/// Dense `(I + L)` factorization for an explicit weight vector over a fixed
/// edge list; tolerates zero weights, which `WeightedGraph` does not.
fn factor_weights(
    n: usize,
    pairs: &[(usize, usize)],
    w: &[f64],
) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let mut a = DMatrix::identity(n, n);
    for (&(i, j), &wij) in pairs.iter().zip(w) {
        a[(i, i)] += wij;
        a[(j, j)] += wij;
        a[(i, j)] -= wij;
        a[(j, i)] -= wij;
    }
    Cholesky::new(a).ok_or(Error::NotConverged {
        what: "dense factorization of I + L",
        iters: 0,
    })
}

fn positive_support_connected(n: usize, pairs: &[(usize, usize)], w: &[f64]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for (&(i, j), &wij) in pairs.iter().zip(w) {
        if wij > 0.0 {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}

/// Projected gradient descent on edge weights to reduce the disparity of a
/// fixed `(s, partition)` pair. Each step moves along the negative
/// gradient, clips negative weights to zero, and rescales so the total
/// weight stays at its initial value; a backtracking line search (factor
/// 1/2, at most 30 halvings, sufficient-decrease constant 1e-4) rejects
/// steps that fail to decrease the objective or disconnect the
/// positive-weight subgraph. Zero-weight edges stay in the working support
/// and may revive on later steps, but are dropped from the returned graph.
pub fn fj_optimize_weights(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
    opts: WeightOptimizeOptions,
) -> Result<WeightOptimizeReport> {
    g.require_connected()?;
    let y = s.signed_difference(p)?;
    if y.len() != g.n() {
        return Err(Error::DimensionMismatch {
            what: "opinions",
            expected: g.n(),
            got: y.len(),
        });
    }
    if !(opts.step_size.is_finite() && opts.step_size > 0.0) {
        return Err(Error::param(
            "step_size",
            format!("{} must be positive", opts.step_size),
        ));
    }
    let n = g.n();
    let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
    let mut w: Vec<f64> = g.edges().iter().map(|e| e.w).collect();
    let total = g.total_weight();

    let evaluate = |w: &[f64]| -> Result<(f64, DVector<f64>, DVector<f64>)> {
        let chol = factor_weights(n, &pairs, w)?;
        let u = chol.solve(&y);
        let t = chol.solve(&u);
        Ok((u.dot(&u), u, t))
    };

    let (mut f_cur, mut u, mut t) = evaluate(&w)?;
    let mut trace = vec![f_cur];
    let mut stalled = false;

    for _ in 0..opts.steps {
        let grad = gradient_from_solves(pairs.iter().copied(), &u, &t);
        let mut eta = opts.step_size;
        let mut accepted = None;
        for _ in 0..=30 {
            let mut cand: Vec<f64> = w
                .iter()
                .zip(grad.values())
                .map(|(&wi, &gi)| (wi - eta * gi).max(0.0))
                .collect();
            let cand_total: f64 = cand.iter().sum();
            if cand_total > 0.0 {
                let factor = total / cand_total;
                for c in cand.iter_mut() {
                    *c *= factor;
                }
                if positive_support_connected(n, &pairs, &cand) {
                    let (f_cand, u_cand, t_cand) = evaluate(&cand)?;
                    let movement: f64 = cand
                        .iter()
                        .zip(&w)
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum();
                    if f_cand <= f_cur - 1e-4 / eta * movement {
                        accepted = Some((cand, f_cand, u_cand, t_cand, movement));
                        break;
                    }
                }
            }
            eta *= 0.5;
        }
        match accepted {
            Some((cand, f_cand, u_cand, t_cand, movement)) => {
                w = cand;
                f_cur = f_cand;
                u = u_cand;
                t = t_cand;
                trace.push(f_cur);
                if movement.sqrt() <= 1e-14 * total.max(1.0) {
                    break;
                }
            }
            None => {
                stalled = true;
                break;
            }
        }
    }

    let kept: Vec<(usize, usize, f64)> = pairs
        .iter()
        .zip(&w)
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(&(i, j), &wi)| (i, j, wi))
        .collect();
    let mut out = WeightedGraph::new_undirected(n, kept)?;
    if let Some(labels) = g.labels() {
        out = out.with_labels(labels.to_vec())?;
    }
    Ok(WeightOptimizeReport {
        graph: out,
        trace,
        stalled,
    })
}

#[derive(Debug, Clone)]
pub struct SparsifyReport {
    pub graph: WeightedGraph,
    pub original_edges: usize,
    pub kept_edges: usize,
    /// Disparity of the sparsifier divided by the original disparity. The
    /// sampling guarantee makes this close to 1 with high probability, but
    /// it is reported, not enforced.
    pub ratio: f64,
    pub note: Option<String>,
}

/// Budget coefficient for effective-resistance sampling: the target draw
/// count is `ceil(COEFF * n * ln(n) / eps^2)`. Chosen so sparse inputs
/// (trees) always fall under the budget and dense inputs shrink.
const SPARSIFY_SAMPLE_COEFF: f64 = 0.25;

const SPARSIFY_DENSE_LIMIT: usize = 2_000;

/// Spectral sparsification by effective-resistance sampling: every edge is
/// drawn with probability proportional to `w_e R_e` and reweighted by
/// `w_e / (q p_e)` per draw, preserving the Laplacian in expectation and
/// hence the disparity up to `1 + 2 eps + O(eps^2)` with high probability.
pub fn sparsify_disparity(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
    eps: f64,
    seed: u64,
) -> Result<SparsifyReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param("eps", format!("{eps} outside (0, 0.5)")));
    }
    g.require_connected()?;
    let n = g.n();
    if n > SPARSIFY_DENSE_LIMIT {
        return Err(Error::TooLargeForDense {
            n,
            limit: SPARSIFY_DENSE_LIMIT,
        });
    }
    let m = g.edges().len();
    let budget =
        (SPARSIFY_SAMPLE_COEFF * n as f64 * (n as f64).ln() / (eps * eps)).ceil() as usize;
    if budget >= m {
        return Ok(SparsifyReport {
            graph: g.clone(),
            original_edges: m,
            kept_edges: m,
            ratio: 1.0,
            note: Some(format!(
                "sample budget {budget} is at least the edge count {m}; graph returned unchanged"
            )),
        });
    }

    // Effective resistances R_e = b_e^T L^+ b_e from the inverse of
    // L + (1/n) 1 1^T, whose action on vectors orthogonal to 1 matches L^+.
    let mut a = g.laplacian()?;
    let shift = 1.0 / n as f64;
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += shift;
        }
    }
    let inv = Cholesky::new(a)
        .ok_or(Error::NotConverged {
            what: "dense factorization of L + J/n",
            iters: 0,
        })?
        .inverse();
    let scores: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| e.w * (inv[(e.u, e.u)] + inv[(e.v, e.v)] - 2.0 * inv[(e.u, e.v)]))
        .collect();
    let score_total: f64 = scores.iter().sum();

    let mut cumulative = Vec::with_capacity(m);
    let mut acc = 0.0;
    for &sc in &scores {
        acc += sc;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut new_w = vec![0.0; m];
    let q = budget as f64;
    for _ in 0..budget {
        let r: f64 = rng.gen::<f64>() * score_total;
        let e = cumulative.partition_point(|&c| c < r).min(m - 1);
        let p_e = scores[e] / score_total;
        new_w[e] += g.edges()[e].w / (q * p_e);
    }

    let kept: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .zip(&new_w)
        .filter(|(_, &w)| w > 0.0)
        .map(|(e, &w)| (e.u, e.v, w))
        .collect();
    let kept_edges = kept.len();
    let mut sparse = WeightedGraph::new_undirected(n, kept)?;
    if let Some(labels) = g.labels() {
        sparse = sparse.with_labels(labels.to_vec())?;
    }
    let before = disparity_fj(g, s, p)?;
    let after = disparity_fj(&sparse, s, p)?;
    Ok(SparsifyReport {
        graph: sparse,
        original_edges: m,
        kept_edges,
        ratio: after / before,
        note: None,
    })
}
