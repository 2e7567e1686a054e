//! Seeded stochastic block models (two cliques with random cross edges,
//! core-periphery) and empirical checks of the minimum-disparity interval
//! and the subgraph eigenvalue monotonicity property.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::partition::Partition;
use crate::spectral::{laplacian_lambda_max, SpectralConfig};

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
        return Err(Error::param(name, format!("{p} outside [0, 1]")));
    }
    Ok(())
}

fn check_group_size(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("n", format!("{n} below minimum 2")));
    }
    if k == 0 || k >= n {
        return Err(Error::param("k", format!("{k} outside [1, {}]", n - 1)));
    }
    Ok(())
}

/// Two complete graphs of sizes k and n-k joined by independent random
/// cross edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoCliquesSpec {
    pub n: usize,
    pub k: usize,
    /// Probability of each cross edge.
    pub p: f64,
    pub seed: u64,
}

impl TwoCliquesSpec {
    pub fn validate(&self) -> Result<()> {
        check_group_size(self.n, self.k)?;
        check_probability("p", self.p)
    }
}

/// Three-rate block model with a dense core: within-core rate strictly
/// above the core-periphery rate, which is strictly above the
/// within-periphery rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorePeripherySpec {
    pub n: usize,
    pub k: usize,
    pub p_aa: f64,
    pub p_ab: f64,
    pub p_bb: f64,
    pub seed: u64,
}

impl CorePeripherySpec {
    pub fn validate(&self) -> Result<()> {
        check_group_size(self.n, self.k)?;
        check_probability("p_aa", self.p_aa)?;
        check_probability("p_ab", self.p_ab)?;
        check_probability("p_bb", self.p_bb)?;
        if !(self.p_aa > self.p_ab && self.p_ab > self.p_bb) {
            return Err(Error::param(
                "rates",
                format!(
                    "need p_aa > p_ab > p_bb, got {} / {} / {}",
                    self.p_aa, self.p_ab, self.p_bb
                ),
            ));
        }
        Ok(())
    }
}

/// Generates the two-clique model. Group A is nodes `0..k`, group B the
/// rest; both sides are complete with unit weights. Cross pairs are visited
/// in lexicographic order feeding a single seeded stream, so output is
/// bit-reproducible. The output can be disconnected for small `p`; callers
/// that need connectivity should check.
pub fn gen_two_cliques(spec: &TwoCliquesSpec) -> Result<(WeightedGraph, Partition)> {
    spec.validate()?;
    let (n, k) = (spec.n, spec.k);
    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            edges.push((i, j, 1.0));
        }
    }
    for i in k..n {
        for j in (i + 1)..n {
            edges.push((i, j, 1.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in 0..k {
        for j in k..n {
            if rng.gen::<f64>() < spec.p {
                edges.push((i, j, 1.0));
            }
        }
    }
    let g = WeightedGraph::new_undirected(n, edges)?;
    let p = Partition::from_a_indices(n, &(0..k).collect::<Vec<_>>())?;
    Ok((g, p))
}

/// Generates the core-periphery model: every pair is visited in
/// lexicographic order against its block rate, feeding a single seeded
/// stream.
pub fn gen_core_periphery(spec: &CorePeripherySpec) -> Result<(WeightedGraph, Partition)> {
    spec.validate()?;
    let (n, k) = (spec.n, spec.k);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let rate = match (i < k, j < k) {
                (true, true) => spec.p_aa,
                (false, false) => spec.p_bb,
                _ => spec.p_ab,
            };
            if rng.gen::<f64>() < rate {
                edges.push((i, j, 1.0));
            }
        }
    }
    let g = WeightedGraph::new_undirected(n, edges)?;
    let p = Partition::from_a_indices(n, &(0..k).collect::<Vec<_>>())?;
    Ok((g, p))
}

/// Which block model an interval experiment samples from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SbmModel {
    TwoCliques(TwoCliquesSpec),
    CorePeriphery(CorePeripherySpec),
}

/// The high-probability interval for the minimum disparity `1/(1+λ_max)²`,
/// with the unspecified asymptotic slack exposed as the constant `c`:
/// two-clique graphs use `[1/(n+1)², 1/(1 + np - c/ln n)²]`; core-periphery
/// uses `[1/(1 + n p_aa + c/ln n)², 1/(1 + n p_bb - c/ln n)²]`. An upper
/// base at or below 1 makes the bound vacuous and is capped at value 1.
pub fn disparity_interval(model: &SbmModel, c: f64) -> (f64, f64) {
    let square_inv = |base: f64| base.powi(-2);
    match model {
        SbmModel::TwoCliques(spec) => {
            let n = spec.n as f64;
            let upper_base = 1.0 + n * spec.p - c / n.ln();
            let upper = if upper_base <= 1.0 {
                1.0
            } else {
                square_inv(upper_base)
            };
            (square_inv(n + 1.0), upper)
        }
        SbmModel::CorePeriphery(spec) => {
            let n = spec.n as f64;
            let lower = square_inv(1.0 + n * spec.p_aa + c / n.ln());
            let upper_base = 1.0 + n * spec.p_bb - c / n.ln();
            let upper = if upper_base <= 1.0 {
                1.0
            } else {
                square_inv(upper_base)
            };
            (lower, upper)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalSample {
    pub lambda_max: f64,
    pub min_disparity: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalCheckReport {
    pub trials: usize,
    pub hits: usize,
    pub lower: f64,
    pub upper: f64,
    /// True when the sparsest rate falls below ln(n)/n, outside the regime
    /// where the interval is meaningful.
    pub regime_warning: bool,
    pub samples: Vec<IntervalSample>,
}

/// Samples `trials` graphs (per-trial seeds `seed + t`), computes each
/// minimum disparity `1/(1+λ_max)²`, and counts how many land inside the
/// slack-`c` interval. Report-only: no sample is an error.
pub fn disparity_interval_check(
    model: &SbmModel,
    trials: usize,
    c: f64,
    cfg: &SpectralConfig,
) -> Result<IntervalCheckReport> {
    if trials == 0 {
        return Err(Error::param("trials", "need at least 1".to_string()));
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::param("c", format!("{c} must be nonnegative")));
    }
    let (lower, upper) = disparity_interval(model, c);
    let (n, sparsest_rate, base_seed) = match model {
        SbmModel::TwoCliques(spec) => {
            spec.validate()?;
            (spec.n, spec.p, spec.seed)
        }
        SbmModel::CorePeriphery(spec) => {
            spec.validate()?;
            (spec.n, spec.p_bb, spec.seed)
        }
    };
    let regime_warning = sparsest_rate < (n as f64).ln() / n as f64;

    let mut samples = Vec::with_capacity(trials);
    for t in 0..trials {
        let seed = base_seed.wrapping_add(t as u64);
        let (g, _) = match model {
            SbmModel::TwoCliques(spec) => gen_two_cliques(&TwoCliquesSpec { seed, ..*spec })?,
            SbmModel::CorePeriphery(spec) => {
                gen_core_periphery(&CorePeripherySpec { seed, ..*spec })?
            }
        };
        let lambda_max = laplacian_lambda_max(&g, cfg)?.value;
        let min_disparity = (1.0 + lambda_max).powi(-2);
        let inside = min_disparity >= lower - 1e-12 && min_disparity <= upper + 1e-12;
        samples.push(IntervalSample {
            lambda_max,
            min_disparity,
            inside,
        });
    }
    let hits = samples.iter().filter(|s| s.inside).count();
    Ok(IntervalCheckReport {
        trials,
        hits,
        lower,
        upper,
        regime_warning,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgraphCheckReport {
    pub trials: usize,
    pub violations: usize,
    pub lambda_full: f64,
    /// Largest amount by which a subgraph eigenvalue exceeded the full
    /// graph's (nonpositive when the property holds everywhere).
    pub max_excess: f64,
}

/// Deletes `edge_deletions` random edges per trial and verifies the largest
/// Laplacian eigenvalue never rises: `λ_max(H) ≤ λ_max(G)` within 1e-10.
pub fn subgraph_eigenvalue_check(
    g: &WeightedGraph,
    edge_deletions: usize,
    trials: usize,
    seed: u64,
    cfg: &SpectralConfig,
) -> Result<SubgraphCheckReport> {
    let m = g.edges().len();
    if edge_deletions >= m {
        return Err(Error::param(
            "edge_deletions",
            format!("{edge_deletions} would not leave a nonempty subgraph of {m} edges"),
        ));
    }
    let lambda_full = laplacian_lambda_max(g, cfg)?.value;
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        // Partial Fisher-Yates: the first `edge_deletions` slots pick the
        // deleted edges without replacement.
        let mut idx: Vec<usize> = (0..m).collect();
        for i in 0..edge_deletions {
            let j = rng.gen_range(i..m);
            idx.swap(i, j);
        }
        let drop: Vec<bool> = {
            let mut d = vec![false; m];
            for &i in &idx[..edge_deletions] {
                d[i] = true;
            }
            d
        };
        let kept: Vec<(usize, usize, f64)> = g
            .edges()
            .iter()
            .zip(&drop)
            .filter(|(_, &dropped)| !dropped)
            .map(|(e, _)| (e.u, e.v, e.w))
            .collect();
        let h = WeightedGraph::new_undirected(g.n(), kept)?;
        let lambda_sub = laplacian_lambda_max(&h, cfg)?.value;
        let excess = lambda_sub - lambda_full;
        max_excess = max_excess.max(excess);
        if excess > 1e-10 {
            violations += 1;
        }
    }
    Ok(SubgraphCheckReport {
        trials,
        violations,
        lambda_full,
        max_excess,
    })
}
