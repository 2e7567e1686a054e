//! DeGroot-model operations: consensus, disparity, the closed-form
//! zero-disparity constructions (worst-case-free opinions, target stationary
//! distribution, Metropolis-Hastings chain), partition searches, and mixing
//! time diagnostics.

use nalgebra::DVector;
use serde::Serialize;

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::opinion::OpinionVector;
use crate::partition::{Group, Partition};
use crate::spectral::{slem, stationary_distribution, SpectralConfig};

/// Validates a probability distribution over `n` states.
pub(crate) fn check_distribution(q: &DVector<f64>, n: usize) -> Result<()> {
    if q.len() != n {
        return Err(Error::DimensionMismatch {
            what: "distribution",
            expected: n,
            got: q.len(),
        });
    }
    for (i, &v) in q.iter().enumerate() {
        if !v.is_finite() || v < -1e-12 {
            return Err(Error::param("q", format!("entry {i} = {v} is not a probability")));
        }
    }
    let sum = q.sum();
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::param("q", format!("entries sum to {sum}, expected 1")));
    }
    Ok(())
}

fn group_masses(values: &DVector<f64>, p: &Partition) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..p.len() {
        match p.group(i) {
            Group::A => a += values[i],
            Group::B => b += values[i],
        }
    }
    (a, b)
}

/// DeGroot consensus: the iteration `z <- T z` started at `s` converges to
/// `(q^T s) 1` where `q` is the stationary distribution of `T`.
pub fn degroot_consensus(
    t: &TransitionMatrix,
    s: &OpinionVector,
    cfg: &SpectralConfig,
) -> Result<DVector<f64>> {
    if s.len() != t.n() {
        return Err(Error::DimensionMismatch {
            what: "opinions",
            expected: t.n(),
            got: s.len(),
        });
    }
    let q = stationary_distribution(t, cfg)?;
    Ok(DVector::from_element(t.n(), q.dot(s.as_vector())))
}

/// DeGroot disparity `n (q^T (s_A - s_B))^2` of a partition.
pub fn disparity_degroot(q: &DVector<f64>, s: &OpinionVector, p: &Partition) -> Result<f64> {
    check_distribution(q, s.len())?;
    let y = s.signed_difference(p)?;
    let gap = q.dot(&y);
    Ok(s.len() as f64 * gap * gap)
}

/// Opinion profile, constant on each group, for which the two groups pull
/// the consensus equally: `q^T (s*_A - s*_B) = 0`, so the disparity is 0.
/// Values: `s*_i = 1/sqrt(|A| + (Q_A/Q_B)^2 |B|)` on A and
/// `s*_i = 1/sqrt(|A| (Q_B/Q_A)^2 + |B|)` on B.
pub fn optimal_opinions_degroot(q: &DVector<f64>, p: &Partition) -> Result<OpinionVector> {
    check_distribution(q, p.len())?;
    let (q_a, q_b) = group_masses(q, p);
    if q_a <= 0.0 {
        return Err(Error::ZeroGroupMass {
            group: 'A',
            what: "stationary mass",
        });
    }
    if q_b <= 0.0 {
        return Err(Error::ZeroGroupMass {
            group: 'B',
            what: "stationary mass",
        });
    }
    let na = p.size(Group::A) as f64;
    let nb = p.size(Group::B) as f64;
    let rho = q_a / q_b;
    let alpha = 1.0 / (na + rho * rho * nb).sqrt();
    let beta = 1.0 / (na / (rho * rho) + nb).sqrt();
    let s = DVector::from_fn(p.len(), |i, _| match p.group(i) {
        Group::A => alpha,
        Group::B => beta,
    });
    OpinionVector::new(s)
}

/// Stationary distribution, constant on each group, that balances the two
/// groups' pull for the given opinions: `q*^T (s_A - s_B) = 0`.
/// Values: `q*_i = 1/(|A| + (S_A/S_B) |B|)` on A and
/// `q*_i = 1/(|A| (S_B/S_A) + |B|)` on B.
pub fn optimal_stationary_degroot(s: &OpinionVector, p: &Partition) -> Result<DVector<f64>> {
    let (s_a, s_b) = group_masses(s.as_vector(), p);
    if s_a <= 0.0 {
        return Err(Error::ZeroGroupMass {
            group: 'A',
            what: "sentiment",
        });
    }
    if s_b <= 0.0 {
        return Err(Error::ZeroGroupMass {
            group: 'B',
            what: "sentiment",
        });
    }
    let na = p.size(Group::A) as f64;
    let nb = p.size(Group::B) as f64;
    let r = s_a / s_b;
    let alpha = 1.0 / (na + r * nb);
    let beta = r * alpha;
    Ok(DVector::from_fn(p.len(), |i, _| match p.group(i) {
        Group::A => alpha,
        Group::B => beta,
    }))
}

/// Which degree enters the Metropolis-Hastings acceptance weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegreeConvention {
    /// Number of neighbors. Guarantees nonnegative diagonals: every
    /// off-diagonal entry of row i is at most 1/d_i and there are d_i of
    /// them.
    NeighborCount,
    /// Weighted degree. Can produce negative diagonals (error) when a node's
    /// weighted degree is small relative to its neighbor count.
    WeightedDegree,
}

/// Metropolis-Hastings chain over the edges of `g` whose stationary
/// distribution is exactly the output of [`optimal_stationary_degroot`], so
/// running DeGroot on it zeroes the disparity. Entries:
/// within-group `1/max(d_i, d_j)`, from A to B `1/max(d_i, (S_B/S_A) d_j)`,
/// from B to A `1/max(d_i, (S_A/S_B) d_j)`, diagonal takes the remainder.
pub fn metropolis_chain(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
) -> Result<TransitionMatrix> {
    metropolis_chain_with(g, s, p, DegreeConvention::NeighborCount)
}

pub fn metropolis_chain_with(
    g: &WeightedGraph,
    s: &OpinionVector,
    p: &Partition,
    convention: DegreeConvention,
) -> Result<TransitionMatrix> {
    if !g.is_undirected() {
        return Err(Error::DirectedUnsupported {
            op: "metropolis_chain",
        });
    }
    g.require_connected()?;
    let n = g.n();
    if s.len() != n || p.len() != n {
        return Err(Error::DimensionMismatch {
            what: "opinions/partition",
            expected: n,
            got: s.len().min(p.len()),
        });
    }
    let (s_a, s_b) = group_masses(s.as_vector(), p);
    if s_a <= 0.0 || s_b <= 0.0 {
        return Err(Error::ZeroGroupMass {
            group: if s_a <= 0.0 { 'A' } else { 'B' },
            what: "sentiment",
        });
    }
    let deg: Vec<f64> = (0..n)
        .map(|i| match convention {
            DegreeConvention::NeighborCount => g.neighbor_count(i) as f64,
            DegreeConvention::WeightedDegree => g.weighted_out_degree(i),
        })
        .collect();

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(g.neighbor_count(i) + 1);
        let mut off_sum = 0.0;
        for &(j, _) in g.neighbors(i) {
            // The proposal uses degrees only; edge weights enter solely
            // through the degree convention.
            let scaled_dj = match (p.group(i), p.group(j)) {
                (Group::A, Group::B) => (s_b / s_a) * deg[j],
                (Group::B, Group::A) => (s_a / s_b) * deg[j],
                _ => deg[j],
            };
            let t_ij = 1.0 / deg[i].max(scaled_dj);
            off_sum += t_ij;
            row.push((j, t_ij));
        }
        let diag = 1.0 - off_sum;
        if diag < -1e-12 {
            return Err(Error::NegativeDiagonal {
                node: i,
                value: diag,
            });
        }
        if diag > 0.0 {
            row.push((i, diag));
        }
        rows.push(row);
    }
    TransitionMatrix::from_rows(n, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingTimeReport {
    /// Smallest k with total-variation distance at most eps, if reached
    /// within k_max steps.
    pub empirical_k: Option<usize>,
    /// `(1/(1 - slem) - 1) ln(1/(2 eps))`.
    pub spectral_lower_bound: f64,
    /// Second largest eigenvalue modulus used in the bound.
    pub slem: f64,
}

/// Empirical and spectral mixing-time diagnostics. The start distribution is
/// `s` rescaled to sum 1 (total-variation distance needs a distribution).
pub fn mixing_time(
    t: &TransitionMatrix,
    q: &DVector<f64>,
    s: &OpinionVector,
    eps: f64,
    k_max: usize,
    cfg: &SpectralConfig,
) -> Result<MixingTimeReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", format!("{eps} outside (0, 1)")));
    }
    check_distribution(q, t.n())?;
    if s.len() != t.n() {
        return Err(Error::DimensionMismatch {
            what: "opinions",
            expected: t.n(),
            got: s.len(),
        });
    }
    let mass: f64 = s.as_vector().sum();
    let mut p = s.as_vector() / mass;
    let tv = |p: &DVector<f64>| 0.5 * (p - q).abs().sum();
    let mut empirical_k = None;
    for k in 0..=k_max {
        if tv(&p) <= eps {
            empirical_k = Some(k);
            break;
        }
        if k < k_max {
            p = t.left_mul(&p);
        }
    }
    let slem_value = slem(t, q, cfg)?;
    let spectral_lower_bound = if slem_value < 1.0 {
        (1.0 / (1.0 - slem_value) - 1.0) * (1.0 / (2.0 * eps)).ln()
    } else {
        f64::INFINITY
    };
    Ok(MixingTimeReport {
        empirical_k,
        spectral_lower_bound,
        slem: slem_value,
    })
}

/// How [`min_disparity_partition`] searches the exponential space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinPartitionMode {
    /// All `2^(n-1)` splits; n <= 24.
    Brute,
    /// Pseudo-polynomial subset-sum DP on `round(x_i * scale)`. Exact
    /// whenever the products `q_i s_i` are multiples of `1/scale`.
    ExactDp { scale: f64 },
    /// Scaled DP with additive optimality gap at most `delta * sum(x)`.
    Fptas { delta: f64 },
}

impl MinPartitionMode {
    /// DP with the default resolution of 1e-6.
    pub fn exact_dp() -> Self {
        MinPartitionMode::ExactDp { scale: 1e6 }
    }
}

const BRUTE_FORCE_LIMIT: usize = 24;
const DP_CELL_LIMIT: u128 = 100_000_000;

/// A partition search outcome: the influence gap `|q^T (s_A - s_B)|` and
/// the disparity `n gap^2` it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSearchResult {
    pub partition: Partition,
    pub gap: f64,
    pub disparity: f64,
}

fn search_result(x: &[f64], members: Vec<bool>) -> PartitionSearchResult {
    let total: f64 = x.iter().sum();
    let sum_a: f64 = x
        .iter()
        .zip(&members)
        .filter_map(|(&v, &in_a)| in_a.then_some(v))
        .sum();
    let gap = (2.0 * sum_a - total).abs();
    PartitionSearchResult {
        partition: Partition::from_indicator(&members).expect("nonempty"),
        gap,
        disparity: x.len() as f64 * gap * gap,
    }
}

fn products(q: &DVector<f64>, s: &OpinionVector) -> Result<Vec<f64>> {
    check_distribution(q, s.len())?;
    Ok((0..s.len()).map(|i| q[i] * s.as_vector()[i]).collect())
}

/// Finds the partition minimizing `|q^T (s_A - s_B)|`, which is a subset-sum
/// problem on the products `x_i = q_i s_i`. Node 0 is always reported in
/// group A (the objective ignores the labeling).
pub fn min_disparity_partition(
    q: &DVector<f64>,
    s: &OpinionVector,
    mode: MinPartitionMode,
) -> Result<PartitionSearchResult> {
    let x = products(q, s)?;
    let n = x.len();
    match mode {
        MinPartitionMode::Brute => {
            if n > BRUTE_FORCE_LIMIT {
                return Err(Error::BruteForceTooLarge {
                    n,
                    limit: BRUTE_FORCE_LIMIT,
                });
            }
            let total: f64 = x.iter().sum();
            let mut best_mask = 0u64;
            let mut best = f64::INFINITY;
            for mask in 0..(1u64 << (n - 1)) {
                // Node 0 is fixed in A; bit i covers node i + 1.
                let mut sum_a = x[0];
                for i in 0..(n - 1) {
                    if mask >> i & 1 == 1 {
                        sum_a += x[i + 1];
                    }
                }
                let gap = (2.0 * sum_a - total).abs();
                if gap < best {
                    best = gap;
                    best_mask = mask;
                }
            }
            let mut members = vec![false; n];
            members[0] = true;
            for i in 0..(n - 1) {
                members[i + 1] = best_mask >> i & 1 == 1;
            }
            Ok(search_result(&x, members))
        }
        MinPartitionMode::ExactDp { scale } => {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::param("scale", format!("{scale} must be positive")));
            }
            let units: Vec<u64> = x.iter().map(|&v| (v * scale).round() as u64).collect();
            subset_sum_partition(&x, &units)
        }
        MinPartitionMode::Fptas { delta } => {
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::param("delta", format!("{delta} outside (0, 1]")));
            }
            let total: f64 = x.iter().sum();
            if total <= 0.0 {
                // All products zero: every split already has zero gap.
                let mut members = vec![false; n];
                members[0] = true;
                return Ok(search_result(&x, members));
            }
            // Flooring to multiples of k loses at most k per item, so the
            // reconstructed split is within n*k = delta*total/2 of optimal
            // on each side, i.e. within delta*total on the gap.
            let k = delta * total / (2.0 * n as f64);
            let units: Vec<u64> = x.iter().map(|&v| (v / k).floor() as u64).collect();
            subset_sum_partition(&x, &units)
        }
    }
}

/// Subset-sum DP over integer item sizes; picks the achievable sum closest
/// to half the total and reconstructs the subset, then scores it with the
/// original real values.
fn subset_sum_partition(x: &[f64], units: &[u64]) -> Result<PartitionSearchResult> {
    let n = x.len();
    let total_units: u64 = units.iter().sum();
    let cells = n as u128 * (total_units as u128 + 1);
    if cells > DP_CELL_LIMIT {
        return Err(Error::DpTooLarge {
            cells,
            limit: DP_CELL_LIMIT,
        });
    }
    // setter[t] = index of the last item added to reach sum t; usize::MAX
    // marks unreachable, n marks the empty base.
    let mut setter = vec![usize::MAX; total_units as usize + 1];
    setter[0] = n;
    for (i, &u) in units.iter().enumerate() {
        if u == 0 {
            continue;
        }
        let u = u as usize;
        for t in (u..setter.len()).rev() {
            if setter[t] == usize::MAX && setter[t - u] != usize::MAX && setter[t - u] != i {
                setter[t] = i;
            }
        }
    }
    let mut best_t = 0usize;
    let mut best = i128::MAX;
    for (t, &owner) in setter.iter().enumerate() {
        if owner == usize::MAX {
            continue;
        }
        let gap = (2 * t as i128 - total_units as i128).abs();
        if gap < best {
            best = gap;
            best_t = t;
        }
    }
    let mut members = vec![false; n];
    let mut t = best_t;
    while t > 0 {
        let i = setter[t];
        debug_assert!(i < n, "reconstruction hit an unreachable cell");
        members[i] = true;
        t -= units[i] as usize;
    }
    // Canonical labeling: node 0 in A.
    if !members[0] {
        for m in members.iter_mut() {
            *m = !*m;
        }
    }
    Ok(search_result(x, members))
}

/// Finds the size-k group maximizing `|q^T (s_A - s_B)|` for fixed opinions.
/// Since the objective is `|2 sum_A x - sum x|` with `x_i = q_i s_i >= 0`,
/// and every k-subset sum lies between the bottom-k and top-k sums, one of
/// those two endpoint subsets is optimal.
pub fn max_disparity_partition(
    q: &DVector<f64>,
    s: &OpinionVector,
    k: usize,
) -> Result<PartitionSearchResult> {
    let x = products(q, s)?;
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("{k} outside [1, {n}]")));
    }
    let total: f64 = x.iter().sum();
    let mut by_value: Vec<usize> = (0..n).collect();
    by_value.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite").then(a.cmp(&b)));
    let bottom: Vec<usize> = by_value[..k].to_vec();
    // Ties at the top-k boundary resolve to the lowest index.
    let mut by_value_desc: Vec<usize> = (0..n).collect();
    by_value_desc.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).expect("finite").then(a.cmp(&b)));
    let top: Vec<usize> = by_value_desc[..k].to_vec();

    let gap_of = |set: &[usize]| {
        let sum_a: f64 = set.iter().map(|&i| x[i]).sum();
        (2.0 * sum_a - total).abs()
    };
    let chosen = if gap_of(&top) > gap_of(&bottom) {
        top
    } else {
        bottom
    };
    let mut members = vec![false; n];
    for &i in &chosen {
        members[i] = true;
    }
    Ok(search_result(&x, members))
}

/// The rank-pairing search over both the partition and the assignment of
/// opinion values to nodes: sort influence ascending, sort opinion values
/// ascending, pair by rank, and give group A either the k top ranks or the
/// k bottom ranks, whichever widens `|q^T (s_A - s_B)|` more. Returns the
/// reassigned opinions along with the partition.
pub fn max_disparity_opinion_assignment(
    q: &DVector<f64>,
    s: &OpinionVector,
    k: usize,
) -> Result<(OpinionVector, PartitionSearchResult)> {
    check_distribution(q, s.len())?;
    let n = s.len();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("{k} outside [1, {n}]")));
    }
    let mut by_q: Vec<usize> = (0..n).collect();
    by_q.sort_by(|&a, &b| q[a].partial_cmp(&q[b]).expect("finite").then(a.cmp(&b)));
    let mut values: Vec<f64> = s.as_vector().iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    // assigned[node] = s-value of the node's influence rank.
    let mut assigned = DVector::zeros(n);
    for (rank, &node) in by_q.iter().enumerate() {
        assigned[node] = values[rank];
    }
    let gap_of = |a_ranks: &dyn Fn(usize) -> bool| {
        let mut acc = 0.0;
        for (rank, &node) in by_q.iter().enumerate() {
            let signed = if a_ranks(rank) { 1.0 } else { -1.0 };
            acc += signed * q[node] * assigned[node];
        }
        acc.abs()
    };
    let top_gap = gap_of(&|rank| rank >= n - k);
    let bottom_gap = gap_of(&|rank| rank < k);
    let a_is_top = top_gap > bottom_gap;
    let mut members = vec![false; n];
    for (rank, &node) in by_q.iter().enumerate() {
        members[node] = if a_is_top { rank >= n - k } else { rank < k };
    }
    let x: Vec<f64> = (0..n).map(|i| q[i] * assigned[i]).collect();
    let opinions = OpinionVector::new(assigned)?;
    Ok((opinions, search_result(&x, members)))
}

/// The unconstrained maximizers where graph, opinions, or both are free.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrivialMaximizers {
    /// Collapsing the network to a single node (keeping the point-mass
    /// opinion there) always yields disparity exactly 1.
    pub graph_value: f64,
    pub graph_witness: usize,
    /// For a fixed q, the best opinions are a point mass at argmax q with
    /// A = V, worth n q_max^2.
    pub opinion_value: f64,
    pub opinion_witness: usize,
    /// Free (graph, opinions, partition): point mass meets point mass, worth
    /// n by Cauchy-Schwarz.
    pub joint_value: f64,
}

pub fn trivial_maximizers(q: &DVector<f64>, s: &OpinionVector) -> Result<TrivialMaximizers> {
    check_distribution(q, s.len())?;
    let argmax = |v: &DVector<f64>| {
        let mut best = 0;
        for i in 1..v.len() {
            if v[i] > v[best] {
                best = i;
            }
        }
        best
    };
    let n = s.len() as f64;
    let iq = argmax(q);
    Ok(TrivialMaximizers {
        graph_value: 1.0,
        graph_witness: argmax(s.as_vector()),
        opinion_value: n * q[iq] * q[iq],
        opinion_witness: iq,
        joint_value: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_q(n: usize) -> DVector<f64> {
        DVector::from_element(n, 1.0 / n as f64)
    }

    fn random_distribution(n: usize, rng: &mut impl Rng) -> DVector<f64> {
        let mut q = DVector::from_fn(n, |_, _| rng.gen::<f64>() + 0.01);
        let sum = q.sum();
        q /= sum;
        q
    }

    #[test]
    fn consensus_trivial_cases() {
        let cfg = SpectralConfig::default();
        // Single node: z = s.
        let t1 = TransitionMatrix::from_rows(1, vec![vec![(0, 1.0)]]).unwrap();
        let s1 = OpinionVector::point_mass(1, 0).unwrap();
        let z = degroot_consensus(&t1, &s1, &cfg).unwrap();
        assert_eq!(z[0], 1.0);
        // Regular symmetric chain, uniform s: consensus stays 1/sqrt(n).
        let g = WeightedGraph::new_undirected(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])
            .unwrap();
        let t = g.row_stochastic().unwrap();
        let s = OpinionVector::uniform(4).unwrap();
        let z = degroot_consensus(&t, &s, &cfg).unwrap();
        for i in 0..4 {
            assert!((z[i] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn consensus_matches_fixed_point_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().enumerate().map(|(j, v)| (j, v / sum)).collect()
            })
            .collect();
        let t = TransitionMatrix::from_rows(n, rows).unwrap();
        let s = OpinionVector::sample_uniform(n, &mut rng).unwrap();
        let z = degroot_consensus(&t, &s, &SpectralConfig::default()).unwrap();
        let mut iter = s.as_vector().clone();
        for _ in 0..10_000 {
            iter = t.right_mul(&iter);
        }
        assert!((&iter - &z).amax() < 1e-8);
    }

    #[test]
    fn disparity_whole_population() {
        let n = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_distribution(n, &mut rng);
        let s = OpinionVector::sample_uniform(n, &mut rng).unwrap();
        let all_a = Partition::all_a(n).unwrap();
        let f = disparity_degroot(&q, &s, &all_a).unwrap();
        let expect = n as f64 * q.dot(s.as_vector()).powi(2);
        assert!((f - expect).abs() < 1e-14);
        // Point mass at the most influential node with A = V gives n q*^2.
        let qmax = q.iter().cloned().fold(f64::MIN, f64::max);
        let imax = (0..n).find(|&i| q[i] == qmax).unwrap();
        let point = OpinionVector::point_mass(n, imax).unwrap();
        let f = disparity_degroot(&q, &point, &all_a).unwrap();
        assert!((f - n as f64 * qmax * qmax).abs() < 1e-14);
    }

    #[test]
    fn disparity_label_swap_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.gen_range(2..10);
            let q = random_distribution(n, &mut rng);
            let s = OpinionVector::sample_uniform(n, &mut rng).unwrap();
            let p = Partition::from_indicator(
                &(0..n).map(|_| rng.gen::<bool>()).collect::<Vec<_>>(),
            )
            .unwrap();
            let f = disparity_degroot(&q, &s, &p).unwrap();
            let g = disparity_degroot(&q, &s, &p.swapped()).unwrap();
            assert!((f - g).abs() < 1e-15);
        }
    }

    #[test]
    fn optimal_opinions_closed_forms() {
        // Uniform q with |A| = |B|: the balanced profile is uniform.
        let p = Partition::from_a_indices(6, &[0, 1, 2]).unwrap();
        let s = optimal_opinions_degroot(&uniform_q(6), &p).unwrap();
        for i in 0..6 {
            assert!((s.as_vector()[i] - 1.0 / 6f64.sqrt()).abs() < 1e-14);
        }
        // Uniform q, general |A|: value sqrt(|B|/(n |A|)) on A.
        let p = Partition::from_a_indices(6, &[0, 5]).unwrap();
        let s = optimal_opinions_degroot(&uniform_q(6), &p).unwrap();
        assert!((s.as_vector()[0] - (4.0 / (6.0 * 2.0) as f64).sqrt()).abs() < 1e-14);
        // The construction zeroes the disparity.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(2..12);
            let q = random_distribution(n, &mut rng);
            let a: Vec<usize> = (0..n).filter(|_| rng.gen::<bool>()).collect();
            if a.is_empty() || a.len() == n {
                continue;
            }
            let p = Partition::from_a_indices(n, &a).unwrap();
            let s = optimal_opinions_degroot(&q, &p).unwrap();
            assert!(disparity_degroot(&q, &s, &p).unwrap() <= 1e-18);
        }
        // Empty side: zero stationary mass is an error.
        assert!(matches!(
            optimal_opinions_degroot(&uniform_q(3), &Partition::all_a(3).unwrap()),
            Err(Error::ZeroGroupMass { group: 'B', .. })
        ));
    }

    #[test]
    fn optimal_stationary_closed_forms() {
        // Uniform s: q* = 1/(2|A|) on A, 1/(2|B|) on B.
        let p = Partition::from_a_indices(5, &[0, 1]).unwrap();
        let s = OpinionVector::uniform(5).unwrap();
        let q = optimal_stationary_degroot(&s, &p).unwrap();
        assert!((q[0] - 0.25).abs() < 1e-14);
        assert!((q[4] - 1.0 / 6.0).abs() < 1e-14);
        assert!((q.sum() - 1.0).abs() < 1e-14);
        // Gap closes within 1e-14 for random inputs.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.gen_range(2..12);
            let s = OpinionVector::sample_uniform(n, &mut rng).unwrap();
            let a: Vec<usize> = (0..n).filter(|_| rng.gen::<bool>()).collect();
            if a.is_empty() || a.len() == n {
                continue;
            }
            let p = Partition::from_a_indices(n, &a).unwrap();
            let q = optimal_stationary_degroot(&s, &p).unwrap();
            let y = s.signed_difference(&p).unwrap();
            assert!(q.dot(&y).abs() < 1e-14);
            assert!(disparity_degroot(&q, &s, &p).unwrap() <= 1e-18);
        }
    }

    #[test]
    fn metropolis_regular_balanced_is_uniform_walk() {
        // K4 with a balanced partition and uniform s: every off-diagonal
        // entry is 1/3 and the diagonal vanishes.
        let g = WeightedGraph::new_undirected(
            4,
            [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)],
        )
        .unwrap();
        let s = OpinionVector::uniform(4).unwrap();
        let p = Partition::from_a_indices(4, &[0, 1]).unwrap();
        let t = metropolis_chain(&g, &s, &p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 0.0 } else { 1.0 / 3.0 };
                assert!((t.entry(i, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn metropolis_reversible_wrt_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..20 {
            let n = rng.gen_range(4..12);
            let mut edges = Vec::new();
            for i in 1..n {
                let j = rng.gen_range(0..i);
                edges.push((j, i, rng.gen::<f64>() + 0.2));
            }
            for _ in 0..n {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u != v && !edges.iter().any(|&(a, b, _)| (a, b) == (u.min(v), u.max(v))) {
                    edges.push((u.min(v), u.max(v), rng.gen::<f64>() + 0.2));
                }
            }
            let g = WeightedGraph::new_undirected(n, edges).unwrap();
            let s = OpinionVector::sample_uniform(n, &mut rng).unwrap();
            let p = Partition::from_a_indices(n, &[trial % n]).unwrap();
            let t = metropolis_chain(&g, &s, &p).unwrap();
            let q = optimal_stationary_degroot(&s, &p).unwrap();
            assert!(t.detailed_balance_residual(&q) < 1e-12);
            assert!(t.stationarity_residual(&q) < 1e-10);
            assert!(disparity_degroot(&q, &s, &p).unwrap() < 1e-16);
        }
    }

    #[test]
    fn metropolis_weighted_convention_can_fail() {
        // Star whose weighted degrees are far below neighbor counts: the
        // center's off-diagonal sum exceeds 1.
        let g = WeightedGraph::new_undirected(
            5,
            [(0, 1, 0.1), (0, 2, 0.1), (0, 3, 0.1), (0, 4, 0.1)],
        )
        .unwrap();
        let s = OpinionVector::uniform(5).unwrap();
        let p = Partition::from_a_indices(5, &[0, 1]).unwrap();
        assert!(matches!(
            metropolis_chain_with(&g, &s, &p, DegreeConvention::WeightedDegree),
            Err(Error::NegativeDiagonal { node: 0, .. })
        ));
        // Neighbor counts always produce a valid chain.
        assert!(metropolis_chain(&g, &s, &p).is_ok());
    }

    #[test]
    fn mixing_time_small_chains() {
        let cfg = SpectralConfig::default();
        // Rank-one chain reaches its stationary distribution in one step.
        let q = DVector::from_vec(vec![0.3, 0.7]);
        let t = TransitionMatrix::from_rows(
            2,
            vec![vec![(0, 0.3), (1, 0.7)], vec![(0, 0.3), (1, 0.7)]],
        )
        .unwrap();
        let s = OpinionVector::point_mass(2, 0).unwrap();
        let r = mixing_time(&t, &q, &s, 1e-9, 100, &cfg).unwrap();
        assert_eq!(r.empirical_k, Some(1));
        assert!(r.slem.abs() < 1e-9);
        assert!(r.spectral_lower_bound.abs() < 1e-9);
        // Tiny eps with k_max 0 cannot be reached: reported as none.
        let r = mixing_time(&t, &q, &s, 1e-9, 0, &cfg).unwrap();
        assert_eq!(r.empirical_k, None);
        assert!(r.spectral_lower_bound.is_finite());
    }

    #[test]
    fn min_partition_modes_agree() {
        // x proportional to (1, 1, 2): the split {2} vs {1, 1} is exact.
        let q = DVector::from_vec(vec![0.25, 0.25, 0.5]);
        let s = OpinionVector::uniform(3).unwrap();
        for mode in [
            MinPartitionMode::Brute,
            MinPartitionMode::exact_dp(),
            MinPartitionMode::Fptas { delta: 0.05 },
        ] {
            let r = min_disparity_partition(&q, &s, mode).unwrap();
            assert!(r.gap < 1e-12, "{mode:?} gap {}", r.gap);
            assert!(r.partition.is_a(0));
        }
        // Random instance: DP equals brute force.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let n = 14;
            let q = random_distribution(n, &mut rng);
            let s = OpinionVector::sample_uniform(n, &mut rng).unwrap();
            let brute = min_disparity_partition(&q, &s, MinPartitionMode::Brute).unwrap();
            let dp = min_disparity_partition(&q, &s, MinPartitionMode::exact_dp()).unwrap();
            // The DP quantizes to 1e-6, so allow that much slack on the gap.
            assert!((dp.gap - brute.gap).abs() <= 4e-6);
            let fp = min_disparity_partition(&q, &s, MinPartitionMode::Fptas { delta: 0.01 })
                .unwrap();
            let total: f64 = (0..n).map(|i| q[i] * s.as_vector()[i]).sum();
            assert!(fp.gap <= brute.gap + 0.01 * total + 1e-12);
        }
    }

    #[test]
    fn min_partition_guards() {
        let q = uniform_q(30);
        let s = OpinionVector::uniform(30).unwrap();
        assert!(matches!(
            min_disparity_partition(&q, &s, MinPartitionMode::Brute),
            Err(Error::BruteForceTooLarge { n: 30, .. })
        ));
        let q = uniform_q(20);
        let s = OpinionVector::uniform(20).unwrap();
        assert!(matches!(
            min_disparity_partition(&q, &s, MinPartitionMode::ExactDp { scale: 1e12 }),
            Err(Error::DpTooLarge { .. })
        ));
    }

    #[test]
    fn max_partition_small_cases() {
        // k = n puts everyone in A: value n (q . s)^2.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_distribution(6, &mut rng);
        let s = OpinionVector::sample_uniform(6, &mut rng).unwrap();
        let r = max_disparity_partition(&q, &s, 6).unwrap();
        let expect = 6.0 * q.dot(s.as_vector()).powi(2);
        assert!((r.disparity - expect).abs() < 1e-12);
        // Two-node instance from both singleton choices.
        let q = DVector::from_vec(vec![0.2, 0.8]);
        let s = OpinionVector::new(DVector::from_vec(vec![0.6, 0.8])).unwrap();
        let r = max_disparity_partition(&q, &s, 1).unwrap();
        let v0 = (0.2 * 0.6 - 0.8 * 0.8f64).abs();
        let v1 = (0.8 * 0.8 - 0.2 * 0.6f64).abs();
        assert!((r.gap - v0.max(v1)).abs() < 1e-15);
        assert!(max_disparity_partition(&q, &s, 0).is_err());
        assert!(max_disparity_partition(&q, &s, 3).is_err());
    }

    #[test]
    fn max_partition_matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let n = rng.gen_range(4..11);
            let q = random_distribution(n, &mut rng);
            let s = OpinionVector::sample_uniform(n, &mut rng).unwrap();
            let x: Vec<f64> = (0..n).map(|i| q[i] * s.as_vector()[i]).collect();
            let total: f64 = x.iter().sum();
            for k in 1..=n {
                let mut best = 0.0f64;
                for mask in 0u32..(1 << n) {
                    if mask.count_ones() as usize != k {
                        continue;
                    }
                    let sum_a: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| x[i]).sum();
                    best = best.max((2.0 * sum_a - total).abs());
                }
                let r = max_disparity_partition(&q, &s, k).unwrap();
                assert!(
                    (r.gap - best).abs() < 1e-12,
                    "n={n} k={k} got {} want {}",
                    r.gap,
                    best
                );
                assert_eq!(r.partition.size(Group::A), k);
            }
        }
    }

    #[test]
    fn opinion_assignment_dominates_fixed_assignment() {
        // Reassigning opinion values by influence rank can only widen the
        // best achievable gap relative to keeping the original pairing.
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..20 {
            let n = rng.gen_range(3..10);
            let q = random_distribution(n, &mut rng);
            let s = OpinionVector::sample_uniform(n, &mut rng).unwrap();
            let k = rng.gen_range(1..=n);
            let fixed = max_disparity_partition(&q, &s, k).unwrap();
            let (assigned, joint) = max_disparity_opinion_assignment(&q, &s, k).unwrap();
            assert!(joint.gap >= fixed.gap - 1e-12);
            assert_eq!(joint.partition.size(Group::A), k);
            // The reassignment is a permutation of the original values.
            let mut a: Vec<f64> = s.as_vector().iter().copied().collect();
            let mut b: Vec<f64> = assigned.as_vector().iter().copied().collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn trivial_maximizer_values() {
        let q = uniform_q(4);
        let s = OpinionVector::point_mass(4, 2).unwrap();
        let r = trivial_maximizers(&q, &s).unwrap();
        assert_eq!(r.graph_value, 1.0);
        assert_eq!(r.graph_witness, 2);
        assert!((r.opinion_value - 0.25).abs() < 1e-15);
        assert_eq!(r.opinion_witness, 0, "uniform q ties break to index 0");
        assert_eq!(r.joint_value, 4.0);
    }
}
