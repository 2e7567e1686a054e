//! Property-based invariants spanning the disparity measures, the partition
//! searches, the chain constructions, contraction, and the random-graph
//! generators. Instances are built from seeded generators so that failures
//! shrink to a (size, seed) pair.

use nalgebra::DVector;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use disparity_core::degroot::{
    disparity_degroot, max_disparity_partition, metropolis_chain, min_disparity_partition,
    optimal_opinions_degroot, optimal_stationary_degroot, MinPartitionMode,
};
use disparity_core::fj::disparity_fj;
use disparity_core::interventions::{contract, ContractionInstruction, ContractionPlan};
use disparity_core::random_models::{
    gen_core_periphery, gen_two_cliques, CorePeripherySpec, TwoCliquesSpec,
};
use disparity_core::spectral::{laplacian_lambda_max, SpectralConfig};
use disparity_core::{Group, OpinionVector, Partition, WeightedGraph};

// ---------------------------------------------------------------------------
// Seeded instance builders
// ---------------------------------------------------------------------------

/// Connected undirected graph: a random spanning tree plus extra edges kept
/// with probability `extra`, weights in [0.2, 2].
fn connected_graph(n: usize, extra: f64, rng: &mut ChaCha8Rng) -> WeightedGraph {
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        edges.insert((parent, i), rng.gen_range(0.2..2.0));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if !edges.contains_key(&(u, v)) && rng.gen::<f64>() < extra {
                edges.insert((u, v), rng.gen_range(0.2..2.0));
            }
        }
    }
    WeightedGraph::new_undirected(n, edges.into_iter().map(|((u, v), w)| (u, v, w)))
        .expect("a spanning tree plus extras is a valid graph")
}

fn random_opinions(n: usize, rng: &mut ChaCha8Rng) -> OpinionVector {
    // Entries bounded away from zero so group masses never degenerate.
    let raw = DVector::from_fn(n, |_, _| rng.gen_range(0.05..1.0));
    OpinionVector::from_unnormalized(raw).expect("positive entries normalize")
}

/// Both groups nonempty: node 0 is A, node 1 is B, the rest are coin flips.
fn random_partition(n: usize, rng: &mut ChaCha8Rng) -> Partition {
    let indicator: Vec<bool> = (0..n)
        .map(|i| match i {
            0 => true,
            1 => false,
            _ => rng.gen::<bool>(),
        })
        .collect();
    Partition::from_indicator(&indicator).expect("nonempty membership")
}

fn random_distribution(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut q = DVector::from_fn(n, |_, _| rng.gen_range(0.05..1.0));
    let total = q.sum();
    q /= total;
    q
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// Swapping the group labels leaves both disparity measures unchanged.
    #[test]
    fn disparity_is_label_swap_invariant(n in 3usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected_graph(n, 0.3, &mut rng);
        let s = random_opinions(n, &mut rng);
        let p = random_partition(n, &mut rng);
        let q = random_distribution(n, &mut rng);

        let fj = disparity_fj(&g, &s, &p).expect("fj disparity");
        let fj_swapped = disparity_fj(&g, &s, &p.swapped()).expect("fj disparity");
        prop_assert!((fj - fj_swapped).abs() <= 1e-12 * fj.max(1.0));

        let dg = disparity_degroot(&q, &s, &p).expect("degroot disparity");
        let dg_swapped = disparity_degroot(&q, &s, &p.swapped()).expect("degroot disparity");
        prop_assert!((dg - dg_swapped).abs() <= 1e-12 * dg.max(1.0));
    }

    /// The closed-form worst-case opinions zero the DeGroot gap for any
    /// stationary vector, and the closed-form stationary vector zeroes it
    /// for any opinions.
    #[test]
    fn optimal_constructions_zero_the_degroot_gap(n in 3usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_partition(n, &mut rng);
        let q = random_distribution(n, &mut rng);
        let s_star = optimal_opinions_degroot(&q, &p).expect("optimal opinions");
        prop_assert!(disparity_degroot(&q, &s_star, &p).expect("disparity") <= 1e-18);

        let s = random_opinions(n, &mut rng);
        let q_star = optimal_stationary_degroot(&s, &p).expect("optimal stationary");
        prop_assert!(disparity_degroot(&q_star, &s, &p).expect("disparity") <= 1e-18);
    }

    /// The Metropolis chain is a valid row-stochastic matrix satisfying
    /// detailed balance with respect to the target stationary vector.
    #[test]
    fn metropolis_chain_fixes_its_target(n in 3usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected_graph(n, 0.4, &mut rng);
        let s = random_opinions(n, &mut rng);
        let p = random_partition(n, &mut rng);
        let t = metropolis_chain(&g, &s, &p).expect("metropolis chain");
        let q_star = optimal_stationary_degroot(&s, &p).expect("optimal stationary");
        for i in 0..n {
            let row_sum: f64 = t.row(i).iter().map(|&(_, v)| v).sum();
            prop_assert!((row_sum - 1.0).abs() <= 1e-12);
            prop_assert!(t.row(i).iter().all(|&(_, v)| v >= 0.0));
        }
        prop_assert!(t.detailed_balance_residual(&q_star) <= 1e-12);
        prop_assert!(t.stationarity_residual(&q_star) <= 1e-10);
    }

    /// The endpoint rule dominates 1000 random same-size groups.
    #[test]
    fn max_partition_dominates_random_subsets(n in 4usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_opinions(n, &mut rng);
        let q = random_distribution(n, &mut rng);
        let k = rng.gen_range(1..=n);
        let best = max_disparity_partition(&q, &s, k).expect("endpoint search");
        let x: Vec<f64> = (0..n).map(|i| q[i] * s.as_vector()[i]).collect();
        let total: f64 = x.iter().sum();
        let mut ids: Vec<usize> = (0..n).collect();
        for _ in 0..1000 {
            ids.shuffle(&mut rng);
            let sum_a: f64 = ids[..k].iter().map(|&i| x[i]).sum();
            let gap = (2.0 * sum_a - total).abs();
            prop_assert!(gap <= best.gap + 1e-12);
        }
    }

    /// The subset-sum DP finds a split whose gap matches exhaustive search up
    /// to its quantization resolution (each addend rounds by at most half a
    /// cell of 1e-6, and the doubled group sum accumulates at most n cells).
    #[test]
    fn dp_matches_brute_force(n in 4usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_opinions(n, &mut rng);
        let q = random_distribution(n, &mut rng);
        let brute = min_disparity_partition(&q, &s, MinPartitionMode::Brute).expect("brute");
        let dp = min_disparity_partition(&q, &s, MinPartitionMode::exact_dp()).expect("dp");
        let slack = 2.0 * n as f64 * 1e-6;
        prop_assert!(dp.gap + 1e-15 >= brute.gap);
        prop_assert!(dp.gap - brute.gap <= slack, "dp {} brute {}", dp.gap, brute.gap);
    }

    /// Contraction keeps the opinion vector on the unit sphere and removes
    /// exactly one node per instruction.
    #[test]
    fn contraction_preserves_opinion_norm(n in 4usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected_graph(n, 0.4, &mut rng);
        let s = random_opinions(n, &mut rng);
        let p = random_partition(n, &mut rng);
        let steps = rng.gen_range(1..=2usize);
        // Instructions name original ids; the larger endpoint of each merge
        // goes stale for the rest of the plan.
        let mut alive: Vec<usize> = (0..n).collect();
        let mut instructions = Vec::new();
        for _ in 0..steps {
            let i = rng.gen_range(0..alive.len());
            let j = (i + rng.gen_range(1..alive.len())) % alive.len();
            let (u, v) = (alive[i], alive[j]);
            let target = if rng.gen::<bool>() { Group::A } else { Group::B };
            instructions.push(ContractionInstruction { u, v, target });
            alive.retain(|&x| x != u.max(v));
        }
        let plan = ContractionPlan::new(instructions).expect("distinct endpoints");
        let (h, hs, hp) = contract(&g, &s, &p, &plan).expect("contraction");
        prop_assert_eq!(h.n(), n - steps);
        prop_assert_eq!(hp.len(), n - steps);
        prop_assert!((hs.as_vector().norm() - 1.0).abs() <= 1e-12);
    }

    /// Same spec and seed reproduce the same random graph, bit for bit.
    #[test]
    fn generators_are_reproducible(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let spec = TwoCliquesSpec { n: 24, k: 12, p, seed };
        let (g1, p1) = gen_two_cliques(&spec).expect("generator");
        let (g2, p2) = gen_two_cliques(&spec).expect("generator");
        prop_assert_eq!(g1.edges(), g2.edges());
        prop_assert_eq!(p1, p2);

        let spec = CorePeripherySpec {
            n: 20,
            k: 8,
            p_aa: 0.9,
            p_ab: 0.5 * p + 0.2,
            p_bb: 0.1,
            seed,
        };
        let (g1, p1) = gen_core_periphery(&spec).expect("generator");
        let (g2, p2) = gen_core_periphery(&spec).expect("generator");
        prop_assert_eq!(g1.edges(), g2.edges());
        prop_assert_eq!(p1, p2);
    }

    /// Removing edges never raises the top Laplacian eigenvalue.
    #[test]
    fn subgraph_lambda_max_is_monotone(n in 4usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected_graph(n, 0.5, &mut rng);
        let cfg = SpectralConfig::default();
        let full = laplacian_lambda_max(&g, &cfg).expect("full spectrum").value;
        let mut edges: Vec<(usize, usize, f64)> =
            g.edges().iter().map(|e| (e.u, e.v, e.w)).collect();
        edges.shuffle(&mut rng);
        let keep = rng.gen_range(1..=edges.len());
        let h = WeightedGraph::new_undirected(n, edges.into_iter().take(keep))
            .expect("edge subset is a valid graph");
        let sub = laplacian_lambda_max(&h, &cfg).expect("sub spectrum").value;
        prop_assert!(sub <= full + 1e-9, "sub {sub} full {full}");
    }
}
