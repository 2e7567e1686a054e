//! Spectral routines shared by both models: Laplacian eigenpairs, stationary
//! distributions, `(I + L)` solves, and the second largest eigenvalue
//! modulus of a transition matrix.
//!
//! Every routine has a dense path (nalgebra decompositions, used up to
//! `dense_threshold` nodes) and an iterative path (Lanczos with full
//! reorthogonalization, conjugate gradients, power iteration). The dense
//! path doubles as the oracle for the iterative one in tests.

use nalgebra::{DMatrix, DVector};

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::partition::Partition;

#[derive(Debug, Clone)]
pub struct SpectralConfig {
    /// Largest `n` for which dense decompositions are used.
    pub dense_threshold: usize,
    /// Eigenpair residual bound: `||Mv - lambda v|| <= residual_tol * scale`
    /// where `scale` is a spectral-norm estimate of `M`.
    pub residual_tol: f64,
    /// Lanczos iteration cap.
    pub max_lanczos_steps: usize,
    /// Stationarity residual target for power iteration.
    pub stationary_tol: f64,
    /// Power / CG iteration cap.
    pub max_power_iters: usize,
    /// Entries this close to zero count as ties in sign-based partitions.
    pub tie_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            dense_threshold: 2000,
            residual_tol: 1e-8,
            max_lanczos_steps: 600,
            stationary_tol: 1e-12,
            max_power_iters: 500_000,
            tie_tol: 1e-12,
        }
    }
}

/// Eigenvalue with a unit-norm eigenvector whose largest-magnitude entry is
/// positive (ties broken by lowest index), so results are sign-deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DVector<f64>,
}

pub(crate) fn sign_fix(v: &mut DVector<f64>) {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Dense symmetric eigendecomposition, eigenvalues ascending, eigenvectors
/// sign-fixed and unit norm.
fn dense_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("symmetric eigenvalues are finite")
    });
    let mut values = Vec::with_capacity(order.len());
    let mut vectors = Vec::with_capacity(order.len());
    for &k in &order {
        values.push(eig.eigenvalues[k]);
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        sign_fix(&mut v);
        vectors.push(v);
    }
    (values, vectors)
}

fn check_residual(
    matvec: &mut dyn FnMut(&DVector<f64>) -> DVector<f64>,
    pair: &EigenPair,
    scale: f64,
    cfg: &SpectralConfig,
) -> Result<()> {
    let r = (matvec(&pair.vector) - pair.value * &pair.vector).norm();
    let bound = cfg.residual_tol * scale.max(1.0);
    if r > bound {
        return Err(Error::NotConverged {
            what: "eigenpair residual",
            iters: 0,
        });
    }
    Ok(())
}

/// Implicit QL with shifts for a symmetric tridiagonal matrix.
/// `d` holds the diagonal, `e[i]` couples `d[i]` and `d[i+1]` (`e` has the
/// same length as `d`; the last slot is scratch). `z` accumulates rotations,
/// so passing the identity yields eigenvectors as columns.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::NotConverged {
                    what: "tridiagonal QL",
                    iters: 64,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..z.nrows() {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Deterministic nonzero start vector for Lanczos: alternating signs, with a
/// hashed fallback when the pattern lies in the deflated subspace.
fn lanczos_start(n: usize, deflate: &[DVector<f64>], attempt: usize) -> Option<DVector<f64>> {
    let mut v = match attempt {
        0 => DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 }),
        _ => DVector::from_fn(n, |i, _| {
            let h = (i as u64 + 1).wrapping_mul(2654435761).wrapping_add(attempt as u64);
            ((h % 1000) as f64) / 1000.0 - 0.5
        }),
    };
    for u in deflate {
        let coef = u.dot(&v);
        v.axpy(-coef, u, 1.0);
    }
    let norm = v.norm();
    if norm < 1e-8 * (n as f64).sqrt() {
        return None;
    }
    Some(v / norm)
}

/// Lanczos iteration with full reorthogonalization against both the Krylov
/// basis and `deflate` (an orthonormal set of known eigenvectors to avoid).
/// Returns the extreme Ritz pair at either end of the spectrum.
pub(crate) fn lanczos_extreme(
    n: usize,
    matvec: &mut dyn FnMut(&DVector<f64>) -> DVector<f64>,
    deflate: &[DVector<f64>],
    want_largest: bool,
    cfg: &SpectralConfig,
) -> Result<EigenPair> {
    let max_steps = cfg.max_lanczos_steps.min(n.saturating_sub(deflate.len())).max(1);
    let mut q0 = None;
    for attempt in 0..4 {
        if let Some(v) = lanczos_start(n, deflate, attempt) {
            q0 = Some(v);
            break;
        }
    }
    let q0 = q0.ok_or(Error::NotConverged {
        what: "lanczos start vector",
        iters: 4,
    })?;

    let mut basis: Vec<DVector<f64>> = vec![q0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut scale: f64 = 1.0;

    let finish = |alphas: &[f64],
                  betas: &[f64],
                  basis: &[DVector<f64>],
                  beta_last: f64|
     -> Result<(f64, DVector<f64>, f64, f64)> {
        let m = alphas.len();
        let mut d = alphas.to_vec();
        let mut e = vec![0.0; m];
        e[..m - 1].copy_from_slice(&betas[..m - 1]);
        let mut z = DMatrix::identity(m, m);
        tridiagonal_ql(&mut d, &mut e, &mut z)?;
        let mut target = 0usize;
        let mut spread: f64 = 0.0;
        for k in 0..m {
            spread = spread.max(d[k].abs());
            let better = if want_largest {
                d[k] > d[target]
            } else {
                d[k] < d[target]
            };
            if better {
                target = k;
            }
        }
        let ritz_residual = (beta_last * z[(m - 1, target)]).abs();
        let mut vec = DVector::zeros(n);
        for (j, q) in basis.iter().enumerate().take(m) {
            vec.axpy(z[(j, target)], q, 1.0);
        }
        let norm = vec.norm();
        if norm > 0.0 {
            vec /= norm;
        }
        Ok((d[target], vec, ritz_residual, spread))
    };

    for step in 0..max_steps {
        let qk = basis[step].clone();
        let mut w = matvec(&qk);
        let alpha = qk.dot(&w);
        alphas.push(alpha);
        w.axpy(-alpha, &qk, 1.0);
        if step > 0 {
            let beta_prev = betas[step - 1];
            w.axpy(-beta_prev, &basis[step - 1], 1.0);
        }
        // Full reorthogonalization, twice, against basis and deflated space.
        for _ in 0..2 {
            for u in deflate.iter().chain(basis.iter()) {
                let coef = u.dot(&w);
                if coef != 0.0 {
                    w.axpy(-coef, u, 1.0);
                }
            }
        }
        let beta = w.norm();
        scale = scale.max(alpha.abs() + beta);

        let exhausted = beta <= 1e-12 * scale || step + 1 == max_steps;
        let check = exhausted || (step >= 9 && (step + 1) % 25 == 0);
        if check {
            let (value, vector, ritz_residual, spread) =
                finish(&alphas, &betas, &basis, beta)?;
            if ritz_residual <= cfg.residual_tol * spread.max(1.0) || exhausted {
                let mut vector = vector;
                sign_fix(&mut vector);
                let pair = EigenPair { value, vector };
                check_residual(matvec, &pair, spread, cfg)?;
                return Ok(pair);
            }
        }
        betas.push(beta);
        basis.push(&w / beta);
    }
    Err(Error::NotConverged {
        what: "lanczos",
        iters: max_steps,
    })
}

fn laplacian_matvec(g: &WeightedGraph) -> impl FnMut(&DVector<f64>) -> DVector<f64> + '_ {
    move |x: &DVector<f64>| {
        DVector::from_fn(g.n(), |i, _| {
            let mut acc = 0.0;
            for &(j, w) in g.neighbors(i) {
                acc += w * (x[i] - x[j]);
            }
            acc
        })
    }
}

/// Largest Laplacian eigenpair of an undirected graph.
pub fn laplacian_lambda_max(g: &WeightedGraph, cfg: &SpectralConfig) -> Result<EigenPair> {
    if !g.is_undirected() {
        return Err(Error::DirectedUnsupported {
            op: "laplacian_lambda_max",
        });
    }
    if g.n() <= cfg.dense_threshold {
        let (values, mut vectors) = dense_symmetric_eigen(&g.laplacian()?);
        let last = values.len() - 1;
        let pair = EigenPair {
            value: values[last],
            vector: vectors.swap_remove(last),
        };
        check_residual(&mut laplacian_matvec(g), &pair, values[last].abs(), cfg)?;
        Ok(pair)
    } else {
        lanczos_extreme(g.n(), &mut laplacian_matvec(g), &[], true, cfg)
    }
}

/// Second smallest Laplacian eigenpair (algebraic connectivity and Fiedler
/// vector). Requires a connected graph so the pair is well separated from
/// the trivial eigenvalue 0.
pub fn fiedler_pair(g: &WeightedGraph, cfg: &SpectralConfig) -> Result<EigenPair> {
    if !g.is_undirected() {
        return Err(Error::DirectedUnsupported { op: "fiedler_pair" });
    }
    g.require_connected()?;
    if g.n() < 2 {
        return Err(Error::param("graph", "fiedler pair needs at least 2 nodes"));
    }
    if g.n() <= cfg.dense_threshold {
        let (values, mut vectors) = dense_symmetric_eigen(&g.laplacian()?);
        let scale = values[values.len() - 1].abs();
        let pair = EigenPair {
            value: values[1],
            vector: vectors.swap_remove(1),
        };
        check_residual(&mut laplacian_matvec(g), &pair, scale, cfg)?;
        Ok(pair)
    } else {
        let n = g.n();
        let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        lanczos_extreme(n, &mut laplacian_matvec(g), &[ones], false, cfg)
    }
}

/// Fiedler and largest Laplacian eigenpairs together, sharing one dense
/// decomposition when possible.
pub fn extreme_laplacian_eigs(
    g: &WeightedGraph,
    cfg: &SpectralConfig,
) -> Result<(EigenPair, EigenPair)> {
    if !g.is_undirected() {
        return Err(Error::DirectedUnsupported {
            op: "extreme_laplacian_eigs",
        });
    }
    g.require_connected()?;
    if g.n() < 2 {
        return Err(Error::param("graph", "need at least 2 nodes"));
    }
    if g.n() <= cfg.dense_threshold {
        let (values, mut vectors) = dense_symmetric_eigen(&g.laplacian()?);
        let last = values.len() - 1;
        let scale = values[last].abs();
        let top = EigenPair {
            value: values[last],
            vector: vectors.swap_remove(last),
        };
        let fiedler = EigenPair {
            value: values[1],
            vector: vectors.swap_remove(1),
        };
        check_residual(&mut laplacian_matvec(g), &fiedler, scale, cfg)?;
        check_residual(&mut laplacian_matvec(g), &top, scale, cfg)?;
        Ok((fiedler, top))
    } else {
        Ok((fiedler_pair(g, cfg)?, laplacian_lambda_max(g, cfg)?))
    }
}

/// Splits nodes by Fiedler vector sign. Entries within `tie_tol` of zero
/// join group A, as do positive entries.
pub fn spectral_partition(
    g: &WeightedGraph,
    cfg: &SpectralConfig,
) -> Result<(Partition, EigenPair)> {
    let pair = fiedler_pair(g, cfg)?;
    let indicator: Vec<bool> = pair.vector.iter().map(|&v| v >= -cfg.tie_tol).collect();
    Ok((Partition::from_indicator(&indicator)?, pair))
}

/// Stationary distribution of an irreducible chain: entrywise positive,
/// sums to 1, residual `||q^T T - q^T||_1 <= stationary_tol`.
pub fn stationary_distribution(t: &TransitionMatrix, cfg: &SpectralConfig) -> Result<DVector<f64>> {
    t.require_irreducible()?;
    let n = t.n();
    // Power iteration on the lazy chain (T + I)/2, which kills periodicity
    // (bipartite supports cycle forever otherwise) without changing the
    // stationary distribution.
    let mut q = DVector::from_element(n, 1.0 / n as f64);
    let mut converged = false;
    for it in 0..cfg.max_power_iters {
        q = 0.5 * (t.left_mul(&q) + &q);
        let mass = q.sum();
        q /= mass;
        if it % 8 == 7 && t.stationarity_residual(&q) <= cfg.stationary_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "stationary power iteration",
            iters: cfg.max_power_iters,
        });
    }
    // Clip solver noise; irreducibility guarantees strict positivity.
    let mut min = f64::INFINITY;
    for v in q.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
        min = min.min(*v);
    }
    if min < 0.0 {
        return Err(Error::NotConverged {
            what: "stationary positivity",
            iters: 0,
        });
    }
    let mass = q.sum();
    q /= mass;
    let resid = t.stationarity_residual(&q);
    if resid > cfg.stationary_tol.max(1e-10) {
        return Err(Error::NotConverged {
            what: "stationary residual",
            iters: 0,
        });
    }
    Ok(q)
}

enum SolverBackend {
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Cg {
        adj: Vec<Vec<(usize, f64)>>,
        diag: Vec<f64>,
    },
}

/// Cached solver for `(I + L) x = b` on an undirected graph. `I + L` is
/// symmetric positive definite, so the system is always solvable; solutions
/// satisfy `||(I + L) x - b|| <= 1e-10 ||b||`.
pub struct IPlusLSolver {
    n: usize,
    backend: SolverBackend,
    max_iters: usize,
}

impl IPlusLSolver {
    pub fn new(g: &WeightedGraph) -> Result<Self> {
        Self::with_config(g, &SpectralConfig::default())
    }

    pub fn with_config(g: &WeightedGraph, cfg: &SpectralConfig) -> Result<Self> {
        if !g.is_undirected() {
            return Err(Error::DirectedUnsupported { op: "IPlusLSolver" });
        }
        let n = g.n();
        let backend = if n <= cfg.dense_threshold {
            let mut m = g.laplacian()?;
            for i in 0..n {
                m[(i, i)] += 1.0;
            }
            SolverBackend::Dense(
                m.cholesky()
                    .expect("I + L is symmetric positive definite"),
            )
        } else {
            let adj = (0..n).map(|i| g.neighbors(i).to_vec()).collect();
            let diag = (0..n).map(|i| 1.0 + g.weighted_out_degree(i)).collect();
            SolverBackend::Cg { adj, diag }
        };
        Ok(IPlusLSolver {
            n,
            backend,
            max_iters: cfg.max_power_iters,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "solver rhs",
                expected: self.n,
                got: b.len(),
            });
        }
        match &self.backend {
            SolverBackend::Dense(ch) => Ok(ch.solve(b)),
            SolverBackend::Cg { adj, diag } => self.solve_cg(adj, diag, b),
        }
    }

    fn apply(adj: &[Vec<(usize, f64)>], diag: &[f64], x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            let mut acc = diag[i] * x[i];
            for &(j, w) in &adj[i] {
                acc -= w * x[j];
            }
            acc
        })
    }

    fn solve_cg(
        &self,
        adj: &[Vec<(usize, f64)>],
        diag: &[f64],
        b: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let bnorm = b.norm();
        if bnorm == 0.0 {
            return Ok(DVector::zeros(self.n));
        }
        let tol = 1e-12 * bnorm;
        let mut x = DVector::zeros(self.n);
        let mut r = b.clone();
        // Jacobi preconditioner: diag(I + L) is strictly positive.
        let mut z = DVector::from_fn(self.n, |i, _| r[i] / diag[i]);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        let iters = self.max_iters.min(20 * self.n + 100);
        for _ in 0..iters {
            if r.norm() <= tol {
                return Ok(x);
            }
            let ap = Self::apply(adj, diag, &p);
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            z = DVector::from_fn(self.n, |i, _| r[i] / diag[i]);
            let rz_new = r.dot(&z);
            let beta = rz_new / rz;
            rz = rz_new;
            p = &z + beta * p;
        }
        if r.norm() <= 1e-10 * bnorm {
            return Ok(x);
        }
        Err(Error::NotConverged {
            what: "conjugate gradients",
            iters,
        })
    }
}

/// Convenience wrapper over [`IPlusLSolver`] for one-off solves.
pub fn solve_i_plus_l(g: &WeightedGraph, b: &DVector<f64>, cfg: &SpectralConfig) -> Result<DVector<f64>> {
    IPlusLSolver::with_config(g, cfg)?.solve(b)
}

/// Second largest eigenvalue modulus of an irreducible chain with stationary
/// distribution `q`.
///
/// Reversible chains (detailed-balance residual at most 1e-8) go through the
/// symmetrization `S = D_q^{1/2} T D_q^{-1/2}`, which shares the spectrum of
/// `T`. Non-reversible chains fall back to dense Schur eigenvalues, or to a
/// power-iteration growth estimate above the dense threshold.
pub fn slem(t: &TransitionMatrix, q: &DVector<f64>, cfg: &SpectralConfig) -> Result<f64> {
    if q.len() != t.n() {
        return Err(Error::DimensionMismatch {
            what: "stationary distribution",
            expected: t.n(),
            got: q.len(),
        });
    }
    let n = t.n();
    if n == 1 {
        return Ok(0.0);
    }
    if q.iter().any(|&v| v <= 0.0) {
        return Err(Error::param("q", "stationary distribution must be positive"));
    }
    let reversible = t.detailed_balance_residual(q) <= 1e-8;
    if reversible {
        let sqrt_q = DVector::from_fn(n, |i, _| q[i].sqrt());
        if n <= cfg.dense_threshold {
            let dense = t.to_dense()?;
            let mut s = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    s[(i, j)] = sqrt_q[i] * dense[(i, j)] / sqrt_q[j];
                }
            }
            // Kill the asymmetry left by detailed-balance roundoff.
            let s = 0.5 * (&s + s.transpose());
            let (values, _) = dense_symmetric_eigen(&s);
            // Remove the single Perron eigenvalue 1 (eigenvector sqrt(q)).
            let perron = values
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    (a.1 - 1.0)
                        .abs()
                        .partial_cmp(&(b.1 - 1.0).abs())
                        .expect("finite")
                })
                .map(|(k, _)| k)
                .expect("nonempty spectrum");
            Ok(values
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != perron)
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max))
        } else {
            let unit_sqrt_q = &sqrt_q / sqrt_q.norm();
            let mut matvec = |x: &DVector<f64>| {
                // S x with S_ij = sqrt(q_i) T_ij / sqrt(q_j).
                let scaled = DVector::from_fn(n, |i, _| x[i] / sqrt_q[i]);
                let tx = t.right_mul(&scaled);
                DVector::from_fn(n, |i, _| sqrt_q[i] * tx[i])
            };
            let top = lanczos_extreme(n, &mut matvec, &[unit_sqrt_q.clone()], true, cfg)?;
            let bottom = lanczos_extreme(n, &mut matvec, &[unit_sqrt_q], false, cfg)?;
            Ok(top.value.abs().max(bottom.value.abs()))
        }
    } else if n <= cfg.dense_threshold {
        let eigs = t.to_dense()?.schur().complex_eigenvalues();
        let mut perron = 0usize;
        for k in 1..eigs.len() {
            if (eigs[k] - nalgebra::Complex::new(1.0, 0.0)).norm()
                < (eigs[perron] - nalgebra::Complex::new(1.0, 0.0)).norm()
            {
                perron = k;
            }
        }
        Ok((0..eigs.len())
            .filter(|&k| k != perron)
            .map(|k| eigs[k].norm())
            .fold(0.0, f64::max))
    } else {
        Ok(slem_power_estimate(t, q, 600))
    }
}

/// Growth-rate estimate of the second largest eigenvalue modulus via power
/// iteration on the deflated operator `T - 1 q^T`. An estimate, not a
/// certified value; used only past the dense threshold for non-reversible
/// chains.
pub fn slem_power_estimate(t: &TransitionMatrix, q: &DVector<f64>, iters: usize) -> f64 {
    let n = t.n();
    let mut x = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    x /= x.norm();
    let window = 20.min(iters / 2).max(1);
    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        let tx = t.right_mul(&x);
        let qx = q.dot(&x);
        let mut y = tx;
        y.add_scalar_mut(-qx);
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        history.push(norm);
        x = y / norm;
    }
    let tail = &history[history.len() - window..];
    let log_mean: f64 = tail.iter().map(|v| v.ln()).sum::<f64>() / tail.len() as f64;
    log_mean.exp().min(1.0)
}
