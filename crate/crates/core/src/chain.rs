use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::DENSE_LIMIT;

const ROW_SUM_TOL: f64 = 1e-12;
const ENTRY_TOL: f64 = 1e-12;

/// Row-stochastic matrix stored sparsely: one sorted `(column, probability)`
/// list per row. Every row sums to 1 within 1e-12 and entries lie in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                what: "transition rows",
                expected: n,
                got: rows.len(),
            });
        }
        let mut clean = Vec::with_capacity(n);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut sum = 0.0;
            let mut prev: Option<usize> = None;
            for &(j, p) in &row {
                if j >= n {
                    return Err(Error::InvalidNode { node: j, n });
                }
                if prev == Some(j) {
                    return Err(Error::DuplicateEdge { u: i, v: j });
                }
                prev = Some(j);
                if !p.is_finite() || p < -ENTRY_TOL || p > 1.0 + ENTRY_TOL {
                    return Err(Error::EntryOutOfRange {
                        row: i,
                        col: j,
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowSumInvalid { row: i, sum });
            }
            // Drop exact zeros so the support reflects reachable transitions.
            row.retain(|&(_, p)| p != 0.0);
            clean.push(row);
        }
        Ok(TransitionMatrix { n, rows: clean })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_LIMIT {
            return Err(Error::TooLargeForDense {
                n: self.n,
                limit: DENSE_LIMIT,
            });
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                m[(i, j)] = p;
            }
        }
        Ok(m)
    }

    /// `x^T T` (one step of distribution evolution).
    pub fn left_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (i, row) in self.rows.iter().enumerate() {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += xi * p;
            }
        }
        out
    }

    /// `T x` (one step of opinion averaging).
    pub fn right_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            self.rows[i].iter().map(|&(j, p)| p * x[j]).sum()
        })
    }

    /// Errs unless the support (off-diagonal positive entries, viewed as a
    /// directed graph) is strongly connected, i.e. the chain is irreducible.
    pub fn require_irreducible(&self) -> Result<()> {
        let forward = self.reach(false);
        let backward = self.reach(true);
        let stranded = (0..self.n).filter(|&i| !forward[i] || !backward[i]).count();
        if stranded > 0 {
            let witness = (0..self.n)
                .find(|&i| !forward[i] || !backward[i])
                .expect("counted above");
            return Err(Error::ReducibleChain { stranded, witness });
        }
        Ok(())
    }

    fn reach(&self, transpose: bool) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                if i != j && p > 0.0 {
                    if transpose {
                        adj[j].push(i);
                    } else {
                        adj[i].push(j);
                    }
                }
            }
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// `max_{i,j} |q_i T_ij - q_j T_ji|`, zero iff the chain is reversible
    /// with respect to `q`.
    pub fn detailed_balance_residual(&self, q: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                let flow = q[i] * p - q[j] * self.entry(j, i);
                worst = worst.max(flow.abs());
            }
        }
        worst
    }

    /// `||q^T T - q^T||_1`, zero iff `q` is stationary.
    pub fn stationarity_residual(&self, q: &DVector<f64>) -> f64 {
        (self.left_mul(q) - q).abs().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> TransitionMatrix {
        TransitionMatrix::from_rows(
            2,
            vec![vec![(0, 0.75), (1, 0.25)], vec![(0, 0.5), (1, 0.5)]],
        )
        .unwrap()
    }

    #[test]
    fn validates_rows() {
        assert!(matches!(
            TransitionMatrix::from_rows(1, vec![vec![(0, 0.5)]]),
            Err(Error::RowSumInvalid { row: 0, .. })
        ));
        assert!(matches!(
            TransitionMatrix::from_rows(2, vec![vec![(0, 1.5), (1, -0.5)], vec![(1, 1.0)]]),
            Err(Error::EntryOutOfRange { .. })
        ));
        assert!(matches!(
            TransitionMatrix::from_rows(2, vec![vec![(0, 0.5), (0, 0.5)], vec![(1, 1.0)]]),
            Err(Error::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn muls_agree_with_dense() {
        let t = two_state();
        let d = t.to_dense().unwrap();
        let x = DVector::from_vec(vec![0.3, 0.7]);
        assert!((t.left_mul(&x) - d.transpose() * &x).norm() < 1e-15);
        assert!((t.right_mul(&x) - d * &x).norm() < 1e-15);
    }

    #[test]
    fn irreducibility() {
        assert!(two_state().require_irreducible().is_ok());
        // State 1 is absorbing: reducible.
        let absorbing = TransitionMatrix::from_rows(
            2,
            vec![vec![(0, 0.5), (1, 0.5)], vec![(1, 1.0)]],
        )
        .unwrap();
        assert!(matches!(
            absorbing.require_irreducible(),
            Err(Error::ReducibleChain { .. })
        ));
    }

    #[test]
    fn residuals() {
        let t = two_state();
        // Stationary distribution of this chain is (2/3, 1/3).
        let q = DVector::from_vec(vec![2.0 / 3.0, 1.0 / 3.0]);
        assert!(t.stationarity_residual(&q) < 1e-15);
        assert!(t.detailed_balance_residual(&q) < 1e-15);
        let not_q = DVector::from_vec(vec![0.5, 0.5]);
        assert!(t.stationarity_residual(&not_q) > 0.1);
    }
}
