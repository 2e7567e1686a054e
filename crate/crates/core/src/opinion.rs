use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::partition::{Group, Partition};

const RANGE_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-10;

/// Opinion profile: entries in [0, 1], Euclidean norm 1. The norm convention
/// makes disparity values comparable across graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionVector {
    s: DVector<f64>,
}

impl OpinionVector {
    pub fn new(s: DVector<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (i, &v) in s.iter().enumerate() {
            if !v.is_finite() || v < -RANGE_TOL || v > 1.0 + RANGE_TOL {
                return Err(Error::OpinionOutOfRange { index: i, value: v });
            }
        }
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::OpinionNotNormalized { norm });
        }
        Ok(OpinionVector { s })
    }

    /// Normalizes a nonnegative, nonzero vector onto the unit sphere.
    pub fn from_unnormalized(raw: DVector<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (i, &v) in raw.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::OpinionOutOfRange { index: i, value: v });
            }
        }
        let norm = raw.norm();
        if norm == 0.0 {
            return Err(Error::param("opinions", "all-zero vector cannot be normalized"));
        }
        // Entries stay in [0, 1]: the norm dominates the largest entry.
        Ok(OpinionVector { s: raw / norm })
    }

    /// Uniform profile `1/sqrt(n)`, the natural "no information" baseline.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        Ok(OpinionVector {
            s: DVector::from_element(n, 1.0 / (n as f64).sqrt()),
        })
    }

    /// All mass on one node.
    pub fn point_mass(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::InvalidNode { node: i, n });
        }
        let mut s = DVector::zeros(n);
        s[i] = 1.0;
        Ok(OpinionVector { s })
    }

    /// i.i.d. uniform [0, 1] entries, then normalized.
    pub fn sample_uniform(n: usize, rng: &mut impl Rng) -> Result<Self> {
        let raw = DVector::from_fn(n, |_, _| rng.gen::<f64>());
        Self::from_unnormalized(raw)
    }

    /// Polarized profile: group A draws Beta(8, 2) (high opinions), group B
    /// draws Beta(2, 8) (low opinions), then the whole vector is normalized.
    pub fn sample_polarized(p: &Partition, rng: &mut impl Rng) -> Result<Self> {
        let high = Beta::new(8.0, 2.0).expect("valid Beta parameters");
        let low = Beta::new(2.0, 8.0).expect("valid Beta parameters");
        let raw = DVector::from_fn(p.len(), |i, _| match p.group(i) {
            Group::A => high.sample(rng),
            Group::B => low.sample(rng),
        });
        Self::from_unnormalized(raw)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.s
    }

    /// Opinions restricted to one group, zero elsewhere.
    pub fn masked(&self, p: &Partition, g: Group) -> Result<DVector<f64>> {
        self.check_len(p)?;
        Ok(DVector::from_fn(self.s.len(), |i, _| {
            if p.group(i) == g {
                self.s[i]
            } else {
                0.0
            }
        }))
    }

    /// `s_A - s_B`: +s on group A, -s on group B.
    pub fn signed_difference(&self, p: &Partition) -> Result<DVector<f64>> {
        self.check_len(p)?;
        Ok(DVector::from_fn(self.s.len(), |i, _| match p.group(i) {
            Group::A => self.s[i],
            Group::B => -self.s[i],
        }))
    }

    fn check_len(&self, p: &Partition) -> Result<()> {
        if p.len() != self.s.len() {
            return Err(Error::DimensionMismatch {
                what: "partition",
                expected: self.s.len(),
                got: p.len(),
            });
        }
        Ok(())
    }
}
