use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opinion::OpinionVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
}

impl Group {
    pub fn other(self) -> Group {
        match self {
            Group::A => Group::B,
            Group::B => Group::A,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::A => write!(f, "A"),
            Group::B => write!(f, "B"),
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Group::A),
            "B" | "b" => Ok(Group::B),
            other => Err(Error::param("group", format!("expected A or B, got {other:?}"))),
        }
    }
}

/// Two-way node partition. Groups may be empty; constructions that need a
/// nonempty side check for themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    membership: Vec<Group>,
}

impl Partition {
    pub fn from_membership(membership: Vec<Group>) -> Result<Self> {
        if membership.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(Partition { membership })
    }

    /// `true` marks group A.
    pub fn from_indicator(indicator: &[bool]) -> Result<Self> {
        Self::from_membership(
            indicator
                .iter()
                .map(|&a| if a { Group::A } else { Group::B })
                .collect(),
        )
    }

    pub fn from_a_indices(n: usize, a: &[usize]) -> Result<Self> {
        let mut membership = vec![Group::B; n];
        for &i in a {
            if i >= n {
                return Err(Error::InvalidNode { node: i, n });
            }
            membership[i] = Group::A;
        }
        Self::from_membership(membership)
    }

    /// Everyone in group A; the complement is empty.
    pub fn all_a(n: usize) -> Result<Self> {
        Self::from_membership(vec![Group::A; n])
    }

    pub fn len(&self) -> usize {
        self.membership.len()
    }

    pub fn is_empty(&self) -> bool {
        self.membership.is_empty()
    }

    pub fn group(&self, i: usize) -> Group {
        self.membership[i]
    }

    pub fn is_a(&self, i: usize) -> bool {
        self.membership[i] == Group::A
    }

    pub fn membership(&self) -> &[Group] {
        &self.membership
    }

    pub fn indices(&self, g: Group) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.group(i) == g).collect()
    }

    pub fn size(&self, g: Group) -> usize {
        self.membership.iter().filter(|&&m| m == g).count()
    }

    pub fn swapped(&self) -> Partition {
        Partition {
            membership: self.membership.iter().map(|m| m.other()).collect(),
        }
    }

    pub fn require_both_nonempty(&self, context: &'static str) -> Result<()> {
        if self.size(Group::A) == 0 {
            return Err(Error::EmptyGroup {
                group: 'A',
                context,
            });
        }
        if self.size(Group::B) == 0 {
            return Err(Error::EmptyGroup {
                group: 'B',
                context,
            });
        }
        Ok(())
    }
}

/// Aggregate masses of a partition under an opinion profile and, optionally,
/// a stationary distribution. Ratios of empty or zero-mass sides are
/// reported as infinity rather than an error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionStats {
    pub size_a: usize,
    pub size_b: usize,
    /// `max(|A|, |B|) / min(|A|, |B|)`.
    pub cluster_imbalance: f64,
    /// Total sentiment per group: `S_A = sum_{i in A} s_i`.
    pub sentiment_a: f64,
    pub sentiment_b: f64,
    /// `S_A / S_B`.
    pub sentiment_ratio: f64,
    /// Total stationary mass per group, when a distribution was supplied.
    pub influence_a: Option<f64>,
    pub influence_b: Option<f64>,
    /// `Q_A / Q_B`.
    pub influence_ratio: Option<f64>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

pub fn partition_stats(
    p: &Partition,
    s: &OpinionVector,
    q: Option<&DVector<f64>>,
) -> Result<PartitionStats> {
    if s.len() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "opinions",
            expected: p.len(),
            got: s.len(),
        });
    }
    if let Some(q) = q {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                what: "stationary distribution",
                expected: p.len(),
                got: q.len(),
            });
        }
    }
    let size_a = p.size(Group::A);
    let size_b = p.size(Group::B);
    let mut sentiment = [0.0f64; 2];
    let mut influence = [0.0f64; 2];
    for i in 0..p.len() {
        let k = match p.group(i) {
            Group::A => 0,
            Group::B => 1,
        };
        sentiment[k] += s.as_vector()[i];
        if let Some(q) = q {
            influence[k] += q[i];
        }
    }
    Ok(PartitionStats {
        size_a,
        size_b,
        cluster_imbalance: ratio(size_a.max(size_b) as f64, size_a.min(size_b) as f64),
        sentiment_a: sentiment[0],
        sentiment_b: sentiment[1],
        sentiment_ratio: ratio(sentiment[0], sentiment[1]),
        influence_a: q.map(|_| influence[0]),
        influence_b: q.map(|_| influence[1]),
        influence_ratio: q.map(|_| ratio(influence[0], influence[1])),
    })
}
