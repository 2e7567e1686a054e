use std::collections::BTreeMap;

use serde::Serialize;

use crate::opinion::OpinionVector;
use crate::partition::{Group, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Degroot,
    FriedkinJohnsen,
}

/// Result of a disparity evaluation or optimization. `diagnostics` carries
/// model-specific scalars (eigenvalues, residuals, reproduced values) under
/// stable keys; a BTreeMap keeps serialized output deterministic.
#[derive(Debug, Clone, Serialize)]
pub struct DisparityReport {
    pub model: Model,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opinions: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Group>>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl DisparityReport {
    pub fn new(model: Model, value: f64) -> Self {
        DisparityReport {
            model,
            value,
            opinions: None,
            partition: None,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_opinions(mut self, s: &OpinionVector) -> Self {
        self.opinions = Some(s.as_vector().iter().copied().collect());
        self
    }

    pub fn with_partition(mut self, p: &Partition) -> Self {
        self.partition = Some(p.membership().to_vec());
        self
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}
