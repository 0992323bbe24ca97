use serde::{Deserialize, Serialize};

use crate::config::Experiment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

/// One measured cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: Experiment,
    pub lambda: u64,
    pub delta_num: i64,
    pub delta_den: i64,
    pub trial: usize,
    pub seed: u64,
    pub values: Vec<NamedValue>,
    /// Predicted exponent evaluated at δ.
    pub predicted_exponent: f64,
    /// The same exponent as an exact affine expression.
    pub predicted_text: String,
    /// Primary measured value divided by `λ^{predicted}`.
    pub normalized: Option<f64>,
    pub walltime_ms: u64,
    pub error: Option<String>,
}

impl ExperimentRecord {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.value)
    }

    pub fn sort_key(&self) -> (Experiment, u64, usize) {
        (self.experiment, self.lambda, self.trial)
    }
}
