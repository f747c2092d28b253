use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::schema::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: usize,
    /// Estimated probability (or vote share) of the positive class.
    pub score: f64,
}

/// An incremental classifier driven by a test-then-train loop.
pub trait StreamLearner {
    fn predict(&self, instance: &Instance) -> Prediction;

    fn train(&mut self, instance: &Instance) -> Result<()>;

    /// Model size; 0 for learners without structure.
    fn node_count(&self) -> usize {
        0
    }
}
