//! Fairness-aware Hoeffding trees for discriminated data streams.
//!
//! A Hoeffding tree that can rank candidate splits by information gain,
//! by fair information gain (information gain scaled by the reduction in
//! statistical parity the split achieves), or by a sensitive-attribute
//! penalised gain. Around the learner sit a window ensemble, a prequential
//! evaluation harness and CSV/ARFF dataset loading.

pub mod config;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod learner;
pub mod metrics;
pub mod schema;
pub mod stats;
pub mod tree;

pub use config::{KamiranVariant, LeafPrediction, LearnerConfig, NullSplitMode, SplitCriterion};
pub use data::{load, Dataset, DatasetConfig};
pub use ensemble::WindowEnsemble;
pub use error::{Error, Result};
pub use eval::{prequential_run, PrequentialResult};
pub use learner::{Prediction, StreamLearner};
pub use schema::{AttributeSpec, Community, Group, Instance, StreamSchema, Value};
pub use tree::FahtTree;
