use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a fairness-blind information gain is combined with the information
/// gain measured on the sensitive attribute (the Kamiran baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KamiranVariant {
    #[default]
    Subtract,
    Divide,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    /// Plain information gain: the vanilla Hoeffding tree.
    InfoGain,
    /// Information gain times fairness gain.
    FairInfoGain,
    Kamiran(KamiranVariant),
}

impl SplitCriterion {
    pub fn label(&self) -> &'static str {
        match self {
            SplitCriterion::InfoGain => "ht",
            SplitCriterion::FairInfoGain => "faht",
            SplitCriterion::Kamiran(_) => "kamiran",
        }
    }
}

/// Merit assigned to the option of not splitting a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullSplitMode {
    /// Not splitting gains nothing.
    #[default]
    Zero,
    /// Leaf entropy scaled by the leaf's absolute discrimination (entropy
    /// alone when the leaf is discrimination-free). Only affects the fair
    /// information gain criterion.
    EntropyTimesDisc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafPrediction {
    #[default]
    MajorityClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub split_criterion: SplitCriterion,
    /// Instances a leaf accumulates between split attempts.
    pub grace_period: u32,
    pub delta: f64,
    pub tie_threshold: f64,
    pub null_split_mode: NullSplitMode,
    pub leaf_prediction: LeafPrediction,
    /// Candidate thresholds tried per numeric attribute.
    pub numeric_bins: u32,
    /// Range of the merit used in the Hoeffding bound; `None` means
    /// log2 of the number of classes.
    pub hoeffding_range: Option<f64>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            split_criterion: SplitCriterion::FairInfoGain,
            grace_period: 200,
            delta: 1e-7,
            tie_threshold: 0.05,
            null_split_mode: NullSplitMode::Zero,
            leaf_prediction: LeafPrediction::MajorityClass,
            numeric_bins: 10,
            hoeffding_range: None,
        }
    }
}

impl LearnerConfig {
    pub fn with_criterion(split_criterion: SplitCriterion) -> Self {
        LearnerConfig {
            split_criterion,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.tie_threshold.is_nan() || self.tie_threshold < 0.0 {
            return Err(Error::Config(format!(
                "tie threshold must be non-negative, got {}",
                self.tie_threshold
            )));
        }
        if self.grace_period < 1 {
            return Err(Error::Config("grace period must be at least 1".into()));
        }
        if self.numeric_bins < 1 {
            return Err(Error::Config("numeric_bins must be at least 1".into()));
        }
        if let Some(r) = self.hoeffding_range {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!(
                    "hoeffding range must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }
}
