//! Window ensemble: tumbling windows each found a new tree, a bounded FIFO
//! queue keeps the most recent trees, and every member keeps learning from
//! every instance after its creation. Prediction is an unweighted vote.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::config::LearnerConfig;
use crate::error::{Error, Result};
use crate::learner::{Prediction, StreamLearner};
use crate::schema::{Instance, StreamSchema};
use crate::tree::FahtTree;

#[derive(Debug, Clone)]
pub struct WindowEnsemble {
    members: VecDeque<FahtTree>,
    /// Window index each member was founded in, parallel to `members`.
    founded: VecDeque<u64>,
    capacity: usize,
    window_size: usize,
    /// Instances seen in the current window.
    filled: usize,
    windows_started: u64,
    schema: Arc<StreamSchema>,
    base_config: LearnerConfig,
}

impl WindowEnsemble {
    /// `window_size = usize::MAX` gives a single never-ending window.
    pub fn new(
        schema: impl Into<Arc<StreamSchema>>,
        base_config: LearnerConfig,
        window_size: usize,
        capacity: usize,
    ) -> Result<Self> {
        if window_size == 0 {
            return Err(Error::Config("window size must be at least 1".into()));
        }
        if capacity == 0 {
            return Err(Error::Config("ensemble capacity must be at least 1".into()));
        }
        base_config.validate()?;
        Ok(WindowEnsemble {
            members: VecDeque::with_capacity(capacity),
            founded: VecDeque::with_capacity(capacity),
            capacity,
            window_size,
            filled: 0,
            windows_started: 0,
            schema: schema.into(),
            base_config,
        })
    }

    pub fn members(&self) -> impl Iterator<Item = &FahtTree> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// 1-based window numbers of the current members, oldest first.
    pub fn founding_windows(&self) -> Vec<u64> {
        self.founded.iter().copied().collect()
    }

    /// Unweighted majority vote; ties and the empty ensemble predict the
    /// negative class. The score is the positive vote share.
    pub fn predict(&self, instance: &Instance) -> Prediction {
        let negative = self.schema.negative_class();
        if self.members.is_empty() {
            return Prediction {
                label: negative,
                score: 0.0,
            };
        }
        let positive = self.schema.positive_class();
        let votes = self
            .members
            .iter()
            .filter(|m| m.predict(instance).label == positive)
            .count();
        let share = votes as f64 / self.members.len() as f64;
        Prediction {
            label: if 2 * votes > self.members.len() {
                positive
            } else {
                negative
            },
            score: share,
        }
    }

    /// Trains every member on a labeled instance. The first instance of a
    /// window founds a fresh member (evicting the oldest at capacity), which
    /// then learns the window incrementally like the others.
    pub fn train(&mut self, instance: &Instance) -> Result<()> {
        if self.filled == 0 {
            if self.members.len() == self.capacity {
                self.members.pop_front();
                self.founded.pop_front();
            }
            self.windows_started += 1;
            self.members.push_back(FahtTree::new(
                Arc::clone(&self.schema),
                self.base_config.clone(),
            )?);
            self.founded.push_back(self.windows_started);
        }
        for m in &mut self.members {
            m.train(instance)?;
        }
        self.filled += 1;
        if self.filled == self.window_size {
            self.filled = 0;
        }
        Ok(())
    }

    /// Test-then-train step: the prediction is made before training.
    pub fn process(&mut self, instance: &Instance) -> Result<Prediction> {
        let p = self.predict(instance);
        self.train(instance)?;
        Ok(p)
    }
}

impl StreamLearner for WindowEnsemble {
    fn predict(&self, instance: &Instance) -> Prediction {
        WindowEnsemble::predict(self, instance)
    }

    fn train(&mut self, instance: &Instance) -> Result<()> {
        WindowEnsemble::train(self, instance)
    }

    fn node_count(&self) -> usize {
        self.members.iter().map(|m| m.counters().node_count).sum()
    }
}
