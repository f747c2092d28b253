//! Incremental Hoeffding tree with a pluggable split criterion.
//!
//! With [`SplitCriterion::InfoGain`] this is the vanilla Hoeffding tree; with
//! [`SplitCriterion::FairInfoGain`] every split merit is the information gain
//! scaled by the split's fairness gain.

use std::sync::Arc;

use serde::Serialize;

use crate::config::{LearnerConfig, NullSplitMode, SplitCriterion};
use crate::error::Result;
use crate::learner::{Prediction, StreamLearner};
use crate::metrics::{
    entropy, fair_information_gain, fairness_gain, hoeffding_bound, information_gain,
    kamiran_merit, sensitive_information_gain, statistical_parity, FairnessCounts,
};
use crate::schema::{Instance, StreamSchema, Value};
use crate::stats::{candidate_splits, LeafStats, SplitCandidate, SplitTest};

#[derive(Debug, Clone)]
pub struct Leaf {
    pub stats: LeafStats,
    pub since_last_attempt: u32,
}

impl Leaf {
    fn new(schema: &StreamSchema) -> Self {
        Leaf {
            stats: LeafStats::new(schema),
            since_last_attempt: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitNode {
    pub test: SplitTest,
    pub children: Vec<TreeNode>,
    /// Receives instances whose nominal value has no branch: the branch
    /// that was heaviest when the split was made.
    pub default_child: usize,
}

impl SplitNode {
    pub fn branch_of(&self, instance: &Instance, schema: &StreamSchema) -> usize {
        match &self.test {
            SplitTest::Numeric {
                attribute,
                threshold,
            } => match instance.values[*attribute] {
                Value::Numeric(x) if x > *threshold => 1,
                _ => 0,
            },
            SplitTest::Nominal { attribute, values } => {
                let v = match instance.values[*attribute] {
                    Value::Nominal(v) => Some(v),
                    _ => schema.attributes()[*attribute].missing_index(),
                };
                v.and_then(|v| values.iter().position(|&b| b == v))
                    .unwrap_or(self.default_child)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum TreeNode {
    Leaf(Leaf),
    Split(SplitNode),
}

/// Outcome of a split attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitDecision {
    NoSplit,
    Split(SplitCandidate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub node_count: usize,
    pub leaf_count: usize,
    pub depth: usize,
}

/// One executed split, in stream order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitRecord {
    /// Instances trained when the split happened.
    pub seen: u64,
    pub depth: usize,
    pub attribute: usize,
    pub threshold: Option<f64>,
    pub merit: f64,
}

/// Merit of a candidate under the configured criterion.
pub fn candidate_merit(candidate: &SplitCandidate, config: &LearnerConfig) -> Result<f64> {
    let parent = candidate.parent_classes();
    let ig = information_gain(&parent, &candidate.partition)?;
    Ok(match config.split_criterion {
        SplitCriterion::InfoGain => ig,
        SplitCriterion::FairInfoGain => {
            let fg = fairness_gain(&candidate.parent_fairness(), &candidate.partition)?;
            fair_information_gain(ig, fg)
        }
        SplitCriterion::Kamiran(variant) => {
            let ig_s =
                sensitive_information_gain(&candidate.parent_fairness(), &candidate.partition)?;
            kamiran_merit(ig, ig_s, variant)
        }
    })
}

/// Merit of leaving the leaf as it is.
pub fn null_merit(stats: &LeafStats, config: &LearnerConfig) -> f64 {
    match (config.null_split_mode, config.split_criterion) {
        (NullSplitMode::EntropyTimesDisc, SplitCriterion::FairInfoGain) => {
            let disc = statistical_parity(&stats.fairness).abs();
            fair_information_gain(entropy(&stats.classes), disc)
        }
        _ => 0.0,
    }
}

/// The best candidate of each attribute, ordered by decreasing merit.
/// Ties keep attribute order, and within an attribute the first
/// (lowest-threshold) candidate wins.
pub fn rank_by_attribute(candidates: Vec<SplitCandidate>) -> Vec<SplitCandidate> {
    let mut best: Vec<SplitCandidate> = Vec::new();
    for c in candidates {
        match best.iter_mut().find(|b| b.attribute == c.attribute) {
            Some(b) if c.merit > b.merit => *b = c,
            Some(_) => {}
            None => best.push(c),
        }
    }
    best.sort_by(|a, b| {
        b.merit
            .total_cmp(&a.merit)
            .then(a.attribute.cmp(&b.attribute))
    });
    best
}

/// Hoeffding test on a leaf: split on the best candidate when it beats both
/// the runner-up and the null split by more than the bound, or when the
/// bound has shrunk below the tie threshold and the best still beats the
/// null split.
pub fn attempt_split(
    stats: &LeafStats,
    schema: &StreamSchema,
    config: &LearnerConfig,
) -> Result<SplitDecision> {
    if stats.classes.observed_classes() < 2 {
        return Ok(SplitDecision::NoSplit);
    }
    let mut candidates = candidate_splits(stats, config);
    for c in &mut candidates {
        c.merit = candidate_merit(c, config)?;
    }
    let mut ranked = rank_by_attribute(candidates);
    if ranked.is_empty() {
        return Ok(SplitDecision::NoSplit);
    }
    let g0 = null_merit(stats, config);
    let g1 = ranked[0].merit;
    let g2 = ranked.get(1).map_or(g0, |c| c.merit);
    let range = config
        .hoeffding_range
        .unwrap_or_else(|| (schema.num_classes() as f64).log2());
    let eps = hoeffding_bound(range, config.delta, stats.total())?;
    if g1 - g2.max(g0) > eps || (eps < config.tie_threshold && g1 > g0) {
        Ok(SplitDecision::Split(ranked.swap_remove(0)))
    } else {
        Ok(SplitDecision::NoSplit)
    }
}

#[derive(Debug, Clone)]
pub struct FahtTree {
    root: TreeNode,
    schema: Arc<StreamSchema>,
    config: LearnerConfig,
    node_count: usize,
    leaf_count: usize,
    depth: usize,
    seen: u64,
    splits: Vec<SplitRecord>,
}

impl FahtTree {
    pub fn new(schema: impl Into<Arc<StreamSchema>>, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let schema = schema.into();
        Ok(FahtTree {
            root: TreeNode::Leaf(Leaf::new(&schema)),
            schema,
            config,
            node_count: 1,
            leaf_count: 1,
            depth: 0,
            seen: 0,
            splits: Vec::new(),
        })
    }

    pub fn schema(&self) -> &StreamSchema {
        &self.schema
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn split_history(&self) -> &[SplitRecord] {
        &self.splits
    }

    /// Instances trained so far.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Counters maintained during training.
    pub fn counters(&self) -> ModelStats {
        ModelStats {
            node_count: self.node_count,
            leaf_count: self.leaf_count,
            depth: self.depth,
        }
    }

    /// Node, leaf and depth counts by traversal.
    pub fn model_stats(&self) -> ModelStats {
        fn walk(node: &TreeNode, depth: usize, s: &mut ModelStats) {
            s.node_count += 1;
            s.depth = s.depth.max(depth);
            match node {
                TreeNode::Leaf(_) => s.leaf_count += 1,
                TreeNode::Split(split) => split.children.iter().for_each(|c| walk(c, depth + 1, s)),
            }
        }
        let mut s = ModelStats {
            node_count: 0,
            leaf_count: 0,
            depth: 0,
        };
        walk(&self.root, 0, &mut s);
        s
    }

    pub fn leaf_for(&self, instance: &Instance) -> &Leaf {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(leaf) => return leaf,
                TreeNode::Split(s) => node = &s.children[s.branch_of(instance, &self.schema)],
            }
        }
    }

    /// Majority class of the routed leaf (ties go to the negative class)
    /// and the Laplace-smoothed positive fraction.
    pub fn predict(&self, instance: &Instance) -> Prediction {
        let classes = &self.leaf_for(instance).stats.classes;
        let pos = classes.get(self.schema.positive_class());
        let neg = classes.total() - pos;
        let label = if pos > neg {
            self.schema.positive_class()
        } else {
            self.schema.negative_class()
        };
        Prediction {
            label,
            score: (pos + 1.0) / (classes.total() + 2.0),
        }
    }

    pub fn train(&mut self, instance: &Instance) -> Result<()> {
        let schema = Arc::clone(&self.schema);
        let mut depth = 0;
        let mut node = &mut self.root;
        while let TreeNode::Split(s) = node {
            let b = s.branch_of(instance, &schema);
            node = &mut s.children[b];
            depth += 1;
        }
        let TreeNode::Leaf(leaf) = node else {
            unreachable!("descent stops at a leaf")
        };
        leaf.stats.observe(instance, &schema)?;
        self.seen += 1;
        leaf.since_last_attempt += 1;
        if leaf.since_last_attempt < self.config.grace_period {
            return Ok(());
        }
        leaf.since_last_attempt = 0;
        let SplitDecision::Split(candidate) = attempt_split(&leaf.stats, &schema, &self.config)?
        else {
            return Ok(());
        };

        let weights: Vec<f64> = candidate
            .partition
            .branches
            .iter()
            .map(|b| b.weight())
            .collect();
        let default_child =
            weights
                .iter()
                .enumerate()
                .fold(0, |best, (i, &w)| if w > weights[best] { i } else { best });
        let k = candidate.test.branches();
        self.splits.push(SplitRecord {
            seen: self.seen,
            depth,
            attribute: candidate.attribute,
            threshold: match candidate.test {
                SplitTest::Numeric { threshold, .. } => Some(threshold),
                SplitTest::Nominal { .. } => None,
            },
            merit: candidate.merit,
        });
        *node = TreeNode::Split(SplitNode {
            test: candidate.test,
            children: (0..k).map(|_| TreeNode::Leaf(Leaf::new(&schema))).collect(),
            default_child,
        });
        self.node_count += k;
        self.leaf_count += k - 1;
        self.depth = self.depth.max(depth + 1);
        Ok(())
    }

    pub fn export(&self) -> ExportNode {
        export_node(&self.root, &self.schema)
    }

    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(&TreeExport {
            criterion: self.config.split_criterion,
            model: self.model_stats(),
            splits: self
                .splits
                .iter()
                .map(|s| ExportSplit {
                    seen: s.seen,
                    depth: s.depth,
                    attribute: self.schema.attributes()[s.attribute].name.clone(),
                    threshold: s.threshold,
                    merit: s.merit,
                })
                .collect(),
            root: self.export(),
        })
        .expect("tree export is always serializable")
    }
}

impl StreamLearner for FahtTree {
    fn predict(&self, instance: &Instance) -> Prediction {
        FahtTree::predict(self, instance)
    }

    fn train(&mut self, instance: &Instance) -> Result<()> {
        FahtTree::train(self, instance)
    }

    fn node_count(&self) -> usize {
        self.node_count
    }
}

/// Serializable rendering of a tree for structural analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExportNode {
    Leaf {
        class_counts: Vec<f64>,
        fairness: FairnessCounts,
        discrimination: f64,
    },
    Split {
        attribute: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        branches: Vec<ExportBranch>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportBranch {
    /// Attribute value, or `<= t` / `> t` for numeric tests.
    pub condition: String,
    pub node: ExportNode,
}

#[derive(Debug, Clone, Serialize)]
struct ExportSplit {
    seen: u64,
    depth: usize,
    attribute: String,
    threshold: Option<f64>,
    merit: f64,
}

#[derive(Debug, Clone, Serialize)]
struct TreeExport {
    criterion: SplitCriterion,
    model: ModelStats,
    splits: Vec<ExportSplit>,
    root: ExportNode,
}

fn export_node(node: &TreeNode, schema: &StreamSchema) -> ExportNode {
    match node {
        TreeNode::Leaf(leaf) => ExportNode::Leaf {
            class_counts: leaf.stats.classes.counts().to_vec(),
            fairness: leaf.stats.fairness,
            discrimination: statistical_parity(&leaf.stats.fairness),
        },
        TreeNode::Split(s) => {
            let spec = &schema.attributes()[s.test.attribute()];
            let conditions: Vec<String> = match &s.test {
                SplitTest::Nominal { values, .. } => {
                    values.iter().map(|&v| spec.values()[v].clone()).collect()
                }
                SplitTest::Numeric { threshold, .. } => {
                    vec![format!("<= {threshold}"), format!("> {threshold}")]
                }
            };
            ExportNode::Split {
                attribute: spec.name.clone(),
                threshold: match s.test {
                    SplitTest::Numeric { threshold, .. } => Some(threshold),
                    SplitTest::Nominal { .. } => None,
                },
                branches: conditions
                    .into_iter()
                    .zip(&s.children)
                    .map(|(condition, child)| ExportBranch {
                        condition,
                        node: export_node(child, schema),
                    })
                    .collect(),
            }
        }
    }
}
