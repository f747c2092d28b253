//! Incremental per-leaf sufficient statistics and split candidate generation.
//!
//! Nominal attributes keep exact per-value class and community tallies.
//! Numeric attributes keep one Gaussian per class and one per community;
//! branch counts for a threshold are estimated from the Gaussian mass on
//! each side of it.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::config::LearnerConfig;
use crate::error::{Error, Result};
use crate::metrics::{Branch, ClassDistribution, FairnessCounts, PartitionStats};
use crate::schema::{AttributeKind, Community, Instance, StreamSchema, Value};

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Running mean and variance (Welford) with observed extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimator {
    n: f64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for GaussianEstimator {
    fn default() -> Self {
        GaussianEstimator {
            n: 0.0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl GaussianEstimator {
    pub fn observe(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn count(&self) -> f64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Sample variance; 0 below two observations.
    pub fn variance(&self) -> f64 {
        if self.n > 1.0 {
            (self.m2 / (self.n - 1.0)).max(0.0)
        } else {
            0.0
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Estimated number of observations `<= threshold`.
    ///
    /// Thresholds outside the observed range get all or nothing; inside,
    /// the count is split by the normal CDF. A zero-variance estimator is
    /// a point mass at its mean.
    pub fn weight_at_or_below(&self, threshold: f64) -> f64 {
        if self.n <= 0.0 || threshold < self.min {
            return 0.0;
        }
        if threshold >= self.max {
            return self.n;
        }
        let sd = self.std_dev();
        if sd <= 0.0 {
            return if self.mean <= threshold { self.n } else { 0.0 };
        }
        self.n * normal_cdf((threshold - self.mean) / sd)
    }
}

/// Per-value class counts and community counts of a nominal attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalAttributeStats {
    pub classes: Vec<ClassDistribution>,
    pub fairness: Vec<FairnessCounts>,
}

impl NominalAttributeStats {
    pub fn new(domain_size: usize, num_classes: usize) -> Self {
        NominalAttributeStats {
            classes: vec![ClassDistribution::new(num_classes); domain_size],
            fairness: vec![FairnessCounts::default(); domain_size],
        }
    }

    fn observe(&mut self, value: usize, class: usize, community: Community) {
        self.classes[value].add(class, 1.0);
        self.fairness[value].add(community, 1.0);
    }

    /// Domain values seen at least once.
    pub fn observed_values(&self) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&v| self.classes[v].total() > 0.0)
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.classes.iter().map(ClassDistribution::total).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericAttributeStats {
    pub per_class: Vec<GaussianEstimator>,
    pub per_community: [GaussianEstimator; 4],
}

impl NumericAttributeStats {
    pub fn new(num_classes: usize) -> Self {
        NumericAttributeStats {
            per_class: vec![GaussianEstimator::default(); num_classes],
            per_community: [GaussianEstimator::default(); 4],
        }
    }

    fn observe(&mut self, x: f64, class: usize, community: Community) {
        self.per_class[class].observe(x);
        self.per_community[community.index()].observe(x);
    }

    /// Smallest and largest value seen, if any.
    pub fn range(&self) -> Option<(f64, f64)> {
        let lo = self
            .per_class
            .iter()
            .map(|g| g.min())
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .per_class
            .iter()
            .map(|g| g.max())
            .fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }

    /// Estimated binary partition at `threshold`: branch 0 holds values
    /// `<= threshold`, branch 1 the rest.
    pub fn partition_at(&self, threshold: f64) -> PartitionStats {
        let mut left = Branch {
            classes: ClassDistribution::new(self.per_class.len()),
            fairness: FairnessCounts::default(),
        };
        let mut right = left.clone();
        for (c, g) in self.per_class.iter().enumerate() {
            let l = g.weight_at_or_below(threshold);
            left.classes.add(c, l);
            right.classes.add(c, g.count() - l);
        }
        for k in Community::ALL {
            let g = &self.per_community[k.index()];
            let l = g.weight_at_or_below(threshold);
            left.fairness.add(k, l);
            right.fairness.add(k, g.count() - l);
        }
        PartitionStats::new(vec![left, right])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttributeStats {
    Nominal(NominalAttributeStats),
    Numeric(NumericAttributeStats),
}

/// Everything a leaf remembers about the instances routed to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafStats {
    pub classes: ClassDistribution,
    pub fairness: FairnessCounts,
    pub attributes: Vec<AttributeStats>,
}

/// Nominal value index an instance contributes, `None` to skip.
fn nominal_slot(value: Value, domain: &[String], missing: Option<usize>) -> Result<Option<usize>> {
    match value {
        Value::Nominal(v) if v < domain.len() => Ok(Some(v)),
        Value::Missing => Ok(missing),
        other => Err(Error::SchemaViolation(format!(
            "value {other:?} is outside the nominal domain {domain:?}"
        ))),
    }
}

impl LeafStats {
    pub fn new(schema: &StreamSchema) -> Self {
        let c = schema.num_classes();
        LeafStats {
            classes: ClassDistribution::new(c),
            fairness: FairnessCounts::default(),
            attributes: schema
                .attributes()
                .iter()
                .map(|a| match &a.kind {
                    AttributeKind::Nominal(values) => {
                        AttributeStats::Nominal(NominalAttributeStats::new(values.len(), c))
                    }
                    AttributeKind::Numeric => {
                        AttributeStats::Numeric(NumericAttributeStats::new(c))
                    }
                })
                .collect(),
        }
    }

    pub fn total(&self) -> f64 {
        self.classes.total()
    }

    /// Adds one labeled instance. Nothing is updated if the instance is
    /// rejected.
    pub fn observe(&mut self, instance: &Instance, schema: &StreamSchema) -> Result<()> {
        let community = schema.community_of(instance)?;
        let class = instance.label.expect("community_of checked the label");
        if instance.values.len() != self.attributes.len() {
            return Err(Error::SchemaViolation(format!(
                "instance has {} values, expected {}",
                instance.values.len(),
                self.attributes.len()
            )));
        }
        for (value, spec) in instance.values.iter().zip(schema.attributes()) {
            match &spec.kind {
                AttributeKind::Nominal(domain) => {
                    nominal_slot(*value, domain, spec.missing_index())?;
                }
                AttributeKind::Numeric => {
                    if let Value::Nominal(_) = value {
                        return Err(Error::SchemaViolation(format!(
                            "nominal value given for numeric attribute `{}`",
                            spec.name
                        )));
                    }
                }
            }
        }

        self.classes.add(class, 1.0);
        self.fairness.add(community, 1.0);
        for ((stats, value), spec) in self
            .attributes
            .iter_mut()
            .zip(&instance.values)
            .zip(schema.attributes())
        {
            match stats {
                AttributeStats::Nominal(s) => {
                    if let Some(v) = nominal_slot(*value, spec.values(), spec.missing_index())? {
                        s.observe(v, class, community);
                    }
                }
                AttributeStats::Numeric(s) => {
                    if let Value::Numeric(x) = value {
                        if x.is_finite() {
                            s.observe(*x, class, community);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of scalar counters and Gaussian estimators held.
    pub fn cell_count(&self) -> usize {
        let c = self.classes.counts().len();
        c + 4
            + self
                .attributes
                .iter()
                .map(|a| match a {
                    AttributeStats::Nominal(s) => s.classes.len() * (c + 4),
                    AttributeStats::Numeric(s) => s.per_class.len() + s.per_community.len(),
                })
                .sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// One branch per listed domain value, in order.
    Nominal {
        attribute: usize,
        values: Vec<usize>,
    },
    /// Branch 0 for values `<= threshold`, branch 1 otherwise.
    Numeric { attribute: usize, threshold: f64 },
}

impl SplitTest {
    pub fn attribute(&self) -> usize {
        match self {
            SplitTest::Nominal { attribute, .. } | SplitTest::Numeric { attribute, .. } => {
                *attribute
            }
        }
    }

    pub fn branches(&self) -> usize {
        match self {
            SplitTest::Nominal { values, .. } => values.len(),
            SplitTest::Numeric { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub attribute: usize,
    pub test: SplitTest,
    pub partition: PartitionStats,
    /// Filled in by the learner's split criterion.
    pub merit: f64,
}

impl SplitCandidate {
    pub fn parent_classes(&self) -> ClassDistribution {
        let mut d = ClassDistribution::new(self.partition.branches[0].classes.counts().len());
        for b in &self.partition.branches {
            for (c, &w) in b.classes.counts().iter().enumerate() {
                d.add(c, w);
            }
        }
        d
    }

    pub fn parent_fairness(&self) -> FairnessCounts {
        let mut f = FairnessCounts::default();
        for b in &self.partition.branches {
            for k in Community::ALL {
                f.add(k, b.fairness.get(k));
            }
        }
        f
    }
}

/// Equal-width thresholds strictly inside `(lo, hi)`.
pub fn candidate_thresholds(lo: f64, hi: f64, bins: u32) -> Vec<f64> {
    let step = (hi - lo) / (bins as f64 + 1.0);
    (1..=bins)
        .map(|i| lo + step * i as f64)
        .filter(|&t| t > lo && t < hi)
        .collect()
}

/// All split candidates a leaf supports, merits unset.
pub fn candidate_splits(leaf: &LeafStats, config: &LearnerConfig) -> Vec<SplitCandidate> {
    let mut out = Vec::new();
    for (attribute, stats) in leaf.attributes.iter().enumerate() {
        match stats {
            AttributeStats::Nominal(s) => {
                let values = s.observed_values();
                if values.len() < 2 {
                    continue;
                }
                let partition = PartitionStats::new(
                    values
                        .iter()
                        .map(|&v| Branch {
                            classes: s.classes[v].clone(),
                            fairness: s.fairness[v],
                        })
                        .collect(),
                );
                out.push(SplitCandidate {
                    attribute,
                    test: SplitTest::Nominal { attribute, values },
                    partition,
                    merit: 0.0,
                });
            }
            AttributeStats::Numeric(s) => {
                let Some((lo, hi)) = s.range() else { continue };
                if lo >= hi {
                    continue;
                }
                for threshold in candidate_thresholds(lo, hi, config.numeric_bins) {
                    let partition = s.partition_at(threshold);
                    if partition.populated() < 2 {
                        continue;
                    }
                    out.push(SplitCandidate {
                        attribute,
                        test: SplitTest::Numeric {
                            attribute,
                            threshold,
                        },
                        partition,
                        merit: 0.0,
                    });
                }
            }
        }
    }
    out
}

/// Statistics recomputed from a stored instance list.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub classes: ClassDistribution,
    pub fairness: FairnessCounts,
    /// `None` for numeric attributes.
    pub nominal: Vec<Option<NominalAttributeStats>>,
}

/// Brute-force recount of every nominal counter: each cell is the number
/// of stored instances matching its (value, class, community) key.
/// Serves as the reference for the incremental path.
pub fn batch_equivalence_oracle(
    instances: &[Instance],
    schema: &StreamSchema,
) -> Result<BatchStats> {
    let c = schema.num_classes();
    let communities = instances
        .iter()
        .map(|x| schema.community_of(x))
        .collect::<Result<Vec<_>>>()?;
    let count =
        |pred: &dyn Fn(usize) -> bool| (0..instances.len()).filter(|&i| pred(i)).count() as f64;

    let classes = ClassDistribution::from_counts(
        (0..c)
            .map(|k| count(&|i| instances[i].label == Some(k)))
            .collect::<Vec<_>>(),
    );
    let fairness_where = |pred: &dyn Fn(usize) -> bool| {
        FairnessCounts::new(
            count(&|i| pred(i) && communities[i] == Community::DeprivedRejected),
            count(&|i| pred(i) && communities[i] == Community::DeprivedGranted),
            count(&|i| pred(i) && communities[i] == Community::FavoredRejected),
            count(&|i| pred(i) && communities[i] == Community::FavoredGranted),
        )
    };
    let fairness = fairness_where(&|_| true);

    let nominal = schema
        .attributes()
        .iter()
        .map(|spec| {
            if spec.is_numeric() {
                return None;
            }
            let a = spec.index;
            let missing = spec.missing_index();
            let matches = |i: usize, v: usize| match instances[i].values[a] {
                Value::Nominal(x) => x == v,
                Value::Missing => missing == Some(v),
                Value::Numeric(_) => false,
            };
            let n = spec.values().len();
            Some(NominalAttributeStats {
                classes: (0..n)
                    .map(|v| {
                        ClassDistribution::from_counts(
                            (0..c)
                                .map(|k| count(&|i| matches(i, v) && instances[i].label == Some(k)))
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect(),
                fairness: (0..n).map(|v| fairness_where(&|i| matches(i, v))).collect(),
            })
        })
        .collect();

    Ok(BatchStats {
        classes,
        fairness,
        nominal,
    })
}
