//! Prequential (test-then-train) evaluation and the statistics used to
//! compare runs: accuracy and discrimination series, McNemar's test,
//! Pearson correlations and relative-change reports.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::learner::StreamLearner;
use crate::metrics::{statistical_parity, FairnessCounts};
use crate::schema::{Community, Group, Instance, StreamSchema, Value};

pub const DEFAULT_SNAPSHOT_EVERY: usize = 1000;

/// Critical value of the chi-squared distribution with one degree of
/// freedom at p = 0.001.
pub const CHI2_DF1_P001: f64 = 10.83;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrequentialRecord {
    pub index: u64,
    pub truth: usize,
    pub predicted: usize,
    /// Community from the true label.
    pub community: Community,
}

impl PrequentialRecord {
    pub fn correct(&self) -> bool {
        self.truth == self.predicted
    }

    /// Community the prediction places the instance in.
    pub fn predicted_community(&self, schema: &StreamSchema) -> Community {
        Community::new(self.community.group(), schema.is_granted(self.predicted))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub n: u64,
    pub accuracy: f64,
    /// Statistical parity of the predictions so far.
    pub discrimination: f64,
    pub node_count: usize,
}

/// Running accuracy and discrimination over predictions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricAccumulator {
    n: u64,
    correct: u64,
    predicted: FairnessCounts,
}

impl MetricAccumulator {
    pub fn add(&mut self, record: &PrequentialRecord, schema: &StreamSchema) {
        self.n += 1;
        self.correct += u64::from(record.correct());
        self.predicted.add(record.predicted_community(schema), 1.0);
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn accuracy(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.correct as f64 / self.n as f64
        }
    }

    pub fn discrimination(&self) -> f64 {
        statistical_parity(&self.predicted)
    }

    pub fn snapshot(&self, node_count: usize) -> MetricSnapshot {
        MetricSnapshot {
            n: self.n,
            accuracy: self.accuracy(),
            discrimination: self.discrimination(),
            node_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrequentialResult {
    pub snapshots: Vec<MetricSnapshot>,
    pub records: Vec<PrequentialRecord>,
}

impl PrequentialResult {
    /// Cumulative metrics over the whole run.
    pub fn landmark(&self) -> MetricSnapshot {
        *self
            .snapshots
            .last()
            .expect("a run always has a final snapshot")
    }
}

/// Predicts each instance, records the outcome, then trains on it.
/// A snapshot is taken every `snapshot_every` instances and once at the
/// end of the stream.
pub fn prequential_run<'a, L, I>(
    learner: &mut L,
    stream: I,
    schema: &StreamSchema,
    snapshot_every: usize,
) -> Result<PrequentialResult>
where
    L: StreamLearner + ?Sized,
    I: IntoIterator<Item = &'a Instance>,
{
    if snapshot_every == 0 {
        return Err(Error::Config("snapshot cadence must be at least 1".into()));
    }
    let mut acc = MetricAccumulator::default();
    let mut snapshots = Vec::new();
    let mut records = Vec::new();
    for (i, instance) in stream.into_iter().enumerate() {
        let community = schema.community_of(instance)?;
        let prediction = learner.predict(instance);
        let record = PrequentialRecord {
            index: i as u64,
            truth: instance.label.expect("community_of checked the label"),
            predicted: prediction.label,
            community,
        };
        acc.add(&record, schema);
        records.push(record);
        learner.train(instance)?;
        if (i + 1) % snapshot_every == 0 {
            snapshots.push(acc.snapshot(learner.node_count()));
        }
    }
    if snapshots.last().is_none_or(|s| s.n != acc.n()) {
        snapshots.push(acc.snapshot(learner.node_count()));
    }
    Ok(PrequentialResult { snapshots, records })
}

/// Accuracy and discrimination recomputed from a record log.
pub fn landmark_metrics(records: &[PrequentialRecord], schema: &StreamSchema) -> (f64, f64) {
    let mut predicted = FairnessCounts::default();
    for r in records {
        predicted.add(r.predicted_community(schema), 1.0);
    }
    let correct = records.iter().filter(|r| r.correct()).count();
    let accuracy = if records.is_empty() {
        0.0
    } else {
        correct as f64 / records.len() as f64
    };
    (accuracy, statistical_parity(&predicted))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetric {
    /// 1-based window number.
    pub window: usize,
    /// Stream position of the window's last instance plus one.
    pub end: u64,
    pub n: u64,
    pub accuracy: f64,
    pub discrimination: f64,
}

/// Accuracy and discrimination within consecutive tumbling windows.
pub fn window_metrics(
    records: &[PrequentialRecord],
    schema: &StreamSchema,
    window: usize,
) -> Vec<WindowMetric> {
    records
        .chunks(window.max(1))
        .enumerate()
        .map(|(i, chunk)| {
            let (accuracy, discrimination) = landmark_metrics(chunk, schema);
            WindowMetric {
                window: i + 1,
                end: chunk.last().map_or(0, |r| r.index + 1),
                n: chunk.len() as u64,
                accuracy,
                discrimination,
            }
        })
        .collect()
}

/// Writes `n,accuracy,discrimination,node_count` rows.
pub fn write_snapshots_csv<W: Write>(out: W, snapshots: &[MetricSnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvariantViolation(format!("csv write failed: {e}"));
    w.write_record(["n", "accuracy", "discrimination", "node_count"])
        .map_err(io)?;
    for s in snapshots {
        w.write_record([
            s.n.to_string(),
            s.accuracy.to_string(),
            s.discrimination.to_string(),
            s.node_count.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvariantViolation(format!("csv flush failed: {e}")))
}

/// Paired outcomes of two classifiers. Rows are classifier A, columns
/// classifier B.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct McNemarTable {
    pub both_granted: u64,
    pub a_granted_b_rejected: u64,
    pub a_rejected_b_granted: u64,
    pub both_rejected: u64,
}

impl McNemarTable {
    pub fn from_cells(a: u64, b: u64, c: u64, d: u64) -> Self {
        McNemarTable {
            both_granted: a,
            a_granted_b_rejected: b,
            a_rejected_b_granted: c,
            both_rejected: d,
        }
    }

    /// Tabulates paired predictions, optionally only within one group.
    pub fn from_records(
        a: &[PrequentialRecord],
        b: &[PrequentialRecord],
        group: Option<Group>,
        schema: &StreamSchema,
    ) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvariantViolation(format!(
                "paired runs differ in length: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        let mut t = McNemarTable::default();
        for (ra, rb) in a.iter().zip(b) {
            if ra.index != rb.index || ra.community != rb.community {
                return Err(Error::InvariantViolation(format!(
                    "paired runs disagree on instance {}",
                    ra.index
                )));
            }
            if group.is_some_and(|g| ra.community.group() != g) {
                continue;
            }
            match (
                schema.is_granted(ra.predicted),
                schema.is_granted(rb.predicted),
            ) {
                (true, true) => t.both_granted += 1,
                (true, false) => t.a_granted_b_rejected += 1,
                (false, true) => t.a_rejected_b_granted += 1,
                (false, false) => t.both_rejected += 1,
            }
        }
        Ok(t)
    }

    pub fn transposed(&self) -> Self {
        McNemarTable::from_cells(
            self.both_granted,
            self.a_rejected_b_granted,
            self.a_granted_b_rejected,
            self.both_rejected,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub chi_squared: f64,
    pub df: u32,
    pub p_value: f64,
}

impl McNemarResult {
    pub fn significant_at_001(&self) -> bool {
        self.chi_squared > CHI2_DF1_P001
    }
}

/// Continuity-corrected McNemar statistic `(|b - c| - 1)² / (b + c)`.
pub fn mcnemar(table: &McNemarTable) -> Result<McNemarResult> {
    let b = table.a_granted_b_rejected as f64;
    let c = table.a_rejected_b_granted as f64;
    if b + c == 0.0 {
        return Err(Error::UndefinedStatistic(
            "McNemar's test needs at least one discordant pair".into(),
        ));
    }
    let chi_squared = ((b - c).abs() - 1.0).powi(2) / (b + c);
    Ok(McNemarResult {
        chi_squared,
        df: 1,
        p_value: erfc((chi_squared / 2.0).sqrt()),
    })
}

/// Sample correlation over pairs where both values are present.
pub fn pearson(x: &[Option<f64>], y: &[Option<f64>]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvariantViolation(format!(
            "correlation inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .collect();
    if pairs.len() < 2 {
        return Err(Error::UndefinedStatistic(format!(
            "correlation needs two complete pairs, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedStatistic(
            "a correlated vector has zero variance".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Name the class column goes by in correlation tables.
pub const CLASS_COLUMN: &str = "class";

/// Numeric encoding of one column for correlation analysis.
///
/// * numeric attributes: their value;
/// * the sensitive attribute: 1 for the deprived value, 0 for the favored;
/// * the class (`"class"` or the class attribute's name): 1 for the positive
///   class, 0 otherwise;
/// * other nominal attributes: position in `order` if given, else in the
///   declared domain.
///
/// Missing values encode as `None`.
pub fn encode_column(
    schema: &StreamSchema,
    instances: &[Instance],
    column: &str,
    order: Option<&[String]>,
) -> Result<Vec<Option<f64>>> {
    if column == CLASS_COLUMN || column == schema.class_attribute().name {
        return Ok(instances
            .iter()
            .map(|x| x.label.map(|l| f64::from(u8::from(schema.is_granted(l)))))
            .collect());
    }
    let spec = schema
        .attribute(column)
        .ok_or_else(|| Error::SchemaViolation(format!("no attribute named `{column}`")))?;
    let a = spec.index;
    let missing = spec.missing_index();
    let rank: Vec<Option<f64>> = if a == schema.sensitive_index() {
        (0..spec.values().len())
            .map(|v| {
                if v == schema.deprived_value() {
                    Some(1.0)
                } else if v == schema.favored_value() {
                    Some(0.0)
                } else {
                    None
                }
            })
            .collect()
    } else if let Some(order) = order {
        spec.values()
            .iter()
            .map(|v| order.iter().position(|o| o == v).map(|p| p as f64))
            .collect()
    } else {
        (0..spec.values().len())
            .map(|v| (Some(v) != missing).then_some(v as f64))
            .collect()
    };
    Ok(instances
        .iter()
        .map(|x| match x.values[a] {
            Value::Numeric(v) => Some(v),
            Value::Nominal(v) => rank.get(v).copied().flatten(),
            Value::Missing => None,
        })
        .collect())
}

/// Pairwise correlations of the named columns; `None` where undefined.
pub fn correlation_matrix(
    schema: &StreamSchema,
    instances: &[Instance],
    columns: &[&str],
) -> Result<Vec<Vec<Option<f64>>>> {
    let encoded = columns
        .iter()
        .map(|c| encode_column(schema, instances, c, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(encoded
        .iter()
        .map(|a| encoded.iter().map(|b| pearson(a, b).ok()).collect())
        .collect())
}

/// Correlations between group membership, predicted and actual outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCorrelations {
    pub sensitive_predicted: Option<f64>,
    pub sensitive_actual: Option<f64>,
    pub predicted_actual: Option<f64>,
}

/// Deprived membership, predicted grant and actual grant are each encoded
/// as 0/1 indicators per instance.
pub fn boundary_correlations(
    records: &[PrequentialRecord],
    schema: &StreamSchema,
) -> BoundaryCorrelations {
    let indicator = |b: bool| Some(f64::from(u8::from(b)));
    let sensitive: Vec<_> = records
        .iter()
        .map(|r| indicator(r.community.group() == Group::Deprived))
        .collect();
    let predicted: Vec<_> = records
        .iter()
        .map(|r| indicator(schema.is_granted(r.predicted)))
        .collect();
    let actual: Vec<_> = records
        .iter()
        .map(|r| indicator(r.community.is_granted()))
        .collect();
    BoundaryCorrelations {
        sensitive_predicted: pearson(&sensitive, &predicted).ok(),
        sensitive_actual: pearson(&sensitive, &actual).ok(),
        predicted_actual: pearson(&predicted, &actual).ok(),
    }
}

/// `(new - old) / old × 100`; `None` when `old` is zero.
pub fn relative_change(old: f64, new: f64) -> Option<f64> {
    (old != 0.0).then(|| (new - old) / old * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    pub accuracy_delta: f64,
    pub accuracy_change_pct: Option<f64>,
    pub discrimination_a: f64,
    pub discrimination_b: f64,
    pub discrimination_delta: f64,
    pub discrimination_change_pct: Option<f64>,
}

/// Landmark metrics of two runs over the same stream, with B reported
/// relative to A.
pub fn compare_report(a: &PrequentialResult, b: &PrequentialResult) -> Result<ComparisonReport> {
    if a.records.len() != b.records.len() {
        return Err(Error::InvariantViolation(format!(
            "runs cover different stream lengths: {} vs {}",
            a.records.len(),
            b.records.len()
        )));
    }
    let (la, lb) = (a.landmark(), b.landmark());
    Ok(ComparisonReport {
        accuracy_a: la.accuracy,
        accuracy_b: lb.accuracy,
        accuracy_delta: lb.accuracy - la.accuracy,
        accuracy_change_pct: relative_change(la.accuracy, lb.accuracy),
        discrimination_a: la.discrimination,
        discrimination_b: lb.discrimination,
        discrimination_delta: lb.discrimination - la.discrimination,
        discrimination_change_pct: relative_change(la.discrimination, lb.discrimination),
    })
}
