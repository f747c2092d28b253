#![allow(dead_code)]

use std::path::PathBuf;

use faht::data::rng::stream_rng;
use faht::metrics::{
    fairness_gain, information_gain, Branch, ClassDistribution, FairnessCounts, PartitionStats,
};
use faht::stats::{batch_equivalence_oracle, AttributeStats, LeafStats, NominalAttributeStats};
use faht::{load, AttributeSpec, Dataset, DatasetConfig, Instance, StreamSchema, Value};
use rand::Rng;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// `FAHT_DATA_DIR`, or `data/` at the workspace root.
pub fn data_dir() -> PathBuf {
    std::env::var_os("FAHT_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data"))
}

/// Loads a shipped dataset config with its source redirected to the data
/// directory. `None` when the data file is absent.
pub fn shipped(name: &str) -> Option<Dataset> {
    let mut config =
        DatasetConfig::from_file(workspace_root().join(format!("configs/{name}.conf"))).unwrap();
    config.source = data_dir().join(format!("{name}.csv"));
    if !config.source.exists() {
        return None;
    }
    Some(load(&config).unwrap())
}

/// A random schema of nominal attributes (the first one sensitive, some
/// with a `?` slot) plus one numeric attribute, and a labeled stream of
/// up to `max_len` instances over it.
pub fn random_stream(seed: u64, max_len: usize) -> (StreamSchema, Vec<Instance>) {
    let mut rng = stream_rng(seed);
    let nominal = rng.random_range(1..=5);
    let mut attrs = vec![AttributeSpec::nominal("group", ["d", "f"])];
    for a in 0..nominal {
        let size = rng.random_range(2..=6);
        let mut values: Vec<String> = (0..size).map(|v| format!("v{v}")).collect();
        if rng.random_bool(0.3) {
            values.push("?".into());
        }
        attrs.push(AttributeSpec::nominal(format!("a{a}"), values));
    }
    attrs.push(AttributeSpec::numeric("x"));
    let schema = StreamSchema::new(
        attrs,
        AttributeSpec::nominal("y", ["no", "yes"]),
        "group",
        "d",
        "yes",
    )
    .unwrap();
    let len = rng.random_range(0..=max_len);
    let instances = (0..len)
        .map(|_| {
            let values = schema
                .attributes()
                .iter()
                .map(|a| {
                    if a.is_numeric() {
                        Value::Numeric(rng.random_range(-5.0..5.0))
                    } else if a.index > 0 && rng.random_bool(0.05) {
                        Value::Missing
                    } else {
                        let proper = a.proper_values().count();
                        Value::Nominal(rng.random_range(0..proper))
                    }
                })
                .collect();
            Instance::new(values, Some(usize::from(rng.random_bool(0.4))))
        })
        .collect();
    (schema, instances)
}

/// Parent totals of a partition: instances with a skipped (missing) value
/// take no part in the split.
fn parents(p: &PartitionStats) -> (ClassDistribution, FairnessCounts) {
    let mut classes = ClassDistribution::new(p.branches[0].classes.counts().len());
    let mut fairness = FairnessCounts::default();
    for b in &p.branches {
        for (k, &c) in b.classes.counts().iter().enumerate() {
            classes.add(k, c);
        }
        fairness = FairnessCounts::new(
            fairness.dr + b.fairness.dr,
            fairness.dg + b.fairness.dg,
            fairness.fr + b.fairness.fr,
            fairness.fg + b.fairness.fg,
        );
    }
    (classes, fairness)
}

fn partition(stats: &NominalAttributeStats) -> PartitionStats {
    PartitionStats::new(
        stats
            .observed_values()
            .into_iter()
            .map(|v| Branch {
                classes: stats.classes[v].clone(),
                fairness: stats.fairness[v],
            })
            .collect(),
    )
}

/// Folds `observe` over the stream and compares every nominal statistic
/// with the batch oracle, then the gains computed from either path.
pub fn incremental_matches_batch(
    schema: &StreamSchema,
    instances: &[Instance],
) -> Result<(), String> {
    let mut leaf = LeafStats::new(schema);
    for x in instances {
        leaf.observe(x, schema).map_err(|e| e.to_string())?;
    }
    let batch = batch_equivalence_oracle(instances, schema).map_err(|e| e.to_string())?;
    if leaf.classes != batch.classes || leaf.fairness != batch.fairness {
        return Err("leaf totals differ".into());
    }
    for (a, (inc, bat)) in leaf.attributes.iter().zip(&batch.nominal).enumerate() {
        let (AttributeStats::Nominal(inc), Some(bat)) = (inc, bat) else {
            continue;
        };
        if inc != bat {
            return Err(format!(
                "attribute {a}: folded counts differ from batch counts"
            ));
        }
        let (pi, pb) = (partition(inc), partition(bat));
        if pi.branches.is_empty() {
            continue;
        }
        let ig =
            |p: &PartitionStats, parent| information_gain(parent, p).map_err(|e| e.to_string());
        let fg = |p: &PartitionStats, parent| fairness_gain(parent, p).map_err(|e| e.to_string());
        let ((ci, fi), (cb, fb)) = (parents(&pi), parents(&pb));
        let dig = (ig(&pi, &ci)? - ig(&pb, &cb)?).abs();
        let dfg = (fg(&pi, &fi)? - fg(&pb, &fb)?).abs();
        if dig > 1e-12 || dfg > 1e-12 {
            return Err(format!("attribute {a}: gains differ by {dig:e} / {dfg:e}"));
        }
    }
    Ok(())
}
