//! Dataset ingestion and synthetic streams.
//!
//! A dataset is described by a small key-value file:
//!
//! ```text
//! # lines starting with '#' are comments
//! source    = ../data/adult.csv      # relative to the config file
//! format    = csv                    # csv | arff; default from the extension
//! class     = income
//! sensitive = sex
//! deprived  = Female
//! positive  = >50K
//! numeric   = age, fnlwgt, hours-per-week
//! schema    = infer                  # infer | declared
//! domain.sex = Female, Male          # optional declared nominal domain
//! shuffle_seed = 7                   # optional; file order when absent
//! ```
//!
//! Keys are split from values at the first `=`, so values may contain `=`.
//! List values are comma separated and trimmed. In CSV files every column
//! not listed under `numeric` is nominal. Undeclared nominal domains are
//! inferred as the sorted set of observed values; with `schema = declared`
//! every nominal column needs a `domain.` entry. ARFF files carry their
//! own attribute types. A value outside a declared domain is a schema
//! error. The missing marker `?` never counts as a domain violation: when
//! it occurs it is appended to the domain as the reserved symbol.

mod arff;
mod csv_io;
pub mod rng;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{statistical_parity, FairnessCounts};
use crate::schema::{AttributeKind, AttributeSpec, Instance, StreamSchema, Value, MISSING};

pub use csv_io::write_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Arff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub source: PathBuf,
    pub format: DataFormat,
    pub class_attribute: String,
    pub sensitive_attribute: String,
    pub deprived_value: String,
    pub positive_class: String,
    pub numeric: Vec<String>,
    /// Require a declared domain for every nominal CSV column.
    pub declared_schema: bool,
    pub domains: BTreeMap<String, Vec<String>>,
    pub shuffle_seed: Option<u64>,
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl DatasetConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::parse(path, line, message),
            other => other,
        })
    }

    /// Parses config text; `source` is resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let at = |line: usize, msg: String| Error::parse("<config>", line as u64, msg);
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut domains = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw
                .find(" #")
                .or_else(|| raw.trim_start().starts_with('#').then_some(0))
            {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(line_no, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(attr) = key.strip_prefix("domain.") {
                let values = list(value);
                if values.is_empty() {
                    return Err(at(line_no, format!("empty domain for `{attr}`")));
                }
                domains.insert(attr.to_string(), values);
                continue;
            }
            const KEYS: [&str; 9] = [
                "source",
                "format",
                "class",
                "sensitive",
                "deprived",
                "positive",
                "numeric",
                "schema",
                "shuffle_seed",
            ];
            if !KEYS.contains(&key) {
                return Err(at(line_no, format!("unknown key `{key}`")));
            }
            if entries
                .insert(key.to_string(), (line_no, value.to_string()))
                .is_some()
            {
                return Err(at(line_no, format!("key `{key}` given twice")));
            }
        }
        let required = |key: &str| -> Result<String> {
            entries
                .get(key)
                .map(|(_, v)| v.clone())
                .filter(|v| !v.is_empty())
                .ok_or_else(|| Error::Config(format!("dataset config is missing `{key}`")))
        };
        let source = base_dir.join(required("source")?);
        let format = match entries.get("format") {
            Some((line, f)) => match f.to_ascii_lowercase().as_str() {
                "csv" => DataFormat::Csv,
                "arff" => DataFormat::Arff,
                other => return Err(at(*line, format!("unknown format `{other}`"))),
            },
            None => match source.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("arff") => DataFormat::Arff,
                _ => DataFormat::Csv,
            },
        };
        let declared_schema = match entries.get("schema") {
            None => false,
            Some((_, v)) if v == "infer" => false,
            Some((_, v)) if v == "declared" => true,
            Some((line, v)) => {
                return Err(at(
                    *line,
                    format!("schema must be `infer` or `declared`, got `{v}`"),
                ))
            }
        };
        let shuffle_seed = match entries.get("shuffle_seed") {
            None => None,
            Some((line, v)) => Some(v.parse::<u64>().map_err(|_| {
                at(
                    *line,
                    format!("shuffle_seed must be a non-negative integer, got `{v}`"),
                )
            })?),
        };
        Ok(DatasetConfig {
            source,
            format,
            class_attribute: required("class")?,
            sensitive_attribute: required("sensitive")?,
            deprived_value: required("deprived")?,
            positive_class: required("positive")?,
            numeric: entries
                .get("numeric")
                .map(|(_, v)| list(v))
                .unwrap_or_default(),
            declared_schema,
            domains,
            shuffle_seed,
        })
    }

    /// A config that reads a CSV written by [`write_csv`] back into exactly
    /// the same schema.
    pub fn for_schema(schema: &StreamSchema, source: impl Into<PathBuf>) -> Self {
        let mut domains = BTreeMap::new();
        let mut numeric = Vec::new();
        for a in schema.attributes().iter().chain([schema.class_attribute()]) {
            match &a.kind {
                AttributeKind::Numeric => numeric.push(a.name.clone()),
                AttributeKind::Nominal(values) => {
                    domains.insert(a.name.clone(), values.clone());
                }
            }
        }
        let sa = schema.sensitive_attribute();
        DatasetConfig {
            source: source.into(),
            format: DataFormat::Csv,
            class_attribute: schema.class_attribute().name.clone(),
            sensitive_attribute: sa.name.clone(),
            deprived_value: sa.values()[schema.deprived_value()].clone(),
            positive_class: schema.class_attribute().values()[schema.positive_class()].clone(),
            numeric,
            declared_schema: true,
            domains,
            shuffle_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: StreamSchema,
    pub instances: Vec<Instance>,
    /// Statistical parity of the class labels.
    pub discrimination: f64,
}

impl Dataset {
    pub fn new(schema: StreamSchema, instances: Vec<Instance>) -> Result<Self> {
        let discrimination = label_discrimination(&schema, &instances)?;
        Ok(Dataset {
            schema,
            instances,
            discrimination,
        })
    }

    /// The same instances in Fisher–Yates order under `seed`.
    pub fn shuffled(&self, seed: u64) -> Dataset {
        let mut instances = self.instances.clone();
        rng::shuffle(&mut instances, seed);
        Dataset {
            schema: self.schema.clone(),
            instances,
            discrimination: self.discrimination,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Emits every instance twice in a row, once with the sensitive attribute
/// set to the deprived value and once to the favored one, leaving all
/// other values and the label unchanged. Each community pair is then
/// balanced, so every partition that ignores the sensitive attribute has
/// zero discrimination and splitting on it gains no information.
pub fn mirror_sensitive(dataset: &Dataset) -> Result<Dataset> {
    let schema = &dataset.schema;
    let sa = schema.sensitive_index();
    let mut instances = Vec::with_capacity(2 * dataset.len());
    for x in &dataset.instances {
        for v in [schema.deprived_value(), schema.favored_value()] {
            let mut twin = x.clone();
            twin.values[sa] = Value::Nominal(v);
            instances.push(twin);
        }
    }
    Dataset::new(schema.clone(), instances)
}

/// Community counts of the labeled instances.
pub fn label_counts(schema: &StreamSchema, instances: &[Instance]) -> Result<FairnessCounts> {
    let mut counts = FairnessCounts::default();
    for x in instances {
        counts.add(schema.community_of(x)?, 1.0);
    }
    Ok(counts)
}

pub fn label_discrimination(schema: &StreamSchema, instances: &[Instance]) -> Result<f64> {
    Ok(statistical_parity(&label_counts(schema, instances)?))
}

/// Raw text table before typing.
struct RawTable {
    path: PathBuf,
    header: Vec<String>,
    /// Attribute kinds declared by the file itself (ARFF).
    declared: Option<Vec<AttributeKind>>,
    /// (1-based file line, trimmed fields)
    rows: Vec<(u64, Vec<String>)>,
}

/// Reads, types and (optionally) shuffles the configured dataset.
pub fn load(config: &DatasetConfig) -> Result<Dataset> {
    let raw = match config.format {
        DataFormat::Csv => csv_io::read_raw(&config.source)?,
        DataFormat::Arff => arff::read_raw(&config.source)?,
    };
    let dataset = build(raw, config)?;
    Ok(match config.shuffle_seed {
        Some(seed) => dataset.shuffled(seed),
        None => dataset,
    })
}

fn build(raw: RawTable, config: &DatasetConfig) -> Result<Dataset> {
    let column = |name: &str| -> Result<usize> {
        raw.header.iter().position(|h| h == name).ok_or_else(|| {
            Error::SchemaViolation(format!(
                "no column named `{name}` in {}",
                raw.path.display()
            ))
        })
    };
    for (i, h) in raw.header.iter().enumerate() {
        if raw.header[..i].contains(h) {
            return Err(Error::SchemaViolation(format!(
                "column `{h}` appears twice"
            )));
        }
    }
    let class_col = column(&config.class_attribute)?;
    column(&config.sensitive_attribute)?;
    for name in config.numeric.iter().chain(config.domains.keys()) {
        column(name)?;
    }
    if config.numeric.contains(&config.class_attribute)
        || config.numeric.contains(&config.sensitive_attribute)
    {
        return Err(Error::SchemaViolation(
            "class and sensitive attributes must be nominal".into(),
        ));
    }

    let mut specs = Vec::with_capacity(raw.header.len());
    for (c, name) in raw.header.iter().enumerate() {
        let file_kind = raw.declared.as_ref().map(|d| &d[c]);
        let spec = match file_kind {
            Some(AttributeKind::Numeric) => AttributeSpec::numeric(name.clone()),
            None if config.numeric.contains(name) => AttributeSpec::numeric(name.clone()),
            _ => {
                let declared = config
                    .domains
                    .get(name)
                    .cloned()
                    .or_else(|| match file_kind {
                        Some(AttributeKind::Nominal(values)) => Some(values.clone()),
                        _ => None,
                    });
                let domain = match declared {
                    Some(values) => {
                        let mut values = values;
                        let mut missing_seen = false;
                        for (line, row) in &raw.rows {
                            let v = &row[c];
                            if v == MISSING {
                                missing_seen = true;
                            } else if !values.contains(v) {
                                return Err(Error::SchemaViolation(format!(
                                    "{}:{line}: value `{v}` is not in the declared domain of `{name}`",
                                    raw.path.display()
                                )));
                            }
                        }
                        if missing_seen && !values.iter().any(|v| v == MISSING) {
                            values.push(MISSING.to_string());
                        }
                        values
                    }
                    None if config.declared_schema => {
                        return Err(Error::SchemaViolation(format!(
                            "schema is declared but nominal column `{name}` has no domain"
                        )))
                    }
                    None => {
                        let observed: BTreeSet<&str> =
                            raw.rows.iter().map(|(_, r)| r[c].as_str()).collect();
                        let mut values: Vec<String> = observed
                            .iter()
                            .filter(|v| **v != MISSING)
                            .map(|v| v.to_string())
                            .collect();
                        if observed.contains(MISSING) {
                            values.push(MISSING.to_string());
                        }
                        values
                    }
                };
                if domain.is_empty() {
                    return Err(Error::SchemaViolation(format!(
                        "column `{name}` has no values"
                    )));
                }
                AttributeSpec::nominal(name.clone(), domain)
            }
        };
        specs.push(spec);
    }

    let class_spec = specs.remove(class_col);
    if class_spec.missing_index().is_some() {
        let line = raw
            .rows
            .iter()
            .find(|(_, r)| r[class_col] == MISSING)
            .map_or(0, |(l, _)| *l);
        return Err(Error::parse(
            &raw.path,
            line,
            format!("missing class label in `{}`", class_spec.name),
        ));
    }
    let schema = StreamSchema::new(
        specs,
        class_spec,
        &config.sensitive_attribute,
        &config.deprived_value,
        &config.positive_class,
    )?;

    let mut instances = Vec::with_capacity(raw.rows.len());
    for (line, row) in &raw.rows {
        let mut values = Vec::with_capacity(row.len() - 1);
        let mut label = None;
        for (c, field) in row.iter().enumerate() {
            if c == class_col {
                label = schema.class_attribute().value_index(field);
                continue;
            }
            let spec = &schema.attributes()[if c < class_col { c } else { c - 1 }];
            let value = match &spec.kind {
                AttributeKind::Numeric if field == MISSING => Value::Missing,
                AttributeKind::Numeric => Value::Numeric(field.parse::<f64>().map_err(|_| {
                    Error::parse(
                        &raw.path,
                        *line,
                        format!("`{field}` is not a number in column `{}`", spec.name),
                    )
                })?),
                AttributeKind::Nominal(_) => Value::Nominal(
                    spec.value_index(field)
                        .expect("domains were built from or checked against every row"),
                ),
            };
            values.push(value);
        }
        instances.push(Instance::new(values, label));
    }
    Dataset::new(schema, instances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    const CONF: &str = "\
# test dataset
source = people.csv
class = income
sensitive = sex   # gender
deprived = F
positive = >50K
numeric = age
";

    const CSV: &str = "\
age,sex,job,income
30,F,clerk,<=50K
41,M,?,>50K
29, F ,exec,>50K
?,M,clerk,<=50K
";

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p)
            .unwrap()
            .write_all(text.as_bytes())
            .unwrap();
        p
    }

    fn tmpdir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("faht-data-{tag}-{}", std::process::id()));
        fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn config_grammar() {
        let c = DatasetConfig::parse(CONF, Path::new("/x/y")).unwrap();
        assert_eq!(c.source, PathBuf::from("/x/y/people.csv"));
        assert_eq!(c.format, DataFormat::Csv);
        assert_eq!(c.sensitive_attribute, "sex");
        assert_eq!(c.positive_class, ">50K");
        assert_eq!(c.numeric, vec!["age"]);
        assert_eq!(c.shuffle_seed, None);
        let c = DatasetConfig::parse(
            &format!("{CONF}domain.income = <=50K, >50K\nshuffle_seed = 3\nsource2 = x"),
            Path::new(""),
        );
        assert!(matches!(c, Err(Error::Parse { line: 10, .. })));
        let c = DatasetConfig::parse(
            &format!("{CONF}domain.income = <=50K, >50K\nshuffle_seed = 3"),
            Path::new(""),
        )
        .unwrap();
        assert_eq!(c.domains["income"], vec!["<=50K", ">50K"]);
        assert_eq!(c.shuffle_seed, Some(3));
        assert!(matches!(
            DatasetConfig::parse("class = a", Path::new("")),
            Err(Error::Config(_))
        ));
        assert!(DatasetConfig::parse(&format!("{CONF}shuffle_seed = -1"), Path::new("")).is_err());
    }

    #[test]
    fn csv_load_types_values() {
        let dir = tmpdir("load");
        write(&dir, "people.csv", CSV);
        let conf = write(&dir, "people.conf", CONF);
        let d = load(&DatasetConfig::from_file(conf).unwrap()).unwrap();
        let s = &d.schema;
        assert_eq!(s.attributes().len(), 3);
        assert_eq!(s.attribute("job").unwrap().values(), ["clerk", "exec", "?"]);
        assert_eq!(s.class_attribute().values(), ["<=50K", ">50K"]);
        assert_eq!(d.instances[0].values[0], Value::Numeric(30.0));
        assert_eq!(d.instances[3].values[0], Value::Missing);
        assert_eq!(d.instances[1].values[2], Value::Nominal(2));
        assert_eq!(d.instances[2].values[1], Value::Nominal(0));
        assert_eq!(d.instances[1].label, Some(1));
        // Granted: F 1/2, M 1/2.
        assert_eq!(d.discrimination, 0.0);
        assert_eq!(
            d.discrimination,
            label_discrimination(s, &d.instances).unwrap()
        );
    }

    #[test]
    fn declared_domains_reject_unknown_values() {
        let dir = tmpdir("declared");
        write(&dir, "people.csv", CSV);
        let c = DatasetConfig::parse(&format!("{CONF}domain.job = clerk"), &dir).unwrap();
        let err = load(&c).unwrap_err();
        assert!(
            matches!(err, Error::SchemaViolation(ref m) if m.contains("exec")),
            "{err}"
        );
        let c = DatasetConfig::parse(&format!("{CONF}schema = declared"), &dir).unwrap();
        assert!(matches!(load(&c), Err(Error::SchemaViolation(_))));
        let c =
            DatasetConfig::parse(&format!("{CONF}domain.job = exec, clerk, pilot"), &dir).unwrap();
        let d = load(&c).unwrap();
        assert_eq!(
            d.schema.attribute("job").unwrap().values(),
            ["exec", "clerk", "pilot", "?"]
        );
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let dir = tmpdir("malformed");
        write(&dir, "people.csv", "age,sex,income\n30,F,a\nold,M,b\n");
        let c = DatasetConfig::parse("source = people.csv\nclass = income\nsensitive = sex\ndeprived = F\npositive = b\nnumeric = age", &dir).unwrap();
        assert!(matches!(load(&c), Err(Error::Parse { line: 3, .. })));
        write(&dir, "people.csv", "age,sex,income\n30,F,a\n31,M\n");
        assert!(matches!(load(&c), Err(Error::Parse { line: 3, .. })));
        write(&dir, "people.csv", "age,sex,income\n30,F,a\n31,M,?\n");
        assert!(matches!(load(&c), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_file_is_an_io_error_naming_the_path() {
        let c = DatasetConfig::parse(CONF, Path::new("/nonexistent-dir")).unwrap();
        let err = load(&c).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/people.csv"));
    }

    #[test]
    fn mirroring_balances_every_community() {
        let dir = tmpdir("mirror");
        write(&dir, "people.csv", CSV);
        let d = load(&DatasetConfig::parse(CONF, &dir).unwrap()).unwrap();
        let m = mirror_sensitive(&d).unwrap();
        assert_eq!(m.len(), 8);
        assert_eq!(m.discrimination, 0.0);
        let c = label_counts(&m.schema, &m.instances).unwrap();
        assert_eq!((c.dr, c.dg), (c.fr, c.fg));
        let sa = m.schema.sensitive_index();
        for (pair, x) in m.instances.chunks(2).zip(&d.instances) {
            for twin in pair {
                assert_eq!(twin.label, x.label);
                for (a, (u, v)) in twin.values.iter().zip(&x.values).enumerate() {
                    assert!(a == sa || u == v);
                }
            }
            assert_ne!(pair[0].values[sa], pair[1].values[sa]);
        }
    }

    #[test]
    fn shuffle_seed_permutes_deterministically() {
        let dir = tmpdir("shuffle");
        let mut text = String::from("x,sex,y\n");
        for i in 0..50 {
            text.push_str(&format!(
                "{i},{},{}\n",
                ["F", "M"][i % 2],
                ["n", "p"][i % 3 % 2]
            ));
        }
        write(&dir, "s.csv", &text);
        let conf = "source = s.csv\nclass = y\nsensitive = sex\ndeprived = F\npositive = p\nnumeric = x\nshuffle_seed = 9";
        let c = DatasetConfig::parse(conf, &dir).unwrap();
        let a = load(&c).unwrap();
        let b = load(&c).unwrap();
        assert_eq!(a, b);
        let plain = load(&DatasetConfig {
            shuffle_seed: None,
            ..c
        })
        .unwrap();
        assert_ne!(a.instances, plain.instances);
        assert_eq!(a.discrimination, plain.discrimination);
        assert_eq!(plain.shuffled(9), a);
    }
}
