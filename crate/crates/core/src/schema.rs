//! Stream schema, instances and the four fairness communities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved nominal symbol for a missing value.
pub const MISSING: &str = "?";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Nominal(Vec<String>),
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub index: usize,
}

impl AttributeSpec {
    pub fn nominal<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Nominal(values.into_iter().map(Into::into).collect()),
            index: 0,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric,
            index: 0,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric)
    }

    /// Domain of a nominal attribute; empty for numeric ones.
    pub fn values(&self) -> &[String] {
        match &self.kind {
            AttributeKind::Nominal(values) => values,
            AttributeKind::Numeric => &[],
        }
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values().iter().position(|v| v == value)
    }

    /// Index of the reserved missing symbol, if the domain carries it.
    pub fn missing_index(&self) -> Option<usize> {
        self.value_index(MISSING)
    }

    /// Domain values other than the reserved missing symbol.
    pub fn proper_values(&self) -> impl Iterator<Item = (usize, &str)> {
        self.values()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.as_str() != MISSING)
            .map(|(i, v)| (i, v.as_str()))
    }

    fn validate(&self) -> Result<()> {
        if let AttributeKind::Nominal(values) = &self.kind {
            if values.is_empty() {
                return Err(Error::SchemaViolation(format!(
                    "nominal attribute `{}` has an empty domain",
                    self.name
                )));
            }
            for (i, v) in values.iter().enumerate() {
                if values[..i].contains(v) {
                    return Err(Error::SchemaViolation(format!(
                        "nominal attribute `{}` lists `{v}` twice",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A single attribute value. Nominal values are indices into the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Nominal(usize),
    Numeric(f64),
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub values: Vec<Value>,
    /// Class index into the class attribute's domain.
    pub label: Option<usize>,
}

impl Instance {
    pub fn new(values: Vec<Value>, label: Option<usize>) -> Self {
        Instance { values, label }
    }

    pub fn validate(&self, schema: &StreamSchema) -> Result<()> {
        if self.values.len() != schema.attributes().len() {
            return Err(Error::SchemaViolation(format!(
                "instance has {} values, schema declares {} attributes",
                self.values.len(),
                schema.attributes().len()
            )));
        }
        for (value, spec) in self.values.iter().zip(schema.attributes()) {
            match (value, &spec.kind) {
                (Value::Missing, _) => {}
                (Value::Nominal(i), AttributeKind::Nominal(domain)) if *i < domain.len() => {}
                (Value::Numeric(_), AttributeKind::Numeric) => {}
                _ => {
                    return Err(Error::SchemaViolation(format!(
                        "value {value:?} does not fit attribute `{}`",
                        spec.name
                    )))
                }
            }
        }
        if let Some(label) = self.label {
            if label >= schema.class_attribute().values().len() {
                return Err(Error::SchemaViolation(format!(
                    "class index {label} out of range"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Deprived,
    Favored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Community {
    DeprivedRejected,
    DeprivedGranted,
    FavoredRejected,
    FavoredGranted,
}

impl Community {
    pub const ALL: [Community; 4] = [
        Community::DeprivedRejected,
        Community::DeprivedGranted,
        Community::FavoredRejected,
        Community::FavoredGranted,
    ];

    pub fn new(group: Group, granted: bool) -> Self {
        match (group, granted) {
            (Group::Deprived, false) => Community::DeprivedRejected,
            (Group::Deprived, true) => Community::DeprivedGranted,
            (Group::Favored, false) => Community::FavoredRejected,
            (Group::Favored, true) => Community::FavoredGranted,
        }
    }

    /// Position in `ALL`; used to index per-community arrays.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> Group {
        match self {
            Community::DeprivedRejected | Community::DeprivedGranted => Group::Deprived,
            Community::FavoredRejected | Community::FavoredGranted => Group::Favored,
        }
    }

    pub fn is_granted(self) -> bool {
        matches!(self, Community::DeprivedGranted | Community::FavoredGranted)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Community::DeprivedRejected => "DR",
            Community::DeprivedGranted => "DG",
            Community::FavoredRejected => "FR",
            Community::FavoredGranted => "FG",
        }
    }
}

/// Predictor attributes plus a binary class and a binary sensitive attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDef", into = "SchemaDef")]
pub struct StreamSchema {
    attributes: Vec<AttributeSpec>,
    class_attribute: AttributeSpec,
    sensitive: usize,
    deprived_value: usize,
    favored_value: usize,
    positive_class: usize,
}

/// Name-based external form of a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDef {
    pub attributes: Vec<AttributeSpec>,
    pub class_attribute: AttributeSpec,
    pub sensitive_attribute: String,
    pub deprived_value: String,
    pub positive_class: String,
}

impl StreamSchema {
    pub fn new(
        mut attributes: Vec<AttributeSpec>,
        class_attribute: AttributeSpec,
        sensitive_attribute: &str,
        deprived_value: &str,
        positive_class: &str,
    ) -> Result<Self> {
        for (i, a) in attributes.iter_mut().enumerate() {
            a.index = i;
            a.validate()?;
        }
        for (i, a) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::SchemaViolation(format!(
                    "attribute `{}` declared twice",
                    a.name
                )));
            }
        }
        let mut class_attribute = class_attribute;
        class_attribute.index = attributes.len();
        class_attribute.validate()?;
        if class_attribute.is_numeric() || class_attribute.values().len() != 2 {
            return Err(Error::SchemaViolation(format!(
                "class attribute `{}` must be nominal with exactly two values",
                class_attribute.name
            )));
        }
        let positive_class = class_attribute.value_index(positive_class).ok_or_else(|| {
            Error::SchemaViolation(format!(
                "positive class `{positive_class}` is not a value of `{}`",
                class_attribute.name
            ))
        })?;

        let sensitive = attributes
            .iter()
            .position(|a| a.name == sensitive_attribute)
            .ok_or_else(|| {
                Error::SchemaViolation(format!(
                    "sensitive attribute `{sensitive_attribute}` is not in the schema"
                ))
            })?;
        let sa = &attributes[sensitive];
        let proper: Vec<(usize, &str)> = sa.proper_values().collect();
        if sa.is_numeric() || proper.len() != 2 {
            return Err(Error::SchemaViolation(format!(
                "sensitive attribute `{}` must be nominal and binary",
                sa.name
            )));
        }
        let (deprived_value, favored_value) =
            match proper.iter().position(|(_, v)| *v == deprived_value) {
                Some(0) => (proper[0].0, proper[1].0),
                Some(_) => (proper[1].0, proper[0].0),
                None => {
                    return Err(Error::SchemaViolation(format!(
                        "deprived value `{deprived_value}` is not a value of `{}`",
                        sa.name
                    )))
                }
            };

        Ok(StreamSchema {
            attributes,
            class_attribute,
            sensitive,
            deprived_value,
            favored_value,
            positive_class,
        })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn class_attribute(&self) -> &AttributeSpec {
        &self.class_attribute
    }

    pub fn num_classes(&self) -> usize {
        self.class_attribute.values().len()
    }

    pub fn sensitive_index(&self) -> usize {
        self.sensitive
    }

    pub fn sensitive_attribute(&self) -> &AttributeSpec {
        &self.attributes[self.sensitive]
    }

    pub fn deprived_value(&self) -> usize {
        self.deprived_value
    }

    pub fn favored_value(&self) -> usize {
        self.favored_value
    }

    pub fn positive_class(&self) -> usize {
        self.positive_class
    }

    pub fn negative_class(&self) -> usize {
        1 - self.positive_class
    }

    pub fn is_granted(&self, label: usize) -> bool {
        label == self.positive_class
    }

    /// Group membership from the sensitive value.
    pub fn group_of(&self, instance: &Instance) -> Result<Group> {
        match instance.values.get(self.sensitive) {
            Some(Value::Nominal(v)) if *v == self.deprived_value => Ok(Group::Deprived),
            Some(Value::Nominal(v)) if *v == self.favored_value => Ok(Group::Favored),
            _ => Err(Error::ClassificationImpossible(
                "sensitive value is missing",
            )),
        }
    }

    /// The community of a labeled instance.
    pub fn community_of(&self, instance: &Instance) -> Result<Community> {
        let label = instance
            .label
            .ok_or(Error::ClassificationImpossible("instance has no label"))?;
        let group = self.group_of(instance)?;
        Ok(Community::new(group, self.is_granted(label)))
    }

    pub fn to_def(&self) -> SchemaDef {
        self.clone().into()
    }
}

impl From<StreamSchema> for SchemaDef {
    fn from(schema: StreamSchema) -> Self {
        let sa = &schema.attributes[schema.sensitive];
        SchemaDef {
            sensitive_attribute: sa.name.clone(),
            deprived_value: sa.values()[schema.deprived_value].clone(),
            positive_class: schema.class_attribute.values()[schema.positive_class].clone(),
            attributes: schema.attributes,
            class_attribute: schema.class_attribute,
        }
    }
}

impl TryFrom<SchemaDef> for StreamSchema {
    type Error = Error;

    fn try_from(def: SchemaDef) -> Result<Self> {
        StreamSchema::new(
            def.attributes,
            def.class_attribute,
            &def.sensitive_attribute,
            &def.deprived_value,
            &def.positive_class,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_schema() -> StreamSchema {
        StreamSchema::new(
            vec![
                AttributeSpec::nominal("sex", ["female", "male"]),
                AttributeSpec::numeric("age"),
                AttributeSpec::nominal("job", ["a", "b", "c", MISSING]),
            ],
            AttributeSpec::nominal("class", ["rejected", "granted"]),
            "sex",
            "female",
            "granted",
        )
        .unwrap()
    }

    fn person(sex: usize, label: Option<usize>) -> Instance {
        Instance::new(
            vec![Value::Nominal(sex), Value::Numeric(30.0), Value::Nominal(0)],
            label,
        )
    }

    #[test]
    fn communities_follow_sensitive_value_and_label() {
        let s = toy_schema();
        assert_eq!(
            s.community_of(&person(0, Some(0))).unwrap(),
            Community::DeprivedRejected
        );
        assert_eq!(
            s.community_of(&person(1, Some(1))).unwrap(),
            Community::FavoredGranted
        );
        assert_eq!(
            s.community_of(&person(1, Some(0))).unwrap(),
            Community::FavoredRejected
        );
        assert_eq!(
            s.community_of(&person(0, Some(1))).unwrap(),
            Community::DeprivedGranted
        );
    }

    #[test]
    fn community_requires_label_and_sensitive_value() {
        let s = toy_schema();
        assert!(matches!(
            s.community_of(&person(0, None)),
            Err(Error::ClassificationImpossible(_))
        ));
        let mut x = person(0, Some(1));
        x.values[0] = Value::Missing;
        assert!(matches!(
            s.community_of(&x),
            Err(Error::ClassificationImpossible(_))
        ));
    }

    #[test]
    fn sensitive_attribute_may_carry_missing_symbol() {
        let s = StreamSchema::new(
            vec![AttributeSpec::nominal("sex", ["m", MISSING, "f"])],
            AttributeSpec::nominal("y", ["n", "p"]),
            "sex",
            "f",
            "p",
        )
        .unwrap();
        assert_eq!(s.deprived_value(), 2);
        assert_eq!(s.favored_value(), 0);
        let x = Instance::new(vec![Value::Nominal(1)], Some(1));
        assert!(s.community_of(&x).is_err());
    }

    #[test]
    fn rejects_non_binary_or_unknown_declarations() {
        let class = AttributeSpec::nominal("y", ["n", "p"]);
        let three = AttributeSpec::nominal("sa", ["x", "y", "z"]);
        assert!(StreamSchema::new(vec![three], class.clone(), "sa", "x", "p").is_err());
        let sa = AttributeSpec::nominal("sa", ["x", "y"]);
        assert!(StreamSchema::new(vec![sa.clone()], class.clone(), "nope", "x", "p").is_err());
        assert!(StreamSchema::new(vec![sa.clone()], class.clone(), "sa", "w", "p").is_err());
        assert!(StreamSchema::new(vec![sa.clone()], class, "sa", "x", "maybe").is_err());
        let multi = AttributeSpec::nominal("y", ["a", "b", "c"]);
        assert!(StreamSchema::new(vec![sa.clone()], multi, "sa", "x", "a").is_err());
        let dup = AttributeSpec::nominal("d", ["a", "a"]);
        assert!(StreamSchema::new(
            vec![sa, dup],
            AttributeSpec::nominal("y", ["n", "p"]),
            "sa",
            "x",
            "p"
        )
        .is_err());
    }

    #[test]
    fn indices_are_dense() {
        let s = toy_schema();
        let idx: Vec<usize> = s.attributes().iter().map(|a| a.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        assert_eq!(s.class_attribute().index, 3);
    }

    #[test]
    fn schema_round_trips_through_json() {
        let s = toy_schema();
        let text = serde_json::to_string(&s).unwrap();
        let back: StreamSchema = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn instance_validation() {
        let s = toy_schema();
        assert!(person(0, Some(1)).validate(&s).is_ok());
        let short = Instance::new(vec![Value::Nominal(0)], None);
        assert!(short.validate(&s).is_err());
        let mut bad = person(0, None);
        bad.values[2] = Value::Nominal(9);
        assert!(bad.validate(&s).is_err());
        let mut kind = person(0, None);
        kind.values[1] = Value::Nominal(0);
        assert!(kind.validate(&s).is_err());
    }
}
