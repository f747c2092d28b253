//! Synthetic binary-class streams with a controlled level of
//! discrimination against a deprived group.
//!
//! Each instance draws its group, then its label with probability
//! `positive_rate ± discrimination / 2` (plus for the favored group, minus
//! for the deprived one), so the expected statistical parity equals the
//! target. Predictors carry label signal (`signal`, `score`), group signal
//! (`proxy`) and pure noise (`noise`).
//!
//! The sensitive attribute is always the first predictor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, StreamRng};
use super::Dataset;
use crate::error::{Error, Result};
use crate::schema::{AttributeSpec, Instance, StreamSchema, Value};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamParameters {
    /// Mean of the two groups' positive rates.
    pub positive_rate: f64,
    /// Target favored-minus-deprived positive rate.
    pub discrimination: f64,
    pub deprived_fraction: f64,
}

impl StreamParameters {
    fn group_rates(&self) -> (f64, f64) {
        (
            self.positive_rate - self.discrimination / 2.0,
            self.positive_rate + self.discrimination / 2.0,
        )
    }

    fn validate(&self) -> Result<()> {
        let (d, f) = self.group_rates();
        for (what, p) in [
            ("deprived positive rate", d),
            ("favored positive rate", f),
            ("deprived fraction", self.deprived_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{what} {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticStreamSpec {
    pub n: usize,
    pub initial: StreamParameters,
    /// `(index, parameters)` switches, with strictly increasing indices.
    pub drift: Vec<(usize, StreamParameters)>,
    pub seed: u64,
    /// Emit every draw twice, once per group, with identical predictors and
    /// label. Every partition that ignores the sensitive attribute then has
    /// zero discrimination, and splitting on the sensitive attribute has
    /// zero information gain. `n` counts emitted instances and is rounded
    /// up to even.
    pub mirrored: bool,
    /// Probability that `proxy` agrees with the group; 0.5 makes it
    /// independent of the sensitive attribute.
    pub proxy_agreement: f64,
}

impl SyntheticStreamSpec {
    pub fn new(n: usize, positive_rate: f64, discrimination: f64, seed: u64) -> Self {
        SyntheticStreamSpec {
            n,
            initial: StreamParameters {
                positive_rate,
                discrimination,
                deprived_fraction: 0.5,
            },
            drift: Vec::new(),
            seed,
            mirrored: false,
            proxy_agreement: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        if !(0.0..=1.0).contains(&self.proxy_agreement) {
            return Err(Error::Config(format!(
                "proxy agreement {} is outside [0, 1]",
                self.proxy_agreement
            )));
        }
        let mut last = None;
        for (at, p) in &self.drift {
            if last.is_some_and(|l| *at <= l) {
                return Err(Error::Config(
                    "drift indices must be strictly increasing".into(),
                ));
            }
            last = Some(*at);
            p.validate()?;
        }
        Ok(())
    }
}

pub fn synthetic_schema() -> StreamSchema {
    StreamSchema::new(
        vec![
            AttributeSpec::nominal("sex", ["female", "male"]),
            AttributeSpec::nominal("signal", ["low", "mid", "high"]),
            AttributeSpec::nominal("proxy", ["a", "b"]),
            AttributeSpec::nominal("noise", ["p", "q", "r", "s"]),
            AttributeSpec::numeric("score"),
        ],
        AttributeSpec::nominal("class", ["rejected", "granted"]),
        "sex",
        "female",
        "granted",
    )
    .expect("fixed synthetic schema is valid")
}

const FEMALE: usize = 0;
const MALE: usize = 1;

fn draw(
    rng: &mut StreamRng,
    p: &StreamParameters,
    proxy_agreement: f64,
    unit: &Normal<f64>,
) -> (usize, Vec<Value>, usize) {
    let sex = if rng.random::<f64>() < p.deprived_fraction {
        FEMALE
    } else {
        MALE
    };
    let (rate_d, rate_f) = p.group_rates();
    let rate = if sex == FEMALE { rate_d } else { rate_f };
    let label = usize::from(rng.random::<f64>() < rate);
    // Label-dependent level: mostly high for granted, mostly low otherwise.
    let u = rng.random::<f64>();
    let signal = match (label, u) {
        (1, u) if u < 0.6 => 2,
        (1, u) if u < 0.85 => 1,
        (1, _) => 0,
        (_, u) if u < 0.6 => 0,
        (_, u) if u < 0.85 => 1,
        _ => 2,
    };
    let proxy = usize::from((rng.random::<f64>() < proxy_agreement) == (sex == MALE));
    let noise = rng.random_range(0..4);
    let score = unit.sample(rng) + if label == 1 { 1.0 } else { 0.0 };
    let values = vec![
        Value::Nominal(sex),
        Value::Nominal(signal),
        Value::Nominal(proxy),
        Value::Nominal(noise),
        Value::Numeric(score),
    ];
    (sex, values, label)
}

pub fn generate(spec: &SyntheticStreamSpec) -> Result<Dataset> {
    spec.validate()?;
    let schema = synthetic_schema();
    let mut rng = stream_rng(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut params = spec.initial;
    let mut drift = spec.drift.iter().peekable();
    let mut instances = Vec::with_capacity(spec.n + 1);
    while instances.len() < spec.n {
        while let Some((_, p)) = drift.next_if(|(at, _)| *at <= instances.len()) {
            params = *p;
        }
        let (sex, values, label) = draw(&mut rng, &params, spec.proxy_agreement, &unit);
        if spec.mirrored {
            let mut twin = values.clone();
            twin[0] = Value::Nominal(1 - sex);
            instances.push(Instance::new(values, Some(label)));
            instances.push(Instance::new(twin, Some(label)));
        } else {
            instances.push(Instance::new(values, Some(label)));
        }
    }
    Dataset::new(schema, instances)
}
