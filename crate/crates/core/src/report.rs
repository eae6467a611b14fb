//! Structured verification results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// JSON schema every serialized [`CheckReport`] conforms to.
pub const CHECK_REPORT_SCHEMA: &str = include_str!("../schema/check_report.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defect {
    pub metric: String,
    pub value: f64,
    pub tolerance: f64,
    pub tolerance_origin: String,
}

impl Defect {
    pub fn passes(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub grid_hash: Option<String>,
    pub truncation: Option<String>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub config_hash: Option<String>,
    #[serde(default)]
    pub log: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub defects: Vec<Defect>,
    pub pass: bool,
    pub provenance: Provenance,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            defects: Vec::new(),
            pass: true,
            provenance: Provenance::default(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.params.insert(key.to_string(), v);
        self
    }

    pub fn defect(
        &mut self,
        metric: impl Into<String>,
        value: f64,
        tolerance: f64,
        origin: impl Into<String>,
    ) -> &mut Self {
        let d = Defect {
            metric: metric.into(),
            value,
            tolerance,
            tolerance_origin: origin.into(),
        };
        self.pass &= d.passes();
        self.defects.push(d);
        self
    }

    pub fn log(&mut self, line: impl Into<String>) -> &mut Self {
        self.provenance.log.push(line.into());
        self
    }

    pub fn with_grid_hash(mut self, h: impl Into<String>) -> Self {
        self.provenance.grid_hash = Some(h.into());
        self
    }

    pub fn with_truncation(mut self, t: impl Into<String>) -> Self {
        self.provenance.truncation = Some(t.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.provenance.seed = Some(seed);
        self
    }

    /// Appends the defects of `other` under a metric prefix.
    pub fn absorb(&mut self, prefix: &str, other: &CheckReport) {
        for d in &other.defects {
            self.defect(
                format!("{prefix}.{}", d.metric),
                d.value,
                d.tolerance,
                d.tolerance_origin.clone(),
            );
        }
        for l in &other.provenance.log {
            self.log(format!("{prefix}: {l}"));
        }
    }

    pub fn find(&self, metric: &str) -> Option<&Defect> {
        self.defects.iter().find(|d| d.metric == metric)
    }

    pub fn failing(&self) -> Vec<&Defect> {
        self.defects.iter().filter(|d| !d.passes()).collect()
    }

    /// Multiplies every tolerance by `s` and recomputes the verdict.
    pub fn scale_tolerances(&mut self, s: f64) {
        for d in &mut self.defects {
            d.tolerance *= s;
        }
        self.pass = self.defects.iter().all(Defect::passes);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("report serializes")
                .as_bytes(),
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hashes a sequence of floats by their bit patterns.
pub fn hash_f64s<'a>(xs: impl IntoIterator<Item = &'a f64>) -> String {
    let mut h = Sha256::new();
    for x in xs {
        h.update(x.to_bits().to_le_bytes());
    }
    h.finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}
