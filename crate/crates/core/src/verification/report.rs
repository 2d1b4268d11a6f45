use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One machine-readable verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CaseRecord {
    /// Passing means `value ≤ threshold`.
    pub fn at_most(
        config_hash: &str,
        seed: Option<u64>,
        metric: &str,
        value: f64,
        threshold: f64,
    ) -> Self {
        CaseRecord {
            config_hash: config_hash.to_string(),
            seed,
            metric: metric.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub records: Vec<CaseRecord>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    /// Largest value recorded under `metric`.
    pub fn worst(&self, metric: &str) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| r.value)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.records.extend(other.records);
    }
}

/// Short stable digest of any serializable case description.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("case descriptions serialize");
    let digest = Sha256::digest(&bytes);
    hex::encode(&digest[..8])
}
