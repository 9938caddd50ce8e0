use chrono::{DateTime, SecondsFormat};
use serde::Serialize;
use serde_json::Value;

/// Provenance record embedded in every output file.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Value,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(std::env::var("SOURCE_DATE_EPOCH").ok().as_deref()),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("manifest serializes")
    }
}

/// RFC 3339 time taken from `SOURCE_DATE_EPOCH` so reruns are byte-identical;
/// the Unix epoch when unset or unparsable.
pub fn timestamp(epoch: Option<&str>) -> String {
    let secs = epoch.and_then(|s| s.trim().parse::<i64>().ok()).unwrap_or(0);
    DateTime::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}
