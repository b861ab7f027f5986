use serde::Serialize;

use crate::eval::Aggregation;
use crate::training::TrainerConfig;

/// Flat run configuration: every training key plus inference and head-triple
/// keys. All keys are optional; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub trainer: TrainerConfig,
    pub beam_width: usize,
    pub aggregation: Aggregation,
    /// Head triple used when no rule file supplies one.
    pub head_relation: String,
    pub source_type: String,
    pub target_type: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trainer: TrainerConfig::default(),
            beam_width: 100,
            aggregation: Aggregation::Max,
            head_relation: "treats".into(),
            source_type: "Compound".into(),
            target_type: "Disease".into(),
        }
    }
}

fn take<T: serde::de::DeserializeOwned>(
    table: &mut toml::Table,
    key: &str,
    default: T,
) -> Result<T, String> {
    match table.remove(key) {
        None => Ok(default),
        Some(v) => v.try_into().map_err(|e| format!("key `{key}`: {e}")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut table: toml::Table = text.parse().map_err(|e| format!("{e}"))?;
        let d = RunConfig::default();
        let beam_width = take(&mut table, "beam_width", d.beam_width)?;
        let aggregation = take(&mut table, "aggregation", d.aggregation)?;
        let head_relation = take(&mut table, "head_relation", d.head_relation)?;
        let source_type = take(&mut table, "source_type", d.source_type)?;
        let target_type = take(&mut table, "target_type", d.target_type)?;
        let trainer: TrainerConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| format!("{e}"))?;
        if beam_width == 0 {
            return Err("beam_width must be positive".into());
        }
        Ok(Self {
            trainer,
            beam_width,
            aggregation,
            head_relation,
            source_type,
            target_type,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
