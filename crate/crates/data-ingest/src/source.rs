use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::IngestError;

/// Native reporting frequency of an indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
}

impl Frequency {
    /// Longest spacing between consecutive reports, in days.
    pub fn period_days(self) -> u32 {
        match self {
            Frequency::Daily => 1,
            Frequency::Weekly => 7,
            Frequency::Monthly => 31,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSource {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub frequency: Frequency,
    #[serde(default)]
    pub units: String,
    /// Header of the value column; the date column is always `date`.
    pub value_column: String,
    /// Relative paths resolve against the registry file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl IndicatorSource {
    pub fn daily(id: impl Into<String>, value_column: impl Into<String>) -> Self {
        let id = id.into();
        IndicatorSource {
            name: id.clone(),
            id,
            frequency: Frequency::Daily,
            units: String::new(),
            value_column: value_column.into(),
            file: None,
        }
    }
}

/// The configured set of indicator sources.
///
/// ```toml
/// [[source]]
/// id = "acled_events"
/// name = "Conflict and protest events"
/// frequency = "weekly"
/// units = "events"
/// value_column = "events"
/// file = "acled.csv"
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceRegistry {
    #[serde(default, rename = "source")]
    pub sources: Vec<IndicatorSource>,
}

impl SourceRegistry {
    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        let registry: SourceRegistry =
            toml::from_str(text).map_err(|e| IngestError::Registry(e.to_string()))?;
        registry.validate()?;
        Ok(registry)
    }

    /// Loads a registry and resolves relative file paths against its directory.
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut registry = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for source in &mut registry.sources {
            if let Some(file) = source.file.as_mut() {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
        Ok(registry)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = HashSet::new();
        for source in &self.sources {
            if source.id.is_empty() {
                return Err(IngestError::Registry("empty source id".into()));
            }
            if !seen.insert(source.id.as_str()) {
                return Err(IngestError::DuplicateSource(source.id.clone()));
            }
        }
        Ok(())
    }
}
