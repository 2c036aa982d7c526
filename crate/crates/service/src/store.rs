//! Single-file JSON store for scenarios and runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{ScenarioDocument, StoredRun};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("store file {path} is corrupt: {source}")]
    Corrupt {
        path: PathBuf,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct StoreData {
    next_id: u64,
    scenarios: BTreeMap<String, ScenarioDocument>,
    runs: BTreeMap<String, StoredRun>,
}

/// Scenarios and runs, written through to `path` on every change.
/// With no path the store lives in memory only.
#[derive(Debug)]
pub struct Store {
    path: Option<PathBuf>,
    data: Mutex<StoreData>,
}

impl Store {
    pub fn in_memory() -> Self {
        Store {
            path: None,
            data: Mutex::new(StoreData::default()),
        }
    }

    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let data = match std::fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|source| StoreError::Corrupt {
                path: path.to_path_buf(),
                source,
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => StoreData::default(),
            Err(source) => {
                return Err(StoreError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        Ok(Store {
            path: Some(path.to_path_buf()),
            data: Mutex::new(data),
        })
    }

    fn persist(&self, data: &StoreData) -> Result<(), StoreError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("json.tmp");
        let bytes = serde_json::to_vec_pretty(data).expect("store data serializes");
        std::fs::write(&tmp, bytes).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    fn update<T>(&self, f: impl FnOnce(&mut StoreData) -> T) -> Result<T, StoreError> {
        let mut data = self.data.lock().expect("store lock poisoned");
        let mut next = data.clone();
        let out = f(&mut next);
        self.persist(&next)?;
        *data = next;
        Ok(out)
    }

    fn next_id(data: &mut StoreData, prefix: &str) -> String {
        data.next_id += 1;
        format!("{prefix}-{:06}", data.next_id)
    }

    /// Assigns an id and stores the scenario.
    pub fn insert_scenario(&self, mut doc: ScenarioDocument) -> Result<ScenarioDocument, StoreError> {
        self.update(|data| {
            doc.id = Self::next_id(data, "scn");
            data.scenarios.insert(doc.id.clone(), doc.clone());
            doc
        })
    }

    pub fn scenario(&self, id: &str) -> Option<ScenarioDocument> {
        self.data.lock().expect("store lock poisoned").scenarios.get(id).cloned()
    }

    pub fn scenarios(&self) -> Vec<ScenarioDocument> {
        self.data.lock().expect("store lock poisoned").scenarios.values().cloned().collect()
    }

    /// Assigns ids to the run and its trace reference and stores both.
    pub fn insert_run(&self, mut run: StoredRun) -> Result<StoredRun, StoreError> {
        self.update(|data| {
            let id = Self::next_id(data, "run");
            run.record.trace_ref = format!("{id}/trace");
            run.record.id = id.clone();
            data.runs.insert(id, run.clone());
            run
        })
    }

    pub fn run(&self, id: &str) -> Option<StoredRun> {
        self.data.lock().expect("store lock poisoned").runs.get(id).cloned()
    }
}
