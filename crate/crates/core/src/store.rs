//! Versioned snapshot storage.
//!
//! Layout: `<root>/<model-id>/v0001.json`, `v0002.json`, … plus `index.json`
//! and the model itself in `model.json`. Snapshot files are written once via
//! a temporary file and an atomic rename; the index is rebuilt from the
//! snapshot files, which are the source of truth.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::AnalysisResult;
use crate::fuzzy::Level;
use crate::model::{self, GoalModel, Prioritization};
use crate::propagation::PropagationConfig;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt store file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("invalid model id '{0}'")]
    InvalidModelId(String),
    #[error("model '{model}' has no version {version}")]
    VersionNotFound { model: String, version: u32 },
    #[error("model '{0}' is not stored")]
    ModelNotFound(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub version: u32,
    pub model_id: String,
    pub created_at: String,
    pub config: PropagationConfig,
    pub prioritization: Prioritization,
    pub result: AnalysisResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistoryEntry {
    pub version: u32,
    pub created_at: String,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub element_count: usize,
    pub top_element: Option<String>,
    pub top_value: Option<f64>,
}

impl Summary {
    fn of(result: &AnalysisResult) -> Self {
        let top = result.global_ranking.first().and_then(|id| result.element(id));
        Summary {
            element_count: result.elements.len(),
            top_element: top.map(|e| e.element_id.clone()),
            top_value: top.map(|e| e.global_value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementDiff {
    pub element_id: String,
    pub name: String,
    pub importance_before: Level,
    pub importance_after: Level,
    pub confidence_before: Level,
    pub confidence_after: Level,
    pub global_value_before: f64,
    pub global_value_after: f64,
    pub delta: f64,
    /// 1-based position in the global ranking.
    pub rank_before: usize,
    pub rank_after: usize,
}

impl ElementDiff {
    pub fn is_unchanged(&self) -> bool {
        self.importance_before == self.importance_after
            && self.confidence_before == self.confidence_after
            && self.delta == 0.0
            && self.rank_before == self.rank_after
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VersionDiff {
    pub model_id: String,
    pub from: u32,
    pub to: u32,
    pub elements: Vec<ElementDiff>,
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

/// Compares two analysis results element by element.
pub fn diff_results(model_id: &str, from: u32, before: &AnalysisResult, to: u32, after: &AnalysisResult) -> VersionDiff {
    let ranks = |r: &AnalysisResult| -> HashMap<String, usize> {
        r.global_ranking.iter().enumerate().map(|(i, id)| (id.clone(), i + 1)).collect()
    };
    let (rank_a, rank_b) = (ranks(before), ranks(after));
    let after_by_id: BTreeMap<&str, _> = after.elements.iter().map(|e| (e.element_id.as_str(), e)).collect();
    let before_by_id: BTreeMap<&str, _> = before.elements.iter().map(|e| (e.element_id.as_str(), e)).collect();

    let mut elements = Vec::new();
    let mut removed = Vec::new();
    for (id, a) in &before_by_id {
        match after_by_id.get(id) {
            Some(b) => elements.push(ElementDiff {
                element_id: id.to_string(),
                name: b.name.clone(),
                importance_before: a.importance,
                importance_after: b.importance,
                confidence_before: a.confidence,
                confidence_after: b.confidence,
                global_value_before: a.global_value,
                global_value_after: b.global_value,
                delta: b.global_value - a.global_value,
                rank_before: rank_a.get(*id).copied().unwrap_or(0),
                rank_after: rank_b.get(*id).copied().unwrap_or(0),
            }),
            None => removed.push(id.to_string()),
        }
    }
    let added = after_by_id.keys().filter(|id| !before_by_id.contains_key(*id)).map(|id| id.to_string()).collect();
    VersionDiff { model_id: model_id.to_string(), from, to, elements, added, removed }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Index {
    model_id: String,
    versions: Vec<HistoryEntry>,
}

/// File-system snapshot store. Cloning shares the per-model write locks.
#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
    locks: Arc<Mutex<HashMap<String, Arc<Mutex<()>>>>>,
}

fn check_model_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidModelId(id.to_string()))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("file"),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

fn snapshot_name(version: u32) -> String {
    format!("v{version:04}.json")
}

fn parse_snapshot_name(name: &str) -> Option<u32> {
    name.strip_prefix('v')?.strip_suffix(".json")?.parse().ok()
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("store records serialize");
    text.push('\n');
    text.into_bytes()
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Store { root, locks: Arc::default() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn model_dir(&self, model_id: &str) -> Result<PathBuf, StoreError> {
        check_model_id(model_id)?;
        Ok(self.root.join(model_id))
    }

    fn lock(&self, model_id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(model_id.to_string()).or_default().clone()
    }

    /// Ids of every stored model.
    pub fn models(&self) -> Result<Vec<String>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let entry = entry.map_err(io_err(&self.root))?;
            if entry.path().join("model.json").is_file() {
                if let Some(name) = entry.file_name().to_str() {
                    out.push(name.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Stores the model definition (canonical form, empty prioritization).
    pub fn put_model(&self, model: &GoalModel) -> Result<(), StoreError> {
        let dir = self.model_dir(&model.id)?;
        let lock = self.lock(&model.id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_atomic(&dir.join("model.json"), model::save(model, &Prioritization::default()).as_bytes())
    }

    pub fn get_model(&self, model_id: &str) -> Result<GoalModel, StoreError> {
        let path = self.model_dir(model_id)?.join("model.json");
        if !path.is_file() {
            return Err(StoreError::ModelNotFound(model_id.to_string()));
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        model::load(&text)
            .map(|(m, _)| m)
            .map_err(|e| StoreError::Corrupt { path, message: e.to_string() })
    }

    /// Stored versions in ascending order.
    pub fn versions(&self, model_id: &str) -> Result<Vec<u32>, StoreError> {
        let dir = self.model_dir(model_id)?;
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            if let Some(v) = entry.file_name().to_str().and_then(parse_snapshot_name) {
                out.push(v);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn latest_version(&self, model_id: &str) -> Result<Option<u32>, StoreError> {
        Ok(self.versions(model_id)?.last().copied())
    }

    /// Appends a snapshot and returns its version number.
    pub fn record(
        &self,
        model_id: &str,
        prioritization: &Prioritization,
        result: &AnalysisResult,
    ) -> Result<u32, StoreError> {
        let dir = self.model_dir(model_id)?;
        let lock = self.lock(model_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;

        let version = self.latest_version(model_id)?.map_or(1, |v| v + 1);
        let snapshot = Snapshot {
            version,
            model_id: model_id.to_string(),
            created_at: result.created_at.clone(),
            config: result.config,
            prioritization: prioritization.clone(),
            result: result.clone(),
        };
        let path = dir.join(snapshot_name(version));
        // create_new keeps an existing snapshot from ever being replaced
        fs::OpenOptions::new().write(true).create_new(true).open(&path).map_err(io_err(&path))?;
        if let Err(e) = write_atomic(&path, &to_json(&snapshot)) {
            let _ = fs::remove_file(&path);
            return Err(e);
        }

        let mut versions = self.read_index(model_id)?.map(|i| i.versions).unwrap_or_default();
        versions.retain(|h| h.version < version);
        versions.push(HistoryEntry { version, created_at: snapshot.created_at, summary: Summary::of(result) });
        let index = Index { model_id: model_id.to_string(), versions };
        write_atomic(&dir.join("index.json"), &to_json(&index))?;
        Ok(version)
    }

    fn read_index(&self, model_id: &str) -> Result<Option<Index>, StoreError> {
        let path = self.model_dir(model_id)?.join("index.json");
        if !path.is_file() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map(Some).map_err(|e| StoreError::Corrupt { path, message: e.to_string() })
    }

    /// Raw bytes of a snapshot file.
    pub fn read_bytes(&self, model_id: &str, version: u32) -> Result<Vec<u8>, StoreError> {
        let path = self.model_dir(model_id)?.join(snapshot_name(version));
        if !path.is_file() {
            return Err(StoreError::VersionNotFound { model: model_id.to_string(), version });
        }
        fs::read(&path).map_err(io_err(&path))
    }

    pub fn get(&self, model_id: &str, version: u32) -> Result<Snapshot, StoreError> {
        let bytes = self.read_bytes(model_id, version)?;
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
            path: self.root.join(model_id).join(snapshot_name(version)),
            message: e.to_string(),
        })
    }

    /// One entry per recorded version, ascending. Unknown models give an
    /// empty history.
    pub fn history(&self, model_id: &str) -> Result<Vec<HistoryEntry>, StoreError> {
        let versions = self.versions(model_id)?;
        let index = self.read_index(model_id)?.map(|i| i.versions).unwrap_or_default();
        let indexed: HashMap<u32, &HistoryEntry> = index.iter().map(|h| (h.version, h)).collect();
        versions
            .into_iter()
            .map(|v| match indexed.get(&v) {
                Some(h) => Ok((*h).clone()),
                None => {
                    let s = self.get(model_id, v)?;
                    Ok(HistoryEntry { version: v, created_at: s.created_at, summary: Summary::of(&s.result) })
                }
            })
            .collect()
    }

    pub fn diff(&self, model_id: &str, from: u32, to: u32) -> Result<VersionDiff, StoreError> {
        let a = self.get(model_id, from)?;
        let b = self.get(model_id, to)?;
        Ok(diff_results(model_id, from, &a.result, to, &b.result))
    }
}
