use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::IngestError;

/// One dataset: its id, paired `.rels`/`.conllu` files (one pair per split)
/// and free-form display fields such as language or framework.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub rels: Vec<PathBuf>,
    pub conllu: Vec<PathBuf>,
    pub display: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub base: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path, data_root: Option<&Path>) -> Result<Manifest, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = match data_root {
            Some(root) => root.to_path_buf(),
            None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        Ok(Manifest {
            entries: parse_manifest(&text)?,
            base,
        })
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Parses a manifest in JSON (`{"datasets": [...]}` or a bare array) or in
/// key/value form: `key = value` lines, one block per dataset, blocks
/// separated by blank lines. `rels` and `conllu` may repeat.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, IngestError> {
    let trimmed = text.trim_start();
    let entries = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        parse_json(trimmed)?
    } else {
        parse_key_value(text)?
    };
    for (i, e) in entries.iter().enumerate() {
        if e.id.is_empty() {
            return Err(IngestError::Manifest(format!("entry {} has no id", i + 1)));
        }
        if e.rels.len() != e.conllu.len() || e.rels.is_empty() {
            return Err(IngestError::Manifest(format!(
                "dataset `{}` needs matching rels/conllu files ({} vs {})",
                e.id,
                e.rels.len(),
                e.conllu.len()
            )));
        }
        if entries[..i].iter().any(|p| p.id == e.id) {
            return Err(IngestError::Manifest(format!("duplicate dataset id `{}`", e.id)));
        }
    }
    Ok(entries)
}

fn parse_json(text: &str) -> Result<Vec<ManifestEntry>, IngestError> {
    let bad = |m: String| IngestError::Manifest(m);
    let value: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let list = match &value {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("datasets")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("expected a `datasets` array".into()))?,
        _ => return Err(bad("expected an object or array".into())),
    };
    list.iter()
        .map(|item| {
            let obj = item
                .as_object()
                .ok_or_else(|| bad("dataset entries must be objects".into()))?;
            let mut entry = ManifestEntry::default();
            for (key, v) in obj {
                let strings: Vec<String> = match v {
                    Value::String(s) => vec![s.clone()],
                    Value::Array(a) => a
                        .iter()
                        .map(|x| x.as_str().map(str::to_string))
                        .collect::<Option<_>>()
                        .ok_or_else(|| bad(format!("`{key}` must hold strings")))?,
                    other => vec![other.to_string()],
                };
                entry.set(key, strings);
            }
            Ok(entry)
        })
        .collect()
}

fn parse_key_value(text: &str) -> Result<Vec<ManifestEntry>, IngestError> {
    let mut entries = Vec::new();
    let mut current: Option<ManifestEntry> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            entries.extend(current.take());
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            IngestError::Manifest(format!("line {}: expected `key = value`", i + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key == "id" {
            entries.extend(current.take());
        }
        current
            .get_or_insert_with(ManifestEntry::default)
            .set(key, vec![value.to_string()]);
    }
    entries.extend(current);
    Ok(entries)
}

impl ManifestEntry {
    fn set(&mut self, key: &str, values: Vec<String>) {
        match key {
            "id" => self.id = values.concat(),
            "rels" => self.rels.extend(values.into_iter().map(PathBuf::from)),
            "conllu" => self.conllu.extend(values.into_iter().map(PathBuf::from)),
            _ => {
                self.display.insert(key.to_string(), values.join(","));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_manifest() {
        let m = parse_manifest(
            r#"{"datasets": [
                {"id": "eng.erst.gum", "rels": ["train.rels", "dev.rels"], "conllu": ["train.conllu", "dev.conllu"], "language": "English"},
                {"id": "b", "rels": "b.rels", "conllu": "b.conllu"}
            ]}"#,
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].rels.len(), 2);
        assert_eq!(m[0].display["language"], "English");
        assert_eq!(m[1].conllu, vec![PathBuf::from("b.conllu")]);
    }

    #[test]
    fn key_value_manifest() {
        let m = parse_manifest(
            "# corpora\nid = a\nrels = a.rels\nconllu = a.conllu\nframework = eRST\n\nid = b\nrels = b1.rels\nrels = b2.rels\nconllu = b1.conllu\nconllu = b2.conllu\n",
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].display["framework"], "eRST");
        assert_eq!(m[1].rels.len(), 2);
    }

    #[test]
    fn rejects_unpaired_files_and_duplicates() {
        assert!(parse_manifest("id = a\nrels = a.rels\n").is_err());
        assert!(parse_manifest("id = a\nrels = x\nconllu = y\n\nid = a\nrels = x\nconllu = y\n").is_err());
        assert!(parse_manifest("nonsense line\n").is_err());
    }
}
