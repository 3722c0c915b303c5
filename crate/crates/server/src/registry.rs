//! Datasets known to the service. Each loads at most once, on first use.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use relscope_core::ingest::{load_entry, BuildOptions, Manifest, ManifestEntry};
use relscope_core::model::Dataset;
use relscope_core::service::ServiceError;
use relscope_core::Corpus;
use tokio::sync::OnceCell;

#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: Arc<Corpus>,
    pub load_ms: f64,
}

type LoadResult = Result<Loaded, ServiceError>;

#[derive(Debug)]
struct Slot {
    entry: Option<(ManifestEntry, PathBuf)>,
    cell: OnceCell<LoadResult>,
}

#[derive(Debug, Default)]
pub struct Registry {
    slots: BTreeMap<String, Slot>,
    loads: AtomicUsize,
}

impl Registry {
    pub fn from_manifest(m: &Manifest) -> Self {
        let mut r = Registry::default();
        for e in &m.entries {
            r.slots.insert(
                e.id.clone(),
                Slot {
                    entry: Some((e.clone(), m.base.clone())),
                    cell: OnceCell::new(),
                },
            );
        }
        r
    }

    /// Adds an already built dataset, replacing any entry with the same id.
    pub fn insert(&mut self, ds: Dataset) {
        let loaded = Loaded {
            corpus: Arc::new(Corpus::new(ds)),
            load_ms: 0.0,
        };
        let id = loaded.corpus.id().to_string();
        self.slots.insert(
            id,
            Slot {
                entry: None,
                cell: OnceCell::new_with(Some(Ok(loaded))),
            },
        );
    }

    pub fn from_datasets(datasets: impl IntoIterator<Item = Dataset>) -> Self {
        let mut r = Registry::default();
        for ds in datasets {
            r.insert(ds);
        }
        r
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.slots.keys().map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.slots.contains_key(id)
    }

    /// Number of file loads performed so far.
    pub fn load_count(&self) -> usize {
        self.loads.load(Ordering::SeqCst)
    }

    /// The loaded corpus, loading it first if needed. Concurrent callers
    /// share one load; a failed load is not retried.
    pub async fn get(&self, id: &str) -> LoadResult {
        let slot = self.slots.get(id).ok_or_else(|| ServiceError::UnknownDataset(id.to_string()))?;
        slot.cell
            .get_or_init(|| async {
                let (entry, base) = slot.entry.clone().expect("unloaded slot has a manifest entry");
                self.loads.fetch_add(1, Ordering::SeqCst);
                let id = entry.id.clone();
                let task = tokio::task::spawn_blocking(move || {
                    let start = Instant::now();
                    let report = load_entry(&entry, &base, BuildOptions::default())?;
                    let corpus = Corpus::new(report.dataset);
                    Ok::<_, relscope_core::error::IngestError>((corpus, start.elapsed()))
                });
                match task.await {
                    Ok(Ok((corpus, took))) => {
                        tracing::info!(dataset = %id, ms = took.as_millis() as u64, "loaded");
                        Ok(Loaded {
                            corpus: Arc::new(corpus),
                            load_ms: took.as_secs_f64() * 1e3,
                        })
                    }
                    Ok(Err(e)) => Err(ServiceError::Load { id, message: e.to_string() }),
                    Err(e) => Err(ServiceError::Load { id, message: e.to_string() }),
                }
            })
            .await
            .clone()
    }
}
