//! DISRPT corpus ingestion: `.rels` relation tables, `.conllu` token
//! annotations and the dataset manifest.

mod build;
mod conllu;
mod manifest;
mod range;
mod rels;

use std::path::{Path, PathBuf};

pub use build::{
    build_dataset, genre_from_doc_id, parse_signals, BuildOptions, BuildReport, RelsSource,
};
pub use conllu::{parse_conllu, ConlluCorpus, ANONYMOUS_DOC};
pub use manifest::{parse_manifest, Manifest, ManifestEntry};
pub use range::parse_range_expr;
pub use rels::{parse_rels, RelsRow, RelsTable, SIGNAL_COLUMN};

use crate::error::{FormatError, IngestError};

fn read(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file(path: &Path) -> impl Fn(FormatError) -> IngestError + '_ {
    move |e| e.in_file(path).into()
}

/// Reads and aligns the given `.rels` and `.conllu` files as one dataset.
/// Files are processed in order; relation ordinals continue across files.
pub fn load_files(
    dataset_id: &str,
    rels_paths: &[PathBuf],
    conllu_paths: &[PathBuf],
    opts: BuildOptions,
) -> Result<BuildReport, IngestError> {
    let mut tokens = ConlluCorpus::default();
    for path in conllu_paths {
        tokens.extend(parse_conllu(&read(path)?).map_err(in_file(path))?);
    }
    let mut sources = Vec::with_capacity(rels_paths.len());
    for path in rels_paths {
        sources.push(RelsSource {
            path: Some(path.clone()),
            table: parse_rels(&read(path)?).map_err(in_file(path))?,
        });
    }
    build_dataset(&sources, tokens, dataset_id, opts)
}

/// Loads one manifest entry, resolving relative paths against `base`.
pub fn load_entry(
    entry: &ManifestEntry,
    base: &Path,
    opts: BuildOptions,
) -> Result<BuildReport, IngestError> {
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    let rels: Vec<PathBuf> = entry.rels.iter().map(resolve).collect();
    let conllu: Vec<PathBuf> = entry.conllu.iter().map(resolve).collect();
    let mut report = load_files(&entry.id, &rels, &conllu, opts)?;
    report.dataset.display = entry.display.clone();
    Ok(report)
}
