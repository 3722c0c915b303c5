//! In-memory search and statistics over discourse-relation corpora in the
//! DISRPT `.rels` + `.conllu` format.

pub mod deql;
pub mod engine;
pub mod error;
pub mod export;
pub mod ingest;
pub mod model;
pub mod service;
pub mod state;
pub mod stats;
pub mod synth;

pub use engine::{Corpus, QueryOptions, QuerySpec};
pub use model::Dataset;
pub use state::QueryState;
