//! Complete, serializable description of a query screen: the query, its
//! filters, breakdown selections and pagination. Shareable links carry the
//! canonical JSON form, base64url-encoded.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::engine::{Filters, QueryOptions};
use crate::stats::{CrossTabOptions, Variable};

pub const DEFAULT_PAGE_SIZE: usize = 50;

fn default_page_size() -> usize {
    DEFAULT_PAGE_SIZE
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn is_default_page_size(n: &usize) -> bool {
    *n == DEFAULT_PAGE_SIZE
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryState {
    pub dataset: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub query: String,
    #[serde(default, skip_serializing_if = "is_default")]
    pub options: QueryOptions,
    #[serde(default, skip_serializing_if = "Filters::is_empty")]
    pub filters: Filters,
    /// Primary breakdown variable, e.g. `disrpt_label` or `metadata:genre`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<String>,
    /// Second variable for cross-tabulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosstab: Option<String>,
    /// Dataset to compare against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub min_count: u64,
    #[serde(default, skip_serializing_if = "is_default")]
    pub yates: bool,
    #[serde(default, skip_serializing_if = "is_default")]
    pub offset: usize,
    #[serde(default = "default_page_size", skip_serializing_if = "is_default_page_size")]
    pub page_size: usize,
}

impl QueryState {
    pub fn new(dataset: &str, query: &str) -> Self {
        QueryState {
            dataset: dataset.to_string(),
            query: query.to_string(),
            options: QueryOptions::default(),
            filters: Filters::default(),
            breakdown: None,
            crosstab: None,
            compare: None,
            min_count: 0,
            yates: false,
            offset: 0,
            page_size: DEFAULT_PAGE_SIZE,
        }
    }

    pub fn crosstab_options(&self) -> CrossTabOptions {
        CrossTabOptions {
            min_count: self.min_count,
            yates: self.yates,
        }
    }

    /// The primary and optional secondary breakdown variables.
    pub fn variables(&self) -> Result<(Variable, Option<Variable>), StateError> {
        let primary = self
            .breakdown
            .as_deref()
            .ok_or_else(|| StateError::Invalid("no breakdown variable selected".into()))?;
        let parse = |name: &str| Variable::parse(name, &self.filters).map_err(StateError::Invalid);
        let secondary = self.crosstab.as_deref().map(parse).transpose()?;
        Ok((parse(primary)?, secondary))
    }

    /// Filters used to select the relations a breakdown is computed over:
    /// a `filter_match` variable lifts its own filter so both outcomes show.
    pub fn analysis_filters(&self) -> Filters {
        let mut f = self.filters.clone();
        for name in self.breakdown.iter().chain(&self.crosstab) {
            if let Ok(Variable::Categorical(crate::stats::CategoricalVar::FilterMatch(kind, _))) =
                Variable::parse(name, &self.filters)
            {
                f = f.without(kind);
            }
        }
        f
    }

    /// Canonical JSON: sorted keys, no whitespace, default fields omitted.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("state serializes");
        let mut out = String::new();
        write_sorted(&value, &mut out);
        out
    }

    /// Shareable-link token.
    pub fn encode(&self) -> String {
        URL_SAFE_NO_PAD.encode(self.canonical_json())
    }

    pub fn decode(token: &str) -> Result<QueryState, StateError> {
        let bytes = URL_SAFE_NO_PAD
            .decode(token.trim().trim_end_matches('='))
            .map_err(|e| StateError::Token(e.to_string()))?;
        serde_json::from_slice(&bytes).map_err(|e| StateError::Token(e.to_string()))
    }
}

fn write_sorted(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_sorted(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_sorted(v, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("undecodable state token: {0}")]
    Token(String),
    #[error("{0}")]
    Invalid(String),
}
