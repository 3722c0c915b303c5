use std::fs;
use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use relscope_core::engine::{count, evaluate, Filters, LabelFilter, LabelKind, Negatable, Presence, QueryOptions};
use relscope_core::error::IngestError;
use relscope_core::ingest::{load_entry, load_files, BuildOptions, BuildReport, Manifest, ManifestEntry};
use relscope_core::model::{Dataset, Direction};
use relscope_core::service::{self, ExportKind, MatchView, ServiceError};
use relscope_core::state::QueryState;
use relscope_core::synth::{generate, SynthConfig};
use relscope_core::Corpus;
use relscope_server::Registry;

/// Search and statistics over DISRPT discourse-relation corpora.
#[derive(Debug, Parser)]
#[command(name = "relscope", version)]
struct Cli {
    /// Dataset manifest (JSON or key = value blocks).
    #[arg(long, global = true, env = "RELSCOPE_MANIFEST")]
    manifest: Option<PathBuf>,
    /// Directory that relative manifest paths resolve against.
    #[arg(long, global = true, env = "RELSCOPE_DATA_ROOT")]
    data_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load datasets strictly and report counts and errors.
    Validate {
        /// A manifest, or `.rels` and `.conllu` files of one dataset.
        /// Defaults to every dataset of --manifest.
        paths: Vec<PathBuf>,
    },
    /// Run a query and print the count and concordance lines.
    Query {
        dataset: String,
        #[arg(default_value = "")]
        query: String,
        #[command(flatten)]
        q: QueryArgs,
        /// Print only the number of matching relations.
        #[arg(long)]
        count_only: bool,
        /// Print at most this many concordance lines.
        #[arg(long)]
        limit: Option<usize>,
        /// Write the concordance as TSV to this file (`-` for stdout).
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Breakdown, cross-tabulation or comparison of a query's matches, as TSV.
    Stats {
        dataset: String,
        #[arg(default_value = "")]
        query: String,
        #[command(flatten)]
        q: QueryArgs,
        /// Breakdown variable, e.g. disrpt_label, metadata:genre, arg1_len.
        #[arg(long, default_value = "disrpt_label")]
        by: String,
        /// Second variable for a cross-table or grouped view.
        #[arg(long)]
        cross: Option<String>,
        /// Compare the breakdown against another dataset.
        #[arg(long, conflicts_with = "cross")]
        compare: Option<String>,
        /// Drop cross-table cells below this count.
        #[arg(long, default_value_t = 0)]
        min_count: u64,
        /// Yates continuity correction for 2x2 tables.
        #[arg(long)]
        yates: bool,
        /// Write to this file instead of stdout.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Time queries from a file: load once, then the median of N runs each.
    Bench {
        dataset: String,
        /// One query per line; optional tab-separated filters such as
        /// `label=CONJUNCTION`, `label!=CONJUNCTION`, `direction=1>2`.
        queries: PathBuf,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        #[arg(long)]
        exact: bool,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP/JSON API.
    Serve {
        #[arg(long, env = "RELSCOPE_PORT", default_value_t = 8000)]
        port: u16,
        /// Listen on all interfaces instead of loopback.
        #[arg(long)]
        public: bool,
        /// Extra generated datasets, e.g. `synthetic:large:42`.
        #[arg(long)]
        synthetic: Vec<String>,
    },
}

#[derive(Debug, Clone, Args)]
struct QueryArgs {
    /// Patterns must match consecutive tokens.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    case_sensitive: bool,
    /// Operator-less queries also search the surrounding sentences.
    #[arg(long)]
    context: bool,
    #[arg(long, conflicts_with = "orig_label")]
    label: Option<String>,
    #[arg(long)]
    orig_label: Option<String>,
    /// `1>2` or `1<2`.
    #[arg(long)]
    direction: Option<String>,
    #[arg(long)]
    signal_type: Option<String>,
    #[arg(long)]
    signal_subtype: Option<String>,
    /// `present` or `absent`.
    #[arg(long)]
    any_signal: Option<String>,
    #[arg(long)]
    negate_label: bool,
    #[arg(long)]
    negate_direction: bool,
    #[arg(long)]
    negate_signal_type: bool,
    #[arg(long)]
    negate_signal_subtype: bool,
}

impl QueryArgs {
    fn options(&self) -> QueryOptions {
        QueryOptions {
            exact: self.exact,
            case_sensitive: self.case_sensitive,
            include_context: self.context,
        }
    }

    fn filters(&self) -> Result<Filters> {
        let mut f = Filters::default();
        let (value, which) = match (&self.label, &self.orig_label) {
            (Some(l), _) => (Some(l), LabelKind::Disrpt),
            (None, Some(l)) => (Some(l), LabelKind::Orig),
            _ => (None, LabelKind::Disrpt),
        };
        if let Some(v) = value {
            f.label = Some(LabelFilter { value: v.clone(), negated: self.negate_label, which });
        }
        if let Some(d) = &self.direction {
            let d = Direction::parse(d).ok_or_else(|| anyhow!("direction must be `1>2` or `1<2`, got `{d}`"))?;
            f.direction = Some(Negatable { value: d, negated: self.negate_direction });
        }
        if let Some(t) = &self.signal_type {
            f.signal_type = Some(Negatable { value: t.clone(), negated: self.negate_signal_type });
        }
        if let Some(t) = &self.signal_subtype {
            f.signal_subtype = Some(Negatable { value: t.clone(), negated: self.negate_signal_subtype });
        }
        if let Some(p) = &self.any_signal {
            f.any_signal = Some(parse_presence(p)?);
        }
        Ok(f)
    }

    fn state(&self, dataset: &str, query: &str) -> Result<QueryState> {
        let mut s = QueryState::new(dataset, query);
        s.options = self.options();
        s.filters = self.filters()?;
        Ok(s)
    }
}

fn parse_presence(s: &str) -> Result<Presence> {
    match s {
        "present" | "yes" => Ok(Presence::Present),
        "absent" | "no" => Ok(Presence::Absent),
        _ => bail!("any-signal must be `present` or `absent`, got `{s}`"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let env = Env { manifest: cli.manifest, data_root: cli.data_root };
    match cli.command {
        Command::Validate { paths } => validate(&env, &paths),
        Command::Query { dataset, query, q, count_only, limit, tsv } => {
            let corpus = env.corpus(&dataset)?;
            let state = q.state(corpus.id(), &query)?;
            if count_only {
                println!("{}", service::count_hits(&state, &corpus).map_err(diagnostic)?);
                return Ok(ExitCode::SUCCESS);
            }
            let spec = service::compile(&state, &corpus).map_err(diagnostic)?;
            let matches = evaluate(&spec, &corpus);
            if let Some(path) = tsv {
                let text = service::export_tsv(&state, ExportKind::Concordance, &corpus, None).map_err(diagnostic)?;
                write_out(&path, &text)?;
                if path.as_os_str() == "-" {
                    return Ok(ExitCode::SUCCESS);
                }
            }
            let mut out = std::io::stdout().lock();
            writeln!(out, "{} matches", matches.len())?;
            for m in matches.iter().take(limit.unwrap_or(usize::MAX)) {
                let v = MatchView::new(m, &corpus);
                writeln!(out, "{}\t{}\t{}\t{}", v.rel_id, v.disrpt_label, v.direction, v.text_line())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { dataset, query, q, by, cross, compare, min_count, yates, tsv } => {
            let corpus = env.corpus(&dataset)?;
            let mut state = q.state(corpus.id(), &query)?;
            state.breakdown = Some(by);
            state.crosstab = cross;
            state.min_count = min_count;
            state.yates = yates;
            let other = match &compare {
                Some(id) if id == corpus.id() => None,
                Some(id) => Some(env.corpus(id)?),
                None => None,
            };
            state.compare = compare;
            let other_ref = if state.compare.is_some() { Some(other.as_ref().unwrap_or(&corpus)) } else { None };
            let text = service::export_tsv(&state, ExportKind::infer(&state), &corpus, other_ref).map_err(diagnostic)?;
            write_out(tsv.as_deref().unwrap_or(Path::new("-")), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { dataset, queries, repetitions, exact, json } => bench(&env, &dataset, &queries, repetitions, exact, json),
        Command::Serve { port, public, synthetic } => serve(&env, port, public, &synthetic),
    }
}

/// Renders service errors with their code and structured detail.
fn diagnostic(e: ServiceError) -> anyhow::Error {
    match e.detail() {
        serde_json::Value::Null => anyhow!("{} ({})", e, e.code()),
        d => anyhow!("{} ({})\n{}", e, e.code(), d),
    }
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

struct Env {
    manifest: Option<PathBuf>,
    data_root: Option<PathBuf>,
}

impl Env {
    fn manifest(&self) -> Result<Manifest> {
        let path = self.manifest.as_ref().ok_or_else(|| anyhow!("no manifest: pass --manifest or set RELSCOPE_MANIFEST"))?;
        Manifest::load(path, self.data_root.as_deref()).with_context(|| format!("reading manifest {}", path.display()))
    }

    /// Loads a manifest dataset or builds a `synthetic:<small|large>:<seed>` one.
    fn dataset(&self, id: &str) -> Result<Dataset> {
        if let Some(cfg) = synthetic(id)? {
            return Ok(generate(&cfg).load()?);
        }
        let m = self.manifest()?;
        let entry = m.get(id).ok_or_else(|| {
            let known: Vec<&str> = m.entries.iter().map(|e| e.id.as_str()).collect();
            anyhow!("unknown dataset `{id}`; the manifest lists: {}", known.join(", "))
        })?;
        Ok(load_entry(entry, &m.base, BuildOptions::default())?.dataset)
    }

    fn corpus(&self, id: &str) -> Result<Corpus> {
        Ok(Corpus::new(self.dataset(id)?))
    }
}

fn synthetic(id: &str) -> Result<Option<SynthConfig>> {
    let Some(rest) = id.strip_prefix("synthetic:") else {
        return Ok(None);
    };
    let (size, seed) = rest.split_once(':').unwrap_or((rest, "1"));
    let seed: u64 = seed.parse().with_context(|| format!("bad seed in `{id}`"))?;
    let mut cfg = match size {
        "small" => SynthConfig::small(seed),
        "large" => SynthConfig::large(seed),
        _ => bail!("synthetic datasets are `synthetic:small:<seed>` or `synthetic:large:<seed>`"),
    };
    cfg.dataset_id = id.to_string();
    Ok(Some(cfg))
}

enum Job {
    Entry(ManifestEntry, PathBuf),
    Files { id: String, rels: Vec<PathBuf>, conllu: Vec<PathBuf> },
}

impl Job {
    fn id(&self) -> &str {
        match self {
            Job::Entry(e, _) => &e.id,
            Job::Files { id, .. } => id,
        }
    }

    /// Non-strict, so every alignment error is collected, not just the first.
    fn run(&self) -> Result<BuildReport, IngestError> {
        let opts = BuildOptions { strict: false };
        match self {
            Job::Entry(e, base) => load_entry(e, base, opts),
            Job::Files { id, rels, conllu } => load_files(id, rels, conllu, opts),
        }
    }
}

fn validate(env: &Env, paths: &[PathBuf]) -> Result<ExitCode> {
    let has_ext = |p: &PathBuf, ext: &str| p.extension().is_some_and(|e| e == ext);
    let jobs: Vec<Job> = if !paths.is_empty() && paths.iter().all(|p| has_ext(p, "rels") || has_ext(p, "conllu")) {
        let rels: Vec<PathBuf> = paths.iter().filter(|p| has_ext(p, "rels")).cloned().collect();
        let conllu: Vec<PathBuf> = paths.iter().filter(|p| has_ext(p, "conllu")).cloned().collect();
        let id = rels
            .first()
            .and_then(|p| p.file_stem())
            .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
        vec![Job::Files { id, rels, conllu }]
    } else {
        let m = match paths {
            [] => env.manifest()?,
            [one] => Manifest::load(one, env.data_root.as_deref()).with_context(|| format!("reading manifest {}", one.display()))?,
            _ => bail!("pass one manifest, or the .rels and .conllu files of one dataset"),
        };
        m.entries.iter().map(|e| Job::Entry(e.clone(), m.base.clone())).collect()
    };

    let mut clean = true;
    println!("dataset\trelations\tsentences\ttokens\tdocuments\tstatus");
    for job in &jobs {
        let id = job.id();
        match job.run() {
            Ok(report) => {
                let ds = &report.dataset;
                let status = if report.skipped.is_empty() { "ok".to_string() } else { format!("{} errors", report.skipped.len()) };
                println!("{id}\t{}\t{}\t{}\t{}\t{status}", ds.relations.len(), ds.sentence_count(), ds.token_count(), ds.documents.len());
                for e in &report.skipped {
                    eprintln!("{id}: {e}");
                    clean = false;
                }
            }
            Err(e) => {
                println!("{id}\t-\t-\t-\t-\tfailed");
                eprintln!("{id}: {e}");
                clean = false;
            }
        }
    }
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

/// One line of a bench file: query text, then tab-separated filters.
fn parse_bench_line(line: &str) -> Result<(String, Filters)> {
    let mut parts = line.split('\t');
    let query = parts.next().unwrap_or("").trim().to_string();
    let query = if query == "\"\"" { String::new() } else { query };
    let mut f = Filters::default();
    for item in parts.map(str::trim).filter(|p| !p.is_empty()) {
        let (key, negated, value) = match item.split_once("!=") {
            Some((k, v)) => (k, true, v),
            None => {
                let (k, v) = item.split_once('=').ok_or_else(|| anyhow!("filter `{item}` is not key=value or key!=value"))?;
                (k, false, v)
            }
        };
        let value = value.to_string();
        match key {
            "label" => f.label = Some(LabelFilter { value, negated, which: LabelKind::Disrpt }),
            "orig_label" => f.label = Some(LabelFilter { value, negated, which: LabelKind::Orig }),
            "direction" => {
                let d = Direction::parse(&value).ok_or_else(|| anyhow!("bad direction `{value}`"))?;
                f.direction = Some(Negatable { value: d, negated });
            }
            "signal_type" => f.signal_type = Some(Negatable { value, negated }),
            "signal_subtype" => f.signal_subtype = Some(Negatable { value, negated }),
            "any_signal" => f.any_signal = Some(parse_presence(&value)?),
            _ => bail!("unknown filter `{key}`"),
        }
    }
    Ok((query, f))
}

/// Resident set size in KiB, where /proc is available.
fn rss_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn bench(env: &Env, dataset: &str, queries: &Path, reps: usize, exact: bool, json: bool) -> Result<ExitCode> {
    let text = fs::read_to_string(queries).with_context(|| format!("reading {}", queries.display()))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).collect();
    let reps = reps.max(1);

    let rss_before = rss_kib();
    let start = Instant::now();
    let corpus = env.corpus(dataset)?;
    let load = start.elapsed();
    let rss_delta = rss_before.zip(rss_kib()).map(|(a, b)| b.saturating_sub(a));

    let mut rows = Vec::new();
    for line in lines {
        let (query, filters) = parse_bench_line(line)?;
        let mut state = QueryState::new(corpus.id(), &query);
        state.options.exact = exact;
        state.filters = filters;
        let spec = service::compile(&state, &corpus).map_err(diagnostic)?;
        let mut times = Vec::with_capacity(reps);
        let mut hits = 0;
        for _ in 0..reps {
            let t = Instant::now();
            hits = evaluate(&spec, &corpus).len();
            times.push(t.elapsed());
        }
        debug_assert_eq!(hits, count(&spec, &corpus));
        times.sort();
        rows.push((line.to_string(), hits, ms(times[times.len() / 2])));
    }

    if json {
        let report = serde_json::json!({
            "dataset": corpus.id(),
            "tokens": corpus.dataset().token_count(),
            "relations": corpus.dataset().relations.len(),
            "load_ms": ms(load),
            "rss_delta_kib": rss_delta,
            "repetitions": reps,
            "queries": rows.iter().map(|(q, hits, median)| serde_json::json!({"query": q, "hits": hits, "median_ms": median})).collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!(
            "{}: {} tokens, {} relations",
            corpus.id(),
            corpus.dataset().token_count(),
            corpus.dataset().relations.len()
        );
        println!("load\t{:.3}s", load.as_secs_f64());
        match rss_delta {
            Some(k) => println!("rss delta after load\t{:.1} MiB", k as f64 / 1024.0),
            None => println!("rss delta after load\tn/a"),
        }
        if !rows.is_empty() {
            println!("query\thits\tmedian_ms (of {reps})");
            for (q, hits, median) in &rows {
                println!("{}\t{hits}\t{median:.3}", q.replace('\t', " "));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(env: &Env, port: u16, public: bool, synthetic_ids: &[String]) -> Result<ExitCode> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let mut registry = match &env.manifest {
        Some(_) => Registry::from_manifest(&env.manifest()?),
        None => Registry::default(),
    };
    for id in synthetic_ids {
        let cfg = synthetic(id)?.ok_or_else(|| anyhow!("`{id}` is not a synthetic dataset id"))?;
        registry.insert(generate(&cfg).load()?);
    }
    if registry.ids().next().is_none() {
        bail!("no datasets: pass --manifest or --synthetic");
    }
    let ip = if public { IpAddr::V4(Ipv4Addr::UNSPECIFIED) } else { IpAddr::V4(Ipv4Addr::LOCALHOST) };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(relscope_server::serve(SocketAddr::new(ip, port), registry))?;
    Ok(ExitCode::SUCCESS)
}
