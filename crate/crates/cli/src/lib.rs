//! Argument parsing and command execution for the `goalvalue` binary.
//!
//! Exit codes: 0 on success, 1 on domain errors (invalid model, incomplete
//! prioritization, unknown ids, missing files), 2 on usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use goalvalue_core::analysis::{analyze, analyze_detailed, explain, AnalysisResult, RankBy, TableRow};
use goalvalue_core::model::{self, GoalModel, Prioritization};
use goalvalue_core::propagation::PropagationConfig;
use goalvalue_core::store::{Snapshot, Store};
use goalvalue_core::Level;

/// Timestamp written by `--deterministic`.
pub const FIXED_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Parser)]
#[command(name = "goalvalue", version, about = "Value analysis of iStar goal models", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a piStar export (or canonical file) to a canonical model file.
    Import {
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a model (and its prioritization) for structural problems.
    Validate {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Set importance/confidence levels and stakeholder weights.
    Prioritize {
        input: PathBuf,
        /// <elementId>=<Importance>,<Confidence>
        #[arg(long = "set", value_name = "ID=IMP,CONF", value_parser = parse_set)]
        set: Vec<(String, Level, Level)>,
        /// <actorId>=<Importance>
        #[arg(long, value_name = "ACTOR=LEVEL", value_parser = parse_weight)]
        stakeholder: Vec<(String, Level)>,
        /// Prioritization JSON applied before --set/--stakeholder.
        #[arg(long)]
        from_file: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Propagate impacts and compute global and local values.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Record the result as a new version in this store.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Fix the result timestamp so output is reproducible.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        json: bool,
    },
    /// Sort the elements of a result by value.
    Rank {
        /// Result JSON (from `analyze --json`) or snapshot file.
        #[arg(required_unless_present = "model", conflicts_with = "model")]
        result: Option<PathBuf>,
        #[command(flatten)]
        stored: StoredArgs,
        #[arg(long, default_value = "global", value_parser = parse_rank_by)]
        by: RankBy,
        /// Only this actor's elements.
        #[arg(long)]
        actor: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Show where an element's value comes from.
    Explain {
        element: String,
        /// Model file to analyze; otherwise a stored version is used.
        #[arg(long, required_unless_present = "model", conflicts_with = "model")]
        input: Option<PathBuf>,
        #[command(flatten)]
        stored: StoredArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        json: bool,
    },
    /// List the recorded versions of a model.
    History {
        #[arg(long, default_value = ".goalvalue")]
        store: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        json: bool,
    },
    /// Compare two recorded versions.
    Diff {
        #[arg(long, default_value = ".goalvalue")]
        store: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value = ".goalvalue")]
        store: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Damping factor, strictly between 0 and 1.
    #[arg(long, value_parser = parse_lambda)]
    pub lambda: Option<f64>,
    #[arg(long, value_parser = parse_epsilon)]
    pub epsilon: Option<f64>,
    #[arg(long = "max-iters", value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: Option<u64>,
}

impl ConfigArgs {
    pub fn config(&self) -> PropagationConfig {
        let d = PropagationConfig::default();
        PropagationConfig {
            lambda: self.lambda.unwrap_or(d.lambda),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            max_iterations: self.max_iters.map_or(d.max_iterations, |n| n as usize),
        }
    }
}

#[derive(Debug, Args)]
pub struct StoredArgs {
    #[arg(long, default_value = ".goalvalue")]
    pub store: PathBuf,
    /// Model id in the store.
    #[arg(long)]
    pub model: Option<String>,
    /// Version to read; latest when omitted.
    #[arg(long, requires = "model")]
    pub version: Option<u32>,
}

fn parse_lambda(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("lambda must lie strictly between 0 and 1, got {s}"))
    }
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("epsilon must be positive, got {s}"))
    }
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.trim().parse().map_err(|_| format!("unknown level '{s}' (expected VeryLow, Low, Medium, High or VeryHigh)"))
}

fn parse_set(s: &str) -> Result<(String, Level, Level), String> {
    let (id, levels) = s.rsplit_once('=').ok_or("expected <elementId>=<Importance>,<Confidence>")?;
    let (imp, conf) = levels.split_once(',').ok_or("expected <elementId>=<Importance>,<Confidence>")?;
    if id.is_empty() {
        return Err("empty element id".into());
    }
    Ok((id.to_string(), parse_level(imp)?, parse_level(conf)?))
}

fn parse_weight(s: &str) -> Result<(String, Level), String> {
    let (id, level) = s.rsplit_once('=').ok_or("expected <actorId>=<Importance>")?;
    if id.is_empty() {
        return Err("empty actor id".into());
    }
    Ok((id.to_string(), parse_level(level)?))
}

fn parse_rank_by(s: &str) -> Result<RankBy, String> {
    s.parse()
}

/// Parses arguments without the program name.
pub fn parse_args<I, T>(args: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(std::iter::once(OsString::from("goalvalue")).chain(args.into_iter().map(Into::into)))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

/// Runs `cli`, writing results to `out` and diagnostics to `err`. Returns
/// the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Domain(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, target: Option<&Path>, text: &str) -> Result<(), CliError> {
    match target {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Domain(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(domain),
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn load_model(path: &Path) -> Result<(GoalModel, Prioritization, model::ValidationReport), CliError> {
    let text = read(path)?;
    model::load_any(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn open_store(path: &Path) -> Result<Store, CliError> {
    Store::open(path).map_err(domain)
}

fn stored_snapshot(stored: &StoredArgs, model_id: &str) -> Result<(Store, Snapshot), CliError> {
    let store = open_store(&stored.store)?;
    let version = match stored.version {
        Some(v) => v,
        None => store
            .latest_version(model_id)
            .map_err(domain)?
            .ok_or_else(|| CliError::Domain(format!("model '{model_id}' has no recorded versions")))?,
    };
    let snapshot = store.get(model_id, version).map_err(domain)?;
    Ok((store, snapshot))
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Import { input, output } => {
            let (m, p, report) = load_model(&input)?;
            write!(err, "{report}").map_err(domain)?;
            if !report.is_ok() {
                return Err(CliError::Domain(format!("{} has validation errors", input.display())));
            }
            emit(out, output.as_deref(), &model::save(&m, &p))
        }
        Command::Validate { input, json } => {
            let (m, _, report) = load_model(&input)?;
            if json {
                emit(out, None, &json_line(&report))?;
            } else if report.is_empty() {
                writeln!(out, "ok: {} elements, {} links", m.element_count(), m.links.len()).map_err(domain)?;
            } else {
                write!(out, "{report}").map_err(domain)?;
            }
            if report.is_ok() {
                Ok(())
            } else {
                Err(CliError::Domain(format!("{} error(s) found", report.errors.len())))
            }
        }
        Command::Prioritize { input, set, stakeholder, from_file, output } => {
            let (m, mut p, _) = load_model(&input)?;
            let mut patch = match from_file {
                Some(f) => serde_json::from_str::<Prioritization>(&read(&f)?)
                    .map_err(|e| CliError::Domain(format!("{}: {e}", f.display())))?,
                None => Prioritization::default(),
            };
            for (id, imp, conf) in set {
                patch.set(id, imp, conf);
            }
            for (actor, w) in stakeholder {
                patch.set_weight(actor, w);
            }
            let mut unknown = patch.unknown_keys(&m);
            unknown.extend(patch.element_priorities.keys().filter(|k| m.is_dependum(k)).cloned());
            if !unknown.is_empty() {
                return Err(CliError::Domain(format!("unknown element or actor ids: {}", unknown.join(", "))));
            }
            p.merge(&patch);
            let missing = p.missing(&m);
            if !missing.is_empty() {
                writeln!(err, "note: still unprioritized: {}", missing.join(", ")).map_err(domain)?;
            }
            emit(out, output.as_deref(), &model::save(&m, &p))
        }
        Command::Analyze { input, config, store, deterministic, json } => {
            let (m, p, _) = load_model(&input)?;
            let mut result = analyze(&m, &p, &config.config()).map_err(domain)?;
            if deterministic {
                result.created_at = FIXED_TIMESTAMP.to_string();
            }
            let version = match store {
                Some(dir) => {
                    let store = open_store(&dir)?;
                    store.put_model(&m).map_err(domain)?;
                    Some(store.record(&m.id, &p, &result).map_err(domain)?)
                }
                None => None,
            };
            if json {
                emit(out, None, &json_line(&result))?;
                if let Some(v) = version {
                    writeln!(err, "recorded {} version {v}", m.id).map_err(domain)?;
                }
            } else {
                emit(out, None, &render_table(&result.table))?;
                for w in &result.warnings {
                    writeln!(err, "warning: {w}").map_err(domain)?;
                }
                if let Some(v) = version {
                    writeln!(out, "recorded {} version {v}", m.id).map_err(domain)?;
                }
            }
            Ok(())
        }
        Command::Rank { result, stored, by, actor, json } => {
            let result = match (&result, &stored.model) {
                (Some(path), _) => read_result(path)?,
                (None, Some(id)) => stored_snapshot(&stored, id)?.1.result,
                (None, None) => return Err(CliError::Usage("give a result file or --model".into())),
            };
            let ranked = result.rank(by, actor.as_deref()).map_err(domain)?;
            let rows: Vec<serde_json::Value> = ranked
                .iter()
                .enumerate()
                .map(|(i, (id, value))| {
                    let name = result.element(id).map(|e| e.name.as_str()).unwrap_or_default();
                    serde_json::json!({ "rank": i + 1, "elementId": id, "name": name, "value": value })
                })
                .collect();
            if json {
                return emit(out, None, &json_line(&rows));
            }
            let width = rows.iter().map(|r| r["name"].as_str().unwrap_or("").chars().count()).max().unwrap_or(4).max(4);
            let mut text = format!("{:>4}  {:<width$}  {:>9}\n", "#", "Name", "Value");
            for (i, r) in rows.iter().enumerate() {
                let value = goalvalue_core::analysis::round2(r["value"].as_f64().unwrap_or(0.0));
                let _ = writeln!(text, "{:>4}  {:<width$}  {:>9.2}", i + 1, r["name"].as_str().unwrap_or(""), value);
            }
            emit(out, None, &text)
        }
        Command::Explain { element, input, stored, config, json } => {
            let (m, p, cfg, result) = match (&input, &stored.model) {
                (Some(path), _) => {
                    let (m, p, _) = load_model(path)?;
                    let cfg = config.config();
                    let result = analyze(&m, &p, &cfg).map_err(domain)?;
                    (m, p, cfg, result)
                }
                (None, Some(id)) => {
                    let (store, snap) = stored_snapshot(&stored, id)?;
                    let m = store.get_model(id).map_err(domain)?;
                    (m, snap.prioritization, snap.config, snap.result)
                }
                (None, None) => return Err(CliError::Usage("give --input or --model".into())),
            };
            let analysis = analyze_detailed(&m, &p, &cfg).map_err(domain)?;
            let prov = explain(&result, &m, &analysis.propagation, &element).map_err(domain)?;
            if json {
                return emit(out, None, &json_line(&prov));
            }
            let mut text = format!(
                "{} ({}): global {:.2}, local {:.2}\n",
                prov.element_id,
                prov.actor_id,
                goalvalue_core::analysis::round2(prov.global_value),
                goalvalue_core::analysis::round2(prov.local_value)
            );
            for e in &prov.entries {
                let origin = if e.is_self { "self" } else if e.same_actor { "same actor" } else { "other actor" };
                let _ = writeln!(text, "  {:>9.4}  {}  [{}; {}]  {}", e.impact, e.source_id, e.source_actor, origin, e.impact_tfn);
            }
            emit(out, None, &text)
        }
        Command::History { store, model, json } => {
            let history = open_store(&store)?.history(&model).map_err(domain)?;
            if json {
                return emit(out, None, &json_line(&history));
            }
            let mut text = String::new();
            for h in &history {
                let top = match (&h.summary.top_element, h.summary.top_value) {
                    (Some(id), Some(v)) => format!("top {id} ({:.2})", goalvalue_core::analysis::round2(v)),
                    _ => "no elements".into(),
                };
                let _ = writeln!(text, "v{:04}  {}  {} elements  {}", h.version, h.created_at, h.summary.element_count, top);
            }
            emit(out, None, &text)
        }
        Command::Diff { store, model, from, to, json } => {
            let diff = open_store(&store)?.diff(&model, from, to).map_err(domain)?;
            if json {
                return emit(out, None, &json_line(&diff));
            }
            let mut text = format!("{model}: v{from:04} -> v{to:04}\n");
            for e in &diff.elements {
                let _ = writeln!(
                    text,
                    "  {:<24} {:>8.2} -> {:>8.2}  ({:+.2})  rank {} -> {}  {}/{} -> {}/{}",
                    e.name,
                    e.global_value_before,
                    e.global_value_after,
                    e.delta,
                    e.rank_before,
                    e.rank_after,
                    e.importance_before,
                    e.confidence_before,
                    e.importance_after,
                    e.confidence_after,
                );
            }
            for id in &diff.added {
                let _ = writeln!(text, "  added {id}");
            }
            for id in &diff.removed {
                let _ = writeln!(text, "  removed {id}");
            }
            emit(out, None, &text)
        }
        Command::Serve { port, host, store } => {
            let store = open_store(&store)?;
            let addr = SocketAddr::new(host, port);
            writeln!(err, "listening on http://{addr}").map_err(domain)?;
            let runtime = tokio::runtime::Runtime::new().map_err(domain)?;
            runtime.block_on(goalvalue_server::serve(addr, store)).map_err(domain)
        }
    }
}

/// Reads `analyze --json` output or a stored snapshot file.
fn read_result(path: &Path) -> Result<AnalysisResult, CliError> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    let parsed = if value.get("result").is_some() {
        serde_json::from_value::<Snapshot>(value).map(|s| s.result)
    } else {
        serde_json::from_value::<AnalysisResult>(value)
    };
    parsed.map_err(|e| CliError::Domain(format!("{}: not an analysis result: {e}", path.display())))
}

/// The seven-column value table.
pub fn render_table(rows: &[TableRow]) -> String {
    let headers = ["Name", "Importance", "Confidence", "Global value", "Local value", "Same-actor value", "Other-actor value"];
    let name_w = rows.iter().map(|r| r.name.chars().count()).chain([headers[0].len()]).max().unwrap_or(4);
    let mut text = format!("{:<name_w$}", headers[0]);
    for h in &headers[1..3] {
        let _ = write!(text, "  {h:<10}");
    }
    for h in &headers[3..] {
        let _ = write!(text, "  {h:>w$}", w = h.len());
    }
    text.push('\n');
    for r in rows {
        let _ = write!(text, "{:<name_w$}  {:<10}  {:<10}", r.name, r.importance.as_str(), r.confidence.as_str());
        let values = [r.global_value, r.local_value, r.same_actor_value, r.other_actor_value];
        for (h, v) in headers[3..].iter().zip(values) {
            let _ = write!(text, "  {v:>w$.2}", w = h.len());
        }
        text.push('\n');
    }
    text
}
