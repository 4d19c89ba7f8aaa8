//! Import of piStar (iStar 2.0 web tool) JSON documents.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};
use thiserror::Error;

use super::validate::{validate, IssueCode, Severity, ValidationReport};
use super::{
    Actor, ContributionLabel, Dependum, ElementKind, GoalModel, IntentionalElement, Link, LinkType, UNOWNED_ACTOR,
};

#[derive(Debug, Error)]
pub enum PistarError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("missing required field '{0}'")]
    MissingField(String),
    #[error("invalid value at '{path}': {message}")]
    Schema { path: String, message: String },
}

fn node_kind(type_str: &str) -> Option<ElementKind> {
    match type_str {
        "istar.Goal" => Some(ElementKind::Goal),
        "istar.Quality" | "istar.Softgoal" => Some(ElementKind::Quality),
        "istar.Task" => Some(ElementKind::Task),
        "istar.Resource" => Some(ElementKind::Resource),
        _ => None,
    }
}

struct Reader<'a> {
    path: String,
    obj: &'a Map<String, Value>,
}

impl<'a> Reader<'a> {
    fn new(path: String, value: &'a Value) -> Result<Self, PistarError> {
        match value.as_object() {
            Some(obj) => Ok(Reader { path, obj }),
            None => Err(PistarError::Schema { path, message: "expected an object".into() }),
        }
    }

    fn field_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn str(&self, key: &str) -> Result<&'a str, PistarError> {
        match self.obj.get(key) {
            None => Err(PistarError::MissingField(self.field_path(key))),
            Some(v) => v
                .as_str()
                .ok_or_else(|| PistarError::Schema { path: self.field_path(key), message: "expected a string".into() }),
        }
    }

    fn opt_str(&self, key: &str) -> Result<Option<&'a str>, PistarError> {
        match self.obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(_) => self.str(key).map(Some),
        }
    }

    fn array(&self, key: &str, required: bool) -> Result<&'a [Value], PistarError> {
        match self.obj.get(key) {
            None if required => Err(PistarError::MissingField(self.field_path(key))),
            None => Ok(&[]),
            Some(v) => v
                .as_array()
                .map(Vec::as_slice)
                .ok_or_else(|| PistarError::Schema { path: self.field_path(key), message: "expected an array".into() }),
        }
    }
}

fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    let trimmed = out.trim_end_matches('-');
    if trimmed.is_empty() {
        "pistar-model".to_string()
    } else {
        trimmed.to_string()
    }
}

struct RawLink<'a> {
    id: &'a str,
    type_str: &'a str,
    source: &'a str,
    target: &'a str,
    label: Option<&'a str>,
}

/// Maps a piStar document onto a [`GoalModel`].
///
/// Unsupported node and link types are skipped with a warning. Nodes outside
/// every actor are grouped under [`UNOWNED_ACTOR`]. The returned report also
/// contains the structural validation of the imported model.
pub fn import_pistar(document: &str) -> Result<(GoalModel, ValidationReport), PistarError> {
    let root: Value = serde_json::from_str(document).map_err(|e| PistarError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let top = Reader::new(String::new(), &root)?;
    let actors_json = top.array("actors", true)?;
    let links_json = top.array("links", true)?;
    let orphans_json = top.array("orphans", false)?;
    let deps_json = top.array("dependencies", false)?;

    let name = root.get("diagram").and_then(|d| d.get("name")).and_then(Value::as_str).unwrap_or("").to_string();
    let mut model = GoalModel::new(slug(&name), if name.is_empty() { "piStar model".to_string() } else { name });
    let mut import = ValidationReport::default();
    let mut skipped: BTreeSet<String> = BTreeSet::new();
    let mut actor_ids: BTreeSet<String> = BTreeSet::new();

    let mut read_node = |path: String, v: &Value, report: &mut ValidationReport| -> Result<Option<IntentionalElement>, PistarError> {
        let r = Reader::new(path, v)?;
        let id = r.str("id")?.to_string();
        let text = r.opt_str("text")?.unwrap_or_default().to_string();
        let type_str = r.str("type")?;
        match node_kind(type_str) {
            Some(kind) => Ok(Some(IntentionalElement { id, name: text, kind })),
            None => {
                report.push(
                    Severity::Warning,
                    IssueCode::UnsupportedNode,
                    &id,
                    format!("node type '{type_str}' is not supported and was skipped"),
                );
                skipped.insert(id);
                Ok(None)
            }
        }
    };

    for (i, a) in actors_json.iter().enumerate() {
        let r = Reader::new(format!("actors[{i}]"), a)?;
        let id = r.str("id")?.to_string();
        let name = r.opt_str("text")?.unwrap_or_default().to_string();
        let mut elements = Vec::new();
        for (j, n) in r.array("nodes", false)?.iter().enumerate() {
            if let Some(e) = read_node(format!("actors[{i}].nodes[{j}]"), n, &mut import)? {
                elements.push(e);
            }
        }
        actor_ids.insert(id.clone());
        model.actors.push(Actor { id, name, elements });
    }

    let mut unowned = Vec::new();
    for (i, n) in orphans_json.iter().enumerate() {
        if let Some(e) = read_node(format!("orphans[{i}]"), n, &mut import)? {
            unowned.push(e);
        }
    }
    if !unowned.is_empty() {
        match model.actors.iter_mut().find(|a| a.id == UNOWNED_ACTOR) {
            Some(actor) => actor.elements.extend(unowned),
            None => model.actors.push(Actor { id: UNOWNED_ACTOR.into(), name: "Unowned".into(), elements: unowned }),
        }
    }

    let mut dependums: BTreeMap<String, Dependum> = BTreeMap::new();
    let mut dependum_order = Vec::new();
    for (i, d) in deps_json.iter().enumerate() {
        if let Some(e) = read_node(format!("dependencies[{i}]"), d, &mut import)? {
            dependum_order.push(e.id.clone());
            dependums.insert(e.id.clone(), Dependum { id: e.id, name: e.name, kind: e.kind });
        }
    }

    let mut raw = Vec::new();
    for (i, l) in links_json.iter().enumerate() {
        let r = Reader::new(format!("links[{i}]"), l)?;
        raw.push(RawLink {
            id: r.str("id")?,
            type_str: r.str("type")?,
            source: r.str("source")?,
            target: r.str("target")?,
            label: r.opt_str("label")?,
        });
    }

    let skip_link = |report: &mut ValidationReport, id: &str, why: String| {
        report.push(Severity::Warning, IssueCode::UnsupportedLink, id, why);
    };

    // depender -> dependum and dependum -> dependee halves, keyed by dependum
    let mut incoming: BTreeMap<&str, Vec<&RawLink>> = BTreeMap::new();
    let mut outgoing: BTreeMap<&str, Vec<&RawLink>> = BTreeMap::new();

    for link in &raw {
        if let Some(end) = [link.source, link.target].into_iter().find(|e| skipped.contains(*e)) {
            skip_link(&mut import, link.id, format!("link references skipped node '{end}'"));
            continue;
        }
        let link_type = match link.type_str {
            "istar.ContributionLink" => match link.label.map(str::parse::<ContributionLabel>) {
                Some(Ok(label)) => LinkType::Contribution(label),
                _ => {
                    skip_link(
                        &mut import,
                        link.id,
                        format!("contribution label '{}' is not supported", link.label.unwrap_or("")),
                    );
                    continue;
                }
            },
            "istar.AndRefinementLink" => LinkType::AndRefinement,
            "istar.OrRefinementLink" => LinkType::OrRefinement,
            "istar.DependencyLink" => {
                if dependums.contains_key(link.target) {
                    incoming.entry(link.target).or_default().push(link);
                } else if dependums.contains_key(link.source) {
                    outgoing.entry(link.source).or_default().push(link);
                } else {
                    skip_link(&mut import, link.id, "dependency link does not touch a dependum".into());
                }
                continue;
            }
            other => {
                skip_link(&mut import, link.id, format!("link type '{other}' is not supported"));
                continue;
            }
        };
        model.links.push(Link {
            id: link.id.to_string(),
            link_type,
            source: link.source.to_string(),
            target: link.target.to_string(),
        });
    }

    for dependum_id in dependum_order {
        let ins = incoming.remove(dependum_id.as_str()).unwrap_or_default();
        let outs = outgoing.remove(dependum_id.as_str()).unwrap_or_default();
        let mut kept = false;
        for i in &ins {
            for o in &outs {
                if actor_ids.contains(i.source) || actor_ids.contains(o.target) {
                    skip_link(
                        &mut import,
                        i.id,
                        "actor-level dependencies are not supported; endpoints must be intentional elements".into(),
                    );
                    continue;
                }
                let id = if outs.len() == 1 { i.id.to_string() } else { format!("{}+{}", i.id, o.id) };
                model.links.push(Link {
                    id,
                    link_type: LinkType::Dependency { dependum: dependum_id.clone() },
                    source: i.source.to_string(),
                    target: o.target.to_string(),
                });
                kept = true;
            }
        }
        let dependum = dependums.remove(&dependum_id).expect("dependum registered above");
        if kept {
            model.dependums.push(dependum);
        } else {
            import.push(
                Severity::Warning,
                IssueCode::UnsupportedNode,
                &dependum_id,
                "dependum has no complete element-to-element dependency and was skipped".into(),
            );
        }
    }

    let mut report = validate(&model);
    report.extend(import);
    Ok((model, report))
}
