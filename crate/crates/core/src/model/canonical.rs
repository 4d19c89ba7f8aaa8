//! Canonical JSON persistence of a model and its prioritization.
//!
//! Lists are sorted by id, maps by key, and struct fields are written in a
//! fixed order, so equal inputs always produce byte-identical documents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GoalModel, Prioritization};

pub const FORMAT_VERSION: &str = "1.0";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct CanonicalDocument {
    pub format_version: String,
    pub model: GoalModel,
    #[serde(default)]
    pub prioritization: Prioritization,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("invalid document at '{path}': {message}")]
    Schema { path: String, message: String },
    #[error("unsupported formatVersion '{0}' (expected {FORMAT_VERSION})")]
    Version(String),
}

/// Serializes a model and prioritization as canonical JSON text.
pub fn save(model: &GoalModel, prioritization: &Prioritization) -> String {
    let doc = CanonicalDocument {
        format_version: FORMAT_VERSION.to_string(),
        model: model.normalized(),
        prioritization: prioritization.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model serialization cannot fail");
    text.push('\n');
    text
}

/// Parses canonical JSON text. Errors name the first offending path.
pub fn load(text: &str) -> Result<(GoalModel, Prioritization), LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: CanonicalDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        LoadError::Schema { path, message: e.into_inner().to_string() }
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(LoadError::Version(doc.format_version));
    }
    Ok((doc.model, doc.prioritization))
}

/// Returns true when the text looks like a canonical document rather than a
/// piStar export.
pub(crate) fn looks_canonical(value: &serde_json::Value) -> bool {
    value.get("formatVersion").is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::Level;
    use crate::model::{Actor, ElementKind, IntentionalElement};

    fn fixture() -> (GoalModel, Prioritization) {
        let mut m = GoalModel::new("m", "M");
        m.actors.push(Actor {
            id: "b".into(),
            name: "B".into(),
            elements: vec![
                IntentionalElement { id: "z".into(), name: "Z".into(), kind: ElementKind::Task },
                IntentionalElement { id: "y".into(), name: "Y".into(), kind: ElementKind::Goal },
            ],
        });
        m.actors.push(Actor { id: "a".into(), name: "A".into(), elements: vec![] });
        let mut p = Prioritization::default();
        p.set("z", Level::High, Level::Low);
        p.set_weight("b", Level::Medium);
        (m, p)
    }

    #[test]
    fn round_trip_and_canonical_bytes() {
        let (m, p) = fixture();
        let text = save(&m, &p);
        let (m2, p2) = load(&text).unwrap();
        assert!(m.semantically_eq(&m2));
        assert_eq!(p, p2);
        assert_eq!(save(&m2, &p2), text);
        assert!(text.starts_with("{\n  \"formatVersion\": \"1.0\",\n  \"model\""));
    }

    #[test]
    fn bad_level_names_path() {
        let (m, p) = fixture();
        let text = save(&m, &p).replace("\"High\"", "\"Gigantic\"");
        match load(&text).unwrap_err() {
            LoadError::Schema { path, .. } => assert_eq!(path, "prioritization.elementPriorities.z.importance"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_version() {
        let (m, p) = fixture();
        let text = save(&m, &p).replace("\"1.0\"", "\"0.9\"");
        assert!(matches!(load(&text), Err(LoadError::Version(v)) if v == "0.9"));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"formatVersion":"1.0","model":{"id":"m","name":"m","colour":"red"}}"#;
        match load(text).unwrap_err() {
            LoadError::Schema { path, .. } => assert_eq!(path, "model.colour"),
            other => panic!("unexpected {other}"),
        }
    }
}
