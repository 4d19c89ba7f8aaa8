//! Goal model structure: actors owning intentional elements, dependums and
//! typed links, plus the stakeholder prioritization attached to a model.

mod canonical;
mod pistar;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fuzzy::Level;

pub use canonical::{load, save, CanonicalDocument, LoadError, FORMAT_VERSION};
pub use pistar::{import_pistar, PistarError};
pub use validate::{validate, validate_with, Issue, IssueCode, Severity, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error(transparent)]
    Pistar(#[from] PistarError),
    #[error(transparent)]
    Canonical(#[from] LoadError),
}

/// Loads either a canonical document or a piStar export, detected by the
/// presence of a `formatVersion` field. The report includes prioritization
/// checks for canonical documents.
pub fn load_any(text: &str) -> Result<(GoalModel, Prioritization, ValidationReport), ImportError> {
    let canonical = serde_json::from_str::<serde_json::Value>(text).is_ok_and(|v| canonical::looks_canonical(&v));
    if canonical {
        let (model, prioritization) = load(text)?;
        let report = validate_with(&model, Some(&prioritization));
        Ok((model, prioritization, report))
    } else {
        let (model, report) = import_pistar(text)?;
        Ok((model, Prioritization::default(), report))
    }
}

/// Owner id given to elements that sit outside every actor.
pub const UNOWNED_ACTOR: &str = "__unowned__";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Goal,
    Quality,
    Task,
    Resource,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Goal => "goal",
            ElementKind::Quality => "quality",
            ElementKind::Task => "task",
            ElementKind::Resource => "resource",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentionalElement {
    pub id: String,
    pub name: String,
    pub kind: ElementKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actor {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub elements: Vec<IntentionalElement>,
}

/// Intermediary of a dependency. Dependums relay value but are never
/// prioritized or ranked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dependum {
    pub id: String,
    pub name: String,
    pub kind: ElementKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContributionLabel {
    Make,
    Help,
    Hurt,
    Break,
}

impl ContributionLabel {
    pub fn weight(self) -> f64 {
        match self {
            ContributionLabel::Make => 1.0,
            ContributionLabel::Help => 0.5,
            ContributionLabel::Hurt => -0.5,
            ContributionLabel::Break => -1.0,
        }
    }
}

impl std::str::FromStr for ContributionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "make" => Ok(ContributionLabel::Make),
            "help" => Ok(ContributionLabel::Help),
            "hurt" => Ok(ContributionLabel::Hurt),
            "break" => Ok(ContributionLabel::Break),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinkType {
    Contribution(ContributionLabel),
    AndRefinement,
    OrRefinement,
    /// `source` depends on `target` for the dependum.
    Dependency { dependum: String },
}

impl LinkType {
    pub fn is_refinement(&self) -> bool {
        matches!(self, LinkType::AndRefinement | LinkType::OrRefinement)
    }
}

/// A typed link between two intentional elements.
///
/// Refinements point child to parent, contributions point contributor to
/// the contributed element, and a dependency points depender to dependee
/// through its dependum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LinkRepr", into = "LinkRepr")]
pub struct Link {
    pub id: String,
    pub link_type: LinkType,
    pub source: String,
    pub target: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct LinkRepr {
    id: String,
    #[serde(rename = "type")]
    link_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<ContributionLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dependum: Option<String>,
    source: String,
    target: String,
}

impl TryFrom<LinkRepr> for Link {
    type Error = String;

    fn try_from(r: LinkRepr) -> Result<Self, Self::Error> {
        let link_type = match (r.link_type.as_str(), r.label, r.dependum) {
            ("contribution", Some(label), None) => LinkType::Contribution(label),
            ("contribution", None, _) => return Err(format!("contribution link '{}' has no label", r.id)),
            ("andRefinement", None, None) => LinkType::AndRefinement,
            ("orRefinement", None, None) => LinkType::OrRefinement,
            ("dependency", None, Some(dependum)) => LinkType::Dependency { dependum },
            ("dependency", None, None) => return Err(format!("dependency link '{}' has no dependum", r.id)),
            ("andRefinement" | "orRefinement" | "dependency", Some(_), _) => {
                return Err(format!("only contribution links carry a label (link '{}')", r.id))
            }
            (t @ ("contribution" | "andRefinement" | "orRefinement"), _, Some(_)) => {
                return Err(format!("{t} link '{}' cannot carry a dependum", r.id))
            }
            (other, _, _) => return Err(format!("unknown link type '{other}'")),
        };
        Ok(Link { id: r.id, link_type, source: r.source, target: r.target })
    }
}

impl From<Link> for LinkRepr {
    fn from(link: Link) -> Self {
        let (link_type, label, dependum) = match link.link_type {
            LinkType::Contribution(label) => ("contribution", Some(label), None),
            LinkType::AndRefinement => ("andRefinement", None, None),
            LinkType::OrRefinement => ("orRefinement", None, None),
            LinkType::Dependency { dependum } => ("dependency", None, Some(dependum)),
        };
        LinkRepr {
            id: link.id,
            link_type: link_type.to_string(),
            label,
            dependum,
            source: link.source,
            target: link.target,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalModel {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub actors: Vec<Actor>,
    #[serde(default)]
    pub orphans: Vec<IntentionalElement>,
    #[serde(default)]
    pub dependums: Vec<Dependum>,
    #[serde(default)]
    pub links: Vec<Link>,
    /// Optional reference to a picture of the model, passed through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

/// An intentional element together with the id of the actor owning it.
#[derive(Clone, Copy, Debug)]
pub struct OwnedElement<'a> {
    pub owner: &'a str,
    pub element: &'a IntentionalElement,
}

impl GoalModel {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        GoalModel { id: id.into(), name: name.into(), ..Default::default() }
    }

    /// All intentional elements with their owners; orphans are reported as
    /// owned by [`UNOWNED_ACTOR`].
    pub fn elements(&self) -> impl Iterator<Item = OwnedElement<'_>> {
        self.actors
            .iter()
            .flat_map(|a| a.elements.iter().map(move |e| OwnedElement { owner: a.id.as_str(), element: e }))
            .chain(self.orphans.iter().map(|e| OwnedElement { owner: UNOWNED_ACTOR, element: e }))
    }

    pub fn element(&self, id: &str) -> Option<OwnedElement<'_>> {
        self.elements().find(|e| e.element.id == id)
    }

    /// Owning actor id of an intentional element; `None` for dependums and
    /// unknown ids.
    pub fn owner_of(&self, id: &str) -> Option<&str> {
        self.element(id).map(|e| e.owner)
    }

    pub fn dependum(&self, id: &str) -> Option<&Dependum> {
        self.dependums.iter().find(|d| d.id == id)
    }

    pub fn is_dependum(&self, id: &str) -> bool {
        self.dependum(id).is_some()
    }

    /// Ids of all owners, including the synthetic one when orphans exist.
    pub fn owner_ids(&self) -> BTreeSet<&str> {
        self.elements().map(|e| e.owner).chain(self.actors.iter().map(|a| a.id.as_str())).collect()
    }

    pub fn element_count(&self) -> usize {
        self.actors.iter().map(|a| a.elements.len()).sum::<usize>() + self.orphans.len()
    }

    /// Map from element id to owner id for every intentional element.
    pub fn owner_map(&self) -> BTreeMap<&str, &str> {
        self.elements().map(|e| (e.element.id.as_str(), e.owner)).collect()
    }

    /// Copy with every list sorted by id, the form used for persistence and
    /// semantic comparison.
    pub fn normalized(&self) -> GoalModel {
        let mut m = self.clone();
        for actor in &mut m.actors {
            actor.elements.sort_by(|a, b| a.id.cmp(&b.id));
        }
        m.actors.sort_by(|a, b| a.id.cmp(&b.id));
        m.orphans.sort_by(|a, b| a.id.cmp(&b.id));
        m.dependums.sort_by(|a, b| a.id.cmp(&b.id));
        m.links.sort_by(|a, b| a.id.cmp(&b.id));
        m
    }

    /// Equality up to the order of actors, elements, dependums and links.
    pub fn semantically_eq(&self, other: &GoalModel) -> bool {
        self.normalized() == other.normalized()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementPriority {
    pub importance: Level,
    pub confidence: Level,
}

/// Importance/confidence per element and a weight per stakeholder (actor).
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Prioritization {
    #[serde(default)]
    pub element_priorities: BTreeMap<String, ElementPriority>,
    #[serde(default)]
    pub stakeholder_weights: BTreeMap<String, Level>,
}

impl Prioritization {
    pub fn is_empty(&self) -> bool {
        self.element_priorities.is_empty() && self.stakeholder_weights.is_empty()
    }

    pub fn set(&mut self, element: impl Into<String>, importance: Level, confidence: Level) {
        self.element_priorities.insert(element.into(), ElementPriority { importance, confidence });
    }

    pub fn set_weight(&mut self, actor: impl Into<String>, weight: Level) {
        self.stakeholder_weights.insert(actor.into(), weight);
    }

    /// Entries of `patch` overwrite entries of `self`.
    pub fn merge(&mut self, patch: &Prioritization) {
        self.element_priorities.extend(patch.element_priorities.iter().map(|(k, v)| (k.clone(), *v)));
        self.stakeholder_weights.extend(patch.stakeholder_weights.iter().map(|(k, v)| (k.clone(), *v)));
    }

    /// Keys that do not name an intentional element or owner of `model`.
    pub fn unknown_keys(&self, model: &GoalModel) -> Vec<String> {
        let owners = model.owner_ids();
        let mut out: Vec<String> = self
            .element_priorities
            .keys()
            .filter(|k| model.element(k).is_none())
            .chain(self.stakeholder_weights.keys().filter(|k| !owners.contains(k.as_str())))
            .cloned()
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Intentional elements of `model` that have no importance/confidence.
    pub fn missing(&self, model: &GoalModel) -> Vec<String> {
        let mut out: Vec<String> = model
            .elements()
            .map(|e| &e.element.id)
            .filter(|id| !self.element_priorities.contains_key(*id))
            .cloned()
            .collect();
        out.sort();
        out
    }
}
