use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{GoalModel, LinkType, Prioritization, UNOWNED_ACTOR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    // errors
    DuplicateId,
    DanglingLink,
    SelfLink,
    CrossActorRefinement,
    DependencyEndpointNotOwned,
    DependumLink,
    UnreferencedDependum,
    PrioritizedDependum,
    UnknownPriorityKey,
    // warnings
    MixedRefinement,
    CrossActorContribution,
    IsolatedElement,
    OrphanElement,
    UnsupportedNode,
    UnsupportedLink,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::DuplicateId => "DUPLICATE_ID",
            IssueCode::DanglingLink => "DANGLING_LINK",
            IssueCode::SelfLink => "SELF_LINK",
            IssueCode::CrossActorRefinement => "CROSS_ACTOR_REFINEMENT",
            IssueCode::DependencyEndpointNotOwned => "DEPENDENCY_ENDPOINT_NOT_OWNED",
            IssueCode::DependumLink => "DEPENDUM_LINK",
            IssueCode::UnreferencedDependum => "UNREFERENCED_DEPENDUM",
            IssueCode::PrioritizedDependum => "PRIORITIZED_DEPENDUM",
            IssueCode::UnknownPriorityKey => "UNKNOWN_PRIORITY_KEY",
            IssueCode::MixedRefinement => "MIXED_REFINEMENT",
            IssueCode::CrossActorContribution => "CROSS_ACTOR_CONTRIBUTION",
            IssueCode::IsolatedElement => "ISOLATED_ELEMENT",
            IssueCode::OrphanElement => "ORPHAN_ELEMENT",
            IssueCode::UnsupportedNode => "UNSUPPORTED_NODE",
            IssueCode::UnsupportedLink => "UNSUPPORTED_LINK",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Issue {
    pub code: IssueCode,
    pub message: String,
    pub subject_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }

    pub(crate) fn push(&mut self, severity: Severity, code: IssueCode, subject: &str, message: String) {
        let issue = Issue { code, message, subject_id: subject.to_string() };
        match severity {
            Severity::Error => self.errors.push(issue),
            Severity::Warning => self.warnings.push(issue),
        }
    }

    pub(crate) fn sort(&mut self) {
        let key = |i: &Issue| (i.subject_id.clone(), i.code.as_str(), i.message.clone());
        self.errors.sort_by_key(key);
        self.warnings.sort_by_key(key);
    }

    /// Appends another report's issues and restores the canonical ordering.
    pub fn extend(&mut self, other: ValidationReport) {
        self.errors.extend(other.errors);
        self.warnings.extend(other.warnings);
        self.sort();
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, issues) in [("error", &self.errors), ("warning", &self.warnings)] {
            for i in issues {
                writeln!(f, "{label}: [{}] {}: {}", i.code, i.subject_id, i.message)?;
            }
        }
        Ok(())
    }
}

/// Structural validation of a model on its own.
pub fn validate(model: &GoalModel) -> ValidationReport {
    validate_with(model, None)
}

/// Structural validation, additionally checking the prioritization keys
/// when one is given.
pub fn validate_with(model: &GoalModel, prioritization: Option<&Prioritization>) -> ValidationReport {
    use IssueCode::*;
    use Severity::*;

    let mut report = ValidationReport::default();

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let ids = model
        .actors
        .iter()
        .map(|a| a.id.as_str())
        .chain(model.elements().map(|e| e.element.id.as_str()))
        .chain(model.dependums.iter().map(|d| d.id.as_str()))
        .chain(model.links.iter().map(|l| l.id.as_str()));
    for id in ids {
        *seen.entry(id).or_default() += 1;
    }
    for (id, n) in seen.iter().filter(|(_, n)| **n > 1) {
        report.push(Error, DuplicateId, id, format!("id '{id}' is used {n} times"));
    }

    let owners = model.owner_map();
    let dependums: BTreeSet<&str> = model.dependums.iter().map(|d| d.id.as_str()).collect();
    let resolves = |id: &str| owners.contains_key(id) || dependums.contains(id);

    let mut linked: BTreeSet<&str> = BTreeSet::new();
    let mut referenced_dependums: BTreeSet<&str> = BTreeSet::new();
    // parent -> (saw and, saw or)
    let mut refinement_kinds: BTreeMap<&str, (bool, bool)> = BTreeMap::new();

    for link in &model.links {
        let lid = link.id.as_str();
        let mut dangling = Vec::new();
        for end in [&link.source, &link.target] {
            if !resolves(end) {
                dangling.push(end.as_str());
            }
        }
        if let LinkType::Dependency { dependum } = &link.link_type {
            if dependums.contains(dependum.as_str()) {
                referenced_dependums.insert(dependum.as_str());
            } else {
                dangling.push(dependum.as_str());
            }
        }
        if !dangling.is_empty() {
            report.push(Error, DanglingLink, lid, format!("link endpoint(s) {} do not resolve", dangling.join(", ")));
            continue;
        }
        linked.insert(link.source.as_str());
        linked.insert(link.target.as_str());
        if link.source == link.target {
            report.push(Error, SelfLink, lid, format!("link connects '{}' to itself", link.source));
            continue;
        }

        match &link.link_type {
            LinkType::Dependency { dependum } => {
                linked.insert(dependum.as_str());
                for end in [&link.source, &link.target] {
                    if !owners.contains_key(end.as_str()) {
                        report.push(
                            Error,
                            DependencyEndpointNotOwned,
                            lid,
                            format!("dependency endpoint '{end}' is not an actor-owned element"),
                        );
                    }
                }
            }
            other => {
                let touches_dependum =
                    [&link.source, &link.target].into_iter().find(|e| dependums.contains(e.as_str()));
                if let Some(d) = touches_dependum {
                    report.push(Error, DependumLink, lid, format!("only dependency links may reference dependum '{d}'"));
                    continue;
                }
                let (src_owner, tgt_owner) = (owners[link.source.as_str()], owners[link.target.as_str()]);
                if other.is_refinement() {
                    if src_owner != tgt_owner {
                        report.push(
                            Error,
                            CrossActorRefinement,
                            lid,
                            format!("refinement crosses actors '{src_owner}' and '{tgt_owner}'"),
                        );
                    }
                    let entry = refinement_kinds.entry(link.target.as_str()).or_default();
                    match other {
                        LinkType::AndRefinement => entry.0 = true,
                        _ => entry.1 = true,
                    }
                } else if src_owner != tgt_owner {
                    report.push(
                        Warning,
                        CrossActorContribution,
                        lid,
                        format!("contribution crosses actors '{src_owner}' and '{tgt_owner}'"),
                    );
                }
            }
        }
    }

    for (parent, _) in refinement_kinds.iter().filter(|(_, (and, or))| *and && *or) {
        report.push(Warning, MixedRefinement, parent, "element is refined by both AND and OR links".to_string());
    }

    for d in &model.dependums {
        if !referenced_dependums.contains(d.id.as_str()) {
            report.push(Error, UnreferencedDependum, &d.id, "dependum is not used by any dependency link".to_string());
        }
    }

    for e in model.elements() {
        let id = e.element.id.as_str();
        let prioritized = prioritization.is_some_and(|p| p.element_priorities.contains_key(id));
        if !linked.contains(id) && !prioritized {
            report.push(Warning, IsolatedElement, id, "element has no links and no prioritization".to_string());
        }
    }
    for o in &model.orphans {
        report.push(
            Warning,
            OrphanElement,
            &o.id,
            format!("element is outside every actor and is treated as owned by '{UNOWNED_ACTOR}'"),
        );
    }

    if let Some(p) = prioritization {
        let owner_ids = model.owner_ids();
        for key in p.element_priorities.keys().chain(p.stakeholder_weights.keys()) {
            if dependums.contains(key.as_str()) {
                report.push(Error, PrioritizedDependum, key, "dependums cannot be prioritized".to_string());
            }
        }
        for key in p.element_priorities.keys() {
            if !dependums.contains(key.as_str()) && !owners.contains_key(key.as_str()) {
                report.push(Error, UnknownPriorityKey, key, "prioritized element does not exist".to_string());
            }
        }
        for key in p.stakeholder_weights.keys() {
            if !dependums.contains(key.as_str()) && !owner_ids.contains(key.as_str()) {
                report.push(Error, UnknownPriorityKey, key, "weighted stakeholder does not exist".to_string());
            }
        }
    }

    report.sort();
    report
}
