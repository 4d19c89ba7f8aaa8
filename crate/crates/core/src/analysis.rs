//! Fuzzy TOPSIS value analysis.
//!
//! Each intentional element is an alternative. The global matrix scores it on
//! its stakeholder-weighted fuzzified importance (C1), the impact received
//! from elements of the same actor (C2) and the impact received from other
//! actors (C3). The local matrix of an actor uses the unweighted importance
//! and the same-actor impact only. Closeness coefficients are mapped onto
//! the `[-100, 100]` value scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{fuzzify, Level, Tfn};
use crate::model::{validate_with, GoalModel, Prioritization, ValidationReport, UNOWNED_ACTOR};
use crate::propagation::{build_influence_graph, propagate, PropagationConfig, PropagationError, PropagationResult};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("model or prioritization has validation errors:\n{0}")]
    InvalidModel(ValidationReport),
    #[error("elements without importance/confidence: {}", .0.join(", "))]
    MissingPriorities(Vec<String>),
    #[error("decision matrix has no alternatives")]
    EmptyMatrix,
    #[error("decision matrix is not rectangular")]
    NotRectangular,
    #[error("closeness coefficient {0} lies outside [0, 1]")]
    ClosenessOutOfRange(f64),
    #[error("unknown actor '{0}'")]
    UnknownActor(String),
    #[error("'{0}' is not an analyzed intentional element")]
    NotAnElement(String),
}

/// Rows are alternatives, columns are criteria.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionMatrix {
    pub alternatives: Vec<String>,
    pub criteria: Vec<String>,
    pub cells: Vec<Vec<Tfn>>,
}

impl DecisionMatrix {
    pub fn new(alternatives: Vec<String>, criteria: Vec<String>, cells: Vec<Vec<Tfn>>) -> Result<Self, AnalysisError> {
        if cells.len() != alternatives.len() || cells.iter().any(|row| row.len() != criteria.len()) {
            return Err(AnalysisError::NotRectangular);
        }
        Ok(DecisionMatrix { alternatives, criteria, cells })
    }

    pub fn column(&self, criterion: usize) -> impl Iterator<Item = Tfn> + '_ {
        self.cells.iter().map(move |row| row[criterion])
    }

    pub fn cell(&self, alternative: &str, criterion: &str) -> Option<Tfn> {
        let a = self.alternatives.iter().position(|x| x == alternative)?;
        let c = self.criteria.iter().position(|x| x == criterion)?;
        Some(self.cells[a][c])
    }

    /// Copy with one criterion column replaced by zeros.
    pub fn with_zero_column(&self, criterion: usize) -> DecisionMatrix {
        let mut m = self.clone();
        for row in &mut m.cells {
            row[criterion] = Tfn::ZERO;
        }
        m
    }
}

/// Closeness coefficients aligned with the matrix alternatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Closeness {
    pub alternatives: Vec<String>,
    pub cc: Vec<f64>,
    /// Set when every criterion column was identically zero.
    pub degenerate: bool,
}

impl Closeness {
    pub fn get(&self, alternative: &str) -> Option<f64> {
        self.alternatives.iter().position(|a| a == alternative).map(|i| self.cc[i])
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.alternatives.iter().cloned().zip(self.cc.iter().copied()).collect()
    }
}

/// Fuzzy TOPSIS closeness with ideal `(1,1,1)` and anti-ideal `(-1,-1,-1)`.
///
/// Each column is divided by its largest absolute component, which maps it
/// into `[-1, 1]`; all-zero columns carry no information and are dropped.
pub fn ftopsis_closeness(matrix: &DecisionMatrix) -> Result<Closeness, AnalysisError> {
    if matrix.alternatives.is_empty() {
        return Err(AnalysisError::EmptyMatrix);
    }
    let scales: Vec<(usize, f64)> = (0..matrix.criteria.len())
        .map(|j| (j, matrix.column(j).map(|t| t.abs_max()).fold(0.0, f64::max)))
        .filter(|(_, max)| *max > 0.0)
        .collect();
    if scales.is_empty() {
        return Ok(Closeness {
            alternatives: matrix.alternatives.clone(),
            cc: vec![0.5; matrix.alternatives.len()],
            degenerate: true,
        });
    }
    let ideal = Tfn::ONE;
    let anti_ideal = Tfn::crisp(-1.0);
    let cc = matrix
        .cells
        .iter()
        .map(|row| {
            let (plus, minus) = scales.iter().fold((0.0, 0.0), |(p, n), &(j, max)| {
                let r = row[j].scale(1.0 / max);
                (p + r.distance(&ideal), n + r.distance(&anti_ideal))
            });
            minus / (plus + minus)
        })
        .collect();
    Ok(Closeness { alternatives: matrix.alternatives.clone(), cc, degenerate: false })
}

/// Affine map of a closeness coefficient onto `[-100, 100]`.
pub fn cc_to_value(cc: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&cc) {
        return Err(AnalysisError::ClosenessOutOfRange(cc));
    }
    Ok(200.0 * cc - 100.0)
}

/// Display rounding to two decimals.
pub fn round2(value: f64) -> f64 {
    let r = (value * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub const C1_IMPORTANCE: &str = "C1";
pub const C2_SAME_ACTOR_IMPACT: &str = "C2";
pub const C3_OTHER_ACTOR_IMPACT: &str = "C3";

#[derive(Clone, Debug, PartialEq)]
pub struct Matrices {
    pub global: DecisionMatrix,
    pub local: BTreeMap<String, DecisionMatrix>,
}

/// Stakeholder weight as a fuzzy number; unassigned stakeholders weigh
/// `(1, 1, 1)`.
pub fn stakeholder_weight(prioritization: &Prioritization, actor: &str) -> Tfn {
    prioritization.stakeholder_weights.get(actor).map_or(Tfn::ONE, |l| l.scale_tfn())
}

pub fn build_matrices(
    model: &GoalModel,
    prioritization: &Prioritization,
    propagation: &PropagationResult,
) -> Result<Matrices, AnalysisError> {
    let missing = prioritization.missing(model);
    if !missing.is_empty() {
        return Err(AnalysisError::MissingPriorities(missing));
    }
    let mut elements: Vec<(&str, &str)> = model.elements().map(|e| (e.element.id.as_str(), e.owner)).collect();
    elements.sort();

    let mut global_rows = Vec::with_capacity(elements.len());
    let mut local_rows: BTreeMap<&str, (Vec<String>, Vec<Vec<Tfn>>)> = BTreeMap::new();
    for &(id, owner) in &elements {
        let p = prioritization.element_priorities[id];
        let importance = fuzzify(p.importance, p.confidence);
        let (same, other) = propagation.split_by_actor(model, id)?;
        let weighted = stakeholder_weight(prioritization, owner)
            .checked_mul(importance)
            .expect("scale values are non-negative");
        global_rows.push(vec![weighted, same, other]);
        let local = local_rows.entry(owner).or_default();
        local.0.push(id.to_string());
        local.1.push(vec![importance, same]);
    }

    let global = DecisionMatrix::new(
        elements.iter().map(|(id, _)| id.to_string()).collect(),
        vec![C1_IMPORTANCE.into(), C2_SAME_ACTOR_IMPACT.into(), C3_OTHER_ACTOR_IMPACT.into()],
        global_rows,
    )?;
    let local = local_rows
        .into_iter()
        .map(|(owner, (alts, rows))| {
            DecisionMatrix::new(alts, vec![C1_IMPORTANCE.into(), C2_SAME_ACTOR_IMPACT.into()], rows)
                .map(|m| (owner.to_string(), m))
        })
        .collect::<Result<_, _>>()?;
    Ok(Matrices { global, local })
}

/// One row of the result table, full precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementValue {
    pub element_id: String,
    pub name: String,
    pub actor_id: String,
    pub importance: Level,
    pub confidence: Level,
    pub global_value: f64,
    pub local_value: f64,
    pub same_actor_value: f64,
    pub other_actor_value: f64,
}

/// The seven displayed columns, rounded to two decimals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableRow {
    pub name: String,
    pub importance: Level,
    pub confidence: Level,
    pub global_value: f64,
    pub local_value: f64,
    pub same_actor_value: f64,
    pub other_actor_value: f64,
}

impl From<&ElementValue> for TableRow {
    fn from(v: &ElementValue) -> Self {
        TableRow {
            name: v.name.clone(),
            importance: v.importance,
            confidence: v.confidence,
            global_value: round2(v.global_value),
            local_value: round2(v.local_value),
            same_actor_value: round2(v.same_actor_value),
            other_actor_value: round2(v.other_actor_value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisResult {
    pub model_id: String,
    pub created_at: String,
    pub config: PropagationConfig,
    pub iterations: usize,
    /// Sorted by element id.
    pub elements: Vec<ElementValue>,
    pub global_ranking: Vec<String>,
    pub local_ranking: BTreeMap<String, Vec<String>>,
    /// Display table in global ranking order.
    pub table: Vec<TableRow>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankBy {
    Global,
    Local,
}

impl std::str::FromStr for RankBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(RankBy::Global),
            "local" => Ok(RankBy::Local),
            other => Err(format!("expected 'global' or 'local', got '{other}'")),
        }
    }
}

impl AnalysisResult {
    pub fn element(&self, id: &str) -> Option<&ElementValue> {
        self.elements.iter().find(|e| e.element_id == id)
    }

    pub fn actors(&self) -> impl Iterator<Item = &str> {
        self.local_ranking.keys().map(String::as_str)
    }

    /// Elements ordered by value descending, ties by name then id.
    pub fn rank(&self, by: RankBy, actor: Option<&str>) -> Result<Vec<(String, f64)>, AnalysisError> {
        if let Some(a) = actor {
            if !self.local_ranking.contains_key(a) {
                return Err(AnalysisError::UnknownActor(a.to_string()));
            }
        }
        let mut rows: Vec<&ElementValue> =
            self.elements.iter().filter(|e| actor.is_none_or(|a| e.actor_id == a)).collect();
        let value = |e: &ElementValue| match by {
            RankBy::Global => e.global_value,
            RankBy::Local => e.local_value,
        };
        sort_by_value(&mut rows, value);
        Ok(rows.into_iter().map(|e| (e.element_id.clone(), value(e))).collect())
    }
}

fn sort_by_value(rows: &mut [&ElementValue], value: impl Fn(&ElementValue) -> f64) {
    rows.sort_by(|a, b| {
        value(b)
            .total_cmp(&value(a))
            .then_with(|| a.name.cmp(&b.name))
            .then_with(|| a.element_id.cmp(&b.element_id))
    });
}

/// Analysis result plus the propagation it was computed from.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub result: AnalysisResult,
    pub propagation: PropagationResult,
    pub matrices: Matrices,
}

pub fn analyze(
    model: &GoalModel,
    prioritization: &Prioritization,
    config: &PropagationConfig,
) -> Result<AnalysisResult, AnalysisError> {
    analyze_detailed(model, prioritization, config).map(|a| a.result)
}

pub fn analyze_detailed(
    model: &GoalModel,
    prioritization: &Prioritization,
    config: &PropagationConfig,
) -> Result<Analysis, AnalysisError> {
    config.validate()?;
    let report = validate_with(model, Some(prioritization));
    if !report.is_ok() {
        return Err(AnalysisError::InvalidModel(report));
    }
    let missing = prioritization.missing(model);
    if !missing.is_empty() {
        return Err(AnalysisError::MissingPriorities(missing));
    }

    let graph = build_influence_graph(model)?;
    let base: BTreeMap<String, Tfn> = prioritization
        .element_priorities
        .iter()
        .map(|(id, p)| (id.clone(), fuzzify(p.importance, p.confidence)))
        .collect();
    let propagation = propagate(&graph, &base, config)?;
    let matrices = build_matrices(model, prioritization, &propagation)?;

    let mut warnings = Vec::new();
    let mut note = |what: &str, c: &Closeness| {
        if c.degenerate {
            warnings.push(format!("{what}: every criterion is zero, all closeness coefficients set to 0.5"));
        }
    };

    let (global, same_only) = if matrices.global.alternatives.is_empty() {
        (None, None)
    } else {
        let g = ftopsis_closeness(&matrices.global)?;
        note("global matrix", &g);
        let s = ftopsis_closeness(&matrices.global.with_zero_column(2))?;
        (Some(g), Some(s))
    };
    let mut local = BTreeMap::new();
    for (actor, m) in &matrices.local {
        let c = ftopsis_closeness(m)?;
        note(&format!("local matrix of '{actor}'"), &c);
        local.insert(actor.as_str(), c);
    }

    let mut elements = Vec::with_capacity(matrices.global.alternatives.len());
    if let (Some(global), Some(same_only)) = (&global, &same_only) {
        for (i, id) in global.alternatives.iter().enumerate() {
            let owned = model.element(id).expect("alternatives are model elements");
            let p = prioritization.element_priorities[id.as_str()];
            let global_value = cc_to_value(global.cc[i])?;
            let same_actor_value = cc_to_value(same_only.cc[i])?;
            let local_cc = local[owned.owner].get(id).expect("element appears in its owner's matrix");
            elements.push(ElementValue {
                element_id: id.clone(),
                name: owned.element.name.clone(),
                actor_id: owned.owner.to_string(),
                importance: p.importance,
                confidence: p.confidence,
                global_value,
                local_value: cc_to_value(local_cc)?,
                same_actor_value,
                other_actor_value: global_value - same_actor_value,
            });
        }
    }

    let mut ranked: Vec<&ElementValue> = elements.iter().collect();
    sort_by_value(&mut ranked, |e| e.global_value);
    let global_ranking = ranked.iter().map(|e| e.element_id.clone()).collect();
    let table = ranked.iter().map(|e| TableRow::from(*e)).collect();
    let mut local_ranking = BTreeMap::new();
    for actor in local.keys() {
        let mut rows: Vec<&ElementValue> = elements.iter().filter(|e| e.actor_id == *actor).collect();
        sort_by_value(&mut rows, |e| e.local_value);
        local_ranking.insert(actor.to_string(), rows.iter().map(|e| e.element_id.clone()).collect());
    }

    let result = AnalysisResult {
        model_id: model.id.clone(),
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config: *config,
        iterations: propagation.iterations,
        elements,
        global_ranking,
        local_ranking,
        table,
        warnings,
    };
    Ok(Analysis { result, propagation, matrices })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProvenanceEntry {
    pub source_id: String,
    pub source_name: String,
    pub source_actor: String,
    pub same_actor: bool,
    pub is_self: bool,
    /// Centroid of `impact_tfn`.
    pub impact: f64,
    pub impact_tfn: Tfn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub element_id: String,
    pub actor_id: String,
    pub global_value: f64,
    pub local_value: f64,
    pub entries: Vec<ProvenanceEntry>,
}

/// Where an element's impact comes from.
///
/// The self entry carries the element's own fuzzified importance together
/// with whatever returns to it through cycles; every other entry is the
/// impulse response from one source. Entries with zero impact are omitted,
/// and the rest are ordered by absolute impact.
pub fn explain(
    result: &AnalysisResult,
    model: &GoalModel,
    propagation: &PropagationResult,
    element: &str,
) -> Result<Provenance, AnalysisError> {
    let value = result.element(element).ok_or_else(|| AnalysisError::NotAnElement(element.to_string()))?;
    let owners = model.owner_map();
    if !owners.contains_key(element) {
        return Err(AnalysisError::NotAnElement(element.to_string()));
    }
    let mut entries = Vec::new();
    for source in propagation.sources() {
        let is_self = source == element;
        let impact = propagation.impulse(source, element);
        if !is_self && impact == Tfn::ZERO {
            continue;
        }
        let source_actor = owners.get(source.as_str()).copied().unwrap_or(UNOWNED_ACTOR);
        entries.push(ProvenanceEntry {
            source_id: source.clone(),
            source_name: model.element(source).map(|e| e.element.name.clone()).unwrap_or_default(),
            source_actor: source_actor.to_string(),
            same_actor: is_self || (source_actor == value.actor_id && source_actor != UNOWNED_ACTOR),
            is_self,
            impact: impact.defuzzify(),
            impact_tfn: impact,
        });
    }
    entries.sort_by(|a, b| b.impact.abs().total_cmp(&a.impact.abs()).then_with(|| a.source_id.cmp(&b.source_id)));
    Ok(Provenance {
        element_id: element.to_string(),
        actor_id: value.actor_id.clone(),
        global_value: value.global_value,
        local_value: value.local_value,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Actor, ContributionLabel, Dependum, ElementKind, IntentionalElement, Link, LinkType};

    fn t(l: f64, m: f64, u: f64) -> Tfn {
        Tfn::new(l, m, u).unwrap()
    }

    fn matrix(rows: Vec<Vec<Tfn>>) -> DecisionMatrix {
        let alts = (0..rows.len()).map(|i| format!("a{i}")).collect();
        let crit = (0..rows.first().map_or(0, Vec::len)).map(|j| format!("c{j}")).collect();
        DecisionMatrix::new(alts, crit, rows).unwrap()
    }

    #[test]
    fn closeness_examples() {
        let c = ftopsis_closeness(&matrix(vec![vec![Tfn::ONE], vec![Tfn::ZERO]])).unwrap();
        assert_eq!(c.cc, vec![1.0, 0.5]);
        let c = ftopsis_closeness(&matrix(vec![vec![Tfn::ONE, Tfn::ZERO], vec![Tfn::ZERO, Tfn::ZERO]])).unwrap();
        assert_eq!(c.cc[1], 0.5);
    }

    #[test]
    fn closeness_scaling() {
        let rows = vec![
            vec![t(0.1, 0.2, 0.4), t(-0.3, 0.0, 0.2)],
            vec![t(0.5, 0.6, 0.9), t(0.1, 0.1, 0.1)],
            vec![t(0.0, 0.0, 0.1), t(-1.0, -0.5, 0.0)],
        ];
        let base = ftopsis_closeness(&matrix(rows.clone())).unwrap();
        let scaled: Vec<Vec<Tfn>> = rows.iter().map(|r| vec![r[0].scale(3.0), r[1]]).collect();
        let other = ftopsis_closeness(&matrix(scaled)).unwrap();
        for (a, b) in base.cc.iter().zip(&other.cc) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn closeness_degenerate_and_empty() {
        let c = ftopsis_closeness(&matrix(vec![vec![Tfn::ZERO, Tfn::ZERO]; 3])).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.cc, vec![0.5; 3]);
        let empty = DecisionMatrix::new(vec![], vec!["c".into()], vec![]).unwrap();
        assert!(matches!(ftopsis_closeness(&empty), Err(AnalysisError::EmptyMatrix)));
        assert!(matches!(
            DecisionMatrix::new(vec!["a".into()], vec!["c".into()], vec![vec![]]),
            Err(AnalysisError::NotRectangular)
        ));
    }

    #[test]
    fn value_map() {
        assert_eq!(cc_to_value(0.5).unwrap(), 0.0);
        assert_eq!(cc_to_value(1.0).unwrap(), 100.0);
        assert_eq!(cc_to_value(0.25).unwrap(), -50.0);
        assert_eq!(cc_to_value(0.0).unwrap(), -100.0);
        assert!(cc_to_value(1.5).is_err());
        assert!(cc_to_value(-0.01).is_err());
        assert_eq!(round2(12.345_6), 12.35);
        assert_eq!(round2(-0.001).to_string(), "0");
    }

    fn el(id: &str, name: &str) -> IntentionalElement {
        IntentionalElement { id: id.into(), name: name.into(), kind: ElementKind::Goal }
    }

    fn single(importance: Level, confidence: Level) -> (GoalModel, Prioritization) {
        let mut m = GoalModel::new("m", "m");
        m.actors.push(Actor { id: "a".into(), name: "A".into(), elements: vec![el("e", "E")] });
        let mut p = Prioritization::default();
        p.set("e", importance, confidence);
        (m, p)
    }

    #[test]
    fn single_element_matrices() {
        let (m, p) = single(Level::Medium, Level::VeryHigh);
        let a = analyze_detailed(&m, &p, &PropagationConfig::default()).unwrap();
        assert_eq!(a.matrices.global.cells, vec![vec![Tfn::crisp(0.5), Tfn::ZERO, Tfn::ZERO]]);
        let r = a.result;
        let e = &r.elements[0];
        assert_eq!(e.local_value, e.global_value);
        assert_eq!(e.other_actor_value, 0.0);
        assert_eq!(e.global_value, 100.0);
    }

    #[test]
    fn stakeholder_weight_scales_c1_only() {
        let (m, mut p) = single(Level::High, Level::Medium);
        p.set_weight("a", Level::High);
        let a = analyze_detailed(&m, &p, &PropagationConfig::default()).unwrap();
        assert_eq!(a.matrices.global.cells[0][0], t(0.3125, 0.5625, 0.875));
        assert_eq!(a.matrices.local["a"].cells[0][0], t(0.625, 0.75, 0.875));
    }

    #[test]
    fn all_zero_model() {
        let mut m = GoalModel::new("m", "m");
        m.actors.push(Actor { id: "a".into(), name: "A".into(), elements: vec![el("x", "X"), el("y", "Y")] });
        m.links.push(Link {
            id: "l".into(),
            link_type: LinkType::Contribution(ContributionLabel::Help),
            source: "x".into(),
            target: "y".into(),
        });
        let mut p = Prioritization::default();
        p.set("x", Level::VeryLow, Level::VeryHigh);
        p.set("y", Level::VeryLow, Level::VeryHigh);
        let r = analyze(&m, &p, &PropagationConfig::default()).unwrap();
        for e in &r.elements {
            assert_eq!((e.global_value, e.local_value, e.same_actor_value, e.other_actor_value), (0.0, 0.0, 0.0, 0.0));
        }
        assert_eq!(r.warnings.len(), 2);
    }

    #[test]
    fn missing_priorities_listed() {
        let (mut m, p) = single(Level::High, Level::High);
        m.actors[0].elements.push(el("f", "F"));
        m.actors[0].elements.push(el("g", "G"));
        match analyze(&m, &p, &PropagationConfig::default()) {
            Err(AnalysisError::MissingPriorities(ids)) => assert_eq!(ids, vec!["f", "g"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn chain(two_actors: bool, label: ContributionLabel) -> (GoalModel, Prioritization) {
        let mut m = GoalModel::new("m", "m");
        if two_actors {
            m.actors.push(Actor { id: "a".into(), name: "A".into(), elements: vec![el("e1", "E1")] });
            m.actors.push(Actor { id: "b".into(), name: "B".into(), elements: vec![el("e2", "E2")] });
        } else {
            m.actors.push(Actor { id: "a".into(), name: "A".into(), elements: vec![el("e1", "E1"), el("e2", "E2")] });
        }
        m.links.push(Link {
            id: "l".into(),
            link_type: LinkType::Contribution(label),
            source: "e1".into(),
            target: "e2".into(),
        });
        let mut p = Prioritization::default();
        p.set("e1", Level::VeryLow, Level::VeryHigh);
        p.set("e2", Level::VeryHigh, Level::VeryHigh);
        (m, p)
    }

    #[test]
    fn explain_chain() {
        let (m, p) = chain(false, ContributionLabel::Help);
        let a = analyze_detailed(&m, &p, &PropagationConfig::default()).unwrap();
        let prov = explain(&a.result, &m, &a.propagation, "e1").unwrap();
        assert_eq!(prov.entries.len(), 2);
        let top = &prov.entries[0];
        assert_eq!(top.source_id, "e2");
        assert!((top.impact - 0.45).abs() < 1e-12);
        assert!(top.same_actor && !top.is_self);
        assert!(prov.entries[1].is_self);

        let prov = explain(&a.result, &m, &a.propagation, "e2").unwrap();
        assert_eq!(prov.entries.len(), 1);
        assert!(prov.entries[0].is_self);
        assert_eq!(prov.entries[0].impact, 1.0);
    }

    #[test]
    fn explain_hurt_is_negative() {
        let (m, p) = chain(true, ContributionLabel::Hurt);
        let a = analyze_detailed(&m, &p, &PropagationConfig::default()).unwrap();
        let prov = explain(&a.result, &m, &a.propagation, "e1").unwrap();
        let e2 = prov.entries.iter().find(|e| e.source_id == "e2").unwrap();
        assert!((e2.impact + 0.45).abs() < 1e-12);
        assert!(!e2.same_actor);
        assert!(a.result.element("e1").unwrap().other_actor_value < 0.0);
        assert!(explain(&a.result, &m, &a.propagation, "nope").is_err());
    }

    #[test]
    fn dependum_cannot_be_explained() {
        let mut m = GoalModel::new("m", "m");
        m.actors.push(Actor { id: "a".into(), name: "A".into(), elements: vec![el("g", "G")] });
        m.actors.push(Actor { id: "b".into(), name: "B".into(), elements: vec![el("t", "T")] });
        m.dependums.push(Dependum { id: "d".into(), name: "D".into(), kind: ElementKind::Resource });
        m.links.push(Link {
            id: "l".into(),
            link_type: LinkType::Dependency { dependum: "d".into() },
            source: "g".into(),
            target: "t".into(),
        });
        let mut p = Prioritization::default();
        p.set("g", Level::High, Level::High);
        p.set("t", Level::Low, Level::High);
        let a = analyze_detailed(&m, &p, &PropagationConfig::default()).unwrap();
        assert!(matches!(explain(&a.result, &m, &a.propagation, "d"), Err(AnalysisError::NotAnElement(_))));
        let t = a.result.element("t").unwrap();
        assert!(t.other_actor_value != 0.0);
        assert_eq!(a.matrices.global.cell("t", C3_OTHER_ACTOR_IMPACT), Some(a.propagation.split_by_actor(&m, "t").unwrap().1));
    }

    #[test]
    fn ranking_rules() {
        let mk = |id: &str, name: &str, actor: &str, g: f64, l: f64| ElementValue {
            element_id: id.into(),
            name: name.into(),
            actor_id: actor.into(),
            importance: Level::Low,
            confidence: Level::Low,
            global_value: g,
            local_value: l,
            same_actor_value: 0.0,
            other_actor_value: g,
        };
        let r = AnalysisResult {
            model_id: "m".into(),
            created_at: String::new(),
            config: PropagationConfig::default(),
            iterations: 1,
            elements: vec![
                mk("a", "a", "x", 10.0, 5.0),
                mk("b", "b", "y", 30.0, 1.0),
                mk("c", "beta", "x", 7.0, 7.0),
                mk("d", "alpha", "x", 7.0, 7.0),
            ],
            global_ranking: vec![],
            local_ranking: [("x".to_string(), vec![]), ("y".to_string(), vec![])].into_iter().collect(),
            table: vec![],
            warnings: vec![],
        };
        let ids = |v: Vec<(String, f64)>| v.into_iter().map(|(id, _)| id).collect::<Vec<_>>();
        assert_eq!(ids(r.rank(RankBy::Global, None).unwrap()), ["b", "a", "d", "c"]);
        assert_eq!(ids(r.rank(RankBy::Local, Some("x")).unwrap()), ["d", "c", "a"]);
        assert!(matches!(r.rank(RankBy::Local, Some("zz")), Err(AnalysisError::UnknownActor(_))));
    }
}
