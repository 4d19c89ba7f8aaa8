//! Impact propagation over the influence graph.
//!
//! Value flows from ends to means: an element receives impact from the
//! elements it contributes to, refines, or is depended on for. The total
//! impact is the fixed point of
//!
//! ```text
//! x(n) = base(n) + lambda * (sum over edges y => n of w * x(y)) / max(1, indeg(n))
//! ```
//!
//! where `w * x` is signed fuzzy scaling. Every incoming term has `|w| <= 1`,
//! so the map is a contraction with constant `lambda` in the infinity norm
//! and synchronous iteration from zero converges.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::Tfn;
use crate::model::{validate, GoalModel, LinkType, ValidationReport, UNOWNED_ACTOR};

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("model has validation errors:\n{0}")]
    InvalidModel(ValidationReport),
    #[error("invalid propagation config: {0}")]
    InvalidConfig(String),
    #[error("no base value for elements: {}", .0.join(", "))]
    MissingBase(Vec<String>),
    #[error("'{0}' is not an intentional element of the influence graph")]
    NotAnElement(String),
    #[error("iteration did not converge within {0} iterations")]
    NonConvergence(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig { lambda: 0.9, epsilon: 1e-9, max_iterations: 10_000 }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<(), PropagationError> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(PropagationError::InvalidConfig(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(PropagationError::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(PropagationError::InvalidConfig("maxIterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfluenceEdge {
    pub from: String,
    pub to: String,
    pub weight: f64,
    pub link_id: String,
}

/// Weighted directed graph over intentional elements and dependums.
#[derive(Clone, Debug)]
pub struct InfluenceGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    dependum: Vec<bool>,
    edges: Vec<InfluenceEdge>,
    in_degree: Vec<usize>,
    // incoming adjacency in compressed form
    in_start: Vec<usize>,
    in_from: Vec<usize>,
    in_weight: Vec<f64>,
}

impl InfluenceGraph {
    fn from_edges(model: &GoalModel, edges: Vec<InfluenceEdge>) -> Self {
        let mut nodes: Vec<(String, bool)> = model
            .elements()
            .map(|e| (e.element.id.clone(), false))
            .chain(model.dependums.iter().map(|d| (d.id.clone(), true)))
            .collect();
        nodes.sort();
        let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, (id, _))| (id.clone(), i)).collect();
        let n = nodes.len();

        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in &edges {
            incoming[index[&e.to]].push((index[&e.from], e.weight));
        }
        let in_degree: Vec<usize> = incoming.iter().map(Vec::len).collect();
        let mut in_start = Vec::with_capacity(n + 1);
        let mut in_from = Vec::with_capacity(edges.len());
        let mut in_weight = Vec::with_capacity(edges.len());
        in_start.push(0);
        for list in incoming {
            for (from, w) in list {
                in_from.push(from);
                in_weight.push(w);
            }
            in_start.push(in_from.len());
        }

        InfluenceGraph {
            dependum: nodes.iter().map(|(_, d)| *d).collect(),
            nodes: nodes.into_iter().map(|(id, _)| id).collect(),
            index,
            edges,
            in_degree,
            in_start,
            in_from,
            in_weight,
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[InfluenceEdge] {
        &self.edges
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn is_dependum(&self, id: &str) -> bool {
        self.node_index(id).is_some_and(|i| self.dependum[i])
    }

    pub fn in_degree(&self, id: &str) -> Option<usize> {
        self.node_index(id).map(|i| self.in_degree[i])
    }

    /// One synchronous update; returns the largest absolute change.
    fn step(&self, lambda: f64, base: &[f64], cur: &[f64], next: &mut [f64]) -> f64 {
        let mut change = 0.0f64;
        for node in 0..self.nodes.len() {
            let (mut l, mut m, mut u) = (0.0, 0.0, 0.0);
            for k in self.in_start[node]..self.in_start[node + 1] {
                let y = 3 * self.in_from[k];
                let w = self.in_weight[k];
                if w >= 0.0 {
                    l += w * cur[y];
                    m += w * cur[y + 1];
                    u += w * cur[y + 2];
                } else {
                    l += w * cur[y + 2];
                    m += w * cur[y + 1];
                    u += w * cur[y];
                }
            }
            let factor = lambda / self.in_degree[node].max(1) as f64;
            let i = 3 * node;
            for (c, acc) in [l, m, u].into_iter().enumerate() {
                let v = base[i + c] + factor * acc;
                change = change.max((v - cur[i + c]).abs());
                next[i + c] = v;
            }
        }
        change
    }

    /// Iterates from zero until the change drops below epsilon.
    fn solve(&self, base: &[f64], config: &PropagationConfig) -> Result<(Vec<f64>, usize), PropagationError> {
        let mut cur = vec![0.0; base.len()];
        let mut next = vec![0.0; base.len()];
        for iteration in 1..=config.max_iterations {
            let change = self.step(config.lambda, base, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            if change < config.epsilon {
                return Ok((cur, iteration));
            }
        }
        Err(PropagationError::NonConvergence(config.max_iterations))
    }

    /// Runs exactly `iterations` updates (fewer if the state stops changing),
    /// which keeps the result linear in `base` for a fixed count.
    fn run_fixed(&self, base: &[f64], lambda: f64, iterations: usize) -> Vec<f64> {
        let mut cur = vec![0.0; base.len()];
        let mut next = vec![0.0; base.len()];
        for _ in 0..iterations {
            let change = self.step(lambda, base, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            if change == 0.0 {
                break;
            }
        }
        cur
    }
}

/// Builds the influence graph of a model without validation errors.
///
/// | link                         | influence edge           | weight |
/// |------------------------------|--------------------------|--------|
/// | contribution `src -> tgt`    | `tgt => src`             | make 1, help 0.5, hurt -0.5, break -1 |
/// | refinement `child -> parent` | `parent => child`        | 1      |
/// | dependency `(er, d, ee)`     | `er => d`, `d => ee`     | 1 each |
pub fn build_influence_graph(model: &GoalModel) -> Result<InfluenceGraph, PropagationError> {
    let report = validate(model);
    if !report.is_ok() {
        return Err(PropagationError::InvalidModel(report));
    }
    let mut edges = Vec::with_capacity(model.links.len());
    let edge = |from: &str, to: &str, weight: f64, link_id: &str| InfluenceEdge {
        from: from.to_string(),
        to: to.to_string(),
        weight,
        link_id: link_id.to_string(),
    };
    for link in &model.links {
        match &link.link_type {
            LinkType::Contribution(label) => edges.push(edge(&link.target, &link.source, label.weight(), &link.id)),
            LinkType::AndRefinement | LinkType::OrRefinement => {
                edges.push(edge(&link.target, &link.source, 1.0, &link.id))
            }
            LinkType::Dependency { dependum } => {
                edges.push(edge(&link.source, dependum, 1.0, &link.id));
                edges.push(edge(dependum, &link.target, 1.0, &link.id));
            }
        }
    }
    Ok(InfluenceGraph::from_edges(model, edges))
}

/// Totals and per-source impulse responses of one propagation.
#[derive(Clone, Debug)]
pub struct PropagationResult {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    base: Vec<Tfn>,
    total: Vec<Tfn>,
    sources: Vec<String>,
    // source id -> response at every node; absent for zero-base sources
    impulses: BTreeMap<String, Vec<Tfn>>,
    pub iterations: usize,
}

fn to_tfns(flat: &[f64]) -> Vec<Tfn> {
    flat.chunks_exact(3).map(|c| Tfn { l: c[0], m: c[1], u: c[2] }).collect()
}

impl PropagationResult {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    /// Ids of the elements that acted as impulse sources, sorted.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn total(&self, node: &str) -> Option<Tfn> {
        self.index.get(node).map(|&i| self.total[i])
    }

    pub fn base(&self, node: &str) -> Option<Tfn> {
        self.index.get(node).map(|&i| self.base[i])
    }

    /// Total impact at every node.
    pub fn totals(&self) -> BTreeMap<&str, Tfn> {
        self.nodes.iter().map(String::as_str).zip(self.total.iter().copied()).collect()
    }

    /// Response at `node` to the base of `source` alone.
    pub fn impulse(&self, source: &str, node: &str) -> Tfn {
        match (self.impulses.get(source), self.index.get(node)) {
            (Some(values), Some(&i)) => values[i],
            _ => Tfn::ZERO,
        }
    }

    /// Impact at `element` received from other elements, split by whether the
    /// source shares the element's owner. The element's own base returning
    /// through cycles counts as same-actor impact; sources owned by the
    /// synthetic unowned actor always count as other-actor impact.
    pub fn split_by_actor(&self, model: &GoalModel, element: &str) -> Result<(Tfn, Tfn), PropagationError> {
        let owners = model.owner_map();
        let Some(&owner) = owners.get(element) else {
            return Err(PropagationError::NotAnElement(element.to_string()));
        };
        let base = self.base(element).ok_or_else(|| PropagationError::NotAnElement(element.to_string()))?;
        let mut same = Tfn::ZERO;
        let mut other = Tfn::ZERO;
        for source in &self.sources {
            let impact = self.impulse(source, element);
            if source == element {
                same += Tfn {
                    l: impact.l - base.l,
                    m: impact.m - base.m,
                    u: impact.u - base.u,
                };
            } else if owners.get(source.as_str()) == Some(&owner) && owner != UNOWNED_ACTOR {
                same += impact;
            } else {
                other += impact;
            }
        }
        Ok((same, other))
    }
}

/// Propagates the base values through the graph.
///
/// `base` must hold a value for every intentional element; dependums start
/// at zero. Each element is then re-run alone as an impulse source for the
/// same number of iterations as the full run, so the impulse responses add
/// up to the totals.
pub fn propagate(
    graph: &InfluenceGraph,
    base: &BTreeMap<String, Tfn>,
    config: &PropagationConfig,
) -> Result<PropagationResult, PropagationError> {
    config.validate()?;
    let n = graph.nodes.len();
    let mut flat = vec![0.0; 3 * n];
    for (id, value) in base {
        match graph.node_index(id) {
            Some(i) if !graph.dependum[i] => flat[3 * i..3 * i + 3].copy_from_slice(&value.components()),
            _ => return Err(PropagationError::NotAnElement(id.clone())),
        }
    }
    let missing: Vec<String> = graph
        .nodes
        .iter()
        .zip(&graph.dependum)
        .filter(|(id, d)| !**d && !base.contains_key(*id))
        .map(|(id, _)| id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(PropagationError::MissingBase(missing));
    }

    let (total, iterations) = graph.solve(&flat, config)?;
    let sources: Vec<String> = base.keys().cloned().collect();
    let impulses: BTreeMap<String, Vec<Tfn>> = sources
        .par_iter()
        .filter(|s| base[*s] != Tfn::ZERO)
        .map(|s| {
            let i = graph.index[s];
            let mut single = vec![0.0; 3 * n];
            single[3 * i..3 * i + 3].copy_from_slice(&flat[3 * i..3 * i + 3]);
            (s.clone(), to_tfns(&graph.run_fixed(&single, config.lambda, iterations)))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    Ok(PropagationResult {
        nodes: graph.nodes.clone(),
        index: graph.index.clone(),
        base: to_tfns(&flat),
        total: to_tfns(&total),
        sources,
        impulses,
        iterations,
    })
}
