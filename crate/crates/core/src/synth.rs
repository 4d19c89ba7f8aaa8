//! Seeded random goal models for benchmarks and property tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fuzzy::Level;
use crate::model::{
    Actor, ContributionLabel, Dependum, ElementKind, GoalModel, IntentionalElement, Link, LinkType, Prioritization,
};

const KINDS: [ElementKind; 4] = [ElementKind::Goal, ElementKind::Quality, ElementKind::Task, ElementKind::Resource];
const LABELS: [ContributionLabel; 4] =
    [ContributionLabel::Make, ContributionLabel::Help, ContributionLabel::Hurt, ContributionLabel::Break];

/// Builds a valid model with `elements` intentional elements spread over
/// roughly one actor per ten elements and `links` links of mixed types.
/// Cycles are allowed. The prioritization is complete; some stakeholders are
/// left unweighted.
pub fn random_model(seed: u64, elements: usize, links: usize) -> (GoalModel, Prioritization) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actor_count = (elements / 10).max(1);
    let mut model = GoalModel::new(format!("synthetic-{seed}"), format!("Synthetic model {seed}"));
    for a in 0..actor_count {
        model.actors.push(Actor { id: format!("a{a:03}"), name: format!("Actor {a}"), elements: Vec::new() });
    }
    let mut owner = Vec::with_capacity(elements);
    for e in 0..elements {
        let a = if e < actor_count { e } else { rng.gen_range(0..actor_count) };
        model.actors[a].elements.push(IntentionalElement {
            id: format!("e{e:04}"),
            name: format!("Element {e:04}"),
            kind: *KINDS.choose(&mut rng).expect("non-empty"),
        });
        owner.push(a);
    }
    let ids: Vec<String> = (0..elements).map(|e| format!("e{e:04}")).collect();
    let members: Vec<Vec<usize>> =
        (0..actor_count).map(|a| (0..elements).filter(|&e| owner[e] == a).collect()).collect();

    if elements >= 2 {
        for l in 0..links {
            let id = format!("l{l:05}");
            let roll: f64 = rng.gen();
            let a = rng.gen_range(0..actor_count);
            if roll < 0.3 && members[a].len() >= 2 {
                let pair: Vec<&usize> = members[a].choose_multiple(&mut rng, 2).collect();
                let link_type = if rng.gen_bool(0.5) { LinkType::AndRefinement } else { LinkType::OrRefinement };
                model.links.push(Link { id, link_type, source: ids[*pair[0]].clone(), target: ids[*pair[1]].clone() });
                continue;
            }
            let (s, t) = loop {
                let s = rng.gen_range(0..elements);
                let t = rng.gen_range(0..elements);
                if s != t {
                    break (s, t);
                }
            };
            if roll < 0.6 {
                let dependum = format!("d{l:05}");
                model.dependums.push(Dependum {
                    id: dependum.clone(),
                    name: format!("Dependum {l}"),
                    kind: *KINDS.choose(&mut rng).expect("non-empty"),
                });
                model.links.push(Link {
                    id,
                    link_type: LinkType::Dependency { dependum },
                    source: ids[s].clone(),
                    target: ids[t].clone(),
                });
            } else {
                let label = *LABELS.choose(&mut rng).expect("non-empty");
                model.links.push(Link {
                    id,
                    link_type: LinkType::Contribution(label),
                    source: ids[s].clone(),
                    target: ids[t].clone(),
                });
            }
        }
    }

    let mut prioritization = Prioritization::default();
    for id in &ids {
        prioritization.set(
            id.clone(),
            *Level::ALL.choose(&mut rng).expect("non-empty"),
            *Level::ALL.choose(&mut rng).expect("non-empty"),
        );
    }
    for actor in &model.actors {
        if rng.gen_bool(0.7) {
            prioritization.set_weight(actor.id.clone(), *Level::ALL.choose(&mut rng).expect("non-empty"));
        }
    }
    (model, prioritization)
}
