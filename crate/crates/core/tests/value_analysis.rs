use goalvalue_core::analysis::{
    analyze, analyze_detailed, ftopsis_closeness, round2, DecisionMatrix, RankBy, C3_OTHER_ACTOR_IMPACT,
};
use goalvalue_core::fuzzy::{Level, Tfn};
use goalvalue_core::model::{
    Actor, ContributionLabel, Dependum, ElementKind, GoalModel, IntentionalElement, Link, LinkType, Prioritization,
};
use goalvalue_core::propagation::PropagationConfig;
use goalvalue_core::synth::random_model;
use proptest::prelude::*;

fn el(id: &str) -> IntentionalElement {
    IntentionalElement { id: id.into(), name: id.to_uppercase(), kind: ElementKind::Task }
}

/// Actor A owns g1, actor B owns t1 and r1. g1 depends on t1 for d,
/// r1 helps t1. A weighs High, B is unweighted.
fn two_actor_dependency() -> (GoalModel, Prioritization) {
    let mut m = GoalModel::new("dep", "Dependency fixture");
    m.actors.push(Actor { id: "A".into(), name: "A".into(), elements: vec![el("g1")] });
    m.actors.push(Actor { id: "B".into(), name: "B".into(), elements: vec![el("t1"), el("r1")] });
    m.dependums.push(Dependum { id: "d".into(), name: "D".into(), kind: ElementKind::Resource });
    m.links.push(Link {
        id: "dep".into(),
        link_type: LinkType::Dependency { dependum: "d".into() },
        source: "g1".into(),
        target: "t1".into(),
    });
    m.links.push(Link {
        id: "help".into(),
        link_type: LinkType::Contribution(ContributionLabel::Help),
        source: "r1".into(),
        target: "t1".into(),
    });
    let mut p = Prioritization::default();
    p.set("g1", Level::High, Level::Medium);
    p.set("t1", Level::Medium, Level::High);
    p.set("r1", Level::Low, Level::VeryLow);
    p.set_weight("A", Level::High);
    (m, p)
}

#[test]
fn two_actor_dependency_matches_independent_pipeline() {
    // Frozen from a separate dense-solve implementation of the whole pipeline.
    let expected = [
        // id, global, local, same, other
        ("g1", 20.65983652632191, 81.9650821339215, 30.7087078739126, -10.04887134759069),
        ("r1", 50.41281746784557, 61.45511997509922, 56.26972958844377, -5.856912120598196),
        ("t1", 46.549446374283406, 43.31684411538279, 28.463917169032925, 18.08552920525048),
    ];
    let (m, p) = two_actor_dependency();
    let a = analyze_detailed(&m, &p, &PropagationConfig::default()).unwrap();
    for (id, global, local, same, other) in expected {
        let v = a.result.element(id).unwrap();
        assert!((v.global_value - global).abs() < 1e-6, "{id} global {}", v.global_value);
        assert!((v.local_value - local).abs() < 1e-6, "{id} local {}", v.local_value);
        assert!((v.same_actor_value - same).abs() < 1e-6, "{id} same {}", v.same_actor_value);
        assert!((v.other_actor_value - other).abs() < 1e-6, "{id} other {}", v.other_actor_value);
    }
    assert_ne!(round2(a.result.element("t1").unwrap().other_actor_value), 0.0);

    let c3 = a.matrices.global.cell("t1", C3_OTHER_ACTOR_IMPACT).unwrap();
    assert_eq!(c3, a.propagation.split_by_actor(&m, "t1").unwrap().1);
    let expected_c3 = Tfn::new(0.50625, 0.6075, 0.70875).unwrap();
    for (x, y) in c3.components().into_iter().zip(expected_c3.components()) {
        assert!((x - y).abs() < 1e-8);
    }
    assert_eq!(a.result.global_ranking, ["r1", "t1", "g1"]);
    assert_eq!(a.result.local_ranking["B"], ["r1", "t1"]);
}

#[test]
fn unweighted_c1_equals_fuzzified_importance() {
    let (m, mut p) = two_actor_dependency();
    p.stakeholder_weights.clear();
    let a = analyze_detailed(&m, &p, &PropagationConfig::default()).unwrap();
    for (row, id) in a.matrices.global.cells.iter().zip(&a.matrices.global.alternatives) {
        let e = p.element_priorities[id];
        assert_eq!(row[0], goalvalue_core::fuzzify(e.importance, e.confidence));
    }
}

#[test]
fn value_contract_on_random_models() {
    let cfg = PropagationConfig::default();
    for seed in 0..120u64 {
        let elements = 2 + (seed as usize * 7) % 29;
        let (m, p) = random_model(seed, elements, (seed as usize * 13) % (3 * elements + 1));
        let r = analyze(&m, &p, &cfg).unwrap();
        assert_eq!(r.elements.len(), m.element_count());
        for e in &r.elements {
            for v in [e.global_value, e.local_value, e.same_actor_value, e.other_actor_value] {
                assert!((-100.0..=100.0).contains(&v), "seed {seed} {}: {v}", e.element_id);
            }
            assert_eq!(e.same_actor_value + e.other_actor_value, e.global_value, "seed {seed}");
            let rounded = round2(e.same_actor_value) + round2(e.other_actor_value);
            assert!((rounded - round2(e.global_value)).abs() <= 0.01 + 1e-9, "seed {seed}");
        }
        let ranked: Vec<String> = r.rank(RankBy::Global, None).unwrap().into_iter().map(|(id, _)| id).collect();
        assert_eq!(ranked, r.global_ranking);
        for pair in r.global_ranking.windows(2) {
            let (a, b) = (r.element(&pair[0]).unwrap(), r.element(&pair[1]).unwrap());
            assert!(a.global_value > b.global_value || (a.global_value == b.global_value && a.name <= b.name));
        }
    }
}

#[test]
fn all_zero_models_give_zero_values() {
    for seed in 0..20u64 {
        let (m, mut p) = random_model(seed, 15, 30);
        for e in p.element_priorities.values_mut() {
            e.importance = Level::VeryLow;
            e.confidence = Level::VeryHigh;
        }
        let r = analyze(&m, &p, &PropagationConfig::default()).unwrap();
        for row in &r.table {
            assert_eq!(
                [row.global_value, row.local_value, row.same_actor_value, row.other_actor_value],
                [0.0; 4],
                "seed {seed}"
            );
        }
        assert!(!r.warnings.is_empty());
    }
}

#[test]
fn determinism_apart_from_timestamp() {
    let (m, p) = random_model(3, 40, 100);
    let mut a = analyze(&m, &p, &PropagationConfig::default()).unwrap();
    let mut b = analyze(&m, &p, &PropagationConfig::default()).unwrap();
    a.created_at.clear();
    b.created_at.clear();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn result_json_has_seven_column_table() {
    let (m, p) = two_actor_dependency();
    let r = analyze(&m, &p, &PropagationConfig::default()).unwrap();
    let text = serde_json::to_string(&r.table[0]).unwrap();
    let order = ["name", "importance", "confidence", "globalValue", "localValue", "sameActorValue", "otherActorValue"];
    let positions: Vec<usize> = order.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["table"][0]["name"], "R1");
    assert_eq!(v["table"][0]["globalValue"], 50.41);
}

fn arb_tfn() -> impl Strategy<Value = Tfn> {
    prop::array::uniform3(-5.0f64..5.0).prop_map(|mut c| {
        c.sort_by(f64::total_cmp);
        Tfn { l: c[0], m: c[1], u: c[2] }
    })
}

fn arb_matrix() -> impl Strategy<Value = DecisionMatrix> {
    (1usize..6, 1usize..4).prop_flat_map(|(rows, cols)| {
        prop::collection::vec(prop::collection::vec(arb_tfn(), cols), rows).prop_map(move |cells| {
            DecisionMatrix::new(
                (0..rows).map(|i| format!("a{i}")).collect(),
                (0..cols).map(|j| format!("c{j}")).collect(),
                cells,
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn positive_column_scaling_leaves_closeness(m in arb_matrix(), col in 0usize..3, c in 0.01f64..100.0) {
        let col = col % m.criteria.len();
        let mut scaled = m.clone();
        for row in &mut scaled.cells {
            row[col] = row[col].scale(c);
        }
        let a = ftopsis_closeness(&m).unwrap();
        let b = ftopsis_closeness(&scaled).unwrap();
        for (x, y) in a.cc.iter().zip(&b.cc) {
            prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
            prop_assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn dominance_orders_closeness(m in arb_matrix(), bumps in prop::collection::vec(prop::array::uniform3(0.0f64..1.0), 3)) {
        // append a row dominating row 0 componentwise in every criterion
        let mut dominated = m.clone();
        let better: Vec<Tfn> = m.cells[0]
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let b = bumps[j % bumps.len()];
                let l = t.l + b[0];
                let mm = (t.m + b[1]).max(l);
                Tfn { l, m: mm, u: (t.u + b[2]).max(mm) }
            })
            .collect();
        dominated.alternatives.push("best".into());
        dominated.cells.push(better);
        let cc = ftopsis_closeness(&dominated).unwrap();
        let last = *cc.cc.last().unwrap();
        prop_assert!(last >= cc.cc[0] - 1e-15, "{} < {}", last, cc.cc[0]);
    }
}
