use std::collections::BTreeSet;

use ontoseg::inference::canonicalize;
use ontoseg::ontology::{concept_tree, load_domain_ontology, validate_ontology};
use ontoseg::{infer, Mode, RelationEdge, RelationKind};
use ontoseg_testkit::{id, random_ontology, reachability, same_as_components, symmetric_pairs};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ontology(seed: u64) -> ontoseg::DomainOntology {
    random_ontology(&mut ChaCha8Rng::seed_from_u64(seed), "d", 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prerequisite_closure_is_reachability(seed in any::<u64>()) {
        let o = ontology(seed);
        let facts = infer(&o);
        let expected = reachability(&o, RelationKind::IsPrerequisite);
        for a in &o.concepts {
            for b in &o.concepts {
                let pair = (a.id.to_string(), b.id.to_string());
                prop_assert_eq!(facts.is_prerequisite(a.id.as_str(), b.id.as_str()), expected.contains(&pair));
            }
        }
    }

    #[test]
    fn same_as_classes_are_components(seed in any::<u64>()) {
        let o = ontology(seed);
        let facts = infer(&o);
        for (c, rep) in same_as_components(&o) {
            let got = canonicalize(&c, &facts).unwrap();
            prop_assert_eq!(got.as_str(), rep.as_str());
        }
        let members: usize = facts.same_as_classes().values().map(BTreeSet::len).sum();
        prop_assert_eq!(members, o.concepts.len());
    }

    #[test]
    fn depends_is_symmetric_closure(seed in any::<u64>()) {
        let o = ontology(seed);
        let facts = infer(&o);
        let expected = symmetric_pairs(&o);
        for a in &o.concepts {
            for b in &o.concepts {
                let pair = (a.id.to_string(), b.id.to_string());
                prop_assert_eq!(facts.depends(a.id.as_str(), b.id.as_str()), expected.contains(&pair));
                prop_assert_eq!(facts.depends(a.id.as_str(), b.id.as_str()), facts.depends(b.id.as_str(), a.id.as_str()));
            }
        }
    }

    #[test]
    fn canonicalize_is_idempotent(seed in any::<u64>()) {
        let o = ontology(seed);
        let facts = infer(&o);
        for c in &o.concepts {
            let once = canonicalize(c.id.as_str(), &facts).unwrap();
            prop_assert_eq!(canonicalize(once.as_str(), &facts).unwrap(), once);
        }
    }

    #[test]
    fn closure_is_idempotent(seed in any::<u64>()) {
        let o = ontology(seed);
        let facts = infer(&o);
        let mut closed = o.clone();
        for (a, b) in facts.prerequisite_closed() {
            closed.edges.push(RelationEdge::new(RelationKind::IsPrerequisite, a.clone(), b.clone()));
        }
        for p in facts.depends_closed() {
            closed.edges.push(RelationEdge::new(RelationKind::Depends, p.second().clone(), p.first().clone()));
        }
        let again = infer(&closed);
        prop_assert_eq!(again.prerequisite_closed(), facts.prerequisite_closed());
        prop_assert_eq!(again.depends_closed(), facts.depends_closed());
        prop_assert_eq!(again.same_as_classes(), facts.same_as_classes());
    }

    #[test]
    fn adding_an_edge_never_removes_facts(seed in any::<u64>(), a in 0usize..12, b in 0usize..12, k in 0usize..4) {
        let o = ontology(seed);
        let n = o.concepts.len();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let mut more = o.clone();
        more.edges.push(RelationEdge::new(RelationKind::ALL[k], o.concepts[a].id.clone(), o.concepts[b].id.clone()));
        let before = infer(&o);
        let after = infer(&more);
        for x in &o.concepts {
            for y in &o.concepts {
                let (x, y) = (x.id.as_str(), y.id.as_str());
                prop_assert!(!before.is_prerequisite(x, y) || after.is_prerequisite(x, y));
                prop_assert!(!before.depends(x, y) || after.depends(x, y));
                prop_assert!(!before.same_as(x, y) || after.same_as(x, y));
            }
        }
    }

    #[test]
    fn generated_ontologies_validate_and_round_trip(seed in any::<u64>()) {
        let mut o = ontology(seed);
        // Prerequisite cycles are reported by infer, not by validation.
        o.edges.retain(|e| e.kind != RelationKind::IsPrerequisite);
        prop_assert!(validate_ontology(&o).is_empty());
        let back = load_domain_ontology(&o.to_json(), Mode::Strict).unwrap().value;
        prop_assert_eq!(&back, &o);
        prop_assert_eq!(concept_tree(&o), concept_tree(&back));
    }
}

#[test]
fn named_inferences() {
    let src = r#"{
        "domain_id": "sd", "label": "sd",
        "concepts": [
            {"id": "pointeur", "label": "pointeur"}, {"id": "liste", "label": "liste"},
            {"id": "arbre", "label": "arbre"}, {"id": "fonction", "label": "fonction"},
            {"id": "passage_parametre_par_valeur", "label": "passage"}
        ],
        "edges": [
            {"kind": "is_prerequisite", "from": "pointeur", "to": "liste"},
            {"kind": "is_prerequisite", "from": "liste", "to": "arbre"},
            {"kind": "depends", "from": "passage_parametre_par_valeur", "to": "fonction"}
        ]
    }"#;
    let o = load_domain_ontology(src, Mode::Strict).unwrap().value;
    let facts = infer(&o);
    assert!(facts.is_prerequisite("pointeur", "arbre"));
    assert!(!facts.is_prerequisite("arbre", "pointeur"));
    assert!(facts.depends("fonction", "passage_parametre_par_valeur"));
    assert!(facts.violations().is_empty());
    let report = facts.report(&o);
    assert!(report.inferred.contains(&RelationEdge::new(
        RelationKind::IsPrerequisite,
        id("pointeur"),
        id("arbre")
    )));
    assert!(report.inferred.contains(&RelationEdge::new(
        RelationKind::Depends,
        id("fonction"),
        id("passage_parametre_par_valeur")
    )));
}

#[test]
fn prerequisite_cycle_is_a_violation_not_a_panic() {
    let src = r#"{"domain_id": "d", "label": "d",
        "concepts": [{"id": "a", "label": "a"}, {"id": "b", "label": "b"}],
        "edges": [{"kind": "is_prerequisite", "from": "a", "to": "b"},
                  {"kind": "is_prerequisite", "from": "b", "to": "a"}]}"#;
    let o = load_domain_ontology(src, Mode::Strict).unwrap().value;
    let facts = infer(&o);
    assert_eq!(facts.violations().len(), 2);
}
