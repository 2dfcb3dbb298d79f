//! Facts implied by the declared relation properties.
//!
//! `same_as` is an equivalence: its classes are computed with a union-find and
//! every class is represented by its lexicographically smallest member. All
//! other edges are rewritten onto representatives before closing, so
//! `depends` is closed symmetrically and `is_prerequisite` transitively over
//! the merged concepts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ontology::{ConceptId, DomainOntology, RelationEdge, RelationKind, Violation};

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    // Keeps the smaller index as root; indices follow sorted id order, so the
    // root of every class is its smallest id.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// An unordered concept pair, stored with the smaller id first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct UnorderedPair(ConceptId, ConceptId);

impl UnorderedPair {
    pub fn new(a: ConceptId, b: ConceptId) -> Self {
        if a <= b {
            UnorderedPair(a, b)
        } else {
            UnorderedPair(b, a)
        }
    }

    pub fn first(&self) -> &ConceptId {
        &self.0
    }

    pub fn second(&self) -> &ConceptId {
        &self.1
    }

    pub fn contains(&self, c: &ConceptId) -> bool {
        &self.0 == c || &self.1 == c
    }

    /// The partner of `c` in this pair, if `c` is a member.
    pub fn other(&self, c: &ConceptId) -> Option<&ConceptId> {
        if &self.0 == c {
            Some(&self.1)
        } else if &self.1 == c {
            Some(&self.0)
        } else {
            None
        }
    }
}

/// Closures of the relation edges of one domain, over sameAs representatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferredFacts {
    domain_id: String,
    canonical: BTreeMap<ConceptId, ConceptId>,
    classes: BTreeMap<ConceptId, BTreeSet<ConceptId>>,
    depends: BTreeSet<UnorderedPair>,
    prerequisites: BTreeSet<(ConceptId, ConceptId)>,
    decomposition: BTreeSet<(ConceptId, ConceptId)>,
    violations: Vec<Violation>,
}

/// Computes the least closures of the asserted edges of `o`.
///
/// Prerequisite cycles are not errors here; each concept that reaches itself
/// is listed in [`InferredFacts::violations`].
pub fn infer(o: &DomainOntology) -> InferredFacts {
    let ids: Vec<&ConceptId> = o
        .concepts
        .iter()
        .map(|c| &c.id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&ConceptId, usize> = ids.iter().enumerate().map(|(i, c)| (*c, i)).collect();

    let mut uf = UnionFind::new(ids.len());
    for e in o.edges_of(RelationKind::SameAs) {
        if let (Some(&a), Some(&b)) = (index.get(&e.from), index.get(&e.to)) {
            uf.union(a, b);
        }
    }
    let mut canonical = BTreeMap::new();
    let mut classes: BTreeMap<ConceptId, BTreeSet<ConceptId>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let rep = ids[uf.find(i)].clone();
        classes.entry(rep.clone()).or_default().insert((*id).clone());
        canonical.insert((*id).clone(), rep);
    }

    let rep = |c: &ConceptId| canonical.get(c).cloned();
    let mut depends = BTreeSet::new();
    let mut decomposition = BTreeSet::new();
    let mut prereq_edges: BTreeMap<ConceptId, BTreeSet<ConceptId>> = BTreeMap::new();
    for e in &o.edges {
        let (Some(from), Some(to)) = (rep(&e.from), rep(&e.to)) else {
            continue;
        };
        match e.kind {
            RelationKind::Depends => {
                depends.insert(UnorderedPair::new(from, to));
            }
            RelationKind::IsPrerequisite => {
                prereq_edges.entry(from).or_default().insert(to);
            }
            RelationKind::IsDecomposedInto => {
                decomposition.insert((from, to));
            }
            RelationKind::SameAs => {}
        }
    }

    // Reachability by BFS from every source; a node reaches itself only
    // through a cycle.
    let mut prerequisites = BTreeSet::new();
    for source in prereq_edges.keys() {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&ConceptId> = prereq_edges[source].iter().collect();
        while let Some(next) = queue.pop_front() {
            if seen.insert(next) {
                if let Some(out) = prereq_edges.get(next) {
                    queue.extend(out.iter());
                }
            }
        }
        for target in seen {
            prerequisites.insert((source.clone(), target.clone()));
        }
    }

    let violations = prerequisites
        .iter()
        .filter(|(a, b)| a == b)
        .map(|(a, _)| Violation::PrerequisiteCycle(a.clone()))
        .collect();

    InferredFacts {
        domain_id: o.domain_id.clone(),
        canonical,
        classes,
        depends,
        prerequisites,
        decomposition,
        violations,
    }
}

/// Returns the representative of `c`'s sameAs class.
pub fn canonicalize(c: &str, facts: &InferredFacts) -> Result<ConceptId> {
    facts
        .canonical
        .get(c)
        .cloned()
        .ok_or_else(|| Error::UnknownConcept(c.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// The queried concept is the source of the relation.
    Outgoing,
    /// The queried concept is the target of the relation.
    Incoming,
    /// Symmetric relation.
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RelatedConcept {
    pub concept: ConceptId,
    pub kind: RelationKind,
    pub direction: Direction,
}

/// Closure neighbours of `c` under the requested relation kinds.
///
/// Neighbours are sameAs representatives, except for [`RelationKind::SameAs`]
/// itself, which yields the other members of `c`'s class.
pub fn related_concepts(
    c: &str,
    facts: &InferredFacts,
    kinds: &BTreeSet<RelationKind>,
) -> Result<BTreeSet<RelatedConcept>> {
    let own = canonicalize(c, facts)?;
    let mut out = BTreeSet::new();
    let mut push = |concept: &ConceptId, kind, direction| {
        if *concept != own || kind == RelationKind::SameAs {
            out.insert(RelatedConcept {
                concept: concept.clone(),
                kind,
                direction,
            });
        }
    };
    for &kind in kinds {
        match kind {
            RelationKind::SameAs => {
                for member in &facts.classes[&own] {
                    if member.as_str() != c {
                        push(member, kind, Direction::Both);
                    }
                }
            }
            RelationKind::Depends => {
                for pair in &facts.depends {
                    if let Some(other) = pair.other(&own) {
                        push(other, kind, Direction::Both);
                    }
                }
            }
            RelationKind::IsPrerequisite | RelationKind::IsDecomposedInto => {
                let pairs = if kind == RelationKind::IsPrerequisite {
                    &facts.prerequisites
                } else {
                    &facts.decomposition
                };
                for (from, to) in pairs {
                    if *from == own {
                        push(to, kind, Direction::Outgoing);
                    }
                    if *to == own {
                        push(from, kind, Direction::Incoming);
                    }
                }
            }
        }
    }
    Ok(out)
}

impl InferredFacts {
    pub fn domain_id(&self) -> &str {
        &self.domain_id
    }

    pub fn canonical(&self, c: &str) -> Option<&ConceptId> {
        self.canonical.get(c)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &ConceptId> {
        self.canonical.keys()
    }

    /// sameAs classes keyed by their representative.
    pub fn same_as_classes(&self) -> &BTreeMap<ConceptId, BTreeSet<ConceptId>> {
        &self.classes
    }

    pub fn depends_closed(&self) -> &BTreeSet<UnorderedPair> {
        &self.depends
    }

    pub fn prerequisite_closed(&self) -> &BTreeSet<(ConceptId, ConceptId)> {
        &self.prerequisites
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn same_as(&self, a: &str, b: &str) -> bool {
        matches!((self.canonical(a), self.canonical(b)), (Some(x), Some(y)) if x == y)
    }

    /// Whether `depends(a, b)` holds in the closure, in either orientation.
    pub fn depends(&self, a: &str, b: &str) -> bool {
        match (self.canonical(a), self.canonical(b)) {
            (Some(x), Some(y)) => self.depends.contains(&UnorderedPair::new(x.clone(), y.clone())),
            _ => false,
        }
    }

    pub fn is_prerequisite(&self, a: &str, b: &str) -> bool {
        match (self.canonical(a), self.canonical(b)) {
            (Some(x), Some(y)) => self.prerequisites.contains(&(x.clone(), y.clone())),
            _ => false,
        }
    }

    /// Asserted versus inferred facts, in terms of the original ontology.
    pub fn report(&self, o: &DomainOntology) -> InferenceReport {
        let asserted: BTreeSet<&RelationEdge> = o.edges.iter().collect();
        let is_asserted =
            |kind, a: &ConceptId, b: &ConceptId| asserted.contains(&RelationEdge::new(kind, a.clone(), b.clone()));

        let mut inferred = Vec::new();
        for pair in &self.depends {
            let (a, b) = (pair.first(), pair.second());
            for (x, y) in [(a, b), (b, a)] {
                if !is_asserted(RelationKind::Depends, x, y) {
                    inferred.push(RelationEdge::new(RelationKind::Depends, x.clone(), y.clone()));
                }
                if a == b {
                    break;
                }
            }
        }
        for (a, b) in &self.prerequisites {
            if !is_asserted(RelationKind::IsPrerequisite, a, b) {
                inferred.push(RelationEdge::new(RelationKind::IsPrerequisite, a.clone(), b.clone()));
            }
        }
        for (rep, members) in &self.classes {
            for m in members.iter().filter(|m| *m != rep) {
                if !is_asserted(RelationKind::SameAs, rep, m) && !is_asserted(RelationKind::SameAs, m, rep) {
                    inferred.push(RelationEdge::new(RelationKind::SameAs, rep.clone(), m.clone()));
                }
            }
        }

        InferenceReport {
            domain_id: self.domain_id.clone(),
            asserted: o.edges.clone(),
            inferred,
            same_as_classes: self
                .classes
                .iter()
                .filter(|(_, m)| m.len() > 1)
                .map(|(rep, members)| SameAsClass {
                    representative: rep.clone(),
                    members: members.iter().cloned().collect(),
                })
                .collect(),
            violations: self.violations.iter().map(ToString::to_string).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SameAsClass {
    pub representative: ConceptId,
    pub members: Vec<ConceptId>,
}

/// Serializable summary of an inference run.
#[derive(Clone, Debug, Serialize)]
pub struct InferenceReport {
    pub domain_id: String,
    pub asserted: Vec<RelationEdge>,
    pub inferred: Vec<RelationEdge>,
    pub same_as_classes: Vec<SameAsClass>,
    pub violations: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Concept;
    use RelationKind::*;

    fn id(s: &str) -> ConceptId {
        ConceptId::new(s).unwrap()
    }

    fn onto(concepts: &[&str], edges: &[(RelationKind, &str, &str)]) -> DomainOntology {
        DomainOntology {
            domain_id: "structure_de_donnee".into(),
            label: "Structure de donnees".into(),
            concepts: concepts
                .iter()
                .map(|c| Concept {
                    id: id(c),
                    label: c.to_string(),
                })
                .collect(),
            edges: edges
                .iter()
                .map(|(k, f, t)| RelationEdge::new(*k, id(f), id(t)))
                .collect(),
        }
    }

    fn chain() -> DomainOntology {
        onto(
            &["pointeur", "liste", "arbre"],
            &[
                (IsPrerequisite, "pointeur", "liste"),
                (IsPrerequisite, "liste", "arbre"),
            ],
        )
    }

    #[test]
    fn depends_is_symmetric() {
        let o = onto(
            &["fonction", "passage_parametre_par_valeur"],
            &[(Depends, "fonction", "passage_parametre_par_valeur")],
        );
        let facts = infer(&o);
        assert_eq!(facts.depends_closed().len(), 1);
        assert!(facts.depends("fonction", "passage_parametre_par_valeur"));
        assert!(facts.depends("passage_parametre_par_valeur", "fonction"));
    }

    #[test]
    fn prerequisite_is_transitive() {
        let facts = infer(&chain());
        assert!(facts.is_prerequisite("pointeur", "arbre"));
        assert!(!facts.is_prerequisite("arbre", "pointeur"));
        assert_eq!(facts.prerequisite_closed().len(), 3);
        assert!(facts.violations().is_empty());
    }

    #[test]
    fn empty_edges_give_singletons() {
        let facts = infer(&onto(&["a", "b"], &[]));
        assert!(facts.depends_closed().is_empty());
        assert!(facts.prerequisite_closed().is_empty());
        assert_eq!(facts.same_as_classes().len(), 2);
        assert!(facts.same_as_classes().values().all(|c| c.len() == 1));
    }

    #[test]
    fn canonical_is_smallest_member() {
        let facts = infer(&onto(
            &["instruction_de_repetition", "boucle"],
            &[(SameAs, "instruction_de_repetition", "boucle")],
        ));
        assert_eq!(canonicalize("boucle", &facts).unwrap().as_str(), "boucle");
        assert_eq!(
            canonicalize("instruction_de_repetition", &facts).unwrap().as_str(),
            "boucle"
        );
    }

    #[test]
    fn canonical_identity_and_errors() {
        let facts = infer(&onto(&["x"], &[]));
        assert_eq!(canonicalize("x", &facts).unwrap().as_str(), "x");
        assert!(matches!(canonicalize("nope", &facts), Err(Error::UnknownConcept(_))));
    }

    #[test]
    fn same_as_chain_merges() {
        // Components of the 3-node path b-c, a-b: a single class {a, b, c}.
        let facts = infer(&onto(&["c", "b", "a"], &[(SameAs, "b", "c"), (SameAs, "a", "b")]));
        for c in ["a", "b", "c"] {
            assert_eq!(canonicalize(c, &facts).unwrap().as_str(), "a");
        }
    }

    #[test]
    fn related_prerequisites() {
        let facts = infer(&chain());
        let kinds = BTreeSet::from([IsPrerequisite]);
        let related = related_concepts("pointeur", &facts, &kinds).unwrap();
        let got: Vec<(&str, Direction)> = related.iter().map(|r| (r.concept.as_str(), r.direction)).collect();
        assert_eq!(got, [("arbre", Direction::Outgoing), ("liste", Direction::Outgoing)]);

        let related = related_concepts("arbre", &facts, &kinds).unwrap();
        assert!(related.iter().all(|r| r.direction == Direction::Incoming));
        assert_eq!(related.len(), 2);

        assert!(related_concepts("pointeur", &facts, &BTreeSet::new())
            .unwrap()
            .is_empty());
        assert!(related_concepts("zzz", &facts, &kinds).is_err());
    }

    #[test]
    fn related_depends() {
        let facts = infer(&onto(
            &["fonction", "passage_parametre_par_valeur"],
            &[(Depends, "passage_parametre_par_valeur", "fonction")],
        ));
        let related = related_concepts("fonction", &facts, &BTreeSet::from([Depends])).unwrap();
        let ids: Vec<&str> = related.iter().map(|r| r.concept.as_str()).collect();
        assert_eq!(ids, ["passage_parametre_par_valeur"]);
    }

    #[test]
    fn related_same_as_lists_twins() {
        let facts = infer(&onto(
            &["boucle", "instruction_de_repetition"],
            &[(SameAs, "boucle", "instruction_de_repetition")],
        ));
        let related = related_concepts("boucle", &facts, &BTreeSet::from([SameAs])).unwrap();
        let ids: Vec<&str> = related.iter().map(|r| r.concept.as_str()).collect();
        assert_eq!(ids, ["instruction_de_repetition"]);
    }

    #[test]
    fn prerequisite_cycle_is_a_violation() {
        let facts = infer(&onto(
            &["a", "b"],
            &[(IsPrerequisite, "a", "b"), (IsPrerequisite, "b", "a")],
        ));
        assert_eq!(
            facts.violations(),
            &[
                Violation::PrerequisiteCycle(id("a")),
                Violation::PrerequisiteCycle(id("b"))
            ]
        );
    }

    #[test]
    fn edges_are_rewritten_onto_representatives() {
        let facts = infer(&onto(
            &["adresse", "pointeur", "liste"],
            &[(SameAs, "pointeur", "adresse"), (IsPrerequisite, "pointeur", "liste")],
        ));
        assert!(facts.is_prerequisite("adresse", "liste"));
        assert!(facts.prerequisite_closed().contains(&(id("adresse"), id("liste"))));
    }

    #[test]
    fn report_separates_asserted_and_inferred() {
        let o = onto(
            &["pointeur", "liste", "arbre", "fonction", "parametre"],
            &[
                (IsPrerequisite, "pointeur", "liste"),
                (IsPrerequisite, "liste", "arbre"),
                (Depends, "fonction", "parametre"),
            ],
        );
        let report = infer(&o).report(&o);
        assert_eq!(report.asserted.len(), 3);
        let inferred: BTreeSet<String> = report.inferred.iter().map(ToString::to_string).collect();
        assert_eq!(
            inferred,
            BTreeSet::from([
                "depends(parametre, fonction)".to_string(),
                "is_prerequisite(pointeur, arbre)".to_string(),
            ])
        );
    }
}
