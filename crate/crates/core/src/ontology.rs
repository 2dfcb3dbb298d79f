//! Teaching-domain ontologies: concepts and the four inter-concept relations.
//!
//! A [`DomainOntology`] is loaded from the canonical JSON format, validated
//! once, and treated as immutable afterwards. Validation problems are plain
//! data ([`Violation`]) so that tooling can list all of them at once;
//! [`load_domain_ontology`] turns the first one into an error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parse::{self, Mode, Parsed};

/// Identifier of a concept within one teaching domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.trim() != id {
            return Err(Error::Ontology(Violation::InvalidConceptId(id)));
        }
        Ok(ConceptId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ConceptId {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        ConceptId::new(value).map_err(|e| e.to_string())
    }
}

impl From<ConceptId> for String {
    fn from(id: ConceptId) -> String {
        id.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for ConceptId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    IsDecomposedInto,
    Depends,
    IsPrerequisite,
    SameAs,
}

impl RelationKind {
    pub const ALL: [RelationKind; 4] = [
        RelationKind::IsDecomposedInto,
        RelationKind::Depends,
        RelationKind::IsPrerequisite,
        RelationKind::SameAs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::IsDecomposedInto => "is_decomposed_into",
            RelationKind::Depends => "depends",
            RelationKind::IsPrerequisite => "is_prerequisite",
            RelationKind::SameAs => "same_as",
        }
    }

    fn forbids_self_loop(self) -> bool {
        matches!(self, RelationKind::IsDecomposedInto | RelationKind::IsPrerequisite)
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown relation kind `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationEdge {
    pub kind: RelationKind,
    pub from: ConceptId,
    pub to: ConceptId,
}

impl RelationEdge {
    pub fn new(kind: RelationKind, from: ConceptId, to: ConceptId) -> Self {
        RelationEdge { kind, from, to }
    }
}

impl fmt::Display for RelationEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.from, self.to)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub label: String,
}

/// The concepts and relation edges of one teaching domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainOntology {
    pub domain_id: String,
    pub label: String,
    pub concepts: Vec<Concept>,
    #[serde(default)]
    pub edges: Vec<RelationEdge>,
}

const TOP_LEVEL_KEYS: &[&str] = &["domain_id", "label", "concepts", "edges"];

/// One broken ontology invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    InvalidConceptId(String),
    DuplicateConcept(ConceptId),
    DuplicateEdge(RelationEdge),
    UnknownConcept {
        edge: RelationEdge,
        concept: ConceptId,
    },
    SelfLoop(RelationEdge),
    /// A closed path of `is_decomposed_into` edges, first node repeated last.
    DecompositionCycle(Vec<ConceptId>),
    /// A concept that is its own (transitive) prerequisite.
    PrerequisiteCycle(ConceptId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidConceptId(id) => write!(
                f,
                "invalid concept id {id:?} (must be non-empty without surrounding whitespace)"
            ),
            Violation::DuplicateConcept(id) => write!(f, "duplicate concept id `{id}`"),
            Violation::DuplicateEdge(e) => write!(f, "duplicate edge {e}"),
            Violation::UnknownConcept { edge, concept } => {
                write!(f, "edge {edge} references unknown concept `{concept}`")
            }
            Violation::SelfLoop(e) => write!(f, "self-loop {e}"),
            Violation::DecompositionCycle(path) => {
                let path: Vec<&str> = path.iter().map(ConceptId::as_str).collect();
                write!(f, "decomposition cycle {}", path.join(" -> "))
            }
            Violation::PrerequisiteCycle(id) => {
                write!(f, "concept `{id}` is its own prerequisite")
            }
        }
    }
}

impl DomainOntology {
    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concepts.iter().find(|c| c.id.as_str() == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.concept(id).is_some()
    }

    pub fn label_of<'a>(&'a self, id: &'a str) -> &'a str {
        self.concept(id).map(|c| c.label.as_str()).unwrap_or(id)
    }

    pub fn edges_of(&self, kind: RelationKind) -> impl Iterator<Item = &RelationEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ontology serializes")
    }
}

/// Parses and validates an ontology in the canonical JSON format.
pub fn load_domain_ontology(source: &str, mode: Mode) -> Result<Parsed<DomainOntology>> {
    let parsed: Parsed<DomainOntology> = parse::json_document(source, TOP_LEVEL_KEYS, mode)?;
    if let Some(v) = validate_ontology(&parsed.value).into_iter().next() {
        return Err(Error::Ontology(v));
    }
    Ok(parsed)
}

/// Lists every invariant violation; empty iff the ontology is valid.
pub fn validate_ontology(o: &DomainOntology) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut ids = BTreeSet::new();
    for c in &o.concepts {
        if c.id.as_str().is_empty() || c.id.as_str().trim() != c.id.as_str() {
            violations.push(Violation::InvalidConceptId(c.id.to_string()));
        }
        if !ids.insert(&c.id) {
            violations.push(Violation::DuplicateConcept(c.id.clone()));
        }
    }

    let mut seen = BTreeSet::new();
    for e in &o.edges {
        if !seen.insert(e) {
            violations.push(Violation::DuplicateEdge(e.clone()));
            continue;
        }
        for end in [&e.from, &e.to] {
            if !ids.contains(end) {
                violations.push(Violation::UnknownConcept {
                    edge: e.clone(),
                    concept: end.clone(),
                });
            }
        }
        if e.kind.forbids_self_loop() && e.from == e.to {
            violations.push(Violation::SelfLoop(e.clone()));
        }
    }

    if let Some(cycle) = find_decomposition_cycle(o) {
        violations.push(Violation::DecompositionCycle(cycle));
    }
    violations
}

// Iterative three-colour DFS over non-self-loop decomposition edges.
fn find_decomposition_cycle(o: &DomainOntology) -> Option<Vec<ConceptId>> {
    let mut adj: BTreeMap<&ConceptId, Vec<&ConceptId>> = BTreeMap::new();
    for e in o.edges_of(RelationKind::IsDecomposedInto) {
        if e.from != e.to {
            adj.entry(&e.from).or_default().push(&e.to);
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Colour {
        White,
        Grey,
        Black,
    }
    let mut colour: BTreeMap<&ConceptId, Colour> = BTreeMap::new();
    let nodes: Vec<&ConceptId> = adj.keys().copied().collect();
    for start in nodes {
        if colour.get(start).copied().unwrap_or(Colour::White) != Colour::White {
            continue;
        }
        let mut stack: Vec<(&ConceptId, usize)> = vec![(start, 0)];
        colour.insert(start, Colour::Grey);
        while let Some((node, next)) = stack.last_mut() {
            let children = adj.get(*node).map(Vec::as_slice).unwrap_or(&[]);
            if let Some(&child) = children.get(*next) {
                *next += 1;
                match colour.get(child).copied().unwrap_or(Colour::White) {
                    Colour::White => {
                        colour.insert(child, Colour::Grey);
                        stack.push((child, 0));
                    }
                    Colour::Grey => {
                        let pos = stack.iter().position(|(n, _)| *n == child).unwrap();
                        let mut path: Vec<ConceptId> = stack[pos..].iter().map(|(n, _)| (*n).clone()).collect();
                        path.push(child.clone());
                        return Some(path);
                    }
                    Colour::Black => {}
                }
            } else {
                colour.insert(*node, Colour::Black);
                stack.pop();
            }
        }
    }
    None
}

/// A node of the decomposition hierarchy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: ConceptId,
    pub label: String,
    pub children: Vec<TreeNode>,
}

/// The decomposition hierarchy of a domain, unfolded into a forest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptTree {
    pub domain_id: String,
    pub roots: Vec<TreeNode>,
}

impl ConceptTree {
    /// Renders the forest as an indented outline, one concept per line.
    pub fn to_outline(&self) -> String {
        fn walk(node: &TreeNode, depth: usize, out: &mut String) {
            out.push_str(&"  ".repeat(depth));
            out.push_str(&node.label);
            if node.label != node.id.as_str() {
                out.push_str(&format!(" ({})", node.id));
            }
            out.push('\n');
            for child in &node.children {
                walk(child, depth + 1, out);
            }
        }
        let mut out = String::new();
        for root in &self.roots {
            walk(root, 0, &mut out);
        }
        out
    }
}

/// Builds the hierarchy rooted at concepts without an incoming
/// `is_decomposed_into` edge. Shared sub-concepts are repeated under every
/// parent. Siblings are ordered by label, then id.
pub fn concept_tree(o: &DomainOntology) -> ConceptTree {
    let mut children: BTreeMap<&ConceptId, Vec<&Concept>> = BTreeMap::new();
    let mut has_parent = BTreeSet::new();
    for e in o.edges_of(RelationKind::IsDecomposedInto) {
        if let Some(child) = o.concept(e.to.as_str()) {
            children.entry(&e.from).or_default().push(child);
            has_parent.insert(&e.to);
        }
    }
    let order = |a: &&Concept, b: &&Concept| (&a.label, &a.id).cmp(&(&b.label, &b.id));
    for list in children.values_mut() {
        list.sort_by(order);
        list.dedup_by(|a, b| a.id == b.id);
    }

    fn build<'a>(
        concept: &'a Concept,
        children: &BTreeMap<&ConceptId, Vec<&'a Concept>>,
        path: &mut Vec<&'a ConceptId>,
    ) -> TreeNode {
        path.push(&concept.id);
        let mut kids = Vec::new();
        for c in children.get(&concept.id).into_iter().flatten() {
            if !path.contains(&&c.id) {
                kids.push(build(c, children, path));
            }
        }
        path.pop();
        TreeNode {
            id: concept.id.clone(),
            label: concept.label.clone(),
            children: kids,
        }
    }

    let mut roots: Vec<&Concept> = o.concepts.iter().filter(|c| !has_parent.contains(&c.id)).collect();
    roots.sort_by(order);
    let mut path = Vec::new();
    ConceptTree {
        domain_id: o.domain_id.clone(),
        roots: roots.into_iter().map(|c| build(c, &children, &mut path)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> ConceptId {
        ConceptId::new(s).unwrap()
    }

    fn onto(concepts: &[&str], edges: &[(RelationKind, &str, &str)]) -> DomainOntology {
        DomainOntology {
            domain_id: "d".into(),
            label: "D".into(),
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

    use RelationKind::*;

    #[test]
    fn loads_function_parameter_example() {
        let src = r#"{
            "domain_id": "structure_de_donnee",
            "label": "Structure de donnees",
            "concepts": [{"id": "fonction", "label": "fonction"}, {"id": "parametre", "label": "parametre"}],
            "edges": [{"kind": "is_decomposed_into", "from": "fonction", "to": "parametre"}]
        }"#;
        let o = load_domain_ontology(src, Mode::Strict).unwrap().value;
        assert_eq!(o.concepts.len(), 2);
        assert_eq!(o.edges.len(), 1);
        assert_eq!(o.edges[0].kind, IsDecomposedInto);
    }

    #[test]
    fn singleton_without_edges() {
        let src = r#"{"domain_id": "d", "label": "D", "concepts": [{"id": "a", "label": "A"}]}"#;
        let o = load_domain_ontology(src, Mode::Strict).unwrap().value;
        assert_eq!(o.concepts.len(), 1);
        assert!(o.edges.is_empty());
    }

    #[test]
    fn two_cycle_rejected() {
        let src = r#"{"domain_id": "d", "label": "D",
            "concepts": [{"id": "a", "label": "a"}, {"id": "b", "label": "b"}],
            "edges": [{"kind": "is_decomposed_into", "from": "a", "to": "b"},
                      {"kind": "is_decomposed_into", "from": "b", "to": "a"}]}"#;
        let err = load_domain_ontology(src, Mode::Lenient).unwrap_err();
        assert!(
            matches!(err, Error::Ontology(Violation::DecompositionCycle(_))),
            "{err}"
        );
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = load_domain_ontology("{\n  \"domain_id\": ,", Mode::Lenient).unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_keys_depend_on_mode() {
        let src = r#"{"domain_id": "d", "label": "D", "concepts": [], "extra": 1}"#;
        assert!(matches!(
            load_domain_ontology(src, Mode::Strict),
            Err(Error::UnknownKey(k)) if k == "extra"
        ));
        let lenient = load_domain_ontology(src, Mode::Lenient).unwrap();
        assert_eq!(lenient.warnings.len(), 1);
    }

    #[test]
    fn blank_concept_id_is_a_syntax_error() {
        let src = r#"{"domain_id": "d", "label": "D", "concepts": [{"id": " a", "label": "A"}]}"#;
        assert!(matches!(
            load_domain_ontology(src, Mode::Lenient),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn duplicate_concept_rejected() {
        let src = r#"{"domain_id": "d", "label": "D",
            "concepts": [{"id": "a", "label": "A"}, {"id": "a", "label": "B"}]}"#;
        assert!(matches!(
            load_domain_ontology(src, Mode::Lenient),
            Err(Error::Ontology(Violation::DuplicateConcept(_)))
        ));
    }

    #[test]
    fn validation_reports() {
        assert!(validate_ontology(&onto(&["a", "b"], &[(Depends, "a", "b")])).is_empty());

        let report = validate_ontology(&onto(&["a"], &[(Depends, "a", "arbre")]));
        assert_eq!(report.len(), 1);
        assert!(report[0].to_string().contains("arbre"));

        let report = validate_ontology(&onto(&["x"], &[(IsPrerequisite, "x", "x")]));
        assert_eq!(
            report,
            vec![Violation::SelfLoop(RelationEdge::new(IsPrerequisite, id("x"), id("x")))]
        );

        let report = validate_ontology(&onto(&["a", "b"], &[(Depends, "a", "b"), (Depends, "a", "b")]));
        assert!(matches!(report.as_slice(), [Violation::DuplicateEdge(_)]));
    }

    #[test]
    fn three_cycle_detected() {
        let o = onto(
            &["a", "b", "c"],
            &[
                (IsDecomposedInto, "a", "b"),
                (IsDecomposedInto, "b", "c"),
                (IsDecomposedInto, "c", "a"),
            ],
        );
        let report = validate_ontology(&o);
        match report.as_slice() {
            [Violation::DecompositionCycle(path)] => {
                assert_eq!(path.len(), 4);
                assert_eq!(path.first(), path.last());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tree_of_instruction() {
        let o = onto(
            &["instruction_de_controle", "affectation", "instruction"],
            &[
                (IsDecomposedInto, "instruction", "instruction_de_controle"),
                (IsDecomposedInto, "instruction", "affectation"),
            ],
        );
        let tree = concept_tree(&o);
        assert_eq!(tree.roots.len(), 1);
        let root = &tree.roots[0];
        assert_eq!(root.id.as_str(), "instruction");
        let kids: Vec<&str> = root.children.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(kids, ["affectation", "instruction_de_controle"]);
    }

    #[test]
    fn flat_forest_without_edges() {
        let o = onto(&["c", "a", "b"], &[]);
        let tree = concept_tree(&o);
        let roots: Vec<&str> = tree.roots.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(roots, ["a", "b", "c"]);
        assert!(tree.roots.iter().all(|r| r.children.is_empty()));
    }

    #[test]
    fn diamond_unfolds_shared_child() {
        // Paths: a -> c, b -> c. Two roots, c under each.
        let o = onto(
            &["a", "b", "c"],
            &[(IsDecomposedInto, "a", "c"), (IsDecomposedInto, "b", "c")],
        );
        let tree = concept_tree(&o);
        let shape: Vec<(&str, Vec<&str>)> = tree
            .roots
            .iter()
            .map(|r| (r.id.as_str(), r.children.iter().map(|c| c.id.as_str()).collect()))
            .collect();
        assert_eq!(shape, vec![("a", vec!["c"]), ("b", vec!["c"])]);
    }

    #[test]
    fn siblings_ordered_by_label_then_id() {
        let mut o = onto(
            &["p", "z", "y"],
            &[(IsDecomposedInto, "p", "z"), (IsDecomposedInto, "p", "y")],
        );
        for c in &mut o.concepts {
            c.label = "same".into();
        }
        let tree = concept_tree(&o);
        let kids: Vec<&str> = tree.roots[0].children.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(kids, ["y", "z"]);
    }
}
