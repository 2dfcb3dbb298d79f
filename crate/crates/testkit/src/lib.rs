//! Reference oracles, generators and fixture helpers shared by the
//! integration and acceptance tests.
//!
//! Oracles here are written as plainly as possible from the definitions and
//! never call into the algorithms they check.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use ontoseg::{
    Concept, ConceptId, DomainOntology, Mode, PedagogicalObject, PobKind, RelationEdge, RelationKind, Segment,
    SegmentRef, Timecode, VideoCourse, VideoLesson,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn id(s: &str) -> ConceptId {
    ConceptId::new(s).expect("valid concept id")
}

// ---------------------------------------------------------------------------
// Fixtures

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn demo_ontology_path() -> PathBuf {
    fixtures_dir().join("demo/ontology.json")
}

pub fn demo_course_path() -> PathBuf {
    fixtures_dir().join("demo/course.json")
}

pub fn demo_ontology() -> DomainOntology {
    let text = std::fs::read_to_string(demo_ontology_path()).expect("demo ontology");
    ontoseg::ontology::load_domain_ontology(&text, Mode::Strict)
        .expect("demo ontology parses")
        .value
}

pub fn demo_course() -> VideoCourse {
    let text = std::fs::read_to_string(demo_course_path()).expect("demo course");
    ontoseg::annotations::parse_annotation(&text, Mode::Strict)
        .expect("demo course parses")
        .value
}

pub fn demo_engine() -> ontoseg::Engine {
    ontoseg::Engine::new(vec![demo_ontology()], vec![demo_course()]).expect("demo engine")
}

// ---------------------------------------------------------------------------
// Graph oracles

/// Connected components of the sameAs edges by breadth-first search. Maps
/// each concept to the smallest id in its component.
pub fn same_as_components(o: &DomainOntology) -> BTreeMap<String, String> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for c in &o.concepts {
        adj.entry(c.id.as_str()).or_default();
    }
    for e in o.edges.iter().filter(|e| e.kind == RelationKind::SameAs) {
        adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
        adj.entry(e.to.as_str()).or_default().push(e.from.as_str());
    }
    let mut out = BTreeMap::new();
    for &start in adj.keys() {
        if out.contains_key(start) {
            continue;
        }
        let mut component = vec![start];
        let mut seen: BTreeSet<&str> = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &m in &adj[n] {
                if seen.insert(m) {
                    component.push(m);
                    queue.push_back(m);
                }
            }
        }
        let min = component.iter().min().unwrap().to_string();
        for m in component {
            out.insert(m.to_string(), min.clone());
        }
    }
    out
}

/// Floyd–Warshall reachability over the concepts of `o`, where an edge of
/// `kind` between two concepts connects every member of their sameAs
/// classes. `reach[a][b]` requires a path of at least one edge.
pub fn reachability(o: &DomainOntology, kind: RelationKind) -> BTreeSet<(String, String)> {
    let classes = same_as_components(o);
    let ids: Vec<&String> = classes.keys().collect();
    let n = ids.len();
    let mut r = vec![vec![false; n]; n];
    for e in o.edges.iter().filter(|e| e.kind == kind) {
        for i in 0..n {
            for j in 0..n {
                if classes[ids[i]] == classes[e.from.as_str()] && classes[ids[j]] == classes[e.to.as_str()] {
                    r[i][j] = true;
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if r[i][j] {
                out.insert((ids[i].clone(), ids[j].clone()));
            }
        }
    }
    out
}

/// Pairs related by an asserted depends edge in either orientation, lifted
/// to sameAs classes.
pub fn symmetric_pairs(o: &DomainOntology) -> BTreeSet<(String, String)> {
    let classes = same_as_components(o);
    let mut out = BTreeSet::new();
    for a in classes.keys() {
        for b in classes.keys() {
            let hit = o.edges.iter().filter(|e| e.kind == RelationKind::Depends).any(|e| {
                let (f, t) = (&classes[e.from.as_str()], &classes[e.to.as_str()]);
                (&classes[a] == f && &classes[b] == t) || (&classes[a] == t && &classes[b] == f)
            });
            if hit {
                out.insert((a.clone(), b.clone()));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Weighting and ranking oracles

/// Direct evaluation of the CF-ISDF definition over raw courses. Concept ids
/// are first mapped through `canon` (identity when absent).
pub fn naive_weights(courses: &[VideoCourse], canon: &BTreeMap<String, String>) -> BTreeMap<(String, SegmentRef), f64> {
    let c_of = |c: &ConceptId| canon.get(c.as_str()).cloned().unwrap_or_else(|| c.to_string());
    let pob_concepts = |p: &PedagogicalObject| -> BTreeSet<String> { p.concerns.iter().map(c_of).collect() };

    let docs: Vec<(&VideoCourse, &VideoLesson)> = courses
        .iter()
        .flat_map(|c| c.lessons.iter().map(move |l| (c, l)))
        .filter(|(_, l)| !l.segments.is_empty())
        .collect();
    let n_docs = docs.len() as f64;

    let mut out = BTreeMap::new();
    for &(course, lesson) in &docs {
        for seg in &lesson.segments {
            let concepts: BTreeSet<String> = seg.pobs.iter().flat_map(pob_concepts).collect();
            for c in concepts {
                let cf = seg.pobs.iter().filter(|p| pob_concepts(p).contains(&c)).count() as f64;
                let s_d = lesson.segments.len() as f64;
                let seg_f = lesson
                    .segments
                    .iter()
                    .filter(|s| s.pobs.iter().any(|p| pob_concepts(p).contains(&c)))
                    .count() as f64;
                let df = docs
                    .iter()
                    .filter(|(oc, ol)| {
                        oc.domain_id == course.domain_id
                            && ol
                                .segments
                                .iter()
                                .any(|s| s.pobs.iter().any(|p| pob_concepts(p).contains(&c)))
                    })
                    .count() as f64;
                let w = cf * (s_d / seg_f).ln() * (n_docs / df).ln();
                out.insert((c, SegmentRef::new(&lesson.id, &seg.id)), w);
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct OracleQuery {
    pub domain_id: String,
    pub concepts: Vec<String>,
    pub pob: Option<PobKind>,
    pub top: Option<usize>,
}

/// Scores every segment of the query domain by brute force and ranks them.
/// Scores within 1e-12 of each other are treated as ties.
pub fn brute_force_rank(
    courses: &[VideoCourse],
    canon: &BTreeMap<String, String>,
    q: &OracleQuery,
) -> Vec<(SegmentRef, f64)> {
    let weights = naive_weights(courses, canon);
    let query: BTreeSet<String> = q
        .concepts
        .iter()
        .map(|c| canon.get(c).cloned().unwrap_or_else(|| c.clone()))
        .collect();
    let mut hits = Vec::new();
    for course in courses.iter().filter(|c| c.domain_id == q.domain_id) {
        for lesson in &course.lessons {
            for seg in &lesson.segments {
                if let Some(kind) = q.pob {
                    if !seg.pobs.iter().any(|p| p.kind == kind) {
                        continue;
                    }
                }
                let sref = SegmentRef::new(&lesson.id, &seg.id);
                let mut dot = 0.0;
                let mut norm2 = 0.0;
                for ((c, s), w) in &weights {
                    if *s == sref {
                        norm2 += w * w;
                        if query.contains(c) {
                            dot += w;
                        }
                    }
                }
                if norm2 == 0.0 || query.is_empty() {
                    continue;
                }
                let score = (dot / (norm2.sqrt() * (query.len() as f64).sqrt())).min(1.0);
                if score > 0.0 {
                    hits.push((sref, score));
                }
            }
        }
    }
    hits.sort_by(|a, b| {
        if (a.1 - b.1).abs() <= 1e-12 {
            a.0.cmp(&b.0)
        } else {
            b.1.total_cmp(&a.1)
        }
    });
    if let Some(n) = q.top {
        hits.truncate(n);
    }
    hits
}

// ---------------------------------------------------------------------------
// Generators

fn concept_name(i: usize) -> String {
    format!("c{i:02}")
}

/// A random ontology of at most `max_concepts` concepts. Decomposition edges
/// always go from a lower to a higher index so the result validates; the
/// other kinds are unconstrained apart from self loops.
pub fn random_ontology<R: Rng>(rng: &mut R, domain_id: &str, max_concepts: usize) -> DomainOntology {
    let n = rng.gen_range(1..=max_concepts);
    let concepts: Vec<Concept> = (0..n)
        .map(|i| Concept {
            id: id(&concept_name(i)),
            label: format!("concept {i}"),
        })
        .collect();
    let mut edges = BTreeSet::new();
    let m = rng.gen_range(0..=n * 2);
    for _ in 0..m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let kind = *RelationKind::ALL.choose(rng).unwrap();
        let (a, b) = if kind == RelationKind::IsDecomposedInto {
            (a.min(b), a.max(b))
        } else {
            (a, b)
        };
        edges.insert(RelationEdge::new(kind, id(&concept_name(a)), id(&concept_name(b))));
    }
    DomainOntology {
        domain_id: domain_id.to_string(),
        label: format!("domain {domain_id}"),
        concepts,
        edges: edges.into_iter().collect(),
    }
}

/// A random annotated corpus together with the ontologies it uses.
#[derive(Clone, Debug)]
pub struct RandomCorpus {
    pub ontologies: Vec<DomainOntology>,
    pub courses: Vec<VideoCourse>,
}

impl RandomCorpus {
    /// sameAs representative of every concept, per domain, by the BFS oracle.
    pub fn canon(&self) -> BTreeMap<String, String> {
        // Concept ids are shared between domains only when the domains have
        // identical concept lists, so a flat map is unambiguous as long as
        // sameAs edges are kept identical too; see `random_corpus`.
        let mut out = BTreeMap::new();
        for o in &self.ontologies {
            out.extend(same_as_components(o));
        }
        out
    }

    pub fn domain_concepts(&self, domain_id: &str) -> Vec<String> {
        self.ontologies
            .iter()
            .find(|o| o.domain_id == domain_id)
            .map(|o| o.concepts.iter().map(|c| c.id.to_string()).collect())
            .unwrap_or_default()
    }
}

/// Up to 5 lessons of up to 6 segments over at most 15 concepts, spread over
/// one or two domains that share a concept list and sameAs edges.
pub fn random_corpus<R: Rng>(rng: &mut R) -> RandomCorpus {
    let n_concepts = rng.gen_range(1..=15);
    let concepts: Vec<Concept> = (0..n_concepts)
        .map(|i| Concept {
            id: id(&concept_name(i)),
            label: format!("concept {i}"),
        })
        .collect();
    let mut edges = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=n_concepts / 2) {
        let a = rng.gen_range(0..n_concepts);
        let b = rng.gen_range(0..n_concepts);
        if a != b {
            edges.insert(RelationEdge::new(
                RelationKind::SameAs,
                id(&concept_name(a)),
                id(&concept_name(b)),
            ));
        }
    }
    let n_domains = rng.gen_range(1..=2);
    let ontologies: Vec<DomainOntology> = (0..n_domains)
        .map(|d| DomainOntology {
            domain_id: format!("dom{d}"),
            label: format!("domain {d}"),
            concepts: concepts.clone(),
            edges: edges.iter().cloned().collect(),
        })
        .collect();

    let n_lessons = rng.gen_range(1..=5);
    let mut by_domain: BTreeMap<usize, Vec<VideoLesson>> = BTreeMap::new();
    for l in 0..n_lessons {
        let n_segments = rng.gen_range(0..=6);
        let segments = (0..n_segments).map(|s| random_segment(rng, l, s, n_concepts)).collect();
        by_domain
            .entry(rng.gen_range(0..n_domains))
            .or_default()
            .push(VideoLesson {
                id: format!("L{l}"),
                title: format!("lesson {l}"),
                url: format!("http://example.org/{l}"),
                language: "en".into(),
                segments,
            });
    }
    let courses = by_domain
        .into_iter()
        .map(|(d, lessons)| VideoCourse {
            id: format!("course{d}"),
            title: format!("course {d}"),
            domain_id: format!("dom{d}"),
            lessons,
        })
        .collect();
    RandomCorpus { ontologies, courses }
}

fn random_segment<R: Rng>(rng: &mut R, lesson: usize, s: usize, n_concepts: usize) -> Segment {
    let n_pobs = rng.gen_range(1..=3);
    let pobs = (0..n_pobs)
        .map(|p| {
            let k = rng.gen_range(1..=3.min(n_concepts));
            let concerns: BTreeSet<ConceptId> = (0..k)
                .map(|_| id(&concept_name(rng.gen_range(0..n_concepts))))
                .collect();
            PedagogicalObject {
                id: format!("p{lesson}_{s}_{p}"),
                kind: *PobKind::ALL.choose(rng).unwrap(),
                concerns: concerns.into_iter().collect(),
                comment: None,
            }
        })
        .collect();
    Segment {
        id: format!("S{s}"),
        title: format!("segment {s}"),
        begin: Timecode::from_seconds(s as u32 * 30),
        duration: Timecode::from_seconds(30),
        pobs,
    }
}

/// A random query over the concepts of a random domain of `corpus`.
pub fn random_query<R: Rng>(rng: &mut R, corpus: &RandomCorpus) -> OracleQuery {
    let domain = corpus.ontologies.choose(rng).unwrap();
    let all: Vec<String> = domain.concepts.iter().map(|c| c.id.to_string()).collect();
    let k = rng.gen_range(1..=3.min(all.len()));
    let concepts = all.choose_multiple(rng, k).cloned().collect();
    OracleQuery {
        domain_id: domain.domain_id.clone(),
        concepts,
        pob: if rng.gen_bool(0.3) {
            PobKind::ALL.choose(rng).copied()
        } else {
            None
        },
        top: if rng.gen_bool(0.3) {
            Some(rng.gen_range(1..=8))
        } else {
            None
        },
    }
}

/// Replaces every concept by the next member of its sameAs class, in
/// sorted order with wrap-around. Singletons are unchanged.
pub fn rotate_within_classes(canon: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    let mut classes: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
    for (c, rep) in canon {
        classes.entry(rep).or_default().push(c);
    }
    let mut out = BTreeMap::new();
    for members in classes.values() {
        for (i, m) in members.iter().enumerate() {
            out.insert((*m).clone(), members[(i + 1) % members.len()].clone());
        }
    }
    out
}

/// Applies a concept renaming to every `concerns` list.
pub fn rename_concerns(courses: &[VideoCourse], map: &BTreeMap<String, String>) -> Vec<VideoCourse> {
    let mut out = courses.to_vec();
    for seg in out
        .iter_mut()
        .flat_map(|c| c.lessons.iter_mut())
        .flat_map(|l| l.segments.iter_mut())
    {
        for pob in &mut seg.pobs {
            for c in &mut pob.concerns {
                if let Some(to) = map.get(c.as_str()) {
                    *c = id(to);
                }
            }
        }
    }
    out
}
