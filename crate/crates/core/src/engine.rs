//! Everything loaded at once: ontologies, their inferred facts, the
//! canonicalized corpus and its index. The command-line tool and the HTTP
//! service both answer requests through an [`Engine`], which is what makes
//! their outputs identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotations::{
    canonicalize_corpus, import_owl_subset, parse_annotation, AnnotatedCorpus, PobKind, VideoCourse,
};
use crate::error::{Error, Result};
use crate::indexer::{build_index, count_stats, load_index, ConceptSegmentIndex, SegmentRef};
use crate::inference::{infer, InferredFacts};
use crate::ontology::{concept_tree, load_domain_ontology, ConceptTree, DomainOntology, RelationKind};
use crate::parse::{Mode, Parsed};
use crate::search::{self, expand_query, make_query, Explanation, PobSummary, QueryOptions, RankedResult};

/// A search as submitted by a client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub domain_id: String,
    pub concepts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pob: Option<PobKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expand: Vec<RelationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<RankedResult>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSummary {
    pub domain_id: String,
    pub label: String,
    pub concept_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentDetail {
    pub segment: SegmentRef,
    pub domain_id: String,
    pub lesson_title: String,
    pub title: String,
    pub begin: String,
    pub duration: String,
    pub url: String,
    pub language: String,
    pub pobs: Vec<PobSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explain: Option<Explanation>,
}

/// Where to load an engine from.
#[derive(Clone, Debug, Default)]
pub struct Sources {
    pub ontologies: Vec<PathBuf>,
    /// Annotation files, or directories searched recursively.
    pub annotations: Vec<PathBuf>,
    /// A saved index; built in memory when absent.
    pub index: Option<PathBuf>,
    pub mode: Mode,
}

#[derive(Debug)]
pub struct Engine {
    ontologies: BTreeMap<String, DomainOntology>,
    facts: BTreeMap<String, InferredFacts>,
    corpus: AnnotatedCorpus,
    index: ConceptSegmentIndex,
    warnings: Vec<String>,
}

fn is_xml(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("owl" | "rdf" | "xml"))
}

/// Reads an ontology in the canonical JSON format, or from an OWL file.
pub fn read_ontology_file(path: &Path, mode: Mode) -> Result<Parsed<DomainOntology>> {
    let run = || -> Result<Parsed<DomainOntology>> {
        let text = fs::read_to_string(path)?;
        if is_xml(path) {
            let imported = import_owl_subset(&text, mode)?;
            let warnings = imported.warnings;
            let ontology = imported.value.ontology.ok_or(Error::NoOwlContent)?;
            Ok(Parsed {
                value: ontology,
                warnings,
            })
        } else {
            load_domain_ontology(&text, mode)
        }
    };
    run().map_err(|e| e.in_file(path))
}

/// Reads a course in the canonical JSON format, or from an OWL file.
pub fn read_course_file(path: &Path, mode: Mode) -> Result<Parsed<VideoCourse>> {
    let run = || -> Result<Parsed<VideoCourse>> {
        let text = fs::read_to_string(path)?;
        if is_xml(path) {
            let imported = import_owl_subset(&text, mode)?;
            let warnings = imported.warnings;
            let course = imported.value.course.ok_or(Error::NoOwlContent)?;
            Ok(Parsed {
                value: course,
                warnings,
            })
        } else {
            parse_annotation(&text, mode)
        }
    };
    run().map_err(|e| e.in_file(path))
}

/// Expands directories into the annotation files they contain, sorted.
pub fn collect_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::from(e).in_file(dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, out)?;
            } else if matches!(
                path.extension().and_then(|e| e.to_str()),
                Some("json" | "owl" | "rdf" | "xml")
            ) {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

impl Engine {
    /// Validates and canonicalizes the corpus, then builds its index.
    pub fn new(ontologies: Vec<DomainOntology>, courses: Vec<VideoCourse>) -> Result<Self> {
        Self::assemble(ontologies, courses, None)
    }

    /// Like [`Engine::new`] but with a prebuilt index, which must have been
    /// built from this very corpus.
    pub fn with_index(
        ontologies: Vec<DomainOntology>,
        courses: Vec<VideoCourse>,
        index: ConceptSegmentIndex,
    ) -> Result<Self> {
        Self::assemble(ontologies, courses, Some(index))
    }

    fn assemble(
        ontologies: Vec<DomainOntology>,
        courses: Vec<VideoCourse>,
        index: Option<ConceptSegmentIndex>,
    ) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for o in ontologies {
            if by_id.contains_key(&o.domain_id) {
                return Err(Error::Duplicate {
                    what: "domain",
                    id: o.domain_id,
                });
            }
            by_id.insert(o.domain_id.clone(), o);
        }
        let mut warnings = Vec::new();
        if by_id.is_empty() {
            warnings.push("no domain ontologies loaded".to_string());
        }
        let facts: BTreeMap<String, InferredFacts> = by_id.iter().map(|(id, o)| (id.clone(), infer(o))).collect();
        for f in facts.values() {
            for v in f.violations() {
                warnings.push(format!("domain `{}`: {v}", f.domain_id()));
            }
        }
        let corpus = AnnotatedCorpus::new(courses, &by_id)?;
        let corpus = canonicalize_corpus(&corpus, &facts)?;
        let index = match index {
            Some(index) => {
                if count_stats(&corpus)? != *index.stats() {
                    return Err(Error::IndexMismatch("stored counts differ from the annotations".into()));
                }
                index
            }
            None => match build_index(&corpus) {
                Err(Error::EmptyCorpus) => {
                    warnings.push("the corpus has no segments; every search will be empty".to_string());
                    ConceptSegmentIndex::empty()
                }
                other => other?,
            },
        };
        Ok(Engine {
            ontologies: by_id,
            facts,
            corpus,
            index,
            warnings,
        })
    }

    pub fn load(sources: &Sources) -> Result<Self> {
        let mut warnings = Vec::new();
        let mut ontologies = Vec::new();
        for path in &sources.ontologies {
            let parsed = read_ontology_file(path, sources.mode)?;
            warnings.extend(parsed.warnings.into_iter().map(|w| format!("{}: {w}", path.display())));
            ontologies.push(parsed.value);
        }
        let mut courses = Vec::new();
        for path in collect_files(&sources.annotations)? {
            let parsed = read_course_file(&path, sources.mode)?;
            warnings.extend(parsed.warnings.into_iter().map(|w| format!("{}: {w}", path.display())));
            courses.push(parsed.value);
        }
        let index = match &sources.index {
            Some(path) => Some(
                fs::File::open(path)
                    .map_err(Error::from)
                    .and_then(load_index)
                    .map_err(|e| e.in_file(path))?,
            ),
            None => None,
        };
        let mut engine = Self::assemble(ontologies, courses, index)?;
        warnings.append(&mut engine.warnings);
        engine.warnings = warnings;
        Ok(engine)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn ontology(&self, domain_id: &str) -> Result<&DomainOntology> {
        self.ontologies
            .get(domain_id)
            .ok_or_else(|| Error::UnknownDomain(domain_id.to_string()))
    }

    pub fn ontologies(&self) -> impl Iterator<Item = &DomainOntology> {
        self.ontologies.values()
    }

    pub fn facts(&self, domain_id: &str) -> Result<&InferredFacts> {
        self.facts
            .get(domain_id)
            .ok_or_else(|| Error::UnknownDomain(domain_id.to_string()))
    }

    /// The corpus with every concept replaced by its sameAs representative.
    pub fn corpus(&self) -> &AnnotatedCorpus {
        &self.corpus
    }

    pub fn index(&self) -> &ConceptSegmentIndex {
        &self.index
    }

    /// Loaded domains, sorted by label then id.
    pub fn domains(&self) -> Vec<DomainSummary> {
        let mut out: Vec<DomainSummary> = self
            .ontologies
            .values()
            .map(|o| DomainSummary {
                domain_id: o.domain_id.clone(),
                label: o.label.clone(),
                concept_count: o.concepts.len(),
            })
            .collect();
        out.sort_by(|a, b| (&a.label, &a.domain_id).cmp(&(&b.label, &b.domain_id)));
        out
    }

    pub fn tree(&self, domain_id: &str) -> Result<ConceptTree> {
        self.ontology(domain_id).map(concept_tree)
    }

    pub fn query(&self, req: &SearchRequest) -> Result<search::Query> {
        let facts = self.facts(&req.domain_id)?;
        let options = QueryOptions {
            pob_filter: req.pob,
            max_results: req.top,
            expand: req.expand.iter().copied().collect::<BTreeSet<_>>(),
        };
        let q = make_query(&req.concepts, facts, options)?;
        Ok(expand_query(&q, facts))
    }

    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse> {
        let ontology = self.ontology(&req.domain_id)?;
        let q = self.query(req)?;
        let results = search::search(&q, &self.index, &self.corpus, ontology)?;
        Ok(SearchResponse { results })
    }

    /// Breaks down the score `segment` would get for `concepts`.
    pub fn explain(&self, segment: &SegmentRef, concepts: &[String]) -> Result<Explanation> {
        let (course, _, _) = self.locate(segment)?;
        let req = SearchRequest {
            domain_id: course.domain_id.clone(),
            concepts: concepts.to_vec(),
            pob: None,
            expand: Vec::new(),
            top: None,
        };
        search::explain(&self.query(&req)?, segment, &self.index)
    }

    fn locate(
        &self,
        s: &SegmentRef,
    ) -> Result<(
        &VideoCourse,
        &crate::annotations::VideoLesson,
        &crate::annotations::Segment,
    )> {
        self.corpus
            .segment(&s.lesson_id, &s.segment_id)
            .ok_or_else(|| Error::UnknownSegment {
                lesson_id: s.lesson_id.clone(),
                segment_id: s.segment_id.clone(),
            })
    }

    pub fn segment_detail(&self, s: &SegmentRef, explain: Option<&[String]>) -> Result<SegmentDetail> {
        let (course, lesson, seg) = self.locate(s)?;
        let ontology = self.ontology(&course.domain_id)?;
        let explain = match explain {
            Some(concepts) => Some(self.explain(s, concepts)?),
            None => None,
        };
        Ok(SegmentDetail {
            segment: s.clone(),
            domain_id: course.domain_id.clone(),
            lesson_title: lesson.title.clone(),
            title: seg.title.clone(),
            begin: seg.begin.to_string(),
            duration: seg.duration.to_string(),
            url: lesson.url.clone(),
            language: lesson.language.clone(),
            pobs: PobSummary::of(seg, ontology),
            explain,
        })
    }
}
