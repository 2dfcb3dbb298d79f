//! Ranked retrieval of segments for a set of concepts.
//!
//! A query is a binary vector over concepts. Each segment of the query's
//! domain is scored by the cosine between its CF-ISDF vector and the query
//! vector; zero scores are dropped and the rest sorted by score, then by
//! `(lesson_id, segment_id)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::annotations::{AnnotatedCorpus, PobKind, Segment, Timecode};
use crate::error::{Error, Result};
use crate::indexer::{ConceptSegmentIndex, SegmentRef, SegmentVector};
use crate::inference::{canonicalize, related_concepts, InferredFacts};
use crate::ontology::{ConceptId, DomainOntology, RelationKind};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryOptions {
    pub pob_filter: Option<PobKind>,
    pub max_results: Option<usize>,
    pub expand: BTreeSet<RelationKind>,
}

/// A set of canonical concepts of one domain, each implicitly weighted 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub domain_id: String,
    concepts: BTreeSet<ConceptId>,
    pub pob_filter: Option<PobKind>,
    pub max_results: Option<usize>,
    pub expand: BTreeSet<RelationKind>,
}

impl Query {
    pub fn concepts(&self) -> &BTreeSet<ConceptId> {
        &self.concepts
    }
}

/// Canonicalizes and deduplicates `raw` against the domain's facts.
pub fn make_query<S: AsRef<str>>(raw: &[S], facts: &InferredFacts, options: QueryOptions) -> Result<Query> {
    if raw.is_empty() {
        return Err(Error::EmptyQuery);
    }
    if options.max_results == Some(0) {
        return Err(Error::InvalidQuery("max_results must be positive".into()));
    }
    let concepts = raw
        .iter()
        .map(|c| canonicalize(c.as_ref(), facts))
        .collect::<Result<BTreeSet<_>>>()?;
    Ok(Query {
        domain_id: facts.domain_id().to_string(),
        concepts,
        pob_filter: options.pob_filter,
        max_results: options.max_results,
        expand: options.expand,
    })
}

/// Adds the closure neighbours of every query concept under `q.expand`.
pub fn expand_query(q: &Query, facts: &InferredFacts) -> Query {
    let mut out = q.clone();
    if q.expand.is_empty() {
        return out;
    }
    for c in &q.concepts {
        let Ok(related) = related_concepts(c.as_str(), facts, &q.expand) else {
            continue;
        };
        for r in related {
            if let Some(rep) = facts.canonical(r.concept.as_str()) {
                out.concepts.insert(rep.clone());
            }
        }
    }
    out
}

/// The parts of a cosine computation, in the order they are accumulated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineParts {
    pub dot: f64,
    pub segment_norm: f64,
    pub query_norm: f64,
    pub cosine: f64,
}

fn cosine_parts(v_segment: &SegmentVector, v_query: &BTreeSet<ConceptId>) -> CosineParts {
    let dot: f64 = v_query.iter().map(|c| v_segment.get(c).copied().unwrap_or(0.0)).sum();
    let segment_norm = v_segment.values().map(|w| w * w).sum::<f64>().sqrt();
    let query_norm = (v_query.len() as f64).sqrt();
    let cosine = if segment_norm == 0.0 || query_norm == 0.0 {
        0.0
    } else {
        (dot / (segment_norm * query_norm)).clamp(0.0, 1.0)
    };
    CosineParts {
        dot,
        segment_norm,
        query_norm,
        cosine,
    }
}

/// Cosine between a non-negative segment vector and a binary query vector;
/// zero when either norm is zero.
pub fn cosine(v_segment: &SegmentVector, v_query: &BTreeSet<ConceptId>) -> f64 {
    cosine_parts(v_segment, v_query).cosine
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptLabel {
    pub id: ConceptId,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PobSummary {
    pub pob_id: String,
    pub kind: PobKind,
    pub concepts: Vec<ConceptLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl PobSummary {
    pub(crate) fn of(segment: &Segment, ontology: &DomainOntology) -> Vec<PobSummary> {
        segment
            .pobs
            .iter()
            .map(|p| PobSummary {
                pob_id: p.id.clone(),
                kind: p.kind,
                concepts: p
                    .concerns
                    .iter()
                    .map(|c| ConceptLabel {
                        id: c.clone(),
                        label: ontology.label_of(c.as_str()).to_string(),
                    })
                    .collect(),
                comment: p.comment.clone(),
            })
            .collect()
    }
}

/// A hit with everything needed to display it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub segment: SegmentRef,
    pub score: f64,
    pub lesson_title: String,
    pub segment_title: String,
    /// Start offset in seconds.
    pub begin: u32,
    /// Length in seconds.
    pub duration: u32,
    pub pobs: Vec<PobSummary>,
    pub url: String,
}

impl RankedResult {
    pub fn begin_timecode(&self) -> Timecode {
        Timecode::from_seconds(self.begin)
    }

    pub fn duration_timecode(&self) -> Timecode {
        Timecode::from_seconds(self.duration)
    }
}

/// Rounds to 12 decimals so that mathematically equal cosines, which may
/// differ in the last bits, tie exactly and fall back to the id order.
pub fn round_score(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Scores every segment of `q.domain_id` and returns the ranked hits.
///
/// `ontology` is the query domain's ontology and only supplies labels.
pub fn search(
    q: &Query,
    index: &ConceptSegmentIndex,
    corpus: &AnnotatedCorpus,
    ontology: &DomainOntology,
) -> Result<Vec<RankedResult>> {
    if ontology.domain_id != q.domain_id {
        return Err(Error::UnknownDomain(q.domain_id.clone()));
    }
    let mut hits = Vec::new();
    for (course, lesson) in corpus.documents() {
        if course.domain_id != q.domain_id {
            continue;
        }
        for seg in &lesson.segments {
            let sref = SegmentRef::new(&lesson.id, &seg.id);
            let vector = index
                .segment_vector(&sref)
                .ok_or_else(|| Error::IndexMismatch(format!("segment {sref} is not in the index")))?;
            if let Some(kind) = q.pob_filter {
                if !seg.has_pob_kind(kind) {
                    continue;
                }
            }
            let score = round_score(cosine(vector, &q.concepts));
            if score > 0.0 {
                hits.push(RankedResult {
                    segment: sref,
                    score,
                    lesson_title: lesson.title.clone(),
                    segment_title: seg.title.clone(),
                    begin: seg.begin.seconds(),
                    duration: seg.duration.seconds(),
                    pobs: PobSummary::of(seg, ontology),
                    url: lesson.url.clone(),
                });
            }
        }
    }
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.segment.cmp(&b.segment)));
    if let Some(n) = q.max_results {
        hits.truncate(n);
    }
    Ok(hits)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplainRow {
    pub concept: ConceptId,
    pub cf: u32,
    pub seg_f: u32,
    pub s_d: usize,
    pub df: u32,
    pub num_documents: usize,
    pub weight: f64,
}

/// How a segment's score for a query comes about.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Explanation {
    pub segment: SegmentRef,
    pub rows: Vec<ExplainRow>,
    pub dot: f64,
    pub segment_norm: f64,
    pub query_norm: f64,
    pub cosine: f64,
}

/// Per-concept breakdown of the score of `s` for `q`, using the same
/// stored weights and accumulation order as [`search`].
pub fn explain(q: &Query, s: &SegmentRef, index: &ConceptSegmentIndex) -> Result<Explanation> {
    let vector = index.segment_vector(s).ok_or_else(|| Error::UnknownSegment {
        lesson_id: s.lesson_id.clone(),
        segment_id: s.segment_id.clone(),
    })?;
    let stats = index.stats();
    let domain = stats.domain_of(&s.lesson_id).unwrap_or_default();
    let rows = q
        .concepts
        .iter()
        .map(|c| ExplainRow {
            concept: c.clone(),
            cf: stats.cf(c, s),
            seg_f: stats.seg_f(c, &s.lesson_id),
            s_d: stats.segments_in(&s.lesson_id),
            df: stats.df(domain, c),
            num_documents: stats.num_documents,
            weight: vector.get(c).copied().unwrap_or(0.0),
        })
        .collect();
    let parts = cosine_parts(vector, &q.concepts);
    Ok(Explanation {
        segment: s.clone(),
        rows,
        dot: parts.dot,
        segment_norm: parts.segment_norm,
        query_norm: parts.query_norm,
        cosine: parts.cosine,
    })
}
