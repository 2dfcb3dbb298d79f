//! Concept × segment weighting.
//!
//! The weight of concept `c` in segment `s` of lesson `d` is
//!
//! ```text
//! w(c, s, d) = CF(c, s, d) · ln(S_d / SegF(c, d)) · ln(|D| / DF(c))
//! ```
//!
//! where `CF` counts the POBs of `s` concerning `c`, `S_d` is the number of
//! segments of `d`, `SegF` the number of those segments mentioning `c`, `|D|`
//! the number of lessons and `DF` the number of lessons mentioning `c`. The
//! first log factor rewards concentration inside a lesson, the second rarity
//! across the corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotations::AnnotatedCorpus;
use crate::error::{Error, Result};
use crate::ontology::ConceptId;

/// A segment, addressed by its lesson and its own id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SegmentRef {
    pub lesson_id: String,
    pub segment_id: String,
}

impl SegmentRef {
    pub fn new(lesson_id: impl Into<String>, segment_id: impl Into<String>) -> Self {
        SegmentRef {
            lesson_id: lesson_id.into(),
            segment_id: segment_id.into(),
        }
    }
}

impl fmt::Display for SegmentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lesson_id, self.segment_id)
    }
}

/// Occurrence counts over a canonicalized corpus.
///
/// Concepts are namespaced by teaching domain only where the key does not
/// already pin the domain: `df` is keyed by `(domain_id, concept)`, while
/// lesson-keyed counts inherit the lesson's domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexStats {
    pub num_documents: usize,
    pub segments_per_document: BTreeMap<String, usize>,
    pub document_domain: BTreeMap<String, String>,
    pub cf: BTreeMap<(ConceptId, SegmentRef), u32>,
    pub seg_f: BTreeMap<(ConceptId, String), u32>,
    pub df: BTreeMap<(String, ConceptId), u32>,
}

impl IndexStats {
    pub fn cf(&self, c: &ConceptId, s: &SegmentRef) -> u32 {
        self.cf.get(&(c.clone(), s.clone())).copied().unwrap_or(0)
    }

    pub fn seg_f(&self, c: &ConceptId, lesson_id: &str) -> u32 {
        self.seg_f
            .get(&(c.clone(), lesson_id.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn df(&self, domain_id: &str, c: &ConceptId) -> u32 {
        self.df.get(&(domain_id.to_string(), c.clone())).copied().unwrap_or(0)
    }

    pub fn segments_in(&self, lesson_id: &str) -> usize {
        self.segments_per_document.get(lesson_id).copied().unwrap_or(0)
    }

    pub fn domain_of(&self, lesson_id: &str) -> Option<&str> {
        self.document_domain.get(lesson_id).map(String::as_str)
    }
}

/// Counts CF, SegF, DF, S_d and |D|. Lessons without segments are not
/// documents of the index.
pub fn count_stats(corpus: &AnnotatedCorpus) -> Result<IndexStats> {
    let mut stats = IndexStats::default();
    for (course, lesson) in corpus.documents() {
        if lesson.segments.is_empty() {
            continue;
        }
        stats.num_documents += 1;
        stats
            .segments_per_document
            .insert(lesson.id.clone(), lesson.segments.len());
        stats
            .document_domain
            .insert(lesson.id.clone(), course.domain_id.clone());

        let mut in_lesson: BTreeSet<&ConceptId> = BTreeSet::new();
        for seg in &lesson.segments {
            let sref = SegmentRef::new(&lesson.id, &seg.id);
            let mut in_segment = BTreeSet::new();
            for pob in &seg.pobs {
                for c in pob.concerns.iter().collect::<BTreeSet<_>>() {
                    *stats.cf.entry((c.clone(), sref.clone())).or_insert(0) += 1;
                    in_segment.insert(c);
                }
            }
            for c in in_segment {
                *stats.seg_f.entry((c.clone(), lesson.id.clone())).or_insert(0) += 1;
                in_lesson.insert(c);
            }
        }
        for c in in_lesson {
            *stats.df.entry((course.domain_id.clone(), c.clone())).or_insert(0) += 1;
        }
    }
    if stats.num_documents == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(stats)
}

/// The CF-ISDF weight of `c` in `s`; zero when `c` does not occur in `s`.
pub fn cf_isdf(c: &ConceptId, s: &SegmentRef, stats: &IndexStats) -> f64 {
    let cf = stats.cf(c, s);
    if cf == 0 {
        return 0.0;
    }
    let Some(domain) = stats.domain_of(&s.lesson_id) else {
        return 0.0;
    };
    let segments = stats.segments_in(&s.lesson_id) as f64;
    let seg_f = stats.seg_f(c, &s.lesson_id) as f64;
    let documents = stats.num_documents as f64;
    let df = stats.df(domain, c) as f64;
    f64::from(cf) * (segments / seg_f).ln() * (documents / df).ln()
}

/// Sparse weight vector of one segment.
pub type SegmentVector = BTreeMap<ConceptId, f64>;

pub const FORMAT_VERSION: u32 = 1;

/// The weight matrix of a corpus and the counts it was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct ConceptSegmentIndex {
    format_version: u32,
    stats: IndexStats,
    weights: BTreeMap<(ConceptId, SegmentRef), f64>,
    segment_vectors: BTreeMap<SegmentRef, SegmentVector>,
    vocabulary: BTreeSet<(String, ConceptId)>,
}

/// Counts and weights every (concept, segment) occurrence of `corpus`.
pub fn build_index(corpus: &AnnotatedCorpus) -> Result<ConceptSegmentIndex> {
    let stats = count_stats(corpus)?;
    let weights = stats
        .cf
        .keys()
        .map(|(c, s)| ((c.clone(), s.clone()), cf_isdf(c, s, &stats)))
        .collect();
    Ok(ConceptSegmentIndex::assemble(stats, weights))
}

impl ConceptSegmentIndex {
    /// An index of no documents, for an engine started on an empty corpus.
    pub(crate) fn empty() -> Self {
        Self::assemble(IndexStats::default(), BTreeMap::new())
    }

    fn assemble(stats: IndexStats, weights: BTreeMap<(ConceptId, SegmentRef), f64>) -> Self {
        let mut segment_vectors: BTreeMap<SegmentRef, SegmentVector> = BTreeMap::new();
        for ((c, s), w) in &weights {
            segment_vectors.entry(s.clone()).or_default().insert(c.clone(), *w);
        }
        let vocabulary = stats.df.keys().cloned().collect();
        ConceptSegmentIndex {
            format_version: FORMAT_VERSION,
            stats,
            weights,
            segment_vectors,
            vocabulary,
        }
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    pub fn stats(&self) -> &IndexStats {
        &self.stats
    }

    /// Stored weight, or zero for a concept absent from `s`.
    pub fn weight(&self, c: &ConceptId, s: &SegmentRef) -> f64 {
        self.weights.get(&(c.clone(), s.clone())).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &BTreeMap<(ConceptId, SegmentRef), f64> {
        &self.weights
    }

    pub fn segment_vector(&self, s: &SegmentRef) -> Option<&SegmentVector> {
        self.segment_vectors.get(s)
    }

    pub fn segment_vectors(&self) -> &BTreeMap<SegmentRef, SegmentVector> {
        &self.segment_vectors
    }

    pub fn contains_concept(&self, domain_id: &str, c: &ConceptId) -> bool {
        self.vocabulary.contains(&(domain_id.to_string(), c.clone()))
    }

    pub fn vocabulary(&self) -> &BTreeSet<(String, ConceptId)> {
        &self.vocabulary
    }

    /// One CSV row per stored entry:
    /// `concept,lesson,segment,cf,seg_f,s_d,df,weight`.
    pub fn write_stats_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "concept,lesson,segment,cf,seg_f,s_d,df,weight")?;
        for ((c, s), w) in &self.weights {
            let domain = self.stats.domain_of(&s.lesson_id).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(c.as_str()),
                csv_field(&s.lesson_id),
                csv_field(&s.segment_id),
                self.stats.cf(c, s),
                self.stats.seg_f(c, &s.lesson_id),
                self.stats.segments_in(&s.lesson_id),
                self.stats.df(domain, c),
                w
            )?;
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// Persistence: one header line `ONTOSEG-INDEX <version> <len> <sha256>`
// followed by a JSON payload of exactly `len` bytes.

const MAGIC: &str = "ONTOSEG-INDEX";

#[derive(Serialize, Deserialize)]
struct StoredIndex {
    num_documents: usize,
    documents: Vec<StoredDocument>,
    entries: Vec<StoredEntry>,
    seg_f: Vec<StoredSegF>,
    df: Vec<StoredDf>,
}

#[derive(Serialize, Deserialize)]
struct StoredDocument {
    lesson_id: String,
    domain_id: String,
    segments: usize,
}

#[derive(Serialize, Deserialize)]
struct StoredEntry {
    concept: ConceptId,
    lesson_id: String,
    segment_id: String,
    cf: u32,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct StoredSegF {
    concept: ConceptId,
    lesson_id: String,
    count: u32,
}

#[derive(Serialize, Deserialize)]
struct StoredDf {
    domain_id: String,
    concept: ConceptId,
    count: u32,
}

impl ConceptSegmentIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let stored = StoredIndex {
            num_documents: self.stats.num_documents,
            documents: self
                .stats
                .segments_per_document
                .iter()
                .map(|(l, n)| StoredDocument {
                    lesson_id: l.clone(),
                    domain_id: self.stats.document_domain[l].clone(),
                    segments: *n,
                })
                .collect(),
            entries: self
                .weights
                .iter()
                .map(|((c, s), w)| StoredEntry {
                    concept: c.clone(),
                    lesson_id: s.lesson_id.clone(),
                    segment_id: s.segment_id.clone(),
                    cf: self.stats.cf(c, s),
                    weight: *w,
                })
                .collect(),
            seg_f: self
                .stats
                .seg_f
                .iter()
                .map(|((c, l), n)| StoredSegF {
                    concept: c.clone(),
                    lesson_id: l.clone(),
                    count: *n,
                })
                .collect(),
            df: self
                .stats
                .df
                .iter()
                .map(|((d, c), n)| StoredDf {
                    domain_id: d.clone(),
                    concept: c.clone(),
                    count: *n,
                })
                .collect(),
        };
        let payload = serde_json::to_vec(&stored).expect("index serializes");
        let digest = hex::encode(Sha256::digest(&payload));
        let mut out = format!("{MAGIC} {} {} {digest}\n", self.format_version, payload.len()).into_bytes();
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::CorruptIndex("missing header".into()))?;
        let header =
            std::str::from_utf8(&bytes[..newline]).map_err(|_| Error::CorruptIndex("header is not UTF-8".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        let [magic, version, len, digest] = fields.as_slice() else {
            return Err(Error::CorruptIndex("malformed header".into()));
        };
        if *magic != MAGIC {
            return Err(Error::CorruptIndex("not an index file".into()));
        }
        let version: u32 = version
            .parse()
            .map_err(|_| Error::CorruptIndex("malformed version".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let len: usize = len
            .parse()
            .map_err(|_| Error::CorruptIndex("malformed length".into()))?;
        let payload = &bytes[newline + 1..];
        if payload.len() != len || hex::encode(Sha256::digest(payload)) != *digest {
            return Err(Error::Checksum);
        }
        let stored: StoredIndex = serde_json::from_slice(payload).map_err(|e| Error::CorruptIndex(e.to_string()))?;

        let mut stats = IndexStats {
            num_documents: stored.num_documents,
            ..IndexStats::default()
        };
        for d in stored.documents {
            stats.segments_per_document.insert(d.lesson_id.clone(), d.segments);
            stats.document_domain.insert(d.lesson_id, d.domain_id);
        }
        let mut weights = BTreeMap::new();
        for e in stored.entries {
            let s = SegmentRef::new(e.lesson_id, e.segment_id);
            stats.cf.insert((e.concept.clone(), s.clone()), e.cf);
            weights.insert((e.concept, s), e.weight);
        }
        for e in stored.seg_f {
            stats.seg_f.insert((e.concept, e.lesson_id), e.count);
        }
        for e in stored.df {
            stats.df.insert((e.domain_id, e.concept), e.count);
        }
        Ok(Self::assemble(stats, weights))
    }
}

pub fn save_index<W: Write>(index: &ConceptSegmentIndex, mut sink: W) -> Result<()> {
    sink.write_all(&index.to_bytes())?;
    Ok(())
}

pub fn load_index<R: std::io::Read>(mut source: R) -> Result<ConceptSegmentIndex> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    ConceptSegmentIndex::from_bytes(&bytes)
}
