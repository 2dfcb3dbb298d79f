//! The pedagogical structure of a video course.
//!
//! A course is presented in lessons, a lesson is cut into temporal segments,
//! and a segment holds typed pedagogical objects (POBs) that each concern one
//! or more concepts of the course's teaching domain.

mod owl;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::InferredFacts;
use crate::ontology::{ConceptId, DomainOntology};
use crate::parse::{self, Mode, Parsed};

pub use owl::{import_owl_subset, OwlImport};

/// A time offset or span with one-second resolution, written `hh:mm:ss`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Timecode(u32);

impl Timecode {
    pub const fn from_seconds(seconds: u32) -> Self {
        Timecode(seconds)
    }

    pub const fn seconds(self) -> u32 {
        self.0
    }
}

impl FromStr for Timecode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTime(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let [h, m, sec] = parts.as_slice() else {
            return Err(bad());
        };
        let field = |p: &str, width_min: usize, max: Option<u32>| -> Result<u32> {
            if p.len() < width_min || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            if max.is_some() && p.len() != 2 {
                return Err(bad());
            }
            let v: u32 = p.parse().map_err(|_| bad())?;
            match max {
                Some(max) if v > max => Err(bad()),
                _ => Ok(v),
            }
        };
        let (h, m, sec) = (field(h, 2, None)?, field(m, 2, Some(59))?, field(sec, 2, Some(59))?);
        h.checked_mul(3600)
            .and_then(|x| x.checked_add(m * 60 + sec))
            .map(Timecode)
            .ok_or_else(bad)
    }
}

impl TryFrom<String> for Timecode {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse().map_err(|e: Error| e.to_string())
    }
}

impl From<Timecode> for String {
    fn from(t: Timecode) -> String {
        t.to_string()
    }
}

impl fmt::Display for Timecode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        write!(f, "{:02}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PobKind {
    Definition,
    Example,
    Exercise,
    SolutionExercise,
    Illustration,
    Rule,
    Theorem,
    Demonstration,
}

impl PobKind {
    pub const ALL: [PobKind; 8] = [
        PobKind::Definition,
        PobKind::Example,
        PobKind::Exercise,
        PobKind::SolutionExercise,
        PobKind::Illustration,
        PobKind::Rule,
        PobKind::Theorem,
        PobKind::Demonstration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PobKind::Definition => "definition",
            PobKind::Example => "example",
            PobKind::Exercise => "exercise",
            PobKind::SolutionExercise => "solution_exercise",
            PobKind::Illustration => "illustration",
            PobKind::Rule => "rule",
            PobKind::Theorem => "theorem",
            PobKind::Demonstration => "demonstration",
        }
    }
}

impl fmt::Display for PobKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PobKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PobKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownPobKind(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PedagogicalObject {
    #[serde(rename = "pob_id")]
    pub id: String,
    pub kind: PobKind,
    pub concerns: Vec<ConceptId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(rename = "segment_id")]
    pub id: String,
    pub title: String,
    pub begin: Timecode,
    pub duration: Timecode,
    pub pobs: Vec<PedagogicalObject>,
}

impl Segment {
    pub fn end(&self) -> u64 {
        u64::from(self.begin.seconds()) + u64::from(self.duration.seconds())
    }

    pub fn has_pob_kind(&self, kind: PobKind) -> bool {
        self.pobs.iter().any(|p| p.kind == kind)
    }
}

/// One video lesson: the retrieval document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoLesson {
    #[serde(rename = "lesson_id")]
    pub id: String,
    pub title: String,
    pub url: String,
    pub language: String,
    pub segments: Vec<Segment>,
}

impl VideoLesson {
    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoCourse {
    #[serde(rename = "course_id")]
    pub id: String,
    pub title: String,
    pub domain_id: String,
    pub lessons: Vec<VideoLesson>,
}

const TOP_LEVEL_KEYS: &[&str] = &["course_id", "title", "domain_id", "lessons"];

impl VideoCourse {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("course serializes")
    }

    /// Sorts segments by start time and checks every structural invariant.
    /// Returns warnings for lessons without segments.
    pub fn normalize(&mut self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let mut lesson_ids = BTreeSet::new();
        for lesson in &mut self.lessons {
            if !lesson_ids.insert(lesson.id.clone()) {
                return Err(Error::Duplicate {
                    what: "lesson",
                    id: lesson.id.clone(),
                });
            }
            if lesson.segments.is_empty() {
                warnings.push(format!(
                    "lesson `{}` has no segments and contributes nothing to the index",
                    lesson.id
                ));
            }
            let mut segment_ids = BTreeSet::new();
            for seg in &lesson.segments {
                if !segment_ids.insert(&seg.id) {
                    return Err(Error::Duplicate {
                        what: "segment",
                        id: seg.id.clone(),
                    });
                }
                let invalid = |reason: &str| Error::InvalidSegment {
                    lesson: lesson.id.clone(),
                    segment: seg.id.clone(),
                    reason: reason.to_string(),
                };
                if seg.duration.seconds() == 0 {
                    return Err(invalid("duration must be positive"));
                }
                if seg.pobs.is_empty() {
                    return Err(invalid("no pedagogical objects"));
                }
                if let Some(pob) = seg.pobs.iter().find(|p| p.concerns.is_empty()) {
                    return Err(invalid(&format!("POB `{}` concerns no concept", pob.id)));
                }
            }
            lesson.segments.sort_by(|a, b| (a.begin, &a.id).cmp(&(b.begin, &b.id)));
            for pair in lesson.segments.windows(2) {
                if pair[0].end() > u64::from(pair[1].begin.seconds()) {
                    return Err(Error::OverlappingSegments {
                        lesson: lesson.id.clone(),
                        first: pair[0].id.clone(),
                        second: pair[1].id.clone(),
                    });
                }
            }
        }
        Ok(warnings)
    }

    /// Checks the `concerns` alignment against the course's domain ontology.
    pub fn check_alignment(&self, ontology: &DomainOntology) -> Result<()> {
        if ontology.domain_id != self.domain_id {
            return Err(Error::UnknownDomain(self.domain_id.clone()));
        }
        for lesson in &self.lessons {
            for seg in &lesson.segments {
                for pob in &seg.pobs {
                    if let Some(c) = pob.concerns.iter().find(|c| !ontology.contains(c.as_str())) {
                        return Err(Error::UnresolvedConcept {
                            domain: self.domain_id.clone(),
                            segment: seg.id.clone(),
                            pob: pob.id.clone(),
                            concept: c.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses one course in the canonical JSON annotation format and checks its
/// structural invariants. Concept ids are resolved separately, see
/// [`VideoCourse::check_alignment`] and [`AnnotatedCorpus::new`].
pub fn parse_annotation(source: &str, mode: Mode) -> Result<Parsed<VideoCourse>> {
    let mut parsed: Parsed<VideoCourse> = parse::json_document(source, TOP_LEVEL_KEYS, mode)?;
    let warnings = parsed.value.normalize()?;
    parsed.warnings.extend(warnings);
    Ok(parsed)
}

/// All courses of the corpus. Its lessons form the document set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotatedCorpus {
    courses: Vec<VideoCourse>,
}

impl AnnotatedCorpus {
    /// Assembles a corpus, checking global lesson-id uniqueness and that
    /// every course aligns with one of `ontologies`.
    pub fn new(courses: Vec<VideoCourse>, ontologies: &BTreeMap<String, DomainOntology>) -> Result<Self> {
        let mut lesson_ids = BTreeSet::new();
        for course in &courses {
            let ontology = ontologies
                .get(&course.domain_id)
                .ok_or_else(|| Error::UnknownDomain(course.domain_id.clone()))?;
            course.check_alignment(ontology)?;
            for lesson in &course.lessons {
                if !lesson_ids.insert(lesson.id.as_str()) {
                    return Err(Error::Duplicate {
                        what: "lesson",
                        id: lesson.id.clone(),
                    });
                }
            }
        }
        Ok(AnnotatedCorpus { courses })
    }

    /// Wraps courses without checking alignment.
    pub fn from_courses_unchecked(courses: Vec<VideoCourse>) -> Self {
        AnnotatedCorpus { courses }
    }

    pub fn courses(&self) -> &[VideoCourse] {
        &self.courses
    }

    /// Every lesson together with its course, in corpus order.
    pub fn documents(&self) -> impl Iterator<Item = (&VideoCourse, &VideoLesson)> {
        self.courses.iter().flat_map(|c| c.lessons.iter().map(move |l| (c, l)))
    }

    pub fn lesson(&self, lesson_id: &str) -> Option<(&VideoCourse, &VideoLesson)> {
        self.documents().find(|(_, l)| l.id == lesson_id)
    }

    pub fn segment(&self, lesson_id: &str, segment_id: &str) -> Option<(&VideoCourse, &VideoLesson, &Segment)> {
        let (course, lesson) = self.lesson(lesson_id)?;
        lesson.segment(segment_id).map(|s| (course, lesson, s))
    }

    pub fn segment_count(&self) -> usize {
        self.documents().map(|(_, l)| l.segments.len()).sum()
    }
}

/// Rewrites every `concerns` list onto sameAs representatives, dropping
/// duplicates while keeping first-occurrence order.
pub fn canonicalize_corpus(
    corpus: &AnnotatedCorpus,
    facts: &BTreeMap<String, InferredFacts>,
) -> Result<AnnotatedCorpus> {
    let mut courses = corpus.courses.clone();
    for course in &mut courses {
        let facts = facts
            .get(&course.domain_id)
            .ok_or_else(|| Error::UnknownDomain(course.domain_id.clone()))?;
        for seg in course.lessons.iter_mut().flat_map(|l| l.segments.iter_mut()) {
            for pob in &mut seg.pobs {
                let mut seen = BTreeSet::new();
                let mut concerns = Vec::with_capacity(pob.concerns.len());
                for c in &pob.concerns {
                    let rep = crate::inference::canonicalize(c.as_str(), facts)?;
                    if seen.insert(rep.clone()) {
                        concerns.push(rep);
                    }
                }
                pob.concerns = concerns;
            }
        }
    }
    Ok(AnnotatedCorpus { courses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::infer;
    use crate::ontology::{Concept, RelationEdge, RelationKind};

    const EXCERPT: &str = r#"{
      "course_id": "structure_de_donnee",
      "title": "structure de donnee",
      "domain_id": "structure_de_donnee",
      "lessons": [{
        "lesson_id": "fonction",
        "title": "fonction",
        "url": "http://.../fonction.wmv",
        "language": "frensh",
        "segments": [{
          "segment_id": "slide_2",
          "title": "introduction au fonction",
          "begin": "00:02:01",
          "duration": "00:03:22",
          "pobs": [
            {"pob_id": "definition_1", "kind": "definition", "concerns": ["adresse", "fonction"]},
            {"pob_id": "exemple_1", "kind": "example", "concerns": ["valeur_retournee"],
             "comment": "differents type de valeurs retournee"}
          ]
        }]
      }]
    }"#;

    fn course_with_segments(segments: &[(&str, u32, u32)]) -> String {
        let segs: Vec<String> = segments
            .iter()
            .map(|(id, begin, dur)| {
                format!(
                    r#"{{"segment_id": "{id}", "title": "t", "begin": "{}", "duration": "{}",
                        "pobs": [{{"pob_id": "p", "kind": "rule", "concerns": ["a"]}}]}}"#,
                    Timecode(*begin),
                    Timecode(*dur)
                )
            })
            .collect();
        format!(
            r#"{{"course_id": "c", "title": "c", "domain_id": "d", "lessons": [
                {{"lesson_id": "l", "title": "l", "url": "u", "language": "fr", "segments": [{}]}}]}}"#,
            segs.join(",")
        )
    }

    #[test]
    fn timecodes() {
        assert_eq!("00:02:01".parse::<Timecode>().unwrap().seconds(), 121);
        assert_eq!("00:03:22".parse::<Timecode>().unwrap().seconds(), 202);
        assert_eq!("100:00:00".parse::<Timecode>().unwrap().seconds(), 360_000);
        assert_eq!(Timecode(3725).to_string(), "01:02:05");
        for bad in ["00:02:01.5", "2:01", "00:60:00", "00:00:60", "aa:00:00", "00:0:01", ""] {
            assert!(bad.parse::<Timecode>().is_err(), "{bad}");
        }
    }

    #[test]
    fn parses_lesson_excerpt() {
        let course = parse_annotation(EXCERPT, Mode::Strict).unwrap().value;
        assert_eq!(course.lessons.len(), 1);
        let seg = &course.lessons[0].segments[0];
        assert_eq!(seg.begin.seconds(), 121);
        assert_eq!(seg.duration.seconds(), 202);
        assert_eq!(seg.pobs.len(), 2);
        assert_eq!(
            seg.pobs[1].comment.as_deref(),
            Some("differents type de valeurs retournee")
        );
    }

    #[test]
    fn empty_lesson_is_a_warning() {
        let src = r#"{"course_id": "c", "title": "c", "domain_id": "d", "lessons": [
            {"lesson_id": "l", "title": "l", "url": "u", "language": "fr", "segments": []}]}"#;
        let parsed = parse_annotation(src, Mode::Strict).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn overlap_names_both_segments() {
        let err = parse_annotation(&course_with_segments(&[("s_b", 5, 7), ("s_a", 0, 10)]), Mode::Lenient).unwrap_err();
        match err {
            Error::OverlappingSegments { first, second, .. } => {
                assert_eq!((first.as_str(), second.as_str()), ("s_a", "s_b"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn segments_sorted_by_begin() {
        let course = parse_annotation(
            &course_with_segments(&[("slide_10", 20, 5), ("slide_9", 0, 5)]),
            Mode::Lenient,
        )
        .unwrap()
        .value;
        let ids: Vec<&str> = course.lessons[0].segments.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["slide_9", "slide_10"]);
    }

    #[test]
    fn touching_segments_are_fine() {
        assert!(parse_annotation(&course_with_segments(&[("a", 0, 10), ("b", 10, 2)]), Mode::Lenient).is_ok());
    }

    #[test]
    fn structural_errors() {
        let unknown_kind = EXCERPT.replace("\"definition\"", "\"quiz\"");
        assert!(matches!(
            parse_annotation(&unknown_kind, Mode::Lenient),
            Err(Error::Syntax { .. })
        ));

        let no_pobs = course_with_segments(&[("a", 0, 10)])
            .replace(r#"[{"pob_id": "p", "kind": "rule", "concerns": ["a"]}]"#, "[]");
        assert!(matches!(
            parse_annotation(&no_pobs, Mode::Lenient),
            Err(Error::InvalidSegment { .. })
        ));

        let fractional = EXCERPT.replace("00:02:01", "00:02:01.5");
        assert!(matches!(
            parse_annotation(&fractional, Mode::Lenient),
            Err(Error::Syntax { .. })
        ));
    }

    fn domain(concepts: &[&str], same_as: &[(&str, &str)]) -> DomainOntology {
        let id = |s: &str| ConceptId::new(s).unwrap();
        DomainOntology {
            domain_id: "structure_de_donnee".into(),
            label: "sd".into(),
            concepts: concepts
                .iter()
                .map(|c| Concept {
                    id: id(c),
                    label: c.to_string(),
                })
                .collect(),
            edges: same_as
                .iter()
                .map(|(a, b)| RelationEdge::new(RelationKind::SameAs, id(a), id(b)))
                .collect(),
        }
    }

    #[test]
    fn alignment_reports_segment_and_pob() {
        let course = parse_annotation(EXCERPT, Mode::Strict).unwrap().value;
        let err = course
            .check_alignment(&domain(&["adresse", "fonction"], &[]))
            .unwrap_err();
        match err {
            Error::UnresolvedConcept {
                segment, pob, concept, ..
            } => {
                assert_eq!(
                    (segment.as_str(), pob.as_str(), concept.as_str()),
                    ("slide_2", "exemple_1", "valeur_retournee")
                );
            }
            other => panic!("{other}"),
        }
        course
            .check_alignment(&domain(&["adresse", "fonction", "valeur_retournee"], &[]))
            .unwrap();
    }

    fn corpus_concerning(concerns: &[&str]) -> (AnnotatedCorpus, BTreeMap<String, InferredFacts>) {
        let onto = domain(
            &["boucle", "instruction_de_repetition", "fonction"],
            &[("boucle", "instruction_de_repetition")],
        );
        let json = EXCERPT
            .replace(r#"["adresse", "fonction"]"#, &serde_json::to_string(concerns).unwrap())
            .replace(r#"["valeur_retournee"]"#, r#"["fonction"]"#);
        let course = parse_annotation(&json, Mode::Strict).unwrap().value;
        let facts = BTreeMap::from([(onto.domain_id.clone(), infer(&onto))]);
        let corpus = AnnotatedCorpus::new(vec![course], &BTreeMap::from([(onto.domain_id.clone(), onto)])).unwrap();
        (corpus, facts)
    }

    fn first_concerns(c: &AnnotatedCorpus) -> Vec<&str> {
        c.courses()[0].lessons[0].segments[0].pobs[0]
            .concerns
            .iter()
            .map(|c| c.as_str())
            .collect()
    }

    #[test]
    fn canonicalization_merges_twins() {
        let (corpus, facts) = corpus_concerning(&["instruction_de_repetition"]);
        let canon = canonicalize_corpus(&corpus, &facts).unwrap();
        assert_eq!(first_concerns(&canon), ["boucle"]);

        let (corpus, facts) = corpus_concerning(&["boucle", "instruction_de_repetition"]);
        let canon = canonicalize_corpus(&corpus, &facts).unwrap();
        assert_eq!(first_concerns(&canon), ["boucle"]);
        assert_eq!(canonicalize_corpus(&canon, &facts).unwrap(), canon);

        let (corpus, facts) = corpus_concerning(&["fonction"]);
        assert_eq!(canonicalize_corpus(&corpus, &facts).unwrap(), corpus);
    }
}
