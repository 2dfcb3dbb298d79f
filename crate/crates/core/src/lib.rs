//! Concept-based indexing and ranked retrieval of annotated lecture-video segments.
//!
//! A domain ontology names the concepts of a subject and relates them
//! (`is_decomposed_into`, `depends`, `is_prerequisite`, `same_as`). Lecture
//! videos are cut into timed segments, each annotated with pedagogical objects
//! that concern ontology concepts. The [`indexer`] weighs every
//! (concept, segment) pair by CF-ISDF and [`search`] ranks segments by cosine
//! similarity to a set of query concepts.
//!
//! ```
//! use ontoseg::{Engine, SearchRequest, Mode};
//! use ontoseg::ontology::load_domain_ontology;
//! use ontoseg::annotations::parse_annotation;
//!
//! let onto = load_domain_ontology(r#"{
//!     "domain_id": "algo",
//!     "label": "Algorithmics",
//!     "concepts": [{"id": "loop", "label": "Loop"}, {"id": "array", "label": "Array"}]
//! }"#, Mode::Strict).unwrap().value;
//! let course = parse_annotation(r#"{
//!     "course_id": "c1", "title": "Basics", "domain_id": "algo",
//!     "lessons": [{"lesson_id": "L1", "title": "Intro", "url": "http://v/1", "language": "en",
//!         "segments": [
//!             {"segment_id": "S1", "title": "loops", "begin": "00:00:00", "duration": "00:01:00",
//!              "pobs": [{"pob_id": "d1", "kind": "definition", "concerns": ["loop"]}]},
//!             {"segment_id": "S2", "title": "arrays", "begin": "00:01:00", "duration": "00:01:00",
//!              "pobs": [{"pob_id": "d2", "kind": "definition", "concerns": ["array"]}]}
//!         ]},
//!         {"lesson_id": "L2", "title": "Arrays", "url": "http://v/2", "language": "en",
//!         "segments": [
//!             {"segment_id": "S1", "title": "indexing", "begin": "00:00:00", "duration": "00:02:00",
//!              "pobs": [{"pob_id": "e1", "kind": "example", "concerns": ["array"]}]}
//!         ]}]
//! }"#, Mode::Strict).unwrap().value;
//!
//! let engine = Engine::new(vec![onto], vec![course]).unwrap();
//! let response = engine.search(&SearchRequest {
//!     domain_id: "algo".into(),
//!     concepts: vec!["loop".into()],
//!     pob: None,
//!     expand: vec![],
//!     top: None,
//! }).unwrap();
//! let top = &response.results[0];
//! assert_eq!((top.segment.lesson_id.as_str(), top.segment.segment_id.as_str()), ("L1", "S1"));
//! ```

pub mod annotations;
pub mod engine;
mod error;
pub mod evaluation;
pub mod indexer;
pub mod inference;
pub mod ontology;
mod parse;
pub mod search;

pub use annotations::{AnnotatedCorpus, PedagogicalObject, PobKind, Segment, Timecode, VideoCourse, VideoLesson};
pub use engine::{Engine, SearchRequest, SearchResponse, Sources};
pub use error::{Error, Result};
pub use indexer::{build_index, cf_isdf, ConceptSegmentIndex, SegmentRef};
pub use inference::{infer, InferredFacts};
pub use ontology::{Concept, ConceptId, DomainOntology, RelationEdge, RelationKind};
pub use parse::{Mode, Parsed};
pub use search::{search, Query, QueryOptions, RankedResult};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/ontology.md")]
    struct Ontology;
    #[doc = include_str!("../../../book/src/annotations.md")]
    struct Annotations;
    #[doc = include_str!("../../../book/src/weighting.md")]
    struct Weighting;
    #[doc = include_str!("../../../book/src/search.md")]
    struct Search;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
