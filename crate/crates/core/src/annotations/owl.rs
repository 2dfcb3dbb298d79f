//! Importer for the OWL/RDF-XML vocabulary emitted by the annotation tool.
//!
//! Only the elements below are understood; identifiers come from `rdf:ID`
//! and references from `rdf:resource`, of which only the fragment after the
//! last `#` is kept.
//!
//! | side     | elements |
//! |----------|----------|
//! | ontology | `Teaching_domain`, `teachs`, `concept`, `is_decomposed`, `depends`, `prerequisites`, `owl:sameAs` |
//! | course   | `video_course` / `cours_video`, `is_presented_into`, `lesson_video`, `URL`, `is_segmented`, `langage`, `slide`, `Duration`, `Begining`, `Title`, `contains`, `POB`, `concerne`, `rdfs:comment` |
//!
//! The spellings are kept exactly as the tool writes them. POB kinds are
//! taken from the POB identifier (`definition_1`, `exemple_1`, ...), which is
//! how the tool names them.

use std::collections::{BTreeMap, BTreeSet};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{PedagogicalObject, PobKind, Segment, Timecode, VideoCourse, VideoLesson};
use crate::error::{Error, Result};
use crate::ontology::{validate_ontology, Concept, ConceptId, DomainOntology, RelationEdge, RelationKind};
use crate::parse::{Mode, Parsed};

/// Whatever an OWL document described: a domain ontology, a course, or both.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OwlImport {
    pub ontology: Option<DomainOntology>,
    pub course: Option<VideoCourse>,
}

#[derive(Debug, Default)]
struct Node {
    prefix: Option<String>,
    local: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
    text: String,
}

impl Node {
    fn qualified(&self) -> String {
        match &self.prefix {
            Some(p) => format!("{p}:{}", self.local),
            None => self.local.clone(),
        }
    }

    fn attr(&self, local: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k.rsplit(':').next() == Some(local))
            .map(|(_, v)| v.as_str())
    }

    fn id(&self) -> Option<String> {
        self.attr("ID").or_else(|| self.attr("about")).map(fragment)
    }

    fn reference(&self) -> Option<String> {
        self.attr("resource").or_else(|| self.attr("ID")).map(fragment)
    }

    fn normalized_text(&self) -> String {
        self.text.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

/// The identifier named by an `rdf:ID` or `rdf:resource` value.
fn fragment(raw: &str) -> String {
    let raw = raw.trim();
    if let Some((_, frag)) = raw.rsplit_once('#') {
        return frag.to_string();
    }
    // `&p1;name` with an entity-declared namespace prefix.
    if let Some(rest) = raw.strip_prefix('&') {
        if let Some((_, name)) = rest.split_once(';') {
            return name.to_string();
        }
    }
    raw.to_string()
}

fn element(start: &BytesStart<'_>) -> Result<Node> {
    let name = start.name();
    let prefix = name.prefix().map(|p| String::from_utf8_lossy(p.as_ref()).into_owned());
    let local = String::from_utf8_lossy(name.local_name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for attr in start.attributes() {
        let attr = attr.map_err(|e| Error::Xml(e.to_string()))?;
        // Raw values: fragment references such as `&p1#x` are not valid
        // entity references, so they are resolved by `fragment` instead.
        attrs.push((
            String::from_utf8_lossy(attr.key.as_ref()).into_owned(),
            String::from_utf8_lossy(&attr.value).into_owned(),
        ));
    }
    Ok(Node {
        prefix,
        local,
        attrs,
        ..Node::default()
    })
}

fn parse_tree(source: &str) -> Result<Node> {
    let mut reader = Reader::from_str(source);
    let xml_err = |reader: &Reader<&[u8]>, e: &dyn std::fmt::Display| {
        Error::Xml(format!("at byte {}: {e}", reader.buffer_position()))
    };
    let mut stack: Vec<Node> = vec![Node::default()];
    loop {
        match reader.read_event() {
            Err(e) => return Err(xml_err(&reader, &e)),
            Ok(Event::Eof) => break,
            Ok(Event::Start(s)) => stack.push(element(&s)?),
            Ok(Event::Empty(s)) => {
                let node = element(&s)?;
                stack.last_mut().unwrap().children.push(node);
            }
            Ok(Event::End(_)) => {
                let node = stack.pop().unwrap();
                stack
                    .last_mut()
                    .ok_or_else(|| xml_err(&reader, &"unbalanced end tag"))?
                    .children
                    .push(node);
            }
            Ok(Event::Text(t)) => {
                let text = match t.unescape() {
                    Ok(s) => s.into_owned(),
                    Err(_) => String::from_utf8_lossy(&t).into_owned(),
                };
                stack.last_mut().unwrap().text.push_str(&text);
            }
            Ok(Event::CData(t)) => {
                stack.last_mut().unwrap().text.push_str(&String::from_utf8_lossy(&t));
            }
            Ok(_) => {}
        }
    }
    if stack.len() != 1 {
        return Err(Error::Xml("unexpected end of document".into()));
    }
    let mut doc = stack.pop().unwrap();
    match doc.children.len() {
        1 => Ok(doc.children.pop().unwrap()),
        0 => Err(Error::Xml("document has no root element".into())),
        _ => Err(Error::Xml("document has more than one root element".into())),
    }
}

struct Importer {
    mode: Mode,
    warnings: Vec<String>,
}

impl Importer {
    fn unsupported(&mut self, node: &Node, context: &str) -> Result<()> {
        let name = node.qualified();
        match self.mode {
            Mode::Strict => Err(Error::UnsupportedElement(name)),
            Mode::Lenient => {
                self.warnings
                    .push(format!("skipping unsupported element `{name}` in {context}"));
                Ok(())
            }
        }
    }
}

fn required_id(node: &Node) -> Result<String> {
    node.id()
        .filter(|id| !id.is_empty())
        .ok_or_else(|| Error::Xml(format!("`{}` element without rdf:ID", node.qualified())))
}

/// Imports a document written in the tool's OWL/RDF-XML vocabulary.
pub fn import_owl_subset(source: &str, mode: Mode) -> Result<Parsed<OwlImport>> {
    let root = parse_tree(source)?;
    let mut imp = Importer {
        mode,
        warnings: Vec::new(),
    };

    let items: Vec<&Node> = if root.local == "RDF" {
        root.children.iter().collect()
    } else {
        vec![&root]
    };

    let mut domains = Vec::new();
    let mut loose_concepts = Vec::new();
    let mut courses = Vec::new();
    let mut lessons = BTreeMap::new();
    let mut slides = BTreeMap::new();
    let mut pobs = BTreeMap::new();
    for item in items {
        match item.local.as_str() {
            "Teaching_domain" => domains.push(item),
            "concept" => loose_concepts.push(item),
            "video_course" | "cours_video" => courses.push(item),
            "lesson_video" => {
                lessons.insert(required_id(item)?, item);
            }
            "slide" => {
                slides.insert(required_id(item)?, item);
            }
            "POB" => {
                pobs.insert(required_id(item)?, item);
            }
            _ => imp.unsupported(item, "the document root")?,
        }
    }
    if domains.len() > 1 || courses.len() > 1 {
        return Err(Error::Xml(
            "expected at most one Teaching_domain and one video_course".into(),
        ));
    }

    let ontology = match domains.first() {
        Some(domain) => Some(read_domain(&mut imp, domain, &loose_concepts)?),
        None => {
            if !loose_concepts.is_empty() {
                imp.warnings
                    .push("ignoring concept elements outside a Teaching_domain".into());
            }
            None
        }
    };

    let course = match courses.first() {
        Some(course) => {
            let refs = Refs {
                lessons: &lessons,
                slides: &slides,
                pobs: &pobs,
            };
            let mut used = BTreeSet::new();
            let mut course = read_course(&mut imp, course, &refs, &mut used)?;
            for id in slides.keys().filter(|id| !used.contains(*id)) {
                imp.warnings
                    .push(format!("slide `{id}` is not referenced by any lesson"));
            }
            let warnings = course.normalize()?;
            imp.warnings.extend(warnings);
            Some(course)
        }
        None => None,
    };

    if ontology.is_none() && course.is_none() {
        return Err(Error::NoOwlContent);
    }
    Ok(Parsed {
        value: OwlImport { ontology, course },
        warnings: imp.warnings,
    })
}

#[derive(Default)]
struct ConceptTable {
    order: Vec<String>,
    labels: BTreeMap<String, Option<String>>,
    edges: Vec<RelationEdge>,
}

impl ConceptTable {
    fn mention(&mut self, id: &str) {
        if !self.labels.contains_key(id) {
            self.order.push(id.to_string());
            self.labels.insert(id.to_string(), None);
        }
    }
}

fn relation_of(local: &str) -> Option<RelationKind> {
    match local {
        "is_decomposed" => Some(RelationKind::IsDecomposedInto),
        "depends" => Some(RelationKind::Depends),
        "prerequisites" => Some(RelationKind::IsPrerequisite),
        "sameAs" => Some(RelationKind::SameAs),
        _ => None,
    }
}

fn read_domain(imp: &mut Importer, domain: &Node, loose: &[&Node]) -> Result<DomainOntology> {
    let domain_id = required_id(domain)?;
    let mut label = None;
    let mut table = ConceptTable::default();
    for child in &domain.children {
        match child.local.as_str() {
            "teachs" => {
                for c in &child.children {
                    if c.local == "concept" {
                        read_concept(imp, c, &mut table)?;
                    } else {
                        imp.unsupported(c, "teachs")?;
                    }
                }
            }
            "concept" => {
                read_concept(imp, child, &mut table)?;
            }
            "label" => label = Some(child.normalized_text()),
            _ => imp.unsupported(child, "Teaching_domain")?,
        }
    }
    for c in loose {
        read_concept(imp, c, &mut table)?;
    }

    let mut concepts = Vec::with_capacity(table.order.len());
    for id in &table.order {
        let concept_id = ConceptId::new(id.clone())?;
        let label = table.labels[id].clone().unwrap_or_else(|| id.clone());
        concepts.push(Concept { id: concept_id, label });
    }
    let mut seen = BTreeSet::new();
    table.edges.retain(|e| seen.insert(e.clone()));

    let ontology = DomainOntology {
        label: label.unwrap_or_else(|| domain_id.clone()),
        domain_id,
        concepts,
        edges: table.edges,
    };
    if let Some(v) = validate_ontology(&ontology).into_iter().next() {
        return Err(Error::Ontology(v));
    }
    Ok(ontology)
}

fn read_concept(imp: &mut Importer, node: &Node, table: &mut ConceptTable) -> Result<String> {
    let id = required_id(node)?;
    table.mention(&id);
    for child in &node.children {
        if let Some(kind) = relation_of(&child.local) {
            let nested: Vec<&Node> = child.children.iter().filter(|n| n.local == "concept").collect();
            let targets = if nested.is_empty() {
                let target = child
                    .reference()
                    .ok_or_else(|| Error::Xml(format!("`{}` of concept `{id}` has no target", child.qualified())))?;
                table.mention(&target);
                vec![target]
            } else {
                let mut out = Vec::new();
                for n in nested {
                    out.push(read_concept(imp, n, table)?);
                }
                out
            };
            for target in targets {
                table.edges.push(RelationEdge::new(
                    kind,
                    ConceptId::new(id.clone())?,
                    ConceptId::new(target)?,
                ));
            }
        } else if child.local == "label" {
            table.labels.insert(id.clone(), Some(child.normalized_text()));
        } else {
            imp.unsupported(child, &format!("concept `{id}`"))?;
        }
    }
    Ok(id)
}

struct Refs<'a> {
    lessons: &'a BTreeMap<String, &'a Node>,
    slides: &'a BTreeMap<String, &'a Node>,
    pobs: &'a BTreeMap<String, &'a Node>,
}

/// Resolves a property either to its nested element or to a top-level
/// element by reference.
fn target<'a>(prop: &'a Node, local: &str, table: &BTreeMap<String, &'a Node>) -> Result<Option<&'a Node>> {
    if let Some(nested) = prop.children.iter().find(|n| n.local == local) {
        return Ok(Some(nested));
    }
    match prop.reference() {
        Some(r) => table.get(&r).copied().map(Some).ok_or(Error::DanglingReference(r)),
        None => Ok(None),
    }
}

fn read_course(
    imp: &mut Importer,
    node: &Node,
    refs: &Refs<'_>,
    used_slides: &mut BTreeSet<String>,
) -> Result<VideoCourse> {
    let id = required_id(node)?;
    let mut title = None;
    let mut language = None;
    let mut lesson_nodes = Vec::new();
    for child in &node.children {
        match child.local.as_str() {
            "is_presented_into" => {
                let nested: Vec<&Node> = child.children.iter().filter(|n| n.local == "lesson_video").collect();
                if nested.is_empty() {
                    if let Some(l) = target(child, "lesson_video", refs.lessons)? {
                        lesson_nodes.push(l);
                    }
                } else {
                    lesson_nodes.extend(nested);
                }
                for other in child.children.iter().filter(|n| n.local != "lesson_video") {
                    imp.unsupported(other, "is_presented_into")?;
                }
            }
            "langage" => language = Some(child.normalized_text()),
            "Title" => title = Some(child.normalized_text()),
            _ => imp.unsupported(child, &format!("course `{id}`"))?,
        }
    }
    let mut lessons = Vec::new();
    for l in lesson_nodes {
        lessons.push(read_lesson(imp, l, language.as_deref(), refs, used_slides)?);
    }
    Ok(VideoCourse {
        title: title.unwrap_or_else(|| id.clone()),
        domain_id: id.clone(),
        id,
        lessons,
    })
}

fn read_lesson(
    imp: &mut Importer,
    node: &Node,
    course_language: Option<&str>,
    refs: &Refs<'_>,
    used_slides: &mut BTreeSet<String>,
) -> Result<VideoLesson> {
    let id = required_id(node)?;
    let mut lesson = VideoLesson {
        title: id.clone(),
        id,
        url: String::new(),
        language: course_language.unwrap_or_default().to_string(),
        segments: Vec::new(),
    };
    for child in &node.children {
        match child.local.as_str() {
            "URL" => lesson.url = child.normalized_text(),
            "Title" => lesson.title = child.normalized_text(),
            "langage" => lesson.language = child.normalized_text(),
            "is_segmented" => {
                if let Some(slide) = target(child, "slide", refs.slides)? {
                    let seg = read_slide(imp, slide, refs)?;
                    used_slides.insert(seg.id.clone());
                    lesson.segments.push(seg);
                }
            }
            _ => imp.unsupported(child, &format!("lesson `{}`", lesson.id))?,
        }
    }
    Ok(lesson)
}

fn timecode(node: &Node) -> Result<Timecode> {
    node.normalized_text().parse()
}

fn read_slide(imp: &mut Importer, node: &Node, refs: &Refs<'_>) -> Result<Segment> {
    let id = required_id(node)?;
    let mut begin = None;
    let mut duration = None;
    let mut title = String::new();
    let mut pobs = Vec::new();
    for child in &node.children {
        match child.local.as_str() {
            "Begining" => begin = Some(timecode(child)?),
            "Duration" => duration = Some(timecode(child)?),
            "Title" => title = child.normalized_text(),
            "contains" => {
                if let Some(pob) = target(child, "POB", refs.pobs)? {
                    pobs.push(read_pob(imp, pob)?);
                }
            }
            _ => imp.unsupported(child, &format!("slide `{id}`"))?,
        }
    }
    let missing = |what: &str| Error::Xml(format!("slide `{id}` has no {what}"));
    Ok(Segment {
        begin: begin.ok_or_else(|| missing("Begining"))?,
        duration: duration.ok_or_else(|| missing("Duration"))?,
        id,
        title,
        pobs,
    })
}

/// Maps a POB identifier such as `exemple_1` to its kind.
fn kind_from_id(id: &str) -> Result<PobKind> {
    let stem = id
        .trim_end_matches(|c: char| c.is_ascii_digit())
        .trim_end_matches(['_', '-']);
    let kind = match stem.to_lowercase().as_str() {
        "definition" | "définition" => PobKind::Definition,
        "example" | "exemple" => PobKind::Example,
        "exercise" | "exercice" => PobKind::Exercise,
        "solution_exercise" | "solution_exercice" => PobKind::SolutionExercise,
        "illustration" => PobKind::Illustration,
        "rule" | "regle" | "règle" => PobKind::Rule,
        "theorem" | "theoreme" | "théorème" => PobKind::Theorem,
        "demonstration" | "démonstration" => PobKind::Demonstration,
        _ => return Err(Error::UnknownPobKind(id.to_string())),
    };
    Ok(kind)
}

fn read_pob(imp: &mut Importer, node: &Node) -> Result<PedagogicalObject> {
    let id = required_id(node)?;
    let mut concerns = Vec::new();
    let mut comment = None;
    for child in &node.children {
        match child.local.as_str() {
            "concerne" => {
                let target = child
                    .reference()
                    .ok_or_else(|| Error::Xml(format!("`concerne` of POB `{id}` has no target")))?;
                concerns.push(ConceptId::new(target)?);
            }
            "comment" => comment = Some(child.normalized_text()),
            _ => imp.unsupported(child, &format!("POB `{id}`"))?,
        }
    }
    Ok(PedagogicalObject {
        kind: kind_from_id(&id)?,
        id,
        concerns,
        comment,
    })
}
