//! Precision and recall of ranked runs against relevance judgments.
//!
//! Judgments come as qrels lines `query_id<TAB>lesson_id<TAB>segment_id`,
//! queries as a JSON manifest of [`SearchRequest`]s keyed by `query_id`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::annotations::PobKind;
use crate::engine::{Engine, SearchRequest};
use crate::error::{Error, Result};
use crate::indexer::SegmentRef;
use crate::ontology::RelationKind;

/// Set-based precision and recall of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    /// `None` when there are no relevant segments.
    pub recall: Option<f64>,
    /// Set when nothing was returned and precision was taken as 1.
    pub vacuous: bool,
}

pub fn precision_recall(returned: &[SegmentRef], relevant: &BTreeSet<SegmentRef>) -> PrecisionRecall {
    let returned: BTreeSet<&SegmentRef> = returned.iter().collect();
    let hits = returned.iter().filter(|s| relevant.contains(**s)).count() as f64;
    let (precision, vacuous) = if returned.is_empty() {
        (1.0, true)
    } else {
        (hits / returned.len() as f64, false)
    };
    let recall = (!relevant.is_empty()).then(|| hits / relevant.len() as f64);
    PrecisionRecall {
        precision,
        recall,
        vacuous,
    }
}

/// Fraction of the first `k` ranks holding a relevant segment; missing ranks
/// count as non-relevant.
pub fn precision_at_k(returned: &[SegmentRef], relevant: &BTreeSet<SegmentRef>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = returned.iter().take(k).filter(|s| relevant.contains(*s)).count();
    hits as f64 / k as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgedQuery {
    pub query_id: String,
    pub domain_id: String,
    pub concepts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pob: Option<PobKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expand: Vec<RelationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
}

impl JudgedQuery {
    pub fn request(&self) -> SearchRequest {
        SearchRequest {
            domain_id: self.domain_id.clone(),
            concepts: self.concepts.clone(),
            pob: self.pob,
            expand: self.expand.clone(),
            top: self.top,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryManifest {
    pub queries: Vec<JudgedQuery>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelevanceJudgments {
    pub entries: BTreeMap<String, BTreeSet<SegmentRef>>,
    pub queries: BTreeMap<String, SearchRequest>,
}

/// Parses qrels text. Blank lines and `#` comments are skipped.
pub fn parse_qrels(text: &str) -> Result<BTreeMap<String, BTreeSet<SegmentRef>>> {
    let mut out: BTreeMap<String, BTreeSet<SegmentRef>> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [query, lesson, segment] = fields.as_slice() else {
            return Err(Error::Syntax {
                line: n + 1,
                column: 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        };
        out.entry(query.to_string())
            .or_default()
            .insert(SegmentRef::new(*lesson, *segment));
    }
    Ok(out)
}

pub fn parse_query_manifest(text: &str) -> Result<BTreeMap<String, SearchRequest>> {
    let manifest: QueryManifest = serde_json::from_str(text).map_err(Error::from_json)?;
    let mut out = BTreeMap::new();
    for q in manifest.queries {
        if out.insert(q.query_id.clone(), q.request()).is_some() {
            return Err(Error::Duplicate {
                what: "query",
                id: q.query_id,
            });
        }
    }
    Ok(out)
}

impl RelevanceJudgments {
    pub fn parse(qrels: &str, manifest: &str) -> Result<Self> {
        Ok(RelevanceJudgments {
            entries: parse_qrels(qrels)?,
            queries: parse_query_manifest(manifest)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryEvaluation {
    pub query_id: String,
    pub returned: usize,
    pub relevant: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub vacuous: bool,
    pub precision_at: Vec<(usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MacroAverage {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub precision_at: Vec<(usize, Option<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationTable {
    pub ks: Vec<usize>,
    pub queries: Vec<QueryEvaluation>,
    pub macro_average: MacroAverage,
    pub warnings: Vec<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Macro-averages per-query rows, skipping undefined values.
pub fn macro_average(rows: &[QueryEvaluation], ks: &[usize]) -> MacroAverage {
    MacroAverage {
        precision: mean(rows.iter().filter_map(|r| r.precision)),
        recall: mean(rows.iter().filter_map(|r| r.recall)),
        precision_at: ks
            .iter()
            .map(|&k| {
                let vals = rows
                    .iter()
                    .filter(|r| r.error.is_none())
                    .filter_map(|r| r.precision_at.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v));
                (k, mean(vals))
            })
            .collect(),
    }
}

/// Runs every judged query through `engine` and tabulates the results.
/// A failing query is recorded with its error and the others still run.
pub fn evaluate_run(judgments: &RelevanceJudgments, engine: &Engine, ks: &[usize]) -> Result<EvaluationTable> {
    for refs in judgments.entries.values() {
        for s in refs {
            if engine.corpus().segment(&s.lesson_id, &s.segment_id).is_none() {
                return Err(Error::UnknownSegment {
                    lesson_id: s.lesson_id.clone(),
                    segment_id: s.segment_id.clone(),
                });
            }
        }
    }
    let mut warnings = Vec::new();
    if judgments.queries.is_empty() {
        warnings.push("no queries to evaluate".to_string());
    }
    for id in judgments.entries.keys() {
        if !judgments.queries.contains_key(id) {
            warnings.push(format!("judgments for unknown query `{id}` ignored"));
        }
    }

    let empty = BTreeSet::new();
    let mut rows = Vec::new();
    for (query_id, request) in &judgments.queries {
        let relevant = judgments.entries.get(query_id).unwrap_or(&empty);
        let row = match engine.search(request) {
            Ok(response) => {
                let returned: Vec<SegmentRef> = response.results.into_iter().map(|r| r.segment).collect();
                let pr = precision_recall(&returned, relevant);
                QueryEvaluation {
                    query_id: query_id.clone(),
                    returned: returned.len(),
                    relevant: relevant.len(),
                    precision: Some(pr.precision),
                    recall: pr.recall,
                    vacuous: pr.vacuous,
                    precision_at: ks
                        .iter()
                        .map(|&k| (k, precision_at_k(&returned, relevant, k)))
                        .collect(),
                    error: None,
                }
            }
            Err(e) => QueryEvaluation {
                query_id: query_id.clone(),
                returned: 0,
                relevant: relevant.len(),
                precision: None,
                recall: None,
                vacuous: false,
                precision_at: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(EvaluationTable {
        ks: ks.to_vec(),
        macro_average: macro_average(&rows, ks),
        queries: rows,
        warnings,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".to_string())
}

impl EvaluationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("query_id,returned,relevant,precision,recall,vacuous");
        for k in &self.ks {
            out.push_str(&format!(",p@{k}"));
        }
        out.push_str(",error\n");
        for r in &self.queries {
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                r.query_id,
                r.returned,
                r.relevant,
                r.precision.map(|v| v.to_string()).unwrap_or_default(),
                r.recall.map(|v| v.to_string()).unwrap_or_default(),
                r.vacuous
            ));
            for k in &self.ks {
                let v = r
                    .precision_at
                    .iter()
                    .find(|(kk, _)| kk == k)
                    .map(|(_, v)| v.to_string());
                out.push_str(&format!(",{}", v.unwrap_or_default()));
            }
            out.push_str(&format!(",{}\n", r.error.as_deref().unwrap_or("").replace(',', ";")));
        }
        let m = &self.macro_average;
        out.push_str(&format!(
            "macro,,,{},{},",
            m.precision.map(|v| v.to_string()).unwrap_or_default(),
            m.recall.map(|v| v.to_string()).unwrap_or_default()
        ));
        for (_, v) in &m.precision_at {
            out.push_str(&format!(",{}", v.map(|v| v.to_string()).unwrap_or_default()));
        }
        out.push_str(",\n");
        out
    }

    pub fn to_pretty(&self) -> String {
        let mut header = vec!["query".to_string(), "ret".into(), "rel".into(), "P".into(), "R".into()];
        header.extend(self.ks.iter().map(|k| format!("P@{k}")));
        let mut lines = vec![header];
        for r in &self.queries {
            let mut line = vec![
                r.query_id.clone(),
                r.returned.to_string(),
                r.relevant.to_string(),
                match (r.precision, r.vacuous) {
                    (Some(p), true) => format!("{p:.4}*"),
                    (p, _) => fmt_opt(p),
                },
                fmt_opt(r.recall),
            ];
            line.extend(
                self.ks
                    .iter()
                    .map(|k| fmt_opt(r.precision_at.iter().find(|(kk, _)| kk == k).map(|(_, v)| *v))),
            );
            lines.push(line);
        }
        let m = &self.macro_average;
        let mut line = vec![
            "macro".to_string(),
            String::new(),
            String::new(),
            fmt_opt(m.precision),
            fmt_opt(m.recall),
        ];
        line.extend(m.precision_at.iter().map(|(_, v)| fmt_opt(*v)));
        lines.push(line);

        let widths: Vec<usize> = (0..lines[0].len())
            .map(|i| lines.iter().map(|l| l[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for l in &lines {
            let cells: Vec<String> = l.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        if self.queries.iter().any(|r| r.vacuous) {
            out.push_str("* vacuous precision: nothing returned\n");
        }
        for r in self.queries.iter().filter(|r| r.error.is_some()) {
            out.push_str(&format!("{}: {}\n", r.query_id, r.error.as_deref().unwrap_or_default()));
        }
        out
    }
}
