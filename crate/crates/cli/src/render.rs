//! Text and HTML renderings of command results.

use std::fmt::Write;

use ontoseg::inference::InferenceReport;
use ontoseg::search::{Explanation, PobSummary};
use ontoseg::RankedResult;

fn pob_line(p: &PobSummary) -> String {
    let concepts: Vec<&str> = p.concepts.iter().map(|c| c.id.as_str()).collect();
    let mut line = format!("{} [{}] {}", p.kind, p.pob_id, concepts.join(", "));
    if let Some(c) = &p.comment {
        let _ = write!(line, " \"{c}\"");
    }
    line
}

pub fn search_text(results: &[RankedResult]) -> String {
    if results.is_empty() {
        return "no segments matched\n".to_string();
    }
    let mut out = String::new();
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>3}. {:.4}  {}  {} +{}  {} / {}",
            i + 1,
            r.score,
            r.segment,
            r.begin_timecode(),
            r.duration_timecode(),
            r.lesson_title,
            r.segment_title
        );
        for p in &r.pobs {
            let _ = writeln!(out, "       {}", pob_line(p));
        }
        let _ = writeln!(out, "       {}", r.url);
    }
    out
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// A self-contained result page.
pub fn search_html(title: &str, results: &[RankedResult]) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "<!doctype html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{t}</title>\n\
         <style>body{{font-family:sans-serif;max-width:60em;margin:auto}}li{{margin:1em 0}}\
         .pob{{color:#444}}.score{{font-family:monospace}}</style>\n</head>\n<body>\n<h1>{t}</h1>\n",
        t = escape(title)
    );
    if results.is_empty() {
        out.push_str("<p>no segments matched</p>\n");
    } else {
        out.push_str("<ol>\n");
        for r in results {
            let _ = write!(
                out,
                "<li><span class=\"score\">{:.4}</span> <a href=\"{}\">{}</a>: {}<br>\
                 begin {} duration {}\n<ul>\n",
                r.score,
                escape(&r.url),
                escape(&r.lesson_title),
                escape(&r.segment_title),
                r.begin_timecode(),
                r.duration_timecode()
            );
            for p in &r.pobs {
                let _ = writeln!(out, "<li class=\"pob\">{}</li>", escape(&pob_line(p)));
            }
            out.push_str("</ul></li>\n");
        }
        out.push_str("</ol>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

pub fn explain_text(e: &Explanation) -> String {
    let mut out = format!("segment {}\n", e.segment);
    out.push_str("concept                          cf  segf  s_d  df  |D|  weight\n");
    for r in &e.rows {
        let _ = writeln!(
            out,
            "{:<30} {:>4} {:>5} {:>4} {:>3} {:>4}  {:.4}",
            r.concept.as_str(),
            r.cf,
            r.seg_f,
            r.s_d,
            r.df,
            r.num_documents,
            r.weight
        );
    }
    let _ = writeln!(
        out,
        "dot {:.4}  |v_s| {:.4}  |v_q| {:.4}  cosine {:.4}",
        e.dot, e.segment_norm, e.query_norm, e.cosine
    );
    out
}

pub fn inference_text(r: &InferenceReport) -> String {
    let mut out = format!("domain {}\n", r.domain_id);
    let _ = writeln!(out, "asserted ({})", r.asserted.len());
    for e in &r.asserted {
        let _ = writeln!(out, "  {e}");
    }
    let _ = writeln!(out, "inferred ({})", r.inferred.len());
    for e in &r.inferred {
        let _ = writeln!(out, "  {e}");
    }
    if !r.same_as_classes.is_empty() {
        out.push_str("sameAs classes\n");
        for c in &r.same_as_classes {
            let members: Vec<&str> = c.members.iter().map(|m| m.as_str()).collect();
            let _ = writeln!(out, "  {} = {{{}}}", c.representative, members.join(", "));
        }
    }
    for v in &r.violations {
        let _ = writeln!(out, "violation: {v}");
    }
    out
}
