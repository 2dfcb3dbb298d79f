use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use ontoseg::annotations::import_owl_subset;
use ontoseg::ontology::load_domain_ontology;
use ontoseg::{Engine, Mode};
use ontoseg_service::{router, ApiError};
use ontoseg_testkit::{demo_engine, fixtures_dir};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn json_call(app: &axum::Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn demo_app() -> (Arc<Engine>, axum::Router) {
    let engine = Arc::new(demo_engine());
    (engine.clone(), router(engine, None))
}

fn envelope(v: Value) -> ApiError {
    serde_json::from_value(v).unwrap()
}

#[tokio::test]
async fn lists_domains() {
    let (_, app) = demo_app();
    let (status, body) = json_call(&app, Method::GET, "/api/domains", None).await;
    assert_eq!(status, StatusCode::OK);
    let list = body.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["domain_id"], "structure_de_donnee");
    assert!(list[0]["concept_count"].as_u64().unwrap() > 100);
}

#[tokio::test]
async fn two_domains_sorted_by_label() {
    let a = load_domain_ontology(
        r#"{"domain_id": "z", "label": "Algebra", "concepts": [{"id": "x", "label": "x"}]}"#,
        Mode::Strict,
    )
    .unwrap()
    .value;
    let b = load_domain_ontology(
        r#"{"domain_id": "a", "label": "Zoology", "concepts": [{"id": "y", "label": "y"}]}"#,
        Mode::Strict,
    )
    .unwrap()
    .value;
    let course = ontoseg::annotations::parse_annotation(
        r#"{"course_id": "c", "title": "t", "domain_id": "a", "lessons": [{"lesson_id": "L", "title": "t", "url": "u",
            "language": "en", "segments": [{"segment_id": "S", "title": "t", "begin": "00:00:00", "duration": "00:00:05",
            "pobs": [{"pob_id": "p", "kind": "rule", "concerns": ["y"]}]}]}]}"#,
        Mode::Strict,
    )
    .unwrap()
    .value;
    let app = router(Arc::new(Engine::new(vec![b, a], vec![course]).unwrap()), None);
    let (_, body) = json_call(&app, Method::GET, "/api/domains", None).await;
    let ids: Vec<&str> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["domain_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["z", "a"]);
}

#[tokio::test]
async fn zero_domains_is_an_empty_list() {
    let engine = Engine::new(vec![], vec![]).unwrap();
    assert!(!engine.warnings().is_empty());
    let app = router(Arc::new(engine), None);
    let (status, body) = json_call(&app, Method::GET, "/api/domains", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));
}

#[tokio::test]
async fn tree_matches_engine() {
    let (engine, app) = demo_app();
    let (status, body) = json_call(&app, Method::GET, "/api/domains/structure_de_donnee/tree", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body,
        serde_json::to_value(engine.tree("structure_de_donnee").unwrap()).unwrap()
    );
    let roots = body["roots"].as_array().unwrap();
    let instruction = roots.iter().find(|n| n["id"] == "instruction").unwrap();
    assert!(instruction["children"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["id"] == "affectation"));
}

#[tokio::test]
async fn unknown_tree_is_404_envelope() {
    let (_, app) = demo_app();
    let (status, body) = json_call(&app, Method::GET, "/api/domains/nope/tree", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(envelope(body).code, "unknown_domain");
}

#[tokio::test]
async fn search_pointeur() {
    let (engine, app) = demo_app();
    let body = r#"{"domain_id": "structure_de_donnee", "concepts": ["pointeur"]}"#;
    let (status, bytes) = call(&app, Method::POST, "/api/search", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(
        v["results"][0]["segment"],
        json!({"lesson_id": "D8", "segment_id": "S9"})
    );
    let direct = engine.search(&serde_json::from_str(body).unwrap()).unwrap();
    assert_eq!(bytes, serde_json::to_vec(&direct).unwrap());
}

#[tokio::test]
async fn search_with_filter() {
    let (_, app) = demo_app();
    let body = r#"{"domain_id": "structure_de_donnee", "concepts": ["pointeur"], "pob": "exercise"}"#;
    let (status, v) = json_call(&app, Method::POST, "/api/search", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    let results = v["results"].as_array().unwrap();
    assert!(!results.is_empty());
    for r in results {
        assert!(r["pobs"].as_array().unwrap().iter().any(|p| p["kind"] == "exercise"));
    }
}

#[tokio::test]
async fn search_errors() {
    let (_, app) = demo_app();
    let cases = [
        (
            r#"{"domain_id": "structure_de_donnee", "concepts": []}"#,
            StatusCode::BAD_REQUEST,
            "empty_query",
        ),
        (
            r#"{"domain_id": "structure_de_donnee", "concepts": ["licorne"]}"#,
            StatusCode::BAD_REQUEST,
            "unknown_concept",
        ),
        (
            r#"{"domain_id": "structure_de_donnee", "concepts": ["pointeur"], "top": 0}"#,
            StatusCode::BAD_REQUEST,
            "invalid_query",
        ),
        (
            r#"{"domain_id": "nope", "concepts": ["pointeur"]}"#,
            StatusCode::NOT_FOUND,
            "unknown_domain",
        ),
        (
            r#"{"domain_id": "structure_de_donnee", "concepts": ["pointeur"], "extra": 1}"#,
            StatusCode::BAD_REQUEST,
            "malformed_body",
        ),
        (
            r#"{"domain_id": "structure_de_donnee", "concepts": ["pointeur"], "pob": "lecture"}"#,
            StatusCode::BAD_REQUEST,
            "malformed_body",
        ),
        (r#"{"domain_id": "#, StatusCode::BAD_REQUEST, "malformed_body"),
        ("", StatusCode::BAD_REQUEST, "malformed_body"),
    ];
    for (body, status, code) in cases {
        let (got, v) = json_call(&app, Method::POST, "/api/search", Some(body)).await;
        assert_eq!(got, status, "{body}");
        let e = envelope(v);
        assert_eq!(e.code, code, "{body}");
        assert!(!e.message.is_empty());
    }
}

#[tokio::test]
async fn segment_detail_and_explain() {
    let (_, app) = demo_app();
    let (status, v) = json_call(&app, Method::GET, "/api/segments/D6/S2?explain=pointeur", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["begin"], "00:01:00");
    let rows = v["explain"]["rows"].as_array().unwrap();
    let row = rows.iter().find(|r| r["concept"] == "pointeur").unwrap();
    assert!((row["weight"].as_f64().unwrap() - 0.7589).abs() < 1e-3);

    let (status, v) = json_call(&app, Method::GET, "/api/segments/D6/S2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(v.get("explain").is_none() || v["explain"].is_null());

    let (status, v) = json_call(&app, Method::GET, "/api/segments/D6/S99", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(envelope(v).code, "unknown_segment");
}

#[tokio::test]
async fn excerpt_segment_timecodes() {
    let owl = std::fs::read_to_string(fixtures_dir().join("owl/lesson_excerpt.owl")).unwrap();
    let course = import_owl_subset(&owl, Mode::Strict).unwrap().value.course.unwrap();
    let onto = std::fs::read_to_string(fixtures_dir().join("owl/lesson_domain.json")).unwrap();
    let onto = load_domain_ontology(&onto, Mode::Strict).unwrap().value;
    let app = router(Arc::new(Engine::new(vec![onto], vec![course]).unwrap()), None);
    let (status, v) = json_call(&app, Method::GET, "/api/segments/fonction/slide_2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["begin"], "00:02:01");
    assert_eq!(v["duration"], "00:03:22");
    assert_eq!(v["title"], "introduction au fonction");
    assert_eq!(v["pobs"][1]["comment"], "differents type de valeurs retournee");
}

#[tokio::test]
async fn root_and_unknown_paths() {
    let (_, app) = demo_app();
    let (status, bytes) = call(&app, Method::GET, "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(bytes).unwrap().contains("/api"));
    let (status, v) = json_call(&app, Method::GET, "/api/nothing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(envelope(v).code, "not_found");
}

#[tokio::test]
async fn serves_static_bundle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>bundle</h1>").unwrap();
    let app = router(Arc::new(demo_engine()), Some(dir.path().to_path_buf()));
    let (status, bytes) = call(&app, Method::GET, "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, b"<h1>bundle</h1>");
    let (status, _) = json_call(&app, Method::GET, "/api/domains", None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn concurrent_reads_agree() {
    let (_, app) = demo_app();
    let body =
        r#"{"domain_id": "structure_de_donnee", "concepts": ["pointeur", "liste"], "expand": ["is_prerequisite"]}"#;
    let mut handles = Vec::new();
    for _ in 0..16 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            call(&app, Method::POST, "/api/search", Some(body)).await
        }));
    }
    let mut outputs = Vec::new();
    for h in handles {
        outputs.push(h.await.unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}
