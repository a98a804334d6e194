mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use splift_cli::server::{router, AppState};
use tower::ServiceExt;

async fn call(state: &Arc<AppState>, req: Request<Body>) -> (StatusCode, String) {
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(body.to_vec()).unwrap())
}

fn post(body: &str) -> Request<Body> {
    Request::post("/filter")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

async fn filter(state: &Arc<AppState>, expr: &str) -> (BTreeSet<String>, bool) {
    let (status, body) = call(state, post(&serde_json::json!({ "expr": expr }).to_string())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let v: Value = serde_json::from_str(&body).unwrap();
    let ids = v["highlighted"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect();
    (ids, v["satisfiable"].as_bool().unwrap())
}

fn ten() -> Arc<AppState> {
    Arc::new(AppState::load(common::ten_component_document(), None, true).unwrap())
}

#[tokio::test]
async fn graph_is_served_verbatim() {
    let doc = common::ten_component_document();
    let state = Arc::new(AppState::load(doc.clone(), None, true).unwrap());
    let (status, body) = call(&state, Request::get("/graph").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, doc);
}

#[tokio::test]
async fn implied_edges_are_highlighted() {
    let state = ten();
    let (ids, sat) = filter(&state, "FA & !FB & FC").await;
    assert!(sat);
    let expected: BTreeSet<String> = [
        "C1→C2", "C1→C3", "C2→C3", "C2→C4", "C3→C5", "C4→C7", "C6→C9", "C8→C10", "C9→C10",
    ]
    .map(String::from)
    .into();
    assert_eq!(ids, expected);
}

#[tokio::test]
async fn true_highlights_only_unconditional_edges() {
    let (ids, sat) = filter(&ten(), "true").await;
    assert!(sat);
    assert_eq!(ids, BTreeSet::from(["C3→C5".to_string()]));
}

#[tokio::test]
async fn contradiction_is_an_empty_product_set() {
    let (ids, sat) = filter(&ten(), "FA & !FA").await;
    assert!(!sat);
    assert!(ids.is_empty());
}

#[tokio::test]
async fn errors_are_structured() {
    let state = ten();
    let (status, body) = call(&state, post(r#"{"expr": "FA & FZ"}"#)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["error"]["kind"], "unknown-feature");
    assert_eq!(v["error"]["offset"], 5);

    let (status, body) = call(&state, post(r#"{"expr": "FA & (FB"}"#)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["error"]["kind"], "syntax");
    assert!(v["error"]["offset"].is_u64());

    let (status, body) = call(&state, post("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["error"]["kind"], "malformed-json");
}

#[tokio::test]
async fn requests_are_pure() {
    let state = ten();
    let first = call(&state, post(r#"{"expr": "FA | FG"}"#)).await;
    for _ in 0..3 {
        assert_eq!(call(&state, post(r#"{"expr": "FA | FG"}"#)).await, first);
    }
}

#[tokio::test]
async fn feature_model_strengthens_the_antecedent() {
    let doc = common::ten_component_document();
    // with !FB forced, FA alone implies FA & !FB
    let with = Arc::new(AppState::load(doc.clone(), Some("!FB\n"), true).unwrap());
    let without = Arc::new(AppState::load(doc, Some("!FB\n"), false).unwrap());
    let (a, _) = filter(&with, "FA").await;
    let (b, _) = filter(&without, "FA").await;
    assert!(a.contains("C1→C2"));
    assert!(!b.contains("C1→C2"));
    assert!(b.is_subset(&a));
}
