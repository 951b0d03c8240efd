//! Driving the HTTP API in process, the way the web page does.

use axum::body::{to_bytes, Body};
use axum::http::Request;
use stexify::lexing::RecognizerRegistry;
use stexify::server::{router, AppState};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: &str, uri: &str, body: &str) -> String {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    format!("{status} {}", String::from_utf8_lossy(&bytes))
}

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("demo.tex");
    std::fs::write(&doc, include_str!("../fixtures/demo-file.tex")).unwrap();
    let grammar = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/lambda.grammar");

    let state = AppState::new(RecognizerRegistry::default(), Some(dir.path().join("sessions")));
    let app = router(state);
    let created = call(&app, "POST", "/sessions", &serde_json::json!({"document_path": doc, "grammar_path": grammar}).to_string()).await;
    println!("POST /sessions\n  {created}");
    let id = created.split("\"session_id\":\"").nth(1).unwrap().split('"').next().unwrap().to_string();

    for (method, uri, body) in [
        ("GET", format!("/sessions/{id}/formulas"), ""),
        ("POST", format!("/sessions/{id}/export"), ""),
        ("POST", format!("/sessions/{id}/formulas/3/selection"), r#"{"index": 9}"#),
        ("POST", format!("/sessions/{id}/formulas/3/selection"), r#"{"index": 4}"#),
        ("POST", format!("/sessions/{id}/formulas/0/skip"), ""),
        ("POST", format!("/sessions/{id}/formulas/4/skip"), ""),
        ("POST", format!("/sessions/{id}/export"), r#"{"dobrackets_style": "plain_parens"}"#),
    ] {
        let out = call(&app, method, &uri, body).await;
        let short: String = out.chars().take(160).collect();
        println!("{method} {uri} {body}\n  {short}");
    }
}
