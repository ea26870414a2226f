#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub async fn call(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn call_json(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, serde_json::Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null))
}

/// Polls a job until it leaves pending/running; returns the progress values seen.
pub async fn wait_for_job(app: &Router, id: &str) -> (serde_json::Value, Vec<f64>) {
    let mut seen = Vec::new();
    for _ in 0..2000 {
        let (status, job) = call_json(app, Method::GET, &format!("/api/jobs/{id}"), Body::empty()).await;
        assert_eq!(status, StatusCode::OK);
        seen.push(job["progress"].as_f64().unwrap());
        match job["state"].as_str().unwrap() {
            "done" | "failed" => return (job, seen),
            _ => tokio::time::sleep(Duration::from_millis(5)).await,
        }
    }
    panic!("job {id} did not finish");
}

/// `POST /api/scan` body built from the fixture files.
pub fn scan_body(config: &str, towers: &str, terrain: Option<&str>) -> String {
    let mut body = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(config).unwrap(),
        "towers": towers,
    });
    if let Some(t) = terrain {
        body["terrain"] = serde_json::json!(t);
    }
    body.to_string()
}
