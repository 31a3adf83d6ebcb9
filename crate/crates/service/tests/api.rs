use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use emblem_core::corpus::write_csv;
use emblem_core::synthetic::{message_corpus, MessageCorpusSpec};
use emblem_service::{router, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    _dir: tempfile::TempDir,
    path: std::path::PathBuf,
    app: Router,
}

impl Harness {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().to_path_buf();
        let app = router(Arc::new(Store::open(&path).unwrap()));
        Self { _dir: dir, path, app }
    }

    fn restart(&mut self) {
        self.app = router(Arc::new(Store::open(&self.path).unwrap()));
    }

    async fn send(&self, req: Request<Body>) -> (StatusCode, Vec<u8>) {
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        let (s, b) = self.send(Request::get(uri).body(Body::empty()).unwrap()).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn get_text(&self, uri: &str) -> (StatusCode, String) {
        let (s, b) = self.send(Request::get(uri).body(Body::empty()).unwrap()).await;
        (s, String::from_utf8(b).unwrap())
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        let req = Request::post(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        let (s, b) = self.send(req).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn upload_raw(&self, csv: &str) -> (StatusCode, Value) {
        let req = Request::post("/corpora").header("content-type", "text/csv").body(Body::from(csv.to_string())).unwrap();
        let (s, b) = self.send(req).await;
        (s, serde_json::from_slice(&b).unwrap())
    }

    async fn upload_multipart(&self, csv: &str, schema: Option<&str>) -> (StatusCode, Value) {
        let boundary = "XBOUNDARYX";
        let mut body = format!(
            "--{boundary}\r\nContent-Disposition: form-data; name=\"csv\"; filename=\"c.csv\"\r\nContent-Type: text/csv\r\n\r\n{csv}\r\n"
        );
        if let Some(s) = schema {
            body += &format!("--{boundary}\r\nContent-Disposition: form-data; name=\"schema\"\r\n\r\n{s}\r\n");
        }
        body += &format!("--{boundary}--\r\n");
        let req = Request::post("/corpora")
            .header("content-type", format!("multipart/form-data; boundary={boundary}"))
            .body(Body::from(body))
            .unwrap();
        let (s, b) = self.send(req).await;
        (s, serde_json::from_slice(&b).unwrap())
    }

    async fn session(&self, corpus_id: &str, params: Option<Value>) -> String {
        let mut body = json!({ "corpus_id": corpus_id });
        if let Some(p) = params {
            body["params"] = p;
        }
        let (s, v) = self.post("/sessions", body).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v["session_id"].as_str().unwrap().to_string()
    }

    async fn label(&self, sid: &str, id: &str, fixing: bool) -> (StatusCode, Value) {
        self.post(&format!("/sessions/{sid}/labels"), json!({ "commit_id": id, "is_fixing": fixing })).await
    }

    async fn next_id(&self, sid: &str) -> Option<String> {
        let (s, v) = self.get(&format!("/sessions/{sid}/next?n=1")).await;
        if s == StatusCode::GONE {
            return None;
        }
        assert_eq!(s, StatusCode::OK, "{v}");
        v["candidates"][0]["commit_id"].as_str().map(str::to_string)
    }
}

fn synthetic_csv(commits: usize, seed: u64) -> (String, BTreeMap<String, bool>) {
    let spec = MessageCorpusSpec { commits, ..Default::default() };
    let (records, truth) = message_corpus(&spec, seed);
    let mut buf = Vec::new();
    write_csv(&mut buf, &records).unwrap();
    (String::from_utf8(buf).unwrap(), truth)
}

fn three_rows() -> String {
    let (csv, _) = synthetic_csv(3, 1);
    csv
}

#[tokio::test]
async fn health_is_ok() {
    let h = Harness::new();
    let (s, v) = h.get("/health").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
}

#[tokio::test]
async fn upload_is_content_addressed() {
    let h = Harness::new();
    let (s, a) = h.upload_multipart(&three_rows(), None).await;
    assert_eq!(s, StatusCode::OK, "{a}");
    assert_eq!(a["n_commits"], 3);
    assert_eq!(a["n_releases"], 1);
    let (_, b) = h.upload_multipart(&three_rows(), None).await;
    assert_eq!(a["corpus_id"], b["corpus_id"]);
    let (s, c) = h.upload_raw(&three_rows()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(a["corpus_id"], c["corpus_id"]);
}

#[tokio::test]
async fn missing_column_is_bad_request() {
    let h = Harness::new();
    let csv = three_rows().replacen("commit_message", "msg", 1);
    let (s, v) = h.upload_multipart(&csv, None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "bad_request");
    assert!(v["message"].as_str().unwrap().contains("commit_message"), "{v}");
}

#[tokio::test]
async fn schema_part_maps_columns() {
    let h = Harness::new();
    let csv = three_rows().replacen("commit_message", "msg", 1);
    let (s, v) = h.upload_multipart(&csv, Some(r#"{"commit_message":"msg"}"#)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["n_commits"], 3);
}

#[tokio::test]
async fn session_defaults_are_echoed_and_unknown_corpus_is_404() {
    let h = Harness::new();
    let (_, c) = h.upload_raw(&three_rows()).await;
    let (s, v) = h.post("/sessions", json!({ "corpus_id": c["corpus_id"] })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["params"]["n1"], 4000);
    assert_eq!(v["params"]["n2"], 1);
    assert_eq!(v["params"]["n3"], 30);
    assert_eq!(v["params"]["n4"], 0.95);
    let (s, v) = h.post("/sessions", json!({ "corpus_id": "nope" })).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
    let (s, _) = h.get("/sessions/nope/status").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_params_are_bad_request() {
    let h = Harness::new();
    let (_, c) = h.upload_raw(&three_rows()).await;
    let (s, v) = h.post("/sessions", json!({ "corpus_id": c["corpus_id"], "params": { "n4": 1.5 } })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");
}

#[tokio::test]
async fn next_is_repeatable_and_starts_random() {
    let h = Harness::new();
    let (csv, _) = synthetic_csv(200, 2);
    let (_, c) = h.upload_raw(&csv).await;
    let sid = h.session(c["corpus_id"].as_str().unwrap(), None).await;
    let (s, a) = h.get(&format!("/sessions/{sid}/next?n=1")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(a["phase"], "random");
    assert_eq!(a["candidates"].as_array().unwrap().len(), 1);
    assert!(a["candidates"][0]["features"]["LA"].is_number(), "{a}");
    for _ in 0..3 {
        assert_eq!(h.get(&format!("/sessions/{sid}/next?n=1")).await.1, a);
    }
    let (_, five) = h.get(&format!("/sessions/{sid}/next?n=5")).await;
    assert_eq!(five["candidates"].as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn first_positive_flips_phase_and_duplicates_conflict() {
    let h = Harness::new();
    let (csv, _) = synthetic_csv(100, 3);
    let (_, c) = h.upload_raw(&csv).await;
    let sid = h.session(c["corpus_id"].as_str().unwrap(), None).await;
    let id = h.next_id(&sid).await.unwrap();
    let (s, v) = h.label(&sid, &id, true).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["seq"], 1);
    assert_eq!(v["phase"], "uncertainty");
    assert_eq!(v["should_stop"], false);
    let (s, v) = h.label(&sid, &id, false).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "conflict");
    let (s, v) = h.label(&sid, "no-such-commit", false).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
}

#[tokio::test]
async fn undo_restores_state_and_allows_relabel() {
    let h = Harness::new();
    let (csv, truth) = synthetic_csv(150, 4);
    let (_, c) = h.upload_raw(&csv).await;
    let sid = h.session(c["corpus_id"].as_str().unwrap(), None).await;
    let (s, v) = h.post(&format!("/sessions/{sid}/undo"), json!({})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "bad_request");

    for _ in 0..10 {
        let id = h.next_id(&sid).await.unwrap();
        h.label(&sid, &id, truth[&id]).await;
    }
    let before = h.get(&format!("/sessions/{sid}/status")).await.1;
    let next_before = h.get(&format!("/sessions/{sid}/next?n=3")).await.1;
    let id = h.next_id(&sid).await.unwrap();
    let (_, l) = h.label(&sid, &id, true).await;
    assert_eq!(l["seq"], 11);
    let (s, u) = h.post(&format!("/sessions/{sid}/undo"), json!({})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(u["seq"], 12);
    assert_eq!(u["cancelled"], 11);
    assert_eq!(h.get(&format!("/sessions/{sid}/status")).await.1, before);
    assert_eq!(h.get(&format!("/sessions/{sid}/next?n=3")).await.1, next_before);
    let (s, l) = h.label(&sid, &id, false).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(l["seq"], 13);
}

#[tokio::test]
async fn fraction_read_after_220_of_1000() {
    let h = Harness::new();
    let (csv, truth) = synthetic_csv(1000, 5);
    let (_, c) = h.upload_raw(&csv).await;
    // n3 high enough that the session never stops early
    let sid = h.session(c["corpus_id"].as_str().unwrap(), Some(json!({ "n3": 500 }))).await;
    let (_, fresh) = h.get(&format!("/sessions/{sid}/status")).await;
    assert_eq!(fresh["fraction_read"], 0.0);
    for _ in 0..220 {
        let id = h.next_id(&sid).await.unwrap();
        h.label(&sid, &id, truth[&id]).await;
    }
    let (_, st) = h.get(&format!("/sessions/{sid}/status")).await;
    assert_eq!(st["counts"]["labelled"], 220);
    assert_eq!(st["counts"]["total"], 1000);
    assert!((st["fraction_read"].as_f64().unwrap() - 0.22).abs() < 1e-12);
}

#[tokio::test]
async fn oracle_session_reaches_certainty_then_stops() {
    let h = Harness::new();
    let (csv, truth) = synthetic_csv(1000, 6);
    let (_, c) = h.upload_raw(&csv).await;
    let sid = h.session(c["corpus_id"].as_str().unwrap(), None).await;
    let mut positives = 0;
    let mut saw_certainty = false;
    let mut stopped = false;
    while let Some(id) = h.next_id(&sid).await {
        let (s, v) = h.label(&sid, &id, truth[&id]).await;
        assert_eq!(s, StatusCode::OK);
        positives += usize::from(truth[&id]);
        if positives >= 30 && !v["should_stop"].as_bool().unwrap() {
            assert_eq!(v["phase"], "certainty");
            saw_certainty = true;
        }
        if v["should_stop"].as_bool().unwrap() {
            stopped = true;
            break;
        }
    }
    assert!(saw_certainty && stopped);
    let (_, st) = h.get(&format!("/sessions/{sid}/status")).await;
    assert_eq!(st["should_stop"], true);
    assert_eq!(st["phase"], "stopped");
    let (s, n) = h.get(&format!("/sessions/{sid}/next?n=1")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(n["phase"], "stopped");
    assert!(n["candidates"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn fully_labelled_corpus_is_exhausted() {
    let h = Harness::new();
    let (_, c) = h.upload_raw(&three_rows()).await;
    let sid = h.session(c["corpus_id"].as_str().unwrap(), None).await;
    let mut first = true;
    while let Some(id) = h.next_id(&sid).await {
        h.label(&sid, &id, first).await;
        first = false;
    }
    let (s, v) = h.get(&format!("/sessions/{sid}/next?n=1")).await;
    assert_eq!(s, StatusCode::GONE);
    assert_eq!(v["code"], "exhausted");
}

#[tokio::test]
async fn export_matches_journal_after_undo() {
    let h = Harness::new();
    let (csv, truth) = synthetic_csv(100, 7);
    let (_, c) = h.upload_raw(&csv).await;
    let sid = h.session(c["corpus_id"].as_str().unwrap(), None).await;
    let id = h.next_id(&sid).await.unwrap();
    h.label(&sid, &id, true).await;
    h.post(&format!("/sessions/{sid}/undo"), json!({})).await;
    let (_, v) = h.get(&format!("/sessions/{sid}/export?format=json")).await;
    assert!(v.as_array().unwrap().is_empty());

    for _ in 0..5 {
        let id = h.next_id(&sid).await.unwrap();
        h.label(&sid, &id, truth[&id]).await;
    }
    let (_, json_rows) = h.get(&format!("/sessions/{sid}/export?format=json")).await;
    let (s, text) = h.get_text(&format!("/sessions/{sid}/export?format=csv")).await;
    assert_eq!(s, StatusCode::OK);
    let from_json: BTreeMap<String, bool> = json_rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["commit_id"].as_str().unwrap().to_string(), r["label"].as_bool().unwrap()))
        .collect();
    let from_csv = emblem_core::labels::read_labels(text.as_bytes()).unwrap();
    assert_eq!(from_json.len(), 5);
    assert_eq!(from_json, from_csv);
    let (s, _) = h.get(&format!("/sessions/{sid}/export?format=xml")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn restart_replays_identical_state() {
    let mut h = Harness::new();
    let (csv, truth) = synthetic_csv(300, 8);
    let (_, c) = h.upload_raw(&csv).await;
    let sid = h.session(c["corpus_id"].as_str().unwrap(), None).await;
    for i in 0..40 {
        let id = h.next_id(&sid).await.unwrap();
        h.label(&sid, &id, truth[&id]).await;
        if i % 13 == 12 {
            h.post(&format!("/sessions/{sid}/undo"), json!({})).await;
        }
    }
    let status = h.get(&format!("/sessions/{sid}/status")).await.1;
    let export = h.get_text(&format!("/sessions/{sid}/export?format=csv")).await.1;
    let next = h.get(&format!("/sessions/{sid}/next?n=5")).await.1;
    h.restart();
    assert_eq!(h.get(&format!("/sessions/{sid}/status")).await.1, status);
    assert_eq!(h.get_text(&format!("/sessions/{sid}/export?format=csv")).await.1, export);
    assert_eq!(h.get(&format!("/sessions/{sid}/next?n=5")).await.1, next);
    let id = h.next_id(&sid).await.unwrap();
    let (_, l) = h.label(&sid, &id, truth[&id]).await;
    assert_eq!(l["seq"], 44);
}
