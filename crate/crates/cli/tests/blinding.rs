//! Every byte the rating UI can receive is free of method names.

mod common;

use std::sync::Arc;

use common::*;
use hdcg_cli::rating::{router, Store};
use serde_json::json;

#[tokio::test]
async fn no_method_name_in_any_served_payload() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "set", 5);
    let store = Arc::new(Store::open(dir.path()).unwrap());
    let app = router(store);
    let mut served: Vec<Vec<u8>> = Vec::new();
    let created = call(&app, "POST", "/sessions", Some(session_request("set", 5, "r", 3))).await;
    served.push(created.bytes.clone());
    let id = created.json()["session_id"].as_str().unwrap().to_string();
    loop {
        let next = call(&app, "GET", &format!("/sessions/{id}/next"), None).await;
        served.push(next.bytes.clone());
        let v = next.json();
        if v["done"] == true {
            break;
        }
        let s = &v["sample"];
        served.push(call(&app, "GET", s["reference_url"].as_str().unwrap(), None).await.bytes);
        let mut ranking = Vec::new();
        for c in s["candidates"].as_array().unwrap() {
            served.push(call(&app, "GET", c["image_url"].as_str().unwrap(), None).await.bytes);
            ranking.push(c["candidate_id"].clone());
        }
        let ack = call(&app, "POST", &format!("/sessions/{id}/ratings"), Some(json!({"schema": "hdcg.rating.v1", "sample_id": s["sample_id"], "ranking": ranking}))).await;
        served.push(ack.bytes);
    }
    assert!(served.len() > 20);
    for payload in &served {
        for m in METHODS {
            assert!(!contains(payload, m), "method name {m:?} leaked");
            assert!(!contains(payload, &m.to_ascii_uppercase()));
        }
    }
}
