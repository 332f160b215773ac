mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use common::*;
use hdcg_cli::rating::{presentation_order, router, Store};
use serde_json::{json, Value};

fn app(dir: &std::path::Path) -> (axum::Router, Arc<Store>) {
    let store = Arc::new(Store::open(dir).unwrap());
    (router(store.clone()), store)
}

fn ranking(next: &Value) -> Vec<String> {
    next["sample"]["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["candidate_id"].as_str().unwrap().to_string())
        .collect()
}

#[tokio::test]
async fn full_session_flow() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "set", 4);
    let (app, store) = app(dir.path());

    let r = call(&app, "POST", "/sessions", Some(session_request("set", 3, "r1", 5))).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let id = r.json()["session_id"].as_str().unwrap().to_string();
    assert_eq!(r.json()["n_samples"], 3);

    let first = call(&app, "GET", &format!("/sessions/{id}/next"), None).await.json();
    assert_eq!(first["sample"]["index"], 0);
    assert_eq!(first["schema"], "hdcg.rating.v1");
    let again = call(&app, "GET", &format!("/sessions/{id}/next"), None).await.json();
    assert_eq!(first, again);

    let sample_id = first["sample"]["sample_id"].as_str().unwrap().to_string();
    let mut bad = ranking(&first);
    bad[1] = bad[0].clone();
    let r = call(&app, "POST", &format!("/sessions/{id}/ratings"), Some(json!({"schema": "hdcg.rating.v1", "sample_id": sample_id, "ranking": bad}))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let body = json!({"schema": "hdcg.rating.v1", "sample_id": sample_id, "ranking": ranking(&first)});
    let r = call(&app, "POST", &format!("/sessions/{id}/ratings"), Some(body.clone())).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["completed"], 1);
    let r = call(&app, "POST", &format!("/sessions/{id}/ratings"), Some(body)).await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    let second = call(&app, "GET", &format!("/sessions/{id}/next"), None).await.json();
    assert_eq!(second["sample"]["index"], 1);
    for _ in 1..3 {
        let n = call(&app, "GET", &format!("/sessions/{id}/next"), None).await.json();
        let body = json!({"schema": "hdcg.rating.v1", "sample_id": n["sample"]["sample_id"], "ranking": ranking(&n)});
        assert_eq!(call(&app, "POST", &format!("/sessions/{id}/ratings"), Some(body)).await.status, StatusCode::OK);
    }
    let done = call(&app, "GET", &format!("/sessions/{id}/next"), None).await.json();
    assert_eq!(done["done"], true);
    assert_eq!(done["completed"], 3);
    assert!(done["sample"].is_null());

    let res = call(&app, "GET", &format!("/results?sessions={id}"), None).await.json();
    let per = &res["per_rater"]["r1"];
    for m in METHODS {
        assert_eq!(per[m].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum::<u64>(), 3);
    }
    let firsts: u64 = res["first_place"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(firsts, 3);
    assert_eq!(res["completed"]["r1"], 3);
    drop(store);
}

#[tokio::test]
async fn errors_have_classes() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "set", 2);
    let (app, _) = app(dir.path());
    assert_eq!(call(&app, "GET", "/sessions/nope/next", None).await.status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/images/abc", None).await.status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/results?sessions=nope", None).await.status, StatusCode::NOT_FOUND);
    let mut req = session_request("set", 2, "r", 0);
    req["schema"] = json!("v0");
    assert_eq!(call(&app, "POST", "/sessions", Some(req)).await.status, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "POST", "/sessions", Some(session_request("set", 3, "r", 0))).await.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(call(&app, "POST", "/sessions", Some(session_request("../x", 1, "r", 0))).await.status, StatusCode::UNPROCESSABLE_ENTITY);
    std::fs::remove_file(dir.path().join("set/bm3d/img001.png")).unwrap();
    let r = call(&app, "POST", "/sessions", Some(session_request("set", 2, "r", 0))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(String::from_utf8_lossy(&r.bytes).contains("missing image"));
}

#[tokio::test]
async fn same_seed_same_orders() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "set", 6);
    let (app, store) = app(dir.path());
    let a = call(&app, "POST", "/sessions", Some(session_request("set", 6, "r", 11))).await.json();
    let b = call(&app, "POST", "/sessions", Some(session_request("set", 6, "r", 11))).await.json();
    let sa = store.session(a["session_id"].as_str().unwrap()).unwrap();
    let sb = store.session(b["session_id"].as_str().unwrap()).unwrap();
    assert_ne!(sa.session_id, sb.session_id);
    let orders = |s: &hdcg_cli::rating::Session| s.samples.iter().map(|x| (x.reference_id.clone(), x.presentation_order.clone())).collect::<Vec<_>>();
    assert_eq!(orders(&sa), orders(&sb));
}

#[tokio::test]
async fn served_images_match_hashes() {
    use sha2::Digest;
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "set", 1);
    let (app, _) = app(dir.path());
    let id = call(&app, "POST", "/sessions", Some(session_request("set", 1, "r", 0))).await.json()["session_id"].as_str().unwrap().to_string();
    let next = call(&app, "GET", &format!("/sessions/{id}/next"), None).await.json();
    let url = next["sample"]["reference_url"].as_str().unwrap();
    let img = call(&app, "GET", url, None).await;
    assert_eq!(img.status, StatusCode::OK);
    assert_eq!(format!("/images/{}", hex::encode(sha2::Sha256::digest(&img.bytes))), url);
}

#[test]
fn fairness_of_three_way_orders() {
    let mut counts = std::collections::HashMap::new();
    for i in 0..10_000 {
        *counts.entry(presentation_order(2024, i, 3)).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 6);
    for (order, c) in counts {
        let f = c as f64 / 10_000.0;
        assert!((f - 1.0 / 6.0).abs() <= 0.02, "{order:?}: {f}");
    }
}

#[tokio::test]
async fn aggregation_is_additive() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "set", 3);
    let (app, store) = app(dir.path());
    let mut ids = Vec::new();
    for (rater, seed) in [("a", 1), ("b", 2)] {
        let id = call(&app, "POST", "/sessions", Some(session_request("set", 3, rater, seed))).await.json()["session_id"].as_str().unwrap().to_string();
        for _ in 0..3 {
            let n = call(&app, "GET", &format!("/sessions/{id}/next"), None).await.json();
            let body = json!({"schema": "hdcg.rating.v1", "sample_id": n["sample"]["sample_id"], "ranking": ranking(&n)});
            call(&app, "POST", &format!("/sessions/{id}/ratings"), Some(body)).await;
        }
        ids.push(id);
    }
    let one = store.aggregate(&ids[..1]).unwrap();
    let two = store.aggregate(&ids[1..]).unwrap();
    let both = store.aggregate(&ids).unwrap();
    for m in METHODS {
        let f = |r: &hdcg_cli::rating::AggregateResult| r.first_place.get(m).copied().unwrap_or(0);
        assert_eq!(f(&one) + f(&two), f(&both));
    }
    assert_eq!(both.completed["a"] + both.completed["b"], 6);
}
