#![allow(dead_code)]

use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use hdcg_core::io::BitDepth;
use hdcg_core::{save_bscan, BScan, Domain};
use http_body_util::BodyExt;
use ndarray::Array2;
use serde_json::Value;
use tower::ServiceExt;

pub const METHODS: [&str; 3] = ["ours", "bm3d", "wavelet"];

/// Writes `<root>/<dataset>/{ln,ours,bm3d,wavelet}/img<i>.png` with distinct
/// content per method.
pub fn write_dataset(root: &Path, dataset: &str, n: usize) {
    for (k, dir) in ["ln"].iter().chain(METHODS.iter()).enumerate() {
        let d = root.join(dataset).join(dir);
        std::fs::create_dir_all(&d).unwrap();
        for i in 0..n {
            let px = Array2::from_shape_fn((16, 16), |(y, x)| ((y * 16 + x + 7 * i + 31 * k) % 97) as f64 / 97.0);
            let img = BScan::new(px, Domain::LowNoise, "x").unwrap();
            save_bscan(d.join(format!("img{i:03}.png")), &img, BitDepth::Eight).unwrap();
        }
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap()
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Reply {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, bytes }
}

pub fn session_request(dataset: &str, n: usize, rater: &str, seed: u64) -> Value {
    serde_json::json!({
        "schema": "hdcg.rating.v1",
        "dataset": dataset,
        "methods": METHODS,
        "n_samples": n,
        "rater_id": rater,
        "seed": seed,
    })
}

pub fn contains(haystack: &[u8], needle: &str) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle.as_bytes())
}
