mod common;

use std::io::Write;

use common::*;
use hdcg_cli::rating::{CreateSessionRequest, Store, SubmitRequest};

fn request(n: usize, seed: u64) -> CreateSessionRequest {
    serde_json::from_value(session_request("set", n, "rater", seed)).unwrap()
}

fn rate_next(store: &Store, id: &str) {
    let next = store.next_sample(id).unwrap();
    let s = next.sample.unwrap();
    let mut ranking: Vec<String> = s.candidates.iter().map(|c| c.candidate_id.clone()).collect();
    ranking.reverse();
    store
        .submit_rating(id, &SubmitRequest { schema: "hdcg.rating.v1".into(), sample_id: s.sample_id, rater_id: None, ranking })
        .unwrap();
}

#[test]
fn replay_reconstructs_state() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "set", 4);
    let store = Store::open(dir.path()).unwrap();
    let a = store.create_session(&request(4, 1)).unwrap().session_id;
    let b = store.create_session(&request(3, 2)).unwrap().session_id;
    rate_next(&store, &a);
    rate_next(&store, &a);
    rate_next(&store, &b);
    let before = store.snapshot();
    let next_a = store.next_sample(&a).unwrap();
    drop(store);

    let reopened = Store::open(dir.path()).unwrap();
    assert_eq!(reopened.snapshot(), before);
    assert_eq!(reopened.next_sample(&a).unwrap(), next_a);
    rate_next(&reopened, &a);
    assert_eq!(reopened.next_sample(&a).unwrap().completed, 3);
}

#[test]
fn torn_final_line_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "set", 2);
    let store = Store::open(dir.path()).unwrap();
    let a = store.create_session(&request(2, 1)).unwrap().session_id;
    rate_next(&store, &a);
    let before = store.snapshot();
    drop(store);
    let log = dir.path().join("ratings.ndjson");
    std::fs::OpenOptions::new().append(true).open(&log).unwrap().write_all(b"{\"kind\":\"rating\",\"sch").unwrap();

    let reopened = Store::open(dir.path()).unwrap();
    assert_eq!(reopened.snapshot(), before);
    rate_next(&reopened, &a);
    drop(reopened);
    let again = Store::open(dir.path()).unwrap();
    assert_eq!(again.next_sample(&a).unwrap().completed, 2);
}

#[test]
fn corrupt_middle_line_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ratings.ndjson"), "not json\n").unwrap();
    assert!(Store::open(dir.path()).is_err());
}
