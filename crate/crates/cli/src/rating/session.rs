use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SCHEMA;

fn schema() -> String {
    SCHEMA.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    #[serde(default = "schema")]
    pub schema: String,
    /// Directory under the data dir holding `<reference>/<id>.png` and
    /// `<method>/<id>.png`.
    pub dataset: String,
    pub methods: Vec<String>,
    pub n_samples: usize,
    pub rater_id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reference")]
    pub reference: String,
}

fn default_reference() -> String {
    "ln".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub candidate_id: String,
    pub hidden_method_label: String,
    /// Content hash of the image.
    pub image_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    /// File stem of the reference image in the dataset.
    pub reference_id: String,
    pub reference_ref: String,
    /// Candidates in method order.
    pub candidates: Vec<Candidate>,
    /// Indices into `candidates` in the order shown to the rater.
    pub presentation_order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub rater_id: String,
    pub created_at: String,
    pub dataset: String,
    pub seed: u64,
    pub methods: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Session {
    pub fn sample(&self, sample_id: &str) -> Option<(usize, &Sample)> {
        self.samples.iter().enumerate().find(|(_, s)| s.sample_id == sample_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitRequest {
    #[serde(default = "schema")]
    pub schema: String,
    pub sample_id: String,
    #[serde(default)]
    pub rater_id: Option<String>,
    /// Candidate ids, most similar to the reference first.
    pub ranking: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub session_id: String,
    pub sample_id: String,
    pub rater_id: String,
    pub ranking: Vec<String>,
    pub submitted_at: String,
}

/// Uniformly random order of `k` candidates for sample `index`.
pub fn presentation_order(seed: u64, index: usize, k: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    order
}

/// Checks that `ranking` is a permutation of the sample's candidate ids.
pub fn validate_ranking(sample: &Sample, ranking: &[String]) -> Result<(), String> {
    if ranking.len() != sample.candidates.len() {
        return Err(format!(
            "ranking has {} entries, sample has {} candidates",
            ranking.len(),
            sample.candidates.len()
        ));
    }
    let known: HashSet<&str> = sample.candidates.iter().map(|c| c.candidate_id.as_str()).collect();
    let mut seen = HashSet::new();
    for id in ranking {
        if !known.contains(id.as_str()) {
            return Err(format!("unknown candidate id {id:?}"));
        }
        if !seen.insert(id.as_str()) {
            return Err(format!("candidate id {id:?} repeated"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    #[serde(default = "schema")]
    pub schema: String,
    pub sessions: Vec<String>,
    /// rater -> method -> count per rank position (index 0 = most similar).
    pub per_rater: BTreeMap<String, BTreeMap<String, Vec<usize>>>,
    /// Completed samples per rater.
    pub completed: BTreeMap<String, usize>,
    pub first_place: BTreeMap<String, usize>,
}

/// Tallies rank positions per rater and method.
pub fn aggregate<'a>(items: impl IntoIterator<Item = (&'a Session, &'a [RatingRecord])>) -> AggregateResult {
    let mut out = AggregateResult {
        schema: schema(),
        ..AggregateResult::default()
    };
    for (session, ratings) in items {
        out.sessions.push(session.session_id.clone());
        let k = session.methods.len();
        for rec in ratings {
            let Some((_, sample)) = session.sample(&rec.sample_id) else {
                continue;
            };
            let per_method = out.per_rater.entry(rec.rater_id.clone()).or_default();
            for m in &session.methods {
                per_method.entry(m.clone()).or_insert_with(|| vec![0; k]);
            }
            for (pos, cid) in rec.ranking.iter().enumerate() {
                let Some(c) = sample.candidates.iter().find(|c| &c.candidate_id == cid) else {
                    continue;
                };
                let counts = per_method.get_mut(&c.hidden_method_label).expect("inserted above");
                if counts.len() <= pos {
                    counts.resize(pos + 1, 0);
                }
                counts[pos] += 1;
                if pos == 0 {
                    *out.first_place.entry(c.hidden_method_label.clone()).or_default() += 1;
                }
            }
            *out.completed.entry(rec.rater_id.clone()).or_default() += 1;
        }
    }
    out
}
