//! Sessions and ratings persisted as newline-delimited JSON, with a
//! content-addressed image directory.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::session::{
    aggregate, presentation_order, validate_ranking, AggregateResult, Candidate, CreateSessionRequest, RatingRecord,
    Sample, Session, SubmitRequest,
};
use super::SCHEMA;

pub const LOG_FILE: &str = "ratings.ndjson";
pub const IMAGE_DIR: &str = "images";

#[derive(Debug, Error)]
pub enum RatingError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("corrupt rating log: {0}")]
    Corrupt(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RatingError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Entry {
    Session { schema: String, session: Session },
    Rating { schema: String, record: RatingRecord },
}

/// Everything reconstructed from the log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct State {
    pub sessions: BTreeMap<String, Arc<Session>>,
    /// Ratings per session, in submission order.
    pub ratings: BTreeMap<String, Vec<RatingRecord>>,
}

impl State {
    fn apply(&mut self, entry: Entry) -> Result<()> {
        match entry {
            Entry::Session { session, .. } => {
                self.ratings.entry(session.session_id.clone()).or_default();
                self.sessions.insert(session.session_id.clone(), Arc::new(session));
            }
            Entry::Rating { record, .. } => {
                let list = self
                    .ratings
                    .get_mut(&record.session_id)
                    .ok_or_else(|| RatingError::Corrupt(format!("rating for unknown session {}", record.session_id)))?;
                list.push(record);
            }
        }
        Ok(())
    }

    fn rated(&self, session_id: &str) -> HashSet<&str> {
        self.ratings
            .get(session_id)
            .map(|v| v.iter().map(|r| r.sample_id.as_str()).collect())
            .unwrap_or_default()
    }

    /// Index of the earliest sample without a rating.
    pub fn pending(&self, session: &Session) -> Option<usize> {
        let done = self.rated(&session.session_id);
        session.samples.iter().position(|s| !done.contains(s.sample_id.as_str()))
    }

    pub fn completed(&self, session_id: &str) -> usize {
        self.ratings.get(session_id).map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub candidate_id: String,
    pub image_url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleView {
    pub sample_id: String,
    pub index: usize,
    pub reference_url: String,
    pub candidates: Vec<CandidateView>,
}

/// Response of `next`: the pending sample, or `done` with completion stats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextResponse {
    pub schema: String,
    pub session_id: String,
    pub done: bool,
    pub completed: usize,
    pub total: usize,
    pub sample: Option<SampleView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub schema: String,
    pub session_id: String,
    pub n_samples: usize,
    pub n_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitAck {
    pub schema: String,
    pub accepted: bool,
    pub completed: usize,
    pub total: usize,
    pub done: bool,
}

/// Rating store rooted at a data directory.
///
/// Writers are serialized through the log mutex; readers take cheap
/// snapshots of `Arc<Session>` under a read lock.
pub struct Store {
    root: PathBuf,
    state: RwLock<State>,
    log: Mutex<File>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn check_schema(schema: &str) -> Result<()> {
    if schema != SCHEMA {
        return Err(RatingError::BadRequest(format!("unsupported schema {schema:?}, expected {SCHEMA:?}")));
    }
    Ok(())
}

fn safe_relative(name: &str) -> Result<&Path> {
    let p = Path::new(name);
    if name.is_empty() || !p.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(RatingError::Validation(format!("{name:?} is not a plain relative path")));
    }
    Ok(p)
}

pub fn is_content_hash(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

pub fn image_url(hash: &str) -> String {
    format!("/images/{hash}")
}

impl Store {
    /// Opens (or creates) the store and replays its log. A torn final line
    /// from an interrupted write is truncated away.
    pub fn open(root: impl AsRef<Path>) -> Result<Store> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join(IMAGE_DIR))?;
        let path = root.join(LOG_FILE);
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(&path)?;
        let mut state = State::default();
        let mut good_len = 0u64;
        {
            let mut reader = BufReader::new(&file);
            let mut line = String::new();
            let mut lineno = 0;
            loop {
                line.clear();
                let n = reader.read_line(&mut line)?;
                if n == 0 {
                    break;
                }
                lineno += 1;
                if !line.ends_with('\n') {
                    tracing::warn!(line = lineno, "dropping incomplete final log line");
                    break;
                }
                good_len += n as u64;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: Entry = serde_json::from_str(&line)
                    .map_err(|e| RatingError::Corrupt(format!("{}:{lineno}: {e}", path.display())))?;
                state.apply(entry)?;
            }
        }
        if file.metadata()?.len() != good_len {
            file.set_len(good_len)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok(Store {
            root,
            state: RwLock::new(state),
            log: Mutex::new(file),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Copy of the replayable state.
    pub fn snapshot(&self) -> State {
        self.state.read().expect("state lock").clone()
    }

    fn append(&self, file: &mut File, entry: &Entry) -> Result<()> {
        let mut line = serde_json::to_vec(entry).expect("entries serialize");
        line.push(b'\n');
        file.write_all(&line)?;
        file.sync_data()?;
        Ok(())
    }

    fn store_image(&self, src: &Path) -> Result<String> {
        let bytes = fs::read(src).map_err(|e| RatingError::Validation(format!("missing image {}: {e}", src.display())))?;
        let hash = hex::encode(Sha256::digest(&bytes));
        let dest = self.root.join(IMAGE_DIR).join(format!("{hash}.png"));
        if !dest.exists() {
            let tmp = dest.with_extension(format!("tmp{}", std::process::id()));
            fs::write(&tmp, &bytes)?;
            fs::rename(&tmp, &dest)?;
        }
        Ok(hash)
    }

    pub fn image_path(&self, hash: &str) -> Option<PathBuf> {
        if !is_content_hash(hash) {
            return None;
        }
        let p = self.root.join(IMAGE_DIR).join(format!("{hash}.png"));
        p.is_file().then_some(p)
    }

    pub fn create_session(&self, req: &CreateSessionRequest) -> Result<SessionCreated> {
        check_schema(&req.schema)?;
        if req.methods.is_empty() {
            return Err(RatingError::Validation("methods list is empty".into()));
        }
        if req.n_samples == 0 {
            return Err(RatingError::Validation("n_samples must be >= 1".into()));
        }
        if req.rater_id.trim().is_empty() {
            return Err(RatingError::Validation("rater_id is empty".into()));
        }
        let mut uniq = HashSet::new();
        for m in &req.methods {
            safe_relative(m)?;
            if !uniq.insert(m) {
                return Err(RatingError::Validation(format!("method {m:?} listed twice")));
            }
        }
        let dataset = self.root.join(safe_relative(&req.dataset)?);
        let ref_dir = dataset.join(safe_relative(&req.reference)?);
        let mut stems: Vec<String> = fs::read_dir(&ref_dir)
            .map_err(|e| RatingError::Validation(format!("reference directory {}: {e}", ref_dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
            .collect();
        stems.sort();
        if stems.len() < req.n_samples {
            return Err(RatingError::Validation(format!(
                "requested {} samples, dataset has {}",
                req.n_samples,
                stems.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        rng.set_stream(u64::MAX);
        stems.shuffle(&mut rng);
        stems.truncate(req.n_samples);

        let mut used = HashSet::new();
        let mut fresh_id = |rng: &mut ChaCha8Rng| loop {
            let id = format!("{:012x}", rng.random::<u64>() >> 16);
            if used.insert(id.clone()) && !req.methods.iter().any(|m| id.contains(m.as_str())) {
                return id;
            }
        };
        let mut samples = Vec::with_capacity(stems.len());
        for (index, stem) in stems.iter().enumerate() {
            let reference_ref = self.store_image(&ref_dir.join(format!("{stem}.png")))?;
            let mut candidates = Vec::with_capacity(req.methods.len());
            for m in &req.methods {
                let image_ref = self.store_image(&dataset.join(m).join(format!("{stem}.png")))?;
                candidates.push(Candidate {
                    candidate_id: fresh_id(&mut rng),
                    hidden_method_label: m.clone(),
                    image_ref,
                });
            }
            samples.push(Sample {
                sample_id: format!("s{index:05}"),
                reference_id: stem.clone(),
                reference_ref,
                presentation_order: presentation_order(req.seed, index, candidates.len()),
                candidates,
            });
        }
        let session = Session {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            rater_id: req.rater_id.clone(),
            created_at: now(),
            dataset: req.dataset.clone(),
            seed: req.seed,
            methods: req.methods.clone(),
            samples,
        };
        let created = SessionCreated {
            schema: SCHEMA.into(),
            session_id: session.session_id.clone(),
            n_samples: session.samples.len(),
            n_candidates: req.methods.len(),
        };
        let entry = Entry::Session {
            schema: SCHEMA.into(),
            session,
        };
        let mut log = self.log.lock().expect("log lock");
        self.append(&mut log, &entry)?;
        self.state.write().expect("state lock").apply(entry)?;
        Ok(created)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>> {
        self.state
            .read()
            .expect("state lock")
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| RatingError::NotFound(format!("session {id}")))
    }

    pub fn next_sample(&self, id: &str) -> Result<NextResponse> {
        let state = self.state.read().expect("state lock");
        let session = state
            .sessions
            .get(id)
            .ok_or_else(|| RatingError::NotFound(format!("session {id}")))?;
        let sample = state.pending(session).map(|index| {
            let s = &session.samples[index];
            SampleView {
                sample_id: s.sample_id.clone(),
                index,
                reference_url: image_url(&s.reference_ref),
                candidates: s
                    .presentation_order
                    .iter()
                    .map(|&i| CandidateView {
                        candidate_id: s.candidates[i].candidate_id.clone(),
                        image_url: image_url(&s.candidates[i].image_ref),
                    })
                    .collect(),
            }
        });
        Ok(NextResponse {
            schema: SCHEMA.into(),
            session_id: id.to_string(),
            done: sample.is_none(),
            completed: state.completed(id),
            total: session.samples.len(),
            sample,
        })
    }

    pub fn submit_rating(&self, id: &str, req: &SubmitRequest) -> Result<SubmitAck> {
        check_schema(&req.schema)?;
        let mut log = self.log.lock().expect("log lock");
        let session = self.session(id)?;
        let (index, sample) = session
            .sample(&req.sample_id)
            .ok_or_else(|| RatingError::Validation(format!("unknown sample {:?}", req.sample_id)))?;
        if let Some(r) = &req.rater_id {
            if r != &session.rater_id {
                return Err(RatingError::Validation(format!("rater {r:?} does not own this session")));
            }
        }
        {
            let state = self.state.read().expect("state lock");
            if state.rated(id).contains(req.sample_id.as_str()) {
                return Err(RatingError::Conflict(format!("sample {} already rated", req.sample_id)));
            }
            if state.pending(&session) != Some(index) {
                return Err(RatingError::Validation(format!("sample {} is not the pending sample", req.sample_id)));
            }
        }
        validate_ranking(sample, &req.ranking).map_err(RatingError::Validation)?;
        let entry = Entry::Rating {
            schema: SCHEMA.into(),
            record: RatingRecord {
                session_id: id.to_string(),
                sample_id: req.sample_id.clone(),
                rater_id: session.rater_id.clone(),
                ranking: req.ranking.clone(),
                submitted_at: now(),
            },
        };
        self.append(&mut log, &entry)?;
        let mut state = self.state.write().expect("state lock");
        state.apply(entry)?;
        let completed = state.completed(id);
        Ok(SubmitAck {
            schema: SCHEMA.into(),
            accepted: true,
            completed,
            total: session.samples.len(),
            done: completed == session.samples.len(),
        })
    }

    pub fn aggregate(&self, ids: &[String]) -> Result<AggregateResult> {
        let state = self.state.read().expect("state lock");
        let mut items = Vec::with_capacity(ids.len());
        for id in ids {
            let s = state
                .sessions
                .get(id)
                .ok_or_else(|| RatingError::NotFound(format!("session {id}")))?;
            items.push((s.as_ref(), state.ratings[id].as_slice()));
        }
        Ok(aggregate(items))
    }
}
