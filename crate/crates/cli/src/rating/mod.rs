//! Blind ranking service: sessions, an append-only rating log and the
//! HTTP API used by the rating UI.

pub mod api;
pub mod session;
pub mod store;

pub use api::{router, serve};
pub use session::{
    aggregate, presentation_order, AggregateResult, Candidate, CreateSessionRequest, RatingRecord, Sample, Session,
    SubmitRequest,
};
pub use store::{RatingError, Store};

/// Version tag carried by every JSON body and log line.
pub const SCHEMA: &str = "hdcg.rating.v1";
