//! Streaming video memory and retrieval.
//!
//! An ingestion pipeline turns a frame stream into a hierarchical memory:
//! online scene segmentation ([`segmenter`]) cuts the stream into partitions,
//! incremental clustering ([`clusterer`]) groups similar frames and picks one
//! representative per cluster, and those index frames are embedded
//! ([`embedding`]) and stored next to the raw frames ([`store`]). A querying
//! stage embeds natural-language queries into the same vector space and
//! samples query-relevant, diversity-preserving keyframes ([`retrieval`]) to
//! ship to a cloud reasoner, with an analytic latency simulator pricing the
//! edge-cloud split ([`harness`]).

pub mod clusterer;
pub mod config;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod imageio;
pub mod retrieval;
pub mod segmenter;
pub mod store;
pub mod types;

mod hashmix;

pub use config::{validate_config, PipelineConfig};
pub use error::{Error, Result};
