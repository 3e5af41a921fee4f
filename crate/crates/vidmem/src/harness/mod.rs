//! End-to-end orchestration: stream sources, the ingestion pipeline, query
//! execution, the strategy/latency simulator, the real-time feasibility
//! check, and the reasoner backends.

pub mod bench;
pub mod feasibility;
pub mod ingest;
pub mod query;
pub mod reasoner;
pub mod source;

pub use bench::{full_upload_latency, simulate_strategies, BenchReport, Scenario, ScenarioQuery, Strategy};
pub use feasibility::{check_realtime_feasibility, fps_sweep, FeasibilityReport};
pub use ingest::{run_ingestion, IngestionReport};
pub use query::{run_query, QueryRecord, StrategyKind};
pub use reasoner::{Reasoner, ReasonerDescriptor, StubReasoner};
pub use source::{SceneSpec, StreamSourceSpec, SyntheticSpec};
