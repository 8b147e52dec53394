//! IO, configuration and orchestration on top of `riskpipe-core`.

pub mod compare;
pub mod config;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod report;

pub use compare::{run_comparison, ComparisonReport};
pub use config::{ExperimentConfig, RawConfig};
pub use error::{PipelineError, Result};
pub use exec::Parallel;
pub use report::{emit_report, Format};
