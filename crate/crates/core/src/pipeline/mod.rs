//! End-to-end orchestration: configuration, deprivation join, quadrant
//! categorisation, synthetic fixtures, output tables and run comparison.

mod compare;
mod config;
mod deprivation;
mod quadrants;
mod run;
mod synth;
mod table;

pub use compare::compare_runs;
pub use config::RunConfig;
pub use deprivation::{
    join_deprivation, load_deprivation, load_lookup, ChangeType, DeprivationJoin, LookupRow,
};
pub use quadrants::{categorize_quadrants, rank_percentiles, Quadrant, QuadrantRecord};
pub use run::{run_pipeline, RunOutcome, OUTPUT_FILES};
pub use synth::{generate_synthetic_city, SynthSpec};
pub use table::Table;

use std::fmt::Display;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Inputs or configuration failed validation.
    #[error("invalid input [{stage}]: {message}")]
    Input { stage: &'static str, message: String },
    /// A stage failed on valid inputs.
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl PipelineError {
    pub fn input(stage: &'static str, message: impl Display) -> Self {
        Self::Input {
            stage,
            message: message.to_string(),
        }
    }

    pub fn stage(stage: &'static str, message: impl Display) -> Self {
        Self::Stage {
            stage,
            message: message.to_string(),
        }
    }

    /// Process exit code: 2 for validation failures, 3 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input { .. } => 2,
            Self::Stage { .. } => 3,
        }
    }
}
