//! Configuration-driven experiment runner behind the `slip-lab` binary.

mod config;
mod run;

pub use config::{
    AcceptanceSection, DataSection, EigenSection, ExperimentConfig, ExperimentKind, MeshSection, ScanSection,
    SchemeSection, SweepModel, SweepSection,
};
pub use run::{run, Outcome, RunError, RunOptions, FAILED_MARKER};
