//! Experiment configuration, the paired Monte-Carlo packet loop, CSV output
//! and the validation suite.

#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
#[cfg(feature = "cli")]
pub mod output;
pub mod packet;
pub mod registry;
pub mod run;
pub mod validate;

pub use config::{AlgorithmSpec, ExperimentConfig, Sweep};
pub use packet::{generate_packet, run_receiver, Packet, PacketTrace};
pub use registry::{parse_algorithm_list, AlgorithmId};
pub use run::{run_condition, run_experiment, run_packet, run_sweep, AlgorithmResult, RunMetadata, RunResult};
pub use validate::{run_criterion, run_validation, CriterionOutcome, Tier, CRITERIA, QUICK_CRITERIA};
