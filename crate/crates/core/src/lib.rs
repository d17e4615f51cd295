//! Discrete-variable proximal causal inference.
//!
//! * [`graph`]: causal DAGs, d-separation and the graphical identification checks.
//! * [`dgp`]: binary structural-equation simulators with exact enumeration.
//! * [`estimators`]: proximal and backdoor g-formulas, OLS baseline, diagnostics.
//! * [`experiments`]: seeded replication studies and their CSV output.

pub mod config;
pub mod dgp;
pub mod estimators;
pub mod experiments;
pub mod graph;
pub mod seed;
pub mod table;

pub use dgp::{Dataset, DeltaPattern, DgpSpec, GraphId, StructuralModel};
pub use estimators::{EstimateReport, Method, ProbModel};
pub use experiments::{ExperimentConfig, Study, StudyOutput};
pub use graph::{CausalGraph, CriteriaReport, NodeId, NodeKind, RoleLabeling};
pub use table::JointTable;
