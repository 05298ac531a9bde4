pub mod bounds;
pub mod classify;
pub mod consensus;
pub mod error;
pub mod hull;
pub mod lp;
pub mod mvee;
pub mod network;
pub mod oracle;
pub mod pool;
pub mod program;
pub mod removal;
pub mod scenarios;
pub(crate) mod serde_ext;
pub mod tol;

pub use consensus::{run_acc, run_qvcc, run_vcc, EngineConfig, Protocol, RunReport, Simulation, StepOrder};
pub use error::{Error, Result};
pub use network::{gen_chain, gen_geometric, DirectedGraph};
pub use pool::{Constraint, ConstraintId, ConstraintPool, Family};
pub use program::{active_set, solve, BoxDomain, ConvexProgram, Solution, Status};
pub use bounds::{epsilon_bound, min_samples, min_samples_exact, phi};
pub use removal::{remove_constraints, RemovalReport};
pub use scenarios::{run_experiment, ExperimentResult, ScenarioKind, ScenarioSpec, Topology};
