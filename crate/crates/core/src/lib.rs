//! Continuous-time simulation of online scheduling on machines with
//! different convex power functions, minimizing flow time plus energy.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baseline;
pub mod cli;
pub mod error;
pub mod model;
pub mod power;
pub mod quad;
pub mod report;
pub mod sim;
pub mod unweighted;
pub mod verify;
pub mod weighted;
pub mod workload;

pub use error::{Error, Result};
pub use model::{Instance, Job, JobId, MachineState, Metrics, Mode, TraceEvent};
pub use power::{PowerFunction, PowerSpec};
pub use sim::{Assignment, AssignmentMap, Discipline, Simulation};
pub use unweighted::UnweightedSchedulerConfig;
pub use weighted::WeightedSchedulerConfig;
