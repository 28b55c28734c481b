//! Discrete-event replay of committed schedules, an independent trace
//! verifier, and the offline/online experiment drivers.

mod event;
mod experiment;
mod verify;

pub use event::{execute, Event, EventKind, EventQueue, ExecutionTrace};
pub use experiment::{
    run_offline_experiment, run_online_experiment, ExperimentRun, MetricsReport, Mode, VerificationFailed,
};
pub use verify::{verify_trace, TraceViolation};
