//! Advance-reservation scheduling of customized-product workflows on a
//! flexible manufacturing plant, with a discrete-event simulator to replay
//! and check the resulting schedules.

pub mod cli;
pub mod domain;
pub mod report;
pub mod sched;
pub mod sim;
pub mod store;
pub mod workload;
