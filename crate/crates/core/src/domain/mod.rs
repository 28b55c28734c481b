//! Core data model: time, intervals, workflows and plant layout.

mod plant;
mod workflow;

pub use plant::{
    validate_plant, ConveyorSpec, MainConveyorSpec, Plant, PlantConfig, PlantError, Resource,
    ResourceId, ResourceKind, StationLayout, StationSpec, BufferSpec,
};
pub use workflow::{
    remaining_critical_path, ready_successors, root_tasks, topological_order, validate_workflow,
    CpWorkflow, Task, TaskId, ValidationReport, Violation, WorkflowId,
};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Simulation time in whole ticks. One tick is one second of plant time.
pub type Time = u64;

/// Half-open time interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: Time,
    pub end: Time,
}

impl Interval {
    /// Builds `[start, end)`. Returns `None` when the interval would be empty.
    pub fn new(start: Time, end: Time) -> Option<Self> {
        (end > start).then_some(Interval { start, end })
    }

    /// `[start, start + len)`; `len` must be positive.
    pub fn with_len(start: Time, len: Time) -> Self {
        debug_assert!(len > 0, "zero-length interval");
        Interval { start, end: start + len }
    }

    pub fn len(&self) -> Time {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn overlap_len(&self, other: &Interval) -> Time {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        hi.saturating_sub(lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}
