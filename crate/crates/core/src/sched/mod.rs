//! Offline list scheduling and on-arrival scheduling over the reservation
//! store.
//!
//! Every task is booked as an aligned chain of four reservations: a hop on
//! the main conveyor, the station's input conveyor, a machine of the
//! station, and a hold in the station buffer that starts the instant
//! machining ends. Buffer holds are booked at `max_dwell` and shrunk once
//! every successor's transport start is known.

mod offline;
mod online;
mod placement;
mod priority;
mod select;
mod slot;

pub use offline::{default_horizon, rollback_workflow, schedule_batch, BatchOutcome};
pub use online::{schedule_on_arrival, schedule_on_arrival_shared};
pub use placement::earliest_completion_bound;
pub use priority::{priority_key, station_load, PriorityKey};
pub use select::{select_resources_ds, select_resources_is, ds_candidates, IsChoice, NoFeasibleCombo};
pub use slot::{find_task_slot, ChainSlot, SlotWindow};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::domain::{CpWorkflow, ResourceId, TaskId, Time, WorkflowId};
use crate::store::{Leg, Reservation};

/// Order in which ready tasks are taken from the list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PriorityStrategy {
    /// Closest deadline: earliest absolute deadline first.
    Cd,
    /// Relatively closest deadline: smallest slack-to-remaining-work ratio first.
    Rcd,
    /// Least utilization: task whose station machine pool is least loaded first.
    Lu,
    /// Most utilization: most loaded station first.
    Mu,
}

impl PriorityStrategy {
    pub const ALL: [PriorityStrategy; 4] =
        [PriorityStrategy::Cd, PriorityStrategy::Rcd, PriorityStrategy::Lu, PriorityStrategy::Mu];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorityStrategy::Cd => "cd",
            PriorityStrategy::Rcd => "rcd",
            PriorityStrategy::Lu => "lu",
            PriorityStrategy::Mu => "mu",
        }
    }
}

impl fmt::Display for PriorityStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorityStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cd" => Ok(PriorityStrategy::Cd),
            "rcd" => Ok(PriorityStrategy::Rcd),
            "lu" => Ok(PriorityStrategy::Lu),
            "mu" => Ok(PriorityStrategy::Mu),
            other => Err(format!("unknown priority strategy {other:?}")),
        }
    }
}

/// Weights of the integrated-selection cost. `alpha + beta` must be 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl IsWeights {
    pub fn new(alpha: f64) -> Option<Self> {
        (0.0..=1.0).contains(&alpha).then_some(IsWeights { alpha, beta: 1.0 - alpha })
    }
}

impl Default for IsWeights {
    fn default() -> Self {
        IsWeights { alpha: 0.7, beta: 0.3 }
    }
}

/// How the machine, conveyors and buffer of a task are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SelectionStrategy {
    /// Detached: machine first, then the most available conveyors and buffer.
    Ds,
    /// Integrated: every combination scored jointly.
    Is(IsWeights),
}

impl SelectionStrategy {
    pub fn is_default() -> Self {
        SelectionStrategy::Is(IsWeights::default())
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionStrategy::Ds => "ds",
            SelectionStrategy::Is(_) => "is",
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ds" => Ok(SelectionStrategy::Ds),
            "is" => Ok(SelectionStrategy::is_default()),
            other => Err(format!("unknown selection strategy {other:?}")),
        }
    }
}

/// Resources one task passes through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceCombo {
    pub machine: ResourceId,
    pub station_conveyor: ResourceId,
    pub main_conveyor: ResourceId,
    pub buffer: ResourceId,
}

/// The four committed reservations of one task.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReservationChain {
    pub transport_main: Reservation,
    pub transport_station: Reservation,
    pub machining: Reservation,
    pub buffering: Reservation,
}

impl ReservationChain {
    pub fn legs(&self) -> [&Reservation; 4] {
        [&self.transport_main, &self.transport_station, &self.machining, &self.buffering]
    }

    pub fn leg(&self, leg: Leg) -> &Reservation {
        match leg {
            Leg::TransportMain => &self.transport_main,
            Leg::TransportStation => &self.transport_station,
            Leg::Machining => &self.machining,
            Leg::Buffering => &self.buffering,
        }
    }

    pub(crate) fn leg_mut(&mut self, leg: Leg) -> &mut Reservation {
        match leg {
            Leg::TransportMain => &mut self.transport_main,
            Leg::TransportStation => &mut self.transport_station,
            Leg::Machining => &mut self.machining,
            Leg::Buffering => &mut self.buffering,
        }
    }

    pub fn start(&self) -> Time {
        self.transport_main.interval.start
    }

    pub fn machining_end(&self) -> Time {
        self.machining.interval.end
    }
}

/// An accepted workflow together with its reservations.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutableWorkflow {
    pub workflow: CpWorkflow,
    pub chains: BTreeMap<TaskId, ReservationChain>,
    /// First transport start.
    pub planned_start: Time,
    /// Latest machining end.
    pub completion: Time,
}

impl ExecutableWorkflow {
    pub fn id(&self) -> WorkflowId {
        self.workflow.id
    }

    pub fn waiting(&self) -> Time {
        self.planned_start - self.workflow.arrival
    }

    pub fn execution(&self) -> Time {
        self.completion - self.planned_start
    }

    /// `(task, leg, resource, interval)` rows with reservation ids dropped.
    pub fn layout(&self) -> Vec<(TaskId, Leg, ResourceId, crate::domain::Interval)> {
        self.chains
            .iter()
            .flat_map(|(&t, c)| c.legs().into_iter().map(move |r| (t, r.owner.leg, r.resource, r.interval)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    DeadlineInfeasible,
    NoResourceSlot,
    DwellWindowExceeded,
    Invalid(String),
}

impl RejectReason {
    pub fn as_str(&self) -> &str {
        match self {
            RejectReason::DeadlineInfeasible => "deadline-infeasible",
            RejectReason::NoResourceSlot => "no-resource-slot",
            RejectReason::DwellWindowExceeded => "dwell-window-exceeded",
            RejectReason::Invalid(_) => "invalid",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Invalid(why) => write!(f, "invalid: {why}"),
            other => f.write_str(other.as_str()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub workflow: WorkflowId,
    pub task: Option<TaskId>,
    pub reason: RejectReason,
}
