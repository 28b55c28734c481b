use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::domain::{CpWorkflow, ResourceId, TaskId, Time, WorkflowId};
use crate::sched::ExecutableWorkflow;
use crate::store::Leg;

/// Event kinds in processing order for equal timestamps: a resource is
/// freed before the next occupant takes it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    LegEnd,
    Arrival,
    LegStart,
    WorkflowComplete,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::LegEnd => "leg-end",
            EventKind::Arrival => "arrival",
            EventKind::LegStart => "leg-start",
            EventKind::WorkflowComplete => "workflow-complete",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One simulation event. Arrivals and completions carry only the workflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub time: Time,
    pub kind: EventKind,
    pub workflow: WorkflowId,
    pub task: Option<TaskId>,
    pub leg: Option<Leg>,
    pub resource: Option<ResourceId>,
}

impl Event {
    pub fn workflow_event(time: Time, kind: EventKind, workflow: WorkflowId) -> Self {
        Event { time, kind, workflow, task: None, leg: None, resource: None }
    }

    pub fn leg_event(time: Time, kind: EventKind, workflow: WorkflowId, task: TaskId, leg: Leg, resource: ResourceId) -> Self {
        Event { time, kind, workflow, task: Some(task), leg: Some(leg), resource: Some(resource) }
    }
}

/// Min-queue of events in `(time, kind, subject)` order.
#[derive(Clone, Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        self.heap.push(Reverse(event));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek().map(|Reverse(e)| e)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Time-ordered execution record plus the workflow definitions the
/// verifier checks it against.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExecutionTrace {
    pub workflows: Vec<CpWorkflow>,
    pub events: Vec<Event>,
}

/// Replays committed schedules: every reserved leg starts and ends exactly
/// at its reservation boundaries.
pub fn execute(schedules: &[ExecutableWorkflow]) -> ExecutionTrace {
    let mut queue = EventQueue::new();
    for s in schedules {
        let id = s.id();
        queue.push(Event::workflow_event(s.workflow.arrival, EventKind::Arrival, id));
        for (&task, chain) in &s.chains {
            for r in chain.legs() {
                queue.push(Event::leg_event(r.interval.start, EventKind::LegStart, id, task, r.owner.leg, r.resource));
                queue.push(Event::leg_event(r.interval.end, EventKind::LegEnd, id, task, r.owner.leg, r.resource));
            }
        }
        queue.push(Event::workflow_event(s.completion, EventKind::WorkflowComplete, id));
    }
    let mut events = Vec::with_capacity(queue.len());
    while let Some(e) = queue.pop() {
        events.push(e);
    }
    ExecutionTrace { workflows: schedules.iter().map(|s| s.workflow.clone()).collect(), events }
}
