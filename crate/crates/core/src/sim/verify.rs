//! Runtime re-check of an execution trace. Works from the events and the
//! plant description only; it shares no code with the reservation store.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::domain::{Plant, ResourceId, TaskId, Time, WorkflowId};
use crate::store::Leg;

use super::event::{EventKind, ExecutionTrace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceViolation {
    /// More simultaneous occupants than capacity, once per overload episode.
    Capacity { resource: ResourceId, time: Time, count: u32 },
    /// Consecutive legs of one task do not meet.
    Alignment { workflow: WorkflowId, task: TaskId, leg: Leg, expected: Time, actual: Time },
    /// A leg started twice, ended twice, or never ended.
    UnmatchedLeg { workflow: WorkflowId, task: TaskId, leg: Leg },
    /// A task has no record of one of its legs.
    MissingLeg { workflow: WorkflowId, task: TaskId, leg: Leg },
    /// A transport or machining leg whose length differs from its transit
    /// time or machining duration.
    Duration { workflow: WorkflowId, task: TaskId, leg: Leg, expected: Time, actual: Time },
    /// A leg used a resource that cannot serve it.
    WrongResource { workflow: WorkflowId, task: TaskId, leg: Leg, resource: ResourceId },
    /// A successor left before a predecessor finished, or after its part
    /// had outstayed the dwell window.
    Precedence { workflow: WorkflowId, task: TaskId, predecessor: TaskId },
    /// The predecessor's buffer hold ended before the successor picked it up.
    BufferGap { workflow: WorkflowId, task: TaskId, predecessor: TaskId },
    BufferTooLong { workflow: WorkflowId, task: TaskId, held: Time },
    StartBeforeArrival { workflow: WorkflowId, task: TaskId },
    DeadlineMiss { workflow: WorkflowId, completion: Time, deadline: Time },
    /// Completion event missing, repeated, or at the wrong instant.
    Completion { workflow: WorkflowId },
    UnknownWorkflow { workflow: WorkflowId },
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TraceViolation::*;
        match self {
            Capacity { resource, time, count } => {
                write!(f, "resource {} holds {count} parts at t={time}", resource.0)
            }
            Alignment { workflow, task, leg, expected, actual } => write!(
                f,
                "workflow {} task {} {leg} starts at {actual}, expected {expected}",
                workflow.0, task.0
            ),
            UnmatchedLeg { workflow, task, leg } => {
                write!(f, "workflow {} task {} {leg} has unmatched start/end", workflow.0, task.0)
            }
            Duration { workflow, task, leg, expected, actual } => write!(
                f,
                "workflow {} task {} {leg} lasts {actual} ticks, expected {expected}",
                workflow.0, task.0
            ),
            MissingLeg { workflow, task, leg } => write!(f, "workflow {} task {} lacks {leg}", workflow.0, task.0),
            WrongResource { workflow, task, leg, resource } => {
                write!(f, "workflow {} task {} {leg} on unsuitable resource {}", workflow.0, task.0, resource.0)
            }
            Precedence { workflow, task, predecessor } => write!(
                f,
                "workflow {} task {} leaves outside the window of predecessor {}",
                workflow.0, task.0, predecessor.0
            ),
            BufferGap { workflow, task, predecessor } => write!(
                f,
                "workflow {} predecessor {} left the buffer before task {} was picked up",
                workflow.0, predecessor.0, task.0
            ),
            BufferTooLong { workflow, task, held } => {
                write!(f, "workflow {} task {} buffered for {held} ticks", workflow.0, task.0)
            }
            StartBeforeArrival { workflow, task } => {
                write!(f, "workflow {} task {} starts before arrival", workflow.0, task.0)
            }
            DeadlineMiss { workflow, completion, deadline } => {
                write!(f, "workflow {} completes at {completion} after deadline {deadline}", workflow.0)
            }
            Completion { workflow } => write!(f, "workflow {} completion event is wrong", workflow.0),
            UnknownWorkflow { workflow } => write!(f, "events for unknown workflow {}", workflow.0),
        }
    }
}

type LegKey = (WorkflowId, TaskId, Leg);

#[derive(Default)]
struct Span {
    start: Option<Time>,
    end: Option<Time>,
    resource: Option<ResourceId>,
    broken: bool,
}

/// Checks capacity, leg alignment, resource suitability, precedence with
/// the dwell window, buffer holds, arrival and deadline, and completion
/// events. Returns every violation found; an empty list means the trace is
/// clean.
pub fn verify_trace(trace: &ExecutionTrace, plant: &Plant) -> Vec<TraceViolation> {
    let mut out = Vec::new();
    let mut spans: BTreeMap<LegKey, Span> = BTreeMap::new();
    let mut occupancy: HashMap<ResourceId, u32> = HashMap::new();
    let mut overloaded: HashMap<ResourceId, bool> = HashMap::new();
    let mut completions: BTreeMap<WorkflowId, Vec<Time>> = BTreeMap::new();

    let mut events = trace.events.clone();
    events.sort();
    for e in &events {
        match e.kind {
            EventKind::Arrival => {}
            EventKind::WorkflowComplete => completions.entry(e.workflow).or_default().push(e.time),
            EventKind::LegStart | EventKind::LegEnd => {
                let (Some(task), Some(leg), Some(resource)) = (e.task, e.leg, e.resource) else {
                    continue;
                };
                let span = spans.entry((e.workflow, task, leg)).or_default();
                let count = occupancy.entry(resource).or_insert(0);
                if e.kind == EventKind::LegStart {
                    if span.start.is_some() {
                        span.broken = true;
                    }
                    span.start = Some(e.time);
                    span.resource = Some(resource);
                    *count += 1;
                    let cap = plant.resources().get(resource.index()).map_or(0, |r| r.capacity);
                    let over = overloaded.entry(resource).or_insert(false);
                    if *count > cap && !*over {
                        out.push(TraceViolation::Capacity { resource, time: e.time, count: *count });
                    }
                    *over = *count > cap;
                } else {
                    if span.end.is_some() || span.start.is_none() || span.resource != Some(resource) {
                        span.broken = true;
                    }
                    span.end = Some(e.time);
                    *count = count.saturating_sub(1);
                    let cap = plant.resources().get(resource.index()).map_or(0, |r| r.capacity);
                    overloaded.insert(resource, *count > cap);
                }
            }
        }
    }
    for (&(workflow, task, leg), span) in &spans {
        if span.broken || span.start.is_none() || span.end.is_none() || span.end < span.start {
            out.push(TraceViolation::UnmatchedLeg { workflow, task, leg });
        }
    }

    let known: BTreeMap<WorkflowId, _> = trace.workflows.iter().map(|w| (w.id, w)).collect();
    for &(workflow, _, _) in spans.keys() {
        if !known.contains_key(&workflow) {
            out.push(TraceViolation::UnknownWorkflow { workflow });
        }
    }
    out.dedup();

    for w in &trace.workflows {
        let id = w.id;
        let leg_of = |task: TaskId, leg: Leg| spans.get(&(id, task, leg)).and_then(|s| Some((s.start?, s.end?, s.resource?)));
        let mut machining_end: BTreeMap<TaskId, Time> = BTreeMap::new();
        let mut complete = true;
        for t in &w.tasks {
            let station = plant.stations().iter().find(|s| s.name == t.station);
            let mut legs = Vec::with_capacity(4);
            for leg in Leg::ALL {
                match leg_of(t.id, leg) {
                    Some(l) => legs.push(l),
                    None => out.push(TraceViolation::MissingLeg { workflow: id, task: t.id, leg }),
                }
            }
            if legs.len() < 4 {
                complete = false;
                continue;
            }
            for (leg, &(_, _, resource)) in Leg::ALL.into_iter().zip(&legs) {
                let ok = station.is_some_and(|s| match leg {
                    Leg::TransportMain => resource == plant.main_conveyor(),
                    Leg::TransportStation => resource == s.conveyor,
                    Leg::Machining => s.machines.contains(&resource),
                    Leg::Buffering => resource == s.buffer,
                });
                if !ok {
                    out.push(TraceViolation::WrongResource { workflow: id, task: t.id, leg, resource });
                }
            }
            if let Some(s) = station {
                let expected = [plant.main_transit(), s.conveyor_transit, t.duration];
                for (i, expected) in expected.into_iter().enumerate() {
                    let actual = legs[i].1.saturating_sub(legs[i].0);
                    if actual != expected {
                        out.push(TraceViolation::Duration { workflow: id, task: t.id, leg: Leg::ALL[i], expected, actual });
                    }
                }
            }
            for i in 1..4 {
                let (expected, actual) = (legs[i - 1].1, legs[i].0);
                if expected != actual {
                    out.push(TraceViolation::Alignment { workflow: id, task: t.id, leg: Leg::ALL[i], expected, actual });
                }
            }
            if legs[0].0 < w.arrival {
                out.push(TraceViolation::StartBeforeArrival { workflow: id, task: t.id });
            }
            let held = legs[3].1.saturating_sub(legs[3].0);
            if held > plant.max_dwell() {
                out.push(TraceViolation::BufferTooLong { workflow: id, task: t.id, held });
            }
            machining_end.insert(t.id, legs[2].1);
        }
        if !complete {
            continue;
        }
        for t in &w.tasks {
            let leaves = leg_of(t.id, Leg::TransportMain).expect("checked").0;
            for &p in &t.predecessors {
                let Some(&pred_end) = machining_end.get(&p) else { continue };
                if leaves < pred_end || leaves > pred_end + plant.max_dwell() {
                    out.push(TraceViolation::Precedence { workflow: id, task: t.id, predecessor: p });
                }
                let hold_end = leg_of(p, Leg::Buffering).expect("checked").1;
                if hold_end < leaves {
                    out.push(TraceViolation::BufferGap { workflow: id, task: t.id, predecessor: p });
                }
            }
        }
        let completion = machining_end.values().copied().max().unwrap_or(w.arrival);
        if completion > w.deadline {
            out.push(TraceViolation::DeadlineMiss { workflow: id, completion, deadline: w.deadline });
        }
        if completions.get(&id).map(Vec::as_slice) != Some(&[completion][..]) {
            out.push(TraceViolation::Completion { workflow: id });
        }
    }
    out
}
