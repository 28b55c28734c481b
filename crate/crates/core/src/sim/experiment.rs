use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::domain::{CpWorkflow, Plant, Time, WorkflowId};
use crate::sched::{
    schedule_batch, schedule_on_arrival, ExecutableWorkflow, PriorityStrategy, Rejection, SelectionStrategy,
};
use crate::store::ReservationStore;

use super::event::{execute, Event, EventKind, EventQueue, ExecutionTrace};
use super::verify::{verify_trace, TraceViolation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Offline,
    Online,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Offline => "offline",
            Mode::Online => "online",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "offline" => Ok(Mode::Offline),
            "online" => Ok(Mode::Online),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// Outcome metrics of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub mode: Mode,
    /// Absent for online runs, which take workflows in arrival order.
    pub priority: Option<PriorityStrategy>,
    pub selection: SelectionStrategy,
    pub seed: u64,
    pub submitted: usize,
    pub accepted: usize,
    pub assignment_rate: f64,
    /// Mean of first transport start minus arrival; `None` if nothing was accepted.
    pub avg_waiting: Option<f64>,
    /// Mean of final machining end minus first transport start.
    pub avg_execution: Option<f64>,
}

impl MetricsReport {
    /// Metrics computed from the trace events rather than the schedules.
    pub fn from_trace(
        trace: &ExecutionTrace,
        submitted: usize,
        mode: Mode,
        priority: Option<PriorityStrategy>,
        selection: SelectionStrategy,
        seed: u64,
    ) -> Self {
        let mut first_start: BTreeMap<WorkflowId, Time> = BTreeMap::new();
        let mut completion: BTreeMap<WorkflowId, Time> = BTreeMap::new();
        for e in &trace.events {
            match e.kind {
                EventKind::LegStart => {
                    first_start.entry(e.workflow).and_modify(|t| *t = (*t).min(e.time)).or_insert(e.time);
                }
                EventKind::WorkflowComplete => {
                    completion.insert(e.workflow, e.time);
                }
                _ => {}
            }
        }
        let accepted = trace.workflows.len();
        let (mut waiting, mut execution) = (0u64, 0u64);
        for w in &trace.workflows {
            let start = first_start[&w.id];
            waiting += start - w.arrival;
            execution += completion[&w.id] - start;
        }
        let mean = |sum: u64| (accepted > 0).then(|| sum as f64 / accepted as f64);
        MetricsReport {
            mode,
            priority,
            selection,
            seed,
            submitted,
            accepted,
            assignment_rate: if submitted == 0 { 0.0 } else { accepted as f64 / submitted as f64 },
            avg_waiting: mean(waiting),
            avg_execution: mean(execution),
        }
    }
}

#[derive(Debug, Error)]
#[error("verification found {} violation(s), first: {}", .0.len(), .0[0])]
pub struct VerificationFailed(pub Vec<TraceViolation>);

/// A finished experiment: metrics plus the schedules behind them.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub report: MetricsReport,
    pub accepted: Vec<ExecutableWorkflow>,
    pub rejected: Vec<Rejection>,
    pub trace: ExecutionTrace,
}

fn finish(
    plant: &Plant,
    submitted: usize,
    accepted: Vec<ExecutableWorkflow>,
    rejected: Vec<Rejection>,
    label: (Mode, Option<PriorityStrategy>, SelectionStrategy, u64),
) -> Result<ExperimentRun, VerificationFailed> {
    let trace = execute(&accepted);
    let violations = verify_trace(&trace, plant);
    if !violations.is_empty() {
        return Err(VerificationFailed(violations));
    }
    let (mode, priority, selection, seed) = label;
    let report = MetricsReport::from_trace(&trace, submitted, mode, priority, selection, seed);
    Ok(ExperimentRun { report, accepted, rejected, trace })
}

/// Offline batch scheduling, replay, verification and metrics. `seed` only
/// labels the report.
pub fn run_offline_experiment(
    plant: &Plant,
    workflows: &[CpWorkflow],
    priority: PriorityStrategy,
    selection: SelectionStrategy,
    horizon: Time,
    seed: u64,
) -> Result<ExperimentRun, VerificationFailed> {
    let mut store = ReservationStore::new(plant);
    let out = schedule_batch(workflows, &mut store, plant, priority, selection, horizon);
    finish(plant, workflows.len(), out.accepted, out.rejected, (Mode::Offline, Some(priority), selection, seed))
}

/// Event-driven online run: each arrival event triggers on-arrival
/// scheduling against the reservations made so far.
pub fn run_online_experiment(
    plant: &Plant,
    workflows: &[CpWorkflow],
    selection: SelectionStrategy,
    horizon: Time,
    seed: u64,
) -> Result<ExperimentRun, VerificationFailed> {
    let mut queue = EventQueue::new();
    let by_id: BTreeMap<WorkflowId, &CpWorkflow> = workflows.iter().map(|w| (w.id, w)).collect();
    for w in workflows {
        queue.push(Event::workflow_event(w.arrival, EventKind::Arrival, w.id));
    }
    let mut store = ReservationStore::new(plant);
    let (mut accepted, mut rejected) = (Vec::new(), Vec::new());
    while let Some(event) = queue.pop() {
        let w = by_id[&event.workflow];
        match schedule_on_arrival(w, &mut store, plant, selection, event.time, horizon) {
            Ok(exec) => accepted.push(exec),
            Err(r) => rejected.push(r),
        }
    }
    accepted.sort_by_key(|e: &ExecutableWorkflow| e.id());
    rejected.sort_by_key(|r: &Rejection| r.workflow);
    finish(plant, workflows.len(), accepted, rejected, (Mode::Online, None, selection, seed))
}
