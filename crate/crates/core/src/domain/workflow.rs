use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use super::{Plant, Time};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorkflowId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for WorkflowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An atomic machining operation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    /// Station whose machines can perform the operation.
    pub station: String,
    /// Machining time in ticks.
    pub duration: Time,
    #[serde(default)]
    pub predecessors: Vec<TaskId>,
    /// Conditional-branch guard. Only accepted by the parser so that
    /// validation can reject it explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
}

impl Task {
    pub fn new(id: u32, station: impl Into<String>, duration: Time, predecessors: &[u32]) -> Self {
        Task {
            id: TaskId(id),
            station: station.into(),
            duration,
            predecessors: predecessors.iter().copied().map(TaskId).collect(),
            condition: None,
        }
    }
}

/// A customized-product order: a DAG of tasks plus arrival and deadline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpWorkflow {
    pub id: WorkflowId,
    pub arrival: Time,
    /// Absolute deadline for the final machining end.
    pub deadline: Time,
    pub tasks: Vec<Task>,
}

impl CpWorkflow {
    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Direct successors of `id`, ascending.
    pub fn successors(&self, id: TaskId) -> Vec<TaskId> {
        let mut out: Vec<TaskId> = self
            .tasks
            .iter()
            .filter(|t| t.predecessors.contains(&id))
            .map(|t| t.id)
            .collect();
        out.sort();
        out
    }

    pub fn is_terminal(&self, id: TaskId) -> bool {
        !self.tasks.iter().any(|t| t.predecessors.contains(&id))
    }

    pub fn task_ids(&self) -> BTreeSet<TaskId> {
        self.tasks.iter().map(|t| t.id).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyWorkflow,
    CycleDetected,
    DuplicateTask(TaskId),
    UnknownPredecessor { task: TaskId, predecessor: TaskId },
    UnknownStation { task: TaskId, station: String },
    ZeroDuration(TaskId),
    ConditionalUnsupported(TaskId),
    DeadlineNotAfterArrival { arrival: Time, deadline: Time },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyWorkflow => write!(f, "empty workflow"),
            Violation::CycleDetected => write!(f, "cycle detected"),
            Violation::DuplicateTask(t) => write!(f, "duplicate task id {t}"),
            Violation::UnknownPredecessor { task, predecessor } => {
                write!(f, "task {task} references unknown predecessor {predecessor}")
            }
            Violation::UnknownStation { task, station } => {
                write!(f, "task {task} requires unknown station {station:?}")
            }
            Violation::ZeroDuration(t) => write!(f, "task {t} has zero duration"),
            Violation::ConditionalUnsupported(t) => {
                write!(f, "task {t} carries a conditional branch, which is unsupported")
            }
            Violation::DeadlineNotAfterArrival { arrival, deadline } => {
                write!(f, "deadline {deadline} does not exceed arrival {arrival}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks workflow structure against the plant. Violations are collected,
/// never raised.
pub fn validate_workflow(w: &CpWorkflow, plant: &Plant) -> ValidationReport {
    let mut violations = Vec::new();
    if w.tasks.is_empty() {
        violations.push(Violation::EmptyWorkflow);
    }
    if w.deadline <= w.arrival {
        violations.push(Violation::DeadlineNotAfterArrival { arrival: w.arrival, deadline: w.deadline });
    }

    let mut seen = HashSet::new();
    for t in &w.tasks {
        if !seen.insert(t.id) {
            violations.push(Violation::DuplicateTask(t.id));
        }
    }
    for t in &w.tasks {
        if t.duration == 0 {
            violations.push(Violation::ZeroDuration(t.id));
        }
        if plant.station(&t.station).is_none() {
            violations.push(Violation::UnknownStation { task: t.id, station: t.station.clone() });
        }
        if t.condition.is_some() {
            violations.push(Violation::ConditionalUnsupported(t.id));
        }
        for p in &t.predecessors {
            if !seen.contains(p) {
                violations.push(Violation::UnknownPredecessor { task: t.id, predecessor: *p });
            }
        }
    }

    let dangling = violations.iter().any(|v| matches!(v, Violation::UnknownPredecessor { .. }));
    if !dangling && topological_order(w).len() != seen.len() {
        violations.push(Violation::CycleDetected);
    }
    ValidationReport { violations }
}

/// Tasks with no predecessors.
pub fn root_tasks(w: &CpWorkflow) -> BTreeSet<TaskId> {
    w.tasks.iter().filter(|t| t.predecessors.is_empty()).map(|t| t.id).collect()
}

/// Tasks outside `done` whose predecessors are all in `done`.
pub fn ready_successors(w: &CpWorkflow, done: &BTreeSet<TaskId>) -> BTreeSet<TaskId> {
    w.tasks
        .iter()
        .filter(|t| !done.contains(&t.id) && t.predecessors.iter().all(|p| done.contains(p)))
        .map(|t| t.id)
        .collect()
}

/// Kahn order with ties broken by ascending task id. Tasks on a cycle (or
/// behind an unresolvable predecessor) are omitted.
pub fn topological_order(w: &CpWorkflow) -> Vec<TaskId> {
    let mut indegree: BTreeMap<TaskId, usize> = BTreeMap::new();
    for t in &w.tasks {
        indegree.insert(t.id, t.predecessors.len());
    }
    let mut ready: BTreeSet<TaskId> =
        indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
    let mut order = Vec::with_capacity(w.tasks.len());
    while let Some(id) = ready.pop_first() {
        order.push(id);
        for t in &w.tasks {
            let hits = t.predecessors.iter().filter(|&&p| p == id).count();
            if hits > 0 {
                let d = indegree.get_mut(&t.id).expect("indexed above");
                *d -= hits;
                if *d == 0 {
                    ready.insert(t.id);
                }
            }
        }
    }
    order
}

/// Longest machining-time path through the tasks not yet in `done`.
/// Transport legs are not counted.
pub fn remaining_critical_path(w: &CpWorkflow, done: &BTreeSet<TaskId>) -> Time {
    let mut longest: BTreeMap<TaskId, Time> = BTreeMap::new();
    let mut best = 0;
    for id in topological_order(w) {
        if done.contains(&id) {
            continue;
        }
        let task = w.task(id).expect("ordered ids exist");
        let head = task.predecessors.iter().filter_map(|p| longest.get(p)).copied().max().unwrap_or(0);
        let here = head + task.duration;
        longest.insert(id, here);
        best = best.max(here);
    }
    best
}
