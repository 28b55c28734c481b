use num_rational::Ratio;
use std::collections::BTreeSet;

use crate::domain::{remaining_critical_path, CpWorkflow, Plant, StationLayout, Task, TaskId, Time, WorkflowId};
use crate::store::ReservationStore;

use super::select::load_window;
use super::PriorityStrategy;

/// Sort key of a ready task; the smallest key is scheduled first. Ties on
/// the strategy value fall back to workflow id, then task id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PriorityKey {
    pub value: Ratio<i128>,
    pub workflow: WorkflowId,
    pub task: TaskId,
}

/// Fraction of the station's machine capacity booked over `[now, horizon)`.
pub fn station_load(store: &ReservationStore, station: &StationLayout, now: Time, horizon: Time) -> Ratio<i128> {
    let window = load_window(now, horizon);
    let held: u64 = station.machines.iter().map(|&m| store.table(m).held_ticks(window)).sum();
    Ratio::new(held as i128, station.machines.len() as i128 * window.len() as i128)
}

pub(crate) fn key_with_load(
    task: &Task,
    workflow: &CpWorkflow,
    done: &BTreeSet<TaskId>,
    strategy: PriorityStrategy,
    now: Time,
    load: impl FnOnce() -> Ratio<i128>,
) -> PriorityKey {
    let value = match strategy {
        PriorityStrategy::Cd => Ratio::from_integer(workflow.deadline as i128),
        PriorityStrategy::Rcd => {
            let slack = workflow.deadline as i128 - now as i128;
            let work = remaining_critical_path(workflow, done).max(1) as i128;
            Ratio::new(slack, work)
        }
        PriorityStrategy::Lu => load(),
        PriorityStrategy::Mu => -load(),
    };
    PriorityKey { value, workflow: workflow.id, task: task.id }
}

/// Priority of a ready task under `strategy`.
///
/// - CD: the workflow's absolute deadline.
/// - RCD: `(deadline - now) / remaining critical path`.
/// - LU: machine-pool load of the task's station over `[now, horizon)`.
/// - MU: the negated LU value.
#[allow(clippy::too_many_arguments)]
pub fn priority_key(
    task: &Task,
    workflow: &CpWorkflow,
    done: &BTreeSet<TaskId>,
    store: &ReservationStore,
    plant: &Plant,
    strategy: PriorityStrategy,
    now: Time,
    horizon: Time,
) -> PriorityKey {
    key_with_load(task, workflow, done, strategy, now, || match plant.station(&task.station) {
        Some(station) => station_load(store, station, now, horizon),
        None => Ratio::from_integer(0),
    })
}
