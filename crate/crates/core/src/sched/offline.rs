use num_rational::Ratio;

use crate::domain::{root_tasks, validate_workflow, CpWorkflow, Plant, TaskId, Time, WorkflowId};
use crate::store::ReservationStore;

use super::placement::{earliest_completion_bound, WorkflowProgress};
use super::priority::{key_with_load, station_load, PriorityKey};
use super::{ExecutableWorkflow, PriorityStrategy, RejectReason, Rejection, SelectionStrategy};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchOutcome {
    /// Accepted workflows in ascending id order.
    pub accepted: Vec<ExecutableWorkflow>,
    /// Rejections in ascending workflow id order.
    pub rejected: Vec<Rejection>,
}

/// Latest deadline in the batch plus the longest single-task chain.
pub fn default_horizon(workflows: &[CpWorkflow], plant: &Plant) -> Time {
    let deadline = workflows.iter().map(|w| w.deadline).max().unwrap_or(0);
    let longest = workflows.iter().flat_map(|w| w.tasks.iter().map(|t| t.duration)).max().unwrap_or(0);
    deadline + plant.max_chain_len(longest)
}

/// Drops every reservation of `workflow`.
pub fn rollback_workflow(store: &mut ReservationStore, workflow: WorkflowId) -> usize {
    store.release(workflow, None)
}

enum Status<'w> {
    Active(WorkflowProgress<'w>),
    Finished,
}

/// Offline list scheduling of a batch whose workflows are all known up front.
///
/// The ready list starts with every workflow's root tasks. Each round pops
/// the ready task with the smallest [`PriorityKey`], books it with the
/// chosen selection strategy, and adds the successors that became ready.
/// A task that cannot be booked rejects its whole workflow: the workflow's
/// reservations are released and its other ready tasks leave the list,
/// while every other workflow is left as it was.
pub fn schedule_batch(
    workflows: &[CpWorkflow],
    store: &mut ReservationStore,
    plant: &Plant,
    priority: PriorityStrategy,
    selection: SelectionStrategy,
    horizon: Time,
) -> BatchOutcome {
    const NOW: Time = 0;
    let mut outcome = BatchOutcome::default();
    let mut states: Vec<Status<'_>> = Vec::with_capacity(workflows.len());
    let mut ready: Vec<(usize, TaskId)> = Vec::new();

    for (idx, w) in workflows.iter().enumerate() {
        let report = validate_workflow(w, plant);
        let reason = if !report.is_valid() {
            Some(RejectReason::Invalid(report.to_string()))
        } else if earliest_completion_bound(w, plant).is_none_or(|c| c > w.deadline) {
            Some(RejectReason::DeadlineInfeasible)
        } else {
            None
        };
        if let Some(reason) = reason {
            outcome.rejected.push(Rejection { workflow: w.id, task: None, reason });
            states.push(Status::Finished);
            continue;
        }
        ready.extend(root_tasks(w).into_iter().map(|t| (idx, t)));
        states.push(Status::Active(WorkflowProgress::new(w, NOW)));
    }

    while !ready.is_empty() {
        let loads: Vec<Ratio<i128>> = match priority {
            PriorityStrategy::Lu | PriorityStrategy::Mu => {
                plant.stations().iter().map(|s| station_load(store, s, NOW, horizon)).collect()
            }
            _ => Vec::new(),
        };
        let key_of = |&(idx, task_id): &(usize, TaskId)| -> PriorityKey {
            let Status::Active(progress) = &states[idx] else { unreachable!("finished workflows leave the list") };
            let w = progress.workflow;
            let task = w.task(task_id).expect("ready task exists");
            key_with_load(task, w, &progress.done, priority, NOW, || {
                let station = plant.stations().iter().position(|s| s.name == task.station).expect("validated");
                loads[station]
            })
        };
        let pick = (0..ready.len()).min_by_key(|&i| key_of(&ready[i])).expect("non-empty");
        let (idx, task_id) = ready.swap_remove(pick);

        let Status::Active(progress) = &mut states[idx] else { unreachable!() };
        match progress.place(task_id, store, plant, selection, horizon) {
            Ok(()) => {
                let w = progress.workflow;
                for succ in w.successors(task_id) {
                    let task = w.task(succ).expect("successor exists");
                    if task.predecessors.iter().all(|p| progress.done.contains(p)) {
                        ready.push((idx, succ));
                    }
                }
                if progress.is_complete() {
                    let Status::Active(done) = std::mem::replace(&mut states[idx], Status::Finished) else {
                        unreachable!()
                    };
                    outcome.accepted.push(done.into_executable());
                }
            }
            Err(reason) => {
                let id = progress.workflow.id;
                rollback_workflow(store, id);
                states[idx] = Status::Finished;
                ready.retain(|&(i, _)| i != idx);
                outcome.rejected.push(Rejection { workflow: id, task: Some(task_id), reason });
            }
        }
    }

    outcome.accepted.sort_by_key(|e| e.id());
    outcome.rejected.sort_by_key(|r| r.workflow);
    outcome
}
