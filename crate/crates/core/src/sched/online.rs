use crate::domain::{topological_order, validate_workflow, CpWorkflow, Plant, Time};
use crate::store::{Leg, ReservationRequest, ReservationStore, SharedStore};

use super::placement::{earliest_completion_bound, WorkflowProgress};
use super::{ExecutableWorkflow, RejectReason, Rejection, SelectionStrategy};

/// Schedules one workflow the moment it arrives, against whatever the store
/// already holds. Tasks are booked in topological order (ties by task id)
/// with the same selection and slot search as the offline scheduler. If any
/// task fails the workflow's reservations are released, leaving the store as
/// it was before the call.
pub fn schedule_on_arrival(
    w: &CpWorkflow,
    store: &mut ReservationStore,
    plant: &Plant,
    selection: SelectionStrategy,
    now: Time,
    horizon: Time,
) -> Result<ExecutableWorkflow, Rejection> {
    let reject = |task, reason| Rejection { workflow: w.id, task, reason };
    let report = validate_workflow(w, plant);
    if !report.is_valid() {
        return Err(reject(None, RejectReason::Invalid(report.to_string())));
    }
    let release = w.arrival.max(now);
    let shifted_bound = earliest_completion_bound(w, plant).map(|c| c - w.arrival + release);
    if shifted_bound.is_none_or(|c| c > w.deadline) {
        return Err(reject(None, RejectReason::DeadlineInfeasible));
    }

    let mut progress = WorkflowProgress::new(w, now);
    for task_id in topological_order(w) {
        if let Err(reason) = progress.place(task_id, store, plant, selection, horizon) {
            store.release(w.id, None);
            return Err(reject(Some(task_id), reason));
        }
    }
    Ok(progress.into_executable())
}

/// On-arrival scheduling against a store shared with other schedulers.
///
/// The workflow is planned on a private snapshot and its final reservations
/// are offered to the shared store as one batch. If another scheduler took a
/// contested slot in the meantime the batch fails atomically and planning
/// restarts from a fresh snapshot, up to `max_attempts` times.
pub fn schedule_on_arrival_shared(
    w: &CpWorkflow,
    shared: &SharedStore,
    plant: &Plant,
    selection: SelectionStrategy,
    now: Time,
    horizon: Time,
    max_attempts: usize,
) -> Result<ExecutableWorkflow, Rejection> {
    for _ in 0..max_attempts {
        let mut snapshot = shared.snapshot();
        let planned = schedule_on_arrival(w, &mut snapshot, plant, selection, now, horizon)?;
        let batch: Vec<ReservationRequest> = planned
            .chains
            .values()
            .flat_map(|c| c.legs())
            .map(|r| ReservationRequest { resource: r.resource, interval: r.interval, owner: r.owner })
            .collect();
        let report = shared
            .commit_batch(&batch)
            .map_err(|e| Rejection { workflow: w.id, task: None, reason: RejectReason::Invalid(e.to_string()) })?;
        if report.is_success() {
            let mut committed = planned;
            let mut ids = report.ids.into_iter();
            for chain in committed.chains.values_mut() {
                for leg in Leg::ALL {
                    chain.leg_mut(leg).id = ids.next().expect("one id per request");
                }
            }
            return Ok(committed);
        }
    }
    Err(Rejection { workflow: w.id, task: None, reason: RejectReason::NoResourceSlot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Interval, Task, TaskId, WorkflowId};
    use crate::sched::{default_horizon, schedule_batch, PriorityStrategy};
    use crate::workload::{case_study_config, case_study_plant, product_a_workflow};

    #[test]
    fn arrival_into_empty_plant_is_shifted_offline_schedule() {
        let plant = case_study_plant();
        let mut base = product_a_workflow();
        base.deadline = 2000;
        let mut offline_store = ReservationStore::new(&plant);
        let horizon = 10_000;
        let offline = schedule_batch(
            std::slice::from_ref(&base),
            &mut offline_store,
            &plant,
            PriorityStrategy::Cd,
            SelectionStrategy::is_default(),
            horizon,
        );
        let mut arriving = base.clone();
        arriving.arrival = 100;
        arriving.deadline += 100;
        let mut store = ReservationStore::new(&plant);
        let online =
            schedule_on_arrival(&arriving, &mut store, &plant, SelectionStrategy::is_default(), 100, horizon).unwrap();
        let shifted: Vec<_> = offline.accepted[0]
            .layout()
            .into_iter()
            .map(|(t, l, r, i)| (t, l, r, Interval::new(i.start + 100, i.end + 100).unwrap()))
            .collect();
        assert_eq!(online.layout(), shifted);
        assert_eq!(online.waiting(), 0);
    }

    #[test]
    fn impossible_deadline_leaves_store_untouched() {
        let plant = case_study_plant();
        let mut store = ReservationStore::new(&plant);
        let mut w = product_a_workflow();
        w.deadline = 500; // below the 550 critical path
        let before = store.clone();
        let err = schedule_on_arrival(&w, &mut store, &plant, SelectionStrategy::Ds, 0, 5000).unwrap_err();
        assert_eq!(err.reason, RejectReason::DeadlineInfeasible);
        assert_eq!(store, before);
    }

    #[test]
    fn late_failure_rolls_back_earlier_tasks() {
        let mut c = case_study_config();
        for s in &mut c.stations {
            s.machines.truncate(1);
        }
        let plant = Plant::new(c).unwrap();
        let mut store = ReservationStore::new(&plant);
        let blocker = CpWorkflow { id: WorkflowId(1), arrival: 0, deadline: 900, tasks: vec![Task::new(0, "B", 500, &[])] };
        schedule_on_arrival(&blocker, &mut store, &plant, SelectionStrategy::Ds, 0, 5000).unwrap();
        let before = store.clone();
        let w = CpWorkflow {
            id: WorkflowId(2),
            arrival: 0,
            deadline: 2000,
            tasks: vec![Task::new(0, "A", 20, &[]), Task::new(1, "B", 20, &[0])],
        };
        let err = schedule_on_arrival(&w, &mut store, &plant, SelectionStrategy::is_default(), 0, 5000).unwrap_err();
        assert_eq!(err.task, Some(TaskId(1)));
        assert_eq!(err.reason, RejectReason::DwellWindowExceeded);
        assert_eq!(store, before);
    }

    #[test]
    fn second_arrival_waits_for_sole_machine() {
        let mut c = case_study_config();
        for s in &mut c.stations {
            s.machines.truncate(1);
        }
        let plant = Plant::new(c).unwrap();
        let mut store = ReservationStore::new(&plant);
        let first = CpWorkflow { id: WorkflowId(1), arrival: 0, deadline: 1000, tasks: vec![Task::new(0, "C", 100, &[])] };
        let second = CpWorkflow { id: WorkflowId(2), arrival: 10, deadline: 1000, tasks: vec![Task::new(0, "C", 50, &[])] };
        let a = schedule_on_arrival(&first, &mut store, &plant, SelectionStrategy::Ds, 0, 5000).unwrap();
        let b = schedule_on_arrival(&second, &mut store, &plant, SelectionStrategy::Ds, 10, 5000).unwrap();
        let first_machining = a.chains[&TaskId(0)].machining.interval;
        let second_machining = b.chains[&TaskId(0)].machining.interval;
        assert_eq!(first_machining, Interval::new(15, 115).unwrap());
        assert_eq!(second_machining, Interval::new(115, 165).unwrap());
        // Earlier bookings never move.
        assert_eq!(store.by_owner(&a.chains[&TaskId(0)].machining.owner).unwrap().interval, first_machining);
    }

    #[test]
    fn shared_schedulers_never_double_book() {
        let plant = case_study_plant();
        let shared = SharedStore::new(ReservationStore::new(&plant));
        let workflows: Vec<CpWorkflow> = (0..40)
            .map(|i| CpWorkflow {
                id: WorkflowId(i),
                arrival: 0,
                deadline: 5000,
                tasks: vec![Task::new(0, "A", 60, &[]), Task::new(1, "B", 40, &[0])],
            })
            .collect();
        let horizon = default_horizon(&workflows, &plant);
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = workflows
                .chunks(20)
                .map(|chunk| {
                    let shared = shared.clone();
                    let plant = &plant;
                    s.spawn(move || {
                        chunk
                            .iter()
                            .map(|w| {
                                schedule_on_arrival_shared(w, &shared, plant, SelectionStrategy::is_default(), 0, horizon, 50)
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        });
        let accepted = results.iter().filter(|r| r.is_ok()).count();
        let store = shared.snapshot();
        assert_eq!(store.len(), accepted * 8);
        for table in store.tables() {
            let mut points: Vec<Time> = table.entries().flat_map(|(_, i)| [i.start, i.end]).collect();
            points.sort();
            for p in points {
                let n = table.entries().filter(|(_, i)| i.start <= p && p < i.end).count();
                assert!(n as u32 <= table.capacity());
            }
        }
    }
}
