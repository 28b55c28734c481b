use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{CpWorkflow, Plant, StationLayout, Task, TaskId, Time};
use crate::store::{Leg, Owner, Reservation, ReservationRequest, ReservationStore};

use super::select::{ds_candidates, select_resources_is};
use super::slot::{find_task_slot, ChainSlot, SlotWindow};
use super::{ExecutableWorkflow, RejectReason, ReservationChain, SelectionStrategy};

/// Lower bound on completion of the whole workflow on an empty plant: the
/// longest path where every task costs its transport lead plus machining.
pub fn earliest_completion_bound(w: &CpWorkflow, plant: &Plant) -> Option<Time> {
    let mut finish: BTreeMap<TaskId, Time> = BTreeMap::new();
    for id in crate::domain::topological_order(w) {
        let task = w.task(id)?;
        let station = plant.station(&task.station)?;
        let ready = task.predecessors.iter().filter_map(|p| finish.get(p)).copied().max().unwrap_or(w.arrival);
        finish.insert(id, ready + plant.transport_lead(station) + task.duration);
    }
    finish.values().copied().max()
}

/// Per-workflow scheduling state shared by the offline and online schedulers.
pub(crate) struct WorkflowProgress<'w> {
    pub workflow: &'w CpWorkflow,
    pub chains: BTreeMap<TaskId, ReservationChain>,
    pub done: BTreeSet<TaskId>,
    /// Earliest instant a root task may start.
    release: Time,
}

impl<'w> WorkflowProgress<'w> {
    pub fn new(workflow: &'w CpWorkflow, now: Time) -> Self {
        let release = workflow.arrival.max(now);
        WorkflowProgress { workflow, chains: BTreeMap::new(), done: BTreeSet::new(), release }
    }

    pub fn is_complete(&self) -> bool {
        self.done.len() == self.workflow.tasks.len()
    }

    /// Placement bounds from the arrival (roots) or from predecessor
    /// machining ends and their buffer windows.
    fn window(&self, task: &Task, plant: &Plant) -> SlotWindow {
        if task.predecessors.is_empty() {
            return SlotWindow::new(self.release, self.workflow.deadline);
        }
        let ends = task.predecessors.iter().map(|p| self.chains[p].machining_end());
        let not_before = ends.clone().max().expect("non-empty");
        let latest = ends.min().expect("non-empty") + plant.max_dwell();
        SlotWindow { not_before, latest_start: Some(latest), deadline: self.workflow.deadline }
    }

    /// Books one ready task: selects resources, commits its chain, and shrinks
    /// buffer holds that are now settled.
    pub fn place(
        &mut self,
        task_id: TaskId,
        store: &mut ReservationStore,
        plant: &Plant,
        selection: SelectionStrategy,
        horizon: Time,
    ) -> Result<(), RejectReason> {
        let task = self.workflow.task(task_id).expect("task belongs to workflow");
        let station = plant
            .station(&task.station)
            .ok_or_else(|| RejectReason::Invalid(format!("unknown station {:?}", task.station)))?;
        let window = self.window(task, plant);
        if window.latest_start.is_some_and(|l| l < window.not_before) {
            return Err(RejectReason::DwellWindowExceeded);
        }

        let slot = match selection {
            SelectionStrategy::Ds => ds_candidates(task, plant, store, window.not_before, horizon)
                .into_iter()
                .find_map(|combo| find_task_slot(task, combo, window, store, plant)),
            SelectionStrategy::Is(weights) => {
                select_resources_is(task, plant, store, window, horizon, weights).ok().map(|c| c.slot)
            }
        };
        let Some(slot) = slot else {
            return Err(self.classify_failure(task, station, window, store, plant));
        };

        let chain = self.commit(task_id, slot, store)?;
        self.chains.insert(task_id, chain);
        self.done.insert(task_id);

        if self.workflow.is_terminal(task_id) {
            let end = chain.machining_end() + plant.unload_dwell();
            self.shrink_buffer(task_id, end, store);
        }
        for &pred in &task.predecessors {
            let succs = self.workflow.successors(pred);
            if succs.iter().all(|s| self.done.contains(s)) {
                let pred_end = self.chains[&pred].machining_end();
                let release = succs.iter().map(|s| self.chains[s].start()).max().expect("has successor");
                self.shrink_buffer(pred, release.max(pred_end + 1), store);
            }
        }
        Ok(())
    }

    fn commit(
        &self,
        task_id: TaskId,
        slot: ChainSlot,
        store: &mut ReservationStore,
    ) -> Result<ReservationChain, RejectReason> {
        let batch: Vec<ReservationRequest> = slot
            .legs()
            .iter()
            .map(|&(leg, resource, interval)| ReservationRequest {
                resource,
                interval,
                owner: Owner::new(self.workflow.id, task_id, leg),
            })
            .collect();
        let report = store.commit_batch(&batch).map_err(|e| RejectReason::Invalid(e.to_string()))?;
        if !report.is_success() {
            return Err(RejectReason::NoResourceSlot);
        }
        let r = |i: usize| Reservation {
            id: report.ids[i],
            resource: batch[i].resource,
            interval: batch[i].interval,
            owner: batch[i].owner,
        };
        Ok(ReservationChain { transport_main: r(0), transport_station: r(1), machining: r(2), buffering: r(3) })
    }

    fn shrink_buffer(&mut self, task_id: TaskId, new_end: Time, store: &mut ReservationStore) {
        let chain = self.chains.get_mut(&task_id).expect("placed");
        let id = chain.buffering.id;
        let updated = store.truncate(id, new_end).expect("buffer holds only shrink");
        *chain.leg_mut(Leg::Buffering) = updated;
    }

    fn classify_failure(
        &self,
        task: &Task,
        station: &StationLayout,
        window: SlotWindow,
        store: &ReservationStore,
        plant: &Plant,
    ) -> RejectReason {
        if window.not_before + plant.transport_lead(station) + task.duration > window.deadline {
            return RejectReason::DeadlineInfeasible;
        }
        if window.latest_start.is_some() {
            let unbounded = SlotWindow { latest_start: None, ..window };
            let combos = ds_candidates(task, plant, store, window.not_before, window.deadline);
            if combos.into_iter().any(|c| find_task_slot(task, c, unbounded, store, plant).is_some()) {
                return RejectReason::DwellWindowExceeded;
            }
        }
        RejectReason::NoResourceSlot
    }

    pub fn into_executable(self) -> ExecutableWorkflow {
        let planned_start = self.chains.values().map(|c| c.start()).min().unwrap_or(self.workflow.arrival);
        let completion = self.chains.values().map(|c| c.machining_end()).max().unwrap_or(planned_start);
        ExecutableWorkflow { workflow: self.workflow.clone(), chains: self.chains, planned_start, completion }
    }
}
