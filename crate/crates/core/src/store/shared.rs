use std::sync::{Arc, RwLock, RwLockReadGuard};

use crate::domain::{TaskId, Time, WorkflowId};

use super::{CommitReport, Reservation, ReservationId, ReservationRequest, ReservationStore, StoreError};

/// A store shared by several schedulers. Mutations take the write lock, so
/// commit, release and truncate are linearizable; readers see a consistent
/// snapshot.
#[derive(Clone, Debug)]
pub struct SharedStore {
    inner: Arc<RwLock<ReservationStore>>,
}

impl SharedStore {
    pub fn new(store: ReservationStore) -> Self {
        SharedStore { inner: Arc::new(RwLock::new(store)) }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, ReservationStore> {
        self.inner.read().expect("store lock poisoned")
    }

    /// Owned copy of the current state.
    pub fn snapshot(&self) -> ReservationStore {
        self.read().clone()
    }

    pub fn commit_batch(&self, batch: &[ReservationRequest]) -> Result<CommitReport, StoreError> {
        self.inner.write().expect("store lock poisoned").commit_batch(batch)
    }

    pub fn release(&self, workflow: WorkflowId, task: Option<TaskId>) -> usize {
        self.inner.write().expect("store lock poisoned").release(workflow, task)
    }

    pub fn truncate(&self, id: ReservationId, new_end: Time) -> Result<Reservation, StoreError> {
        self.inner.write().expect("store lock poisoned").truncate(id, new_end)
    }
}
