use crate::problem::{Catalog, DcospInstance, RequestId, TaskId};
use std::collections::{BTreeMap, BTreeSet};

/// The static problem δ′: every request that was ever active, restricted to
/// tasks that could have executed while their request was active.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedInstance {
    pub requests: BTreeSet<RequestId>,
    /// S^{δ′}, sorted.
    pub tasks: Vec<TaskId>,
    by_request: BTreeMap<RequestId, Vec<TaskId>>,
}

/// Keeps a task iff, in some instance where its request is active, its
/// interval meets that instance's static window.
pub fn collapse(dcosp: &DcospInstance) -> CollapsedInstance {
    let catalog = &dcosp.catalog;
    let mut keep: BTreeSet<TaskId> = BTreeSet::new();
    for inst in dcosp.instances() {
        for &r in &inst.active {
            for &t in catalog.tasks_of_request(r) {
                if catalog.task(t).interval.intersects(&inst.static_window) {
                    keep.insert(t);
                }
            }
        }
    }
    let requests = dcosp.all_requests();
    let mut by_request: BTreeMap<RequestId, Vec<TaskId>> = requests.iter().map(|&r| (r, Vec::new())).collect();
    for &r in &requests {
        // tasks_of_request is sorted by start, so each list stays sorted
        let list = by_request.get_mut(&r).expect("seeded above");
        list.extend(catalog.tasks_of_request(r).iter().copied().filter(|t| keep.contains(t)));
    }
    CollapsedInstance { requests, tasks: keep.into_iter().collect(), by_request }
}

impl CollapsedInstance {
    pub fn contains(&self, t: TaskId) -> bool {
        self.tasks.binary_search(&t).is_ok()
    }

    /// Surviving tasks of `r` sorted by start.
    pub fn tasks_of_request(&self, r: RequestId) -> &[TaskId] {
        self.by_request.get(&r).map_or(&[], Vec::as_slice)
    }

    /// Surviving tasks of `r` that are schedulable at all.
    pub fn candidates<'a>(&'a self, catalog: &'a Catalog, r: RequestId) -> impl Iterator<Item = TaskId> + 'a {
        self.tasks_of_request(r).iter().copied().filter(move |&t| !catalog.is_blocked(t))
    }
}
