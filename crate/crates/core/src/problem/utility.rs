use super::instance::DcospInstance;
use super::model::{Catalog, RequestId, TaskId};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("trace holds {got} snapshots but the problem has {expected} instances")]
    Length { expected: usize, got: usize },
    #[error("snapshot {snapshot} references unknown task {task}")]
    UnknownTask { snapshot: usize, task: TaskId },
}

/// Number of `requests` with at least one assigned task.
pub fn static_utility<I>(catalog: &Catalog, requests: &BTreeSet<RequestId>, assigned: I) -> usize
where
    I: IntoIterator<Item = TaskId>,
{
    assigned
        .into_iter()
        .map(|t| catalog.task(t).request)
        .filter(|r| requests.contains(r))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Requests satisfied by executed tasks over a trace with one global snapshot
/// of scheduled tasks per instance.
///
/// A task is executed when it is scheduled in the snapshot of an instance in
/// which its request is active and its interval meets that instance's static
/// window.
pub fn executed_tasks(trace: &[Vec<TaskId>], dcosp: &DcospInstance) -> Result<BTreeSet<TaskId>, TraceError> {
    if trace.len() != dcosp.instance_count() {
        return Err(TraceError::Length { expected: dcosp.instance_count(), got: trace.len() });
    }
    let catalog = &dcosp.catalog;
    let mut executed = BTreeSet::new();
    for (inst, snapshot) in dcosp.instances().iter().zip(trace) {
        for &task in snapshot {
            if task.index() >= catalog.tasks().len() {
                return Err(TraceError::UnknownTask { snapshot: inst.index, task });
            }
            let t = catalog.task(task);
            if inst.active.contains(&t.request) && t.interval.intersects(&inst.static_window) {
                executed.insert(task);
            }
        }
    }
    Ok(executed)
}

pub fn dynamic_utility(trace: &[Vec<TaskId>], dcosp: &DcospInstance) -> Result<usize, TraceError> {
    let executed = executed_tasks(trace, dcosp)?;
    Ok(static_utility(&dcosp.catalog, &dcosp.all_requests(), executed))
}
