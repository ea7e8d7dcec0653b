//! Incrementally maintained feasible schedule used by every solver.

use super::constraints::Schedule;
use super::model::{AgentId, Bucket, Catalog, RequestId, TaskId};
use crate::time::Seconds;
use std::collections::BTreeMap;

/// A feasible schedule for one agent that supports O(log L) feasibility
/// queries for single insertions.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentSchedule {
    agent: AgentId,
    /// Sorted by (start, id).
    entries: Vec<TaskId>,
    starts: Vec<Seconds>,
    by_request: BTreeMap<RequestId, TaskId>,
    load: BTreeMap<Bucket, u64>,
}

impl AgentSchedule {
    pub fn new(agent: AgentId) -> Self {
        Self {
            agent,
            entries: Vec::new(),
            starts: Vec::new(),
            by_request: BTreeMap::new(),
            load: BTreeMap::new(),
        }
    }

    pub fn agent(&self) -> AgentId {
        self.agent
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.entries
    }

    pub fn contains(&self, task: TaskId) -> bool {
        self.entries.contains(&task)
    }

    /// The task this schedule holds for `request`, if any.
    pub fn task_for(&self, request: RequestId) -> Option<TaskId> {
        self.by_request.get(&request).copied()
    }

    pub fn holds(&self, request: RequestId) -> bool {
        self.by_request.contains_key(&request)
    }

    pub fn requests(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.by_request.keys().copied()
    }

    pub fn to_schedule(&self) -> Schedule {
        Schedule { agent: self.agent, tasks: self.entries.clone() }
    }

    fn position(&self, catalog: &Catalog, task: TaskId) -> usize {
        let start = catalog.task(task).interval.start;
        let lo = self.starts.partition_point(|&s| s < start);
        lo + self.entries[lo..]
            .iter()
            .zip(&self.starts[lo..])
            .take_while(|(&id, &s)| s == start && id < task)
            .count()
    }

    /// Whether inserting `task` keeps every constraint satisfied. Does not look
    /// at whether the task's request is already held.
    pub fn can_insert(&self, catalog: &Catalog, task: TaskId) -> bool {
        let t = catalog.task(task);
        if t.agent != self.agent || catalog.is_blocked(task) {
            return false;
        }
        let pos = self.position(catalog, task);
        if pos > 0 && catalog.task(self.entries[pos - 1]).interval.overlaps(&t.interval) {
            return false;
        }
        if let Some(&next) = self.entries.get(pos) {
            if next == task || catalog.task(next).interval.overlaps(&t.interval) {
                return false;
            }
        }
        let bucket = catalog.bucket(task);
        let used = self.load.get(&bucket).copied().unwrap_or(0);
        used + t.volume <= catalog.bucket_limit(self.agent, bucket)
    }

    /// Inserts without checking; callers establish feasibility first.
    pub fn insert(&mut self, catalog: &Catalog, task: TaskId) {
        debug_assert!(self.can_insert(catalog, task), "infeasible insert of {task}");
        let t = catalog.task(task);
        let pos = self.position(catalog, task);
        self.entries.insert(pos, task);
        self.starts.insert(pos, t.interval.start);
        self.by_request.entry(t.request).or_insert(task);
        *self.load.entry(catalog.bucket(task)).or_default() += t.volume;
    }

    pub fn try_insert(&mut self, catalog: &Catalog, task: TaskId) -> bool {
        let ok = self.can_insert(catalog, task);
        if ok {
            self.insert(catalog, task);
        }
        ok
    }

    /// Removes `task`; returns false when it was not scheduled.
    pub fn remove(&mut self, catalog: &Catalog, task: TaskId) -> bool {
        let Some(pos) = self.entries.iter().position(|&x| x == task) else {
            return false;
        };
        let t = catalog.task(task);
        self.entries.remove(pos);
        self.starts.remove(pos);
        if self.by_request.get(&t.request) == Some(&task) {
            self.by_request.remove(&t.request);
            // a second task for the same request can only exist in hand-built schedules
            if let Some(&other) = self.entries.iter().find(|&&x| catalog.task(x).request == t.request) {
                self.by_request.insert(t.request, other);
            }
        }
        let bucket = catalog.bucket(task);
        if let Some(l) = self.load.get_mut(&bucket) {
            *l -= t.volume;
            if *l == 0 {
                self.load.remove(&bucket);
            }
        }
        true
    }

    /// Removes every task matching `pred`, returning how many were removed.
    pub fn remove_where(&mut self, catalog: &Catalog, mut pred: impl FnMut(TaskId) -> bool) -> usize {
        let doomed: Vec<TaskId> = self.entries.iter().copied().filter(|&t| pred(t)).collect();
        for &t in &doomed {
            self.remove(catalog, t);
        }
        doomed.len()
    }
}
