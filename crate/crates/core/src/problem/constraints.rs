//! Reference feasibility checker for a single agent's schedule.
//!
//! This evaluates every constraint from scratch and deliberately shares no code
//! with [`super::schedule::AgentSchedule`], which solvers use for incremental
//! insertion. Tests use it as the oracle for solver output.

use super::model::{AgentId, Catalog, DownlinkId, RequestId, TaskId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// One agent's committed tasks, sorted by start time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub agent: AgentId,
    pub tasks: Vec<TaskId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    ProcessingConflict { first: TaskId, second: TaskId },
    DownlinkConflict { task: TaskId, downlink: DownlinkId },
    /// `downlink` is `None` for data with no later contact in the horizon.
    CapacityExceeded { downlink: Option<DownlinkId>, load: u64, limit: u64 },
    DuplicateRequest { request: RequestId, first: TaskId, second: TaskId },
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("task {0} appears more than once")]
    DuplicateTask(TaskId),
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("task {task} belongs to agent {owner}, not {agent}")]
    ForeignTask { task: TaskId, owner: AgentId, agent: AgentId },
}

pub fn check_constraints(schedule: &Schedule, catalog: &Catalog) -> Result<Verdict, ScheduleError> {
    let mut seen = BTreeSet::new();
    for &t in &schedule.tasks {
        if t.index() >= catalog.tasks().len() {
            return Err(ScheduleError::UnknownTask(t));
        }
        if !seen.insert(t) {
            return Err(ScheduleError::DuplicateTask(t));
        }
        let owner = catalog.task(t).agent;
        if owner != schedule.agent {
            return Err(ScheduleError::ForeignTask { task: t, owner, agent: schedule.agent });
        }
    }

    let mut tasks: Vec<_> = schedule.tasks.iter().map(|&t| catalog.task(t)).collect();
    tasks.sort_by(|a, b| a.interval.start.total_cmp(&b.interval.start).then(a.id.cmp(&b.id)));

    // no two tasks at once
    for (i, a) in tasks.iter().enumerate() {
        for b in &tasks[i + 1..] {
            if a.interval.overlaps(&b.interval) {
                return Ok(Verdict::ProcessingConflict { first: a.id, second: b.id });
            }
        }
    }

    let downlinks: Vec<_> = catalog
        .downlinks()
        .iter()
        .filter(|d| d.agent == schedule.agent)
        .collect();

    // no task during a downlink
    for t in &tasks {
        if let Some(d) = downlinks.iter().find(|d| d.interval.overlaps(&t.interval)) {
            return Ok(Verdict::DownlinkConflict { task: t.id, downlink: d.id });
        }
    }

    // data of each task goes down at the soonest contact after it
    let memory = catalog.agent(schedule.agent).memory_capacity;
    let mut load: BTreeMap<Option<DownlinkId>, u64> = BTreeMap::new();
    for t in &tasks {
        let soonest = downlinks
            .iter()
            .filter(|d| d.interval.start >= t.interval.end)
            .min_by(|a, b| a.interval.start.total_cmp(&b.interval.start))
            .map(|d| d.id);
        *load.entry(soonest).or_default() += t.volume;
    }
    for (&d, &l) in &load {
        let limit = match d {
            Some(d) => memory.min(catalog.downlink(d).capacity),
            None => memory,
        };
        if l > limit {
            return Ok(Verdict::CapacityExceeded { downlink: d, load: l, limit });
        }
    }

    let mut by_request: BTreeMap<RequestId, TaskId> = BTreeMap::new();
    for t in &tasks {
        if let Some(&first) = by_request.get(&t.request) {
            return Ok(Verdict::DuplicateRequest { request: t.request, first, second: t.id });
        }
        by_request.insert(t.request, t.id);
    }

    Ok(Verdict::Feasible)
}
