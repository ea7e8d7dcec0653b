use super::model::{Catalog, RequestId, TaskId};
use crate::geometry::Target;
use crate::time::{Seconds, TimeInterval};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// The request set changes at `time`: `added` become active, `removed` leave.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeEvent {
    pub time: Seconds,
    pub added: Vec<RequestId>,
    pub removed: Vec<RequestId>,
    /// How many additions the generator wanted but could not find eligible requests for.
    #[serde(default)]
    pub add_shortfall: usize,
    #[serde(default)]
    pub remove_shortfall: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("change {index} at t={time} is not strictly after the previous change and inside the horizon")]
    ChangeTime { index: usize, time: Seconds },
    #[error("change {index}: request {request} is already active or was active before")]
    Readded { index: usize, request: RequestId },
    #[error("change {index}: request {request} is not active")]
    RemovedInactive { index: usize, request: RequestId },
    #[error("change {index} at t={time} touches request {request} whose window has already opened")]
    ChangedAfterOpen { index: usize, time: Seconds, request: RequestId },
    #[error("request {0} does not exist")]
    UnknownRequest(RequestId),
    #[error("request {0} window lies outside the horizon")]
    RequestOutsideHorizon(RequestId),
}

/// One static problem: the requests active from `horizon.start` until the
/// next change.
#[derive(Clone, Debug, PartialEq)]
pub struct CospInstance {
    pub index: usize,
    /// h(δ_t): from this instance's change time to the end of the global horizon.
    pub horizon: TimeInterval,
    /// The span during which this instance is in force.
    pub static_window: TimeInterval,
    pub active: BTreeSet<RequestId>,
}

impl CospInstance {
    /// Tasks of active requests that have not finished before this instance begins.
    pub fn tasks<'a>(&'a self, catalog: &'a Catalog) -> impl Iterator<Item = TaskId> + 'a {
        self.active.iter().flat_map(move |&r| {
            catalog
                .tasks_of_request(r)
                .iter()
                .copied()
                .filter(move |&t| catalog.task(t).interval.intersects(&self.horizon))
        })
    }
}

/// A dynamic problem: a catalog plus the timeline of request changes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DcospInstance {
    pub horizon: TimeInterval,
    pub catalog: Catalog,
    pub initial: Vec<RequestId>,
    pub events: Vec<ChangeEvent>,
    /// Target locations indexed by id; empty for synthetic catalogs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<Target>,
}

impl DcospInstance {
    pub fn new(
        horizon: TimeInterval,
        catalog: Catalog,
        mut initial: Vec<RequestId>,
        events: Vec<ChangeEvent>,
    ) -> Result<Self, InstanceError> {
        initial.sort();
        let d = Self { horizon, catalog, initial, events, targets: Vec::new() };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        for r in self.catalog.requests() {
            if !self.horizon.contains(&r.window) {
                return Err(InstanceError::RequestOutsideHorizon(r.id));
            }
        }
        let known = |r: RequestId| {
            if r.index() < self.catalog.requests().len() {
                Ok(())
            } else {
                Err(InstanceError::UnknownRequest(r))
            }
        };
        let mut ever: BTreeSet<RequestId> = BTreeSet::new();
        let mut active: BTreeSet<RequestId> = BTreeSet::new();
        for &r in &self.initial {
            known(r)?;
            ever.insert(r);
            active.insert(r);
        }
        let mut last = self.horizon.start;
        for (index, e) in self.events.iter().enumerate() {
            if !(e.time > last && e.time <= self.horizon.end) {
                return Err(InstanceError::ChangeTime { index, time: e.time });
            }
            last = e.time;
            for &request in e.removed.iter().chain(&e.added) {
                known(request)?;
                if self.catalog.request(request).window.start <= e.time {
                    return Err(InstanceError::ChangedAfterOpen { index, time: e.time, request });
                }
            }
            for &request in &e.removed {
                if !active.remove(&request) {
                    return Err(InstanceError::RemovedInactive { index, request });
                }
            }
            for &request in &e.added {
                if !ever.insert(request) {
                    return Err(InstanceError::Readded { index, request });
                }
                active.insert(request);
            }
        }
        Ok(())
    }

    /// T + 1.
    pub fn instance_count(&self) -> usize {
        self.events.len() + 1
    }

    /// h_s(δ_t) for every instance.
    pub fn change_times(&self) -> Vec<Seconds> {
        std::iter::once(self.horizon.start).chain(self.events.iter().map(|e| e.time)).collect()
    }

    /// h̄(δ_t): from this change to the next one, or to the horizon end for the last.
    pub fn static_window(&self, t: usize) -> TimeInterval {
        let times = self.change_times();
        let end = times.get(t + 1).copied().unwrap_or(self.horizon.end);
        TimeInterval::new(times[t], end)
    }

    pub fn instances(&self) -> Vec<CospInstance> {
        let times = self.change_times();
        let mut active: BTreeSet<RequestId> = self.initial.iter().copied().collect();
        let mut out = Vec::with_capacity(times.len());
        for (t, &start) in times.iter().enumerate() {
            if t > 0 {
                let e = &self.events[t - 1];
                e.removed.iter().for_each(|r| {
                    active.remove(r);
                });
                active.extend(e.added.iter().copied());
            }
            out.push(CospInstance {
                index: t,
                horizon: TimeInterval::new(start, self.horizon.end),
                static_window: self.static_window(t),
                active: active.clone(),
            });
        }
        out
    }

    /// R^δ: every request active in some instance.
    pub fn all_requests(&self) -> BTreeSet<RequestId> {
        self.initial
            .iter()
            .chain(self.events.iter().flat_map(|e| e.added.iter()))
            .copied()
            .collect()
    }

    /// A copy with no dynamics: only the initial instance remains.
    pub fn without_dynamics(&self) -> Self {
        Self {
            horizon: self.horizon,
            catalog: self.catalog.clone(),
            initial: self.initial.clone(),
            events: Vec::new(),
            targets: self.targets.clone(),
        }
    }

    pub fn with_targets(mut self, targets: Vec<Target>) -> Self {
        self.targets = targets;
        self
    }

    pub fn target(&self, id: u32) -> Option<&Target> {
        self.targets.get(id as usize).filter(|t| t.id == id)
    }
}
