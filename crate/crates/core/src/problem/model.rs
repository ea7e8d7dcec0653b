use crate::geometry::SatelliteSpec;
use crate::time::{Seconds, TimeInterval};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

macro_rules! dense_id {
    ($name:ident, $prefix:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

dense_id!(AgentId, "a");
dense_id!(RequestId, "r");
dense_id!(TaskId, "s");
dense_id!(DownlinkId, "d");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub target: u32,
    pub window: TimeInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub request: RequestId,
    pub agent: AgentId,
    pub interval: TimeInterval,
    /// Data volume m(s) in bytes.
    pub volume: u64,
}

impl Task {
    pub fn start(&self) -> Seconds {
        self.interval.start
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Downlink {
    pub id: DownlinkId,
    pub agent: AgentId,
    pub interval: TimeInterval,
    /// Data volume m(d) in bytes.
    pub capacity: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("{kind} at position {position} has id {id}")]
    NonDenseId { kind: &'static str, position: usize, id: u32 },
    #[error("{0} references unknown agent {1}")]
    UnknownAgent(String, AgentId),
    #[error("task {0} references unknown request {1}")]
    UnknownRequest(TaskId, RequestId),
    #[error("task {0} lies outside the window of request {1}")]
    TaskOutsideRequest(TaskId, RequestId),
    #[error("task {0} has zero data volume")]
    ZeroVolume(TaskId),
    #[error("downlinks {0} and {1} of one agent overlap")]
    OverlappingDownlinks(DownlinkId, DownlinkId),
}

/// Which capacity constraint a task's data counts against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bucket {
    /// Data held until downlink `d`, the first contact starting at or after the task ends.
    Downlink(DownlinkId),
    /// No later contact in the horizon; only onboard memory applies.
    Tail,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawCatalog {
    agents: Vec<SatelliteSpec>,
    requests: Vec<Request>,
    tasks: Vec<Task>,
    downlinks: Vec<Downlink>,
}

/// Every agent, request, task and downlink of a scenario, with lookup indices.
///
/// Identifiers are dense: the element with id `k` sits at position `k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawCatalog", into = "RawCatalog")]
pub struct Catalog {
    agents: Vec<SatelliteSpec>,
    requests: Vec<Request>,
    tasks: Vec<Task>,
    downlinks: Vec<Downlink>,
    tasks_by_agent: Vec<Vec<TaskId>>,
    tasks_by_request: Vec<Vec<TaskId>>,
    downlinks_by_agent: Vec<Vec<DownlinkId>>,
    task_bucket: Vec<Bucket>,
    task_blocked: Vec<bool>,
}

impl TryFrom<RawCatalog> for Catalog {
    type Error = CatalogError;
    fn try_from(raw: RawCatalog) -> Result<Self, Self::Error> {
        Catalog::new(raw.agents, raw.requests, raw.tasks, raw.downlinks)
    }
}

impl From<Catalog> for RawCatalog {
    fn from(c: Catalog) -> Self {
        RawCatalog { agents: c.agents, requests: c.requests, tasks: c.tasks, downlinks: c.downlinks }
    }
}

fn by_start(a: &TimeInterval, b: &TimeInterval) -> std::cmp::Ordering {
    a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end))
}

impl Catalog {
    pub fn new(
        agents: Vec<SatelliteSpec>,
        requests: Vec<Request>,
        tasks: Vec<Task>,
        downlinks: Vec<Downlink>,
    ) -> Result<Self, CatalogError> {
        for (k, a) in agents.iter().enumerate() {
            if a.id as usize != k {
                return Err(CatalogError::NonDenseId { kind: "agent", position: k, id: a.id });
            }
        }
        for (k, r) in requests.iter().enumerate() {
            if r.id.index() != k {
                return Err(CatalogError::NonDenseId { kind: "request", position: k, id: r.id.0 });
            }
        }
        for (k, t) in tasks.iter().enumerate() {
            if t.id.index() != k {
                return Err(CatalogError::NonDenseId { kind: "task", position: k, id: t.id.0 });
            }
            if t.agent.index() >= agents.len() {
                return Err(CatalogError::UnknownAgent(t.id.to_string(), t.agent));
            }
            let Some(r) = requests.get(t.request.index()) else {
                return Err(CatalogError::UnknownRequest(t.id, t.request));
            };
            if !r.window.contains(&t.interval) {
                return Err(CatalogError::TaskOutsideRequest(t.id, t.request));
            }
            if t.volume == 0 {
                return Err(CatalogError::ZeroVolume(t.id));
            }
        }
        for (k, d) in downlinks.iter().enumerate() {
            if d.id.index() != k {
                return Err(CatalogError::NonDenseId { kind: "downlink", position: k, id: d.id.0 });
            }
            if d.agent.index() >= agents.len() {
                return Err(CatalogError::UnknownAgent(d.id.to_string(), d.agent));
            }
        }

        let mut tasks_by_agent = vec![Vec::new(); agents.len()];
        let mut tasks_by_request = vec![Vec::new(); requests.len()];
        for t in &tasks {
            tasks_by_agent[t.agent.index()].push(t.id);
            tasks_by_request[t.request.index()].push(t.id);
        }
        let task_order = |a: &TaskId, b: &TaskId| {
            by_start(&tasks[a.index()].interval, &tasks[b.index()].interval).then(a.cmp(b))
        };
        tasks_by_agent.iter_mut().for_each(|v| v.sort_by(task_order));
        tasks_by_request.iter_mut().for_each(|v| v.sort_by(task_order));

        let mut downlinks_by_agent = vec![Vec::new(); agents.len()];
        for d in &downlinks {
            downlinks_by_agent[d.agent.index()].push(d.id);
        }
        for v in downlinks_by_agent.iter_mut() {
            v.sort_by(|a, b| by_start(&downlinks[a.index()].interval, &downlinks[b.index()].interval));
            for pair in v.windows(2) {
                if downlinks[pair[0].index()].interval.overlaps(&downlinks[pair[1].index()].interval) {
                    return Err(CatalogError::OverlappingDownlinks(pair[0], pair[1]));
                }
            }
        }

        let mut task_bucket = Vec::with_capacity(tasks.len());
        let mut task_blocked = Vec::with_capacity(tasks.len());
        for t in &tasks {
            let own = &downlinks_by_agent[t.agent.index()];
            let first_after = own.partition_point(|d| downlinks[d.index()].interval.start < t.interval.end);
            let bucket = own.get(first_after).map_or(Bucket::Tail, |d| Bucket::Downlink(*d));
            let overlaps_downlink = own.iter().any(|d| downlinks[d.index()].interval.overlaps(&t.interval));
            let memory = agents[t.agent.index()].memory_capacity;
            let limit = match bucket {
                Bucket::Downlink(d) => memory.min(downlinks[d.index()].capacity),
                Bucket::Tail => memory,
            };
            task_bucket.push(bucket);
            task_blocked.push(overlaps_downlink || t.volume > limit);
        }

        Ok(Self {
            agents,
            requests,
            tasks,
            downlinks,
            tasks_by_agent,
            tasks_by_request,
            downlinks_by_agent,
            task_bucket,
            task_blocked,
        })
    }

    pub fn agents(&self) -> &[SatelliteSpec] {
        &self.agents
    }
    pub fn requests(&self) -> &[Request] {
        &self.requests
    }
    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }
    pub fn downlinks(&self) -> &[Downlink] {
        &self.downlinks
    }
    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }
    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.agents.len() as u32).map(AgentId)
    }
    pub fn agent(&self, id: AgentId) -> &SatelliteSpec {
        &self.agents[id.index()]
    }
    pub fn request(&self, id: RequestId) -> &Request {
        &self.requests[id.index()]
    }
    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.index()]
    }
    pub fn downlink(&self, id: DownlinkId) -> &Downlink {
        &self.downlinks[id.index()]
    }
    /// Tasks of `agent` sorted by start time.
    pub fn tasks_of_agent(&self, agent: AgentId) -> &[TaskId] {
        &self.tasks_by_agent[agent.index()]
    }
    /// Tasks of `request` sorted by start time.
    pub fn tasks_of_request(&self, request: RequestId) -> &[TaskId] {
        &self.tasks_by_request[request.index()]
    }
    pub fn downlinks_of_agent(&self, agent: AgentId) -> &[DownlinkId] {
        &self.downlinks_by_agent[agent.index()]
    }
    pub fn bucket(&self, task: TaskId) -> Bucket {
        self.task_bucket[task.index()]
    }
    /// Capacity limit min(m(a), m(d)) of a bucket, or m(a) for the tail.
    pub fn bucket_limit(&self, agent: AgentId, bucket: Bucket) -> u64 {
        let memory = self.agent(agent).memory_capacity;
        match bucket {
            Bucket::Downlink(d) => memory.min(self.downlink(d).capacity),
            Bucket::Tail => memory,
        }
    }
    /// True when the task can never be scheduled: it overlaps one of its
    /// agent's downlinks or alone exceeds its bucket capacity.
    pub fn is_blocked(&self, task: TaskId) -> bool {
        self.task_blocked[task.index()]
    }
}
