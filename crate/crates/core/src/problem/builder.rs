//! Hand-built catalogs for synthetic instances and tests.

use super::model::{AgentId, Catalog, Downlink, DownlinkId, Request, RequestId, Task, TaskId};
use crate::geometry::{SatelliteSpec, DEFAULT_MEMORY_CAPACITY};
use crate::problem::TASK_DURATION;
use crate::time::{Seconds, TimeInterval};

#[derive(Clone, Debug)]
pub struct CatalogBuilder {
    agents: Vec<SatelliteSpec>,
    requests: Vec<Request>,
    tasks: Vec<Task>,
    downlinks: Vec<Downlink>,
}

impl CatalogBuilder {
    /// `agents` satellites, one per plane, with default memory.
    pub fn new(agents: u32) -> Self {
        Self {
            agents: (0..agents)
                .map(|id| SatelliteSpec {
                    id,
                    plane: id,
                    index_in_plane: 0,
                    max_off_nadir_deg: 45.0,
                    memory_capacity: DEFAULT_MEMORY_CAPACITY,
                })
                .collect(),
            requests: Vec::new(),
            tasks: Vec::new(),
            downlinks: Vec::new(),
        }
    }

    pub fn with_agents(agents: Vec<SatelliteSpec>) -> Self {
        Self { agents, requests: Vec::new(), tasks: Vec::new(), downlinks: Vec::new() }
    }

    pub fn memory(&mut self, bytes: u64) -> &mut Self {
        self.agents.iter_mut().for_each(|a| a.memory_capacity = bytes);
        self
    }

    pub fn request(&mut self, start: Seconds, end: Seconds) -> RequestId {
        let id = RequestId(self.requests.len() as u32);
        self.requests.push(Request { id, target: id.0, window: TimeInterval::new(start, end) });
        id
    }

    pub fn request_for_target(&mut self, target: u32, window: TimeInterval) -> RequestId {
        let id = RequestId(self.requests.len() as u32);
        self.requests.push(Request { id, target, window });
        id
    }

    /// A task of the standard duration starting at `start`.
    pub fn task(&mut self, request: RequestId, agent: u32, start: Seconds, volume: u64) -> TaskId {
        self.task_at(request, agent, TimeInterval::new(start, start + TASK_DURATION), volume)
    }

    pub fn task_at(&mut self, request: RequestId, agent: u32, interval: TimeInterval, volume: u64) -> TaskId {
        let id = TaskId(self.tasks.len() as u32);
        self.tasks.push(Task { id, request, agent: AgentId(agent), interval, volume });
        id
    }

    pub fn downlink(&mut self, agent: u32, start: Seconds, end: Seconds, capacity: u64) -> DownlinkId {
        let id = DownlinkId(self.downlinks.len() as u32);
        self.downlinks.push(Downlink {
            id,
            agent: AgentId(agent),
            interval: TimeInterval::new(start, end),
            capacity,
        });
        id
    }

    /// Panics if the assembled catalog is invalid.
    pub fn build(&self) -> Catalog {
        Catalog::new(self.agents.clone(), self.requests.clone(), self.tasks.clone(), self.downlinks.clone())
            .expect("builder produced an invalid catalog")
    }
}
