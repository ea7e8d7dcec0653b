//! Offline references: the omniscient collapse of a dynamic problem into one
//! static problem, solved exactly or bounded from below.

mod bnb;
mod collapse;
mod exhaustive;
mod swo;

pub use bnb::{branch_and_bound, BnbLimits};
pub use collapse::{collapse, CollapsedInstance};
pub use exhaustive::exhaustive_optimum;
pub use swo::{swo, SwoParams};

use crate::problem::{AgentId, AgentSchedule, Catalog, TaskId};
use serde::{Deserialize, Serialize};

/// Bytes to uplink one agent's schedule: a header plus id and start per task.
pub const UPLINK_HEADER_BYTES: u64 = 16;
pub const UPLINK_TASK_BYTES: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    BranchAndBound,
    Swo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub method: OracleMethod,
    pub satisfied: usize,
    /// Requests of the collapsed instance, the satisfaction denominator.
    pub requests: usize,
    /// Whether `satisfied` is a proven optimum.
    pub proven: bool,
    pub nodes: u64,
    /// Per-agent witness schedules.
    pub schedules: Vec<Vec<TaskId>>,
}

impl OracleSolution {
    pub fn satisfaction_pct(&self) -> f64 {
        if self.requests == 0 {
            100.0
        } else {
            100.0 * self.satisfied as f64 / self.requests as f64
        }
    }

    /// Message volume of uplinking every witness schedule from the ground.
    pub fn uplink_bytes(&self) -> u64 {
        self.schedules.iter().map(|s| UPLINK_HEADER_BYTES + UPLINK_TASK_BYTES * s.len() as u64).sum()
    }
}

fn empty_schedules(catalog: &Catalog) -> Vec<AgentSchedule> {
    catalog.agent_ids().map(AgentSchedule::new).collect()
}

fn witness(schedules: &[AgentSchedule]) -> Vec<Vec<TaskId>> {
    schedules.iter().map(|s| s.tasks().to_vec()).collect()
}

fn agent_of(catalog: &Catalog, t: TaskId) -> AgentId {
    catalog.task(t).agent
}
