//! Observation scheduling data model, constraint evaluation, utilities and
//! seeded campaign generators.

pub mod builder;
pub mod constraints;
pub mod generate;
pub mod instance;
pub mod model;
pub mod schedule;
pub mod utility;

use crate::time::Seconds;

/// Duration of every observation task.
pub const TASK_DURATION: Seconds = 63.0;

pub use builder::CatalogBuilder;
pub use constraints::{check_constraints, Schedule, ScheduleError, Verdict};
pub use instance::{ChangeEvent, CospInstance, DcospInstance, InstanceError};
pub use model::{AgentId, Bucket, Catalog, CatalogError, Downlink, DownlinkId, Request, RequestId, Task, TaskId};
pub use schedule::AgentSchedule;
pub use utility::{dynamic_utility, executed_tasks, static_utility, TraceError};
