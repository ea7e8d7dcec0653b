//! Dynamic multi-satellite observation scheduling: constellation geometry,
//! campaign generation, distributed solvers, offline oracles and a
//! deterministic simulation kernel.

pub mod geometry;
pub mod problem;
pub mod rng;
pub mod time;
pub mod config;
pub mod decomposition;
pub mod scenario;
pub mod solvers;
pub mod oracle;
pub mod simkernel;
