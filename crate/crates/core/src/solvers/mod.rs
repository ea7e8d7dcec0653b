//! D-NSS and its baselines behind one event-driven engine.

mod engine;
mod local;

pub use engine::{Engine, IterationRow, StepReport};
pub use local::{repair, schedule_insert, Candidates, InsertOutcome};

use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "d-nss")]
    DNss,
    #[serde(rename = "0-nss")]
    ZeroNss,
    #[serde(rename = "d-dsa")]
    DDsa,
    #[serde(rename = "0-dsa")]
    ZeroDsa,
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "random")]
    Random,
}

impl SolverKind {
    /// Presentation order for tables.
    pub const ALL: [SolverKind; 6] = [
        SolverKind::DNss,
        SolverKind::ZeroNss,
        SolverKind::DDsa,
        SolverKind::ZeroDsa,
        SolverKind::Greedy,
        SolverKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::DNss => "d-nss",
            SolverKind::ZeroNss => "0-nss",
            SolverKind::DDsa => "d-dsa",
            SolverKind::ZeroDsa => "0-dsa",
            SolverKind::Greedy => "greedy",
            SolverKind::Random => "random",
        }
    }

    /// Runs the stochastic search with message exchange.
    pub fn is_iterative(self) -> bool {
        !matches!(self, SolverKind::Greedy | SolverKind::Random)
    }

    /// Uses the geometric decomposition rather than one global neighborhood.
    pub fn is_decomposed(self) -> bool {
        matches!(self, SolverKind::DNss | SolverKind::ZeroNss)
    }

    /// Restarts from scratch at every change.
    pub fn restarts(self) -> bool {
        matches!(self, SolverKind::ZeroNss | SolverKind::ZeroDsa)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver `{s}` (expected d-nss, 0-nss, d-dsa, 0-dsa, greedy or random)"))
    }
}

/// Whether an agent's own holding counts towards W.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WCounting {
    #[default]
    IncludeSelf,
    ExcludeSelf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Unassignment probability P_u.
    pub p_u: f64,
    pub max_iters: usize,
    pub gnd_n: usize,
    pub neighborhood_size: usize,
    pub tile_deg: f64,
    #[serde(default)]
    pub w_counting: WCounting,
    /// Run every event for exactly `max_iters` iterations.
    #[serde(default)]
    pub fixed_iterations: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            p_u: 0.7,
            max_iters: 20,
            gnd_n: 2,
            neighborhood_size: 5,
            tile_deg: 10.0,
            w_counting: WCounting::IncludeSelf,
            fixed_iterations: false,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.p_u) {
            return Err(format!("p_u = {} lies outside [0, 1]", self.p_u));
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        if self.gnd_n == 0 {
            return Err("gnd_n must be at least 1".into());
        }
        if self.neighborhood_size == 0 {
            return Err("neighborhood_size must be at least 1".into());
        }
        if !(self.tile_deg > 0.0) {
            return Err("tile_deg must be positive".into());
        }
        Ok(())
    }
}

/// Probability that an agent is assigned to a request after an update.
///
/// `w` counts the agents known to have scheduled or executed the request.
pub fn update_probability(executed: bool, assigned: bool, w: u32, p_u: f64) -> f64 {
    match (executed, assigned, w) {
        (true, _, _) => 0.0,
        (false, false, 0) => 1.0,
        (false, false, _) => 0.0,
        (false, true, 0) => 1.0 - p_u,
        (false, true, w) => 1.0 / f64::from(w),
    }
}

/// Bernoulli draw that consumes randomness only for a nondegenerate `p`.
/// Returns the outcome and whether a draw happened.
pub fn stochastic_update(p: f64, rng: &mut Rng) -> (bool, bool) {
    if p <= 0.0 {
        (false, false)
    } else if p >= 1.0 {
        (true, false)
    } else {
        (rng.random::<f64>() < p, true)
    }
}
