//! Seeded generators for targets, request campaigns, candidate tasks and
//! request dynamics.

use super::instance::ChangeEvent;
use super::model::{AgentId, Request, RequestId, Task, TaskId};
use super::TASK_DURATION;
use crate::geometry::Target;
use crate::time::{Seconds, TimeInterval};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GenerationError {
    #[error("campaign of {requests} requests is too small for volatility {volatility}: at least {needed} are needed")]
    CampaignTooSmall { requests: usize, volatility: u32, needed: usize },
    #[error("volatility must be at least 1")]
    ZeroVolatility,
    #[error("only {available} whole-second change times fit in the change span, {volatility} are needed")]
    HorizonTooShort { available: usize, volatility: u32 },
    #[error("invalid range {min}..={max}")]
    EmptyRange { min: u32, max: u32 },
    #[error("invalid task parameters: {0}")]
    TaskParams(&'static str),
}

/// How many evenly spaced windows a target is requested in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Periodicity {
    Fixed { p: u32 },
    Uniform { min: u32, max: u32 },
}

impl Periodicity {
    pub fn sample(&self, rng: &mut impl Rng) -> Result<u32, GenerationError> {
        sample_range(*self, rng)
    }
}

/// Number of change events in a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Volatility {
    Fixed { v: u32 },
    Uniform { min: u32, max: u32 },
}

impl Volatility {
    pub fn sample(&self, rng: &mut impl Rng) -> Result<u32, GenerationError> {
        let p = match *self {
            Volatility::Fixed { v } => Periodicity::Fixed { p: v },
            Volatility::Uniform { min, max } => Periodicity::Uniform { min, max },
        };
        sample_range(p, rng)
    }
}

fn sample_range(p: Periodicity, rng: &mut impl Rng) -> Result<u32, GenerationError> {
    match p {
        Periodicity::Fixed { p } if p >= 1 => Ok(p),
        Periodicity::Fixed { p } => Err(GenerationError::EmptyRange { min: p, max: p }),
        Periodicity::Uniform { min, max } if 1 <= min && min <= max => Ok(rng.random_range(min..=max)),
        Periodicity::Uniform { min, max } => Err(GenerationError::EmptyRange { min, max }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskParams {
    pub duration: Seconds,
    /// Offset between consecutive candidate starts within one access window.
    pub stride: Seconds,
    pub volume_mean: f64,
    pub volume_sd: f64,
    /// Draws below this are rejected and redrawn.
    pub volume_min: f64,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self { duration: TASK_DURATION, stride: TASK_DURATION, volume_mean: 50e6, volume_sd: 10e6, volume_min: 1e6 }
    }
}

impl TaskParams {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if !(self.duration > 0.0) {
            return Err(GenerationError::TaskParams("duration must be positive"));
        }
        if !(self.stride > 0.0) {
            return Err(GenerationError::TaskParams("stride must be positive"));
        }
        if !(self.volume_sd >= 0.0 && self.volume_min >= 1.0) {
            return Err(GenerationError::TaskParams("volume bounds are invalid"));
        }
        if self.volume_sd == 0.0 && self.volume_mean < self.volume_min {
            return Err(GenerationError::TaskParams("a degenerate volume distribution lies below the minimum"));
        }
        Ok(())
    }

    fn volume(&self, normal: &Normal<f64>, rng: &mut impl Rng) -> u64 {
        loop {
            let v = normal.sample(rng);
            if v >= self.volume_min {
                return v.round() as u64;
            }
        }
    }
}

/// Geographic box in which synthetic targets are placed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Region {
    pub const GLOBAL_POPULATED: Region = Region { lat_min: -56.0, lat_max: 70.0, lon_min: -180.0, lon_max: 180.0 };
}

/// `count` targets spread uniformly by area over `region`.
pub fn generate_targets(count: usize, region: Region, rng: &mut impl Rng) -> Vec<Target> {
    let (s0, s1) = (region.lat_min.to_radians().sin(), region.lat_max.to_radians().sin());
    (0..count as u32)
        .map(|id| {
            let z: f64 = if s0 < s1 { rng.random_range(s0..s1) } else { s0 };
            let lon = if region.lon_min < region.lon_max {
                rng.random_range(region.lon_min..region.lon_max)
            } else {
                region.lon_min
            };
            Target { id, latitude_deg: z.asin().to_degrees(), longitude_deg: lon }
        })
        .collect()
}

/// One request per target per periodic window. Request ids follow target
/// order, then window order.
pub fn generate_campaign(
    targets: &[Target],
    horizon: TimeInterval,
    periodicity: Periodicity,
    rng: &mut impl Rng,
) -> Result<Vec<Request>, GenerationError> {
    let mut out = Vec::new();
    for t in targets {
        let p = periodicity.sample(rng)?;
        let len = horizon.duration() / f64::from(p);
        for k in 0..p {
            let start = horizon.start + len * f64::from(k);
            let end = if k + 1 == p { horizon.end } else { horizon.start + len * f64::from(k + 1) };
            out.push(Request { id: RequestId(out.len() as u32), target: t.id, window: TimeInterval::new(start, end) });
        }
    }
    Ok(out)
}

/// Candidate starts tiling `window` from its start.
pub fn tile_starts(window: TimeInterval, duration: Seconds, stride: Seconds) -> Vec<Seconds> {
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let s = window.start + stride * f64::from(k);
        if s + duration > window.end + 1e-9 {
            break;
        }
        out.push(s);
        k += 1;
    }
    out
}

/// Candidate tasks S_a of one agent. `windows(target)` yields the agent's
/// access windows over that target. New task ids start at `first_id`.
pub fn generate_tasks<'w>(
    agent: AgentId,
    requests: &[Request],
    windows: impl Fn(u32) -> &'w [TimeInterval],
    params: &TaskParams,
    first_id: u32,
    rng: &mut impl Rng,
) -> Result<Vec<Task>, GenerationError> {
    params.validate()?;
    let normal = Normal::new(params.volume_mean, params.volume_sd).map_err(|_| GenerationError::TaskParams("volume distribution"))?;
    let mut out = Vec::new();
    for r in requests {
        for w in windows(r.target) {
            let Some(clip) = w.intersection(&r.window) else { continue };
            for start in tile_starts(clip, params.duration, params.stride) {
                let end = (start + params.duration).min(clip.end);
                out.push(Task {
                    id: TaskId(first_id + out.len() as u32),
                    request: r.id,
                    agent,
                    interval: TimeInterval::new(start, end.max(start)),
                    volume: params.volume(&normal, rng),
                });
            }
        }
    }
    Ok(out)
}

/// Initial active set and change events for a campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct Dynamics {
    pub initial: Vec<RequestId>,
    pub events: Vec<ChangeEvent>,
}

fn choose(mut pool: Vec<RequestId>, k: usize, rng: &mut impl Rng) -> Vec<RequestId> {
    pool.sort();
    let k = k.min(pool.len());
    let mut picked: Vec<RequestId> = index::sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
    picked.sort();
    picked
}

/// Draws an initial third of the campaign and `v` change events in the final
/// `1 - 2/(3v)` of the horizon. Each event adds ⌈2|C|/(3v)⌉ never-active
/// requests and removes ⌈|C|/(3v)⌉ requests that were active before it; only
/// requests whose window has not opened yet are eligible. Missing eligible
/// requests are recorded as shortfalls on the event.
pub fn generate_dynamics(
    campaign: &[Request],
    horizon: TimeInterval,
    v: u32,
    rng: &mut impl Rng,
) -> Result<Dynamics, GenerationError> {
    if v == 0 {
        return Err(GenerationError::ZeroVolatility);
    }
    let n = campaign.len();
    let needed = 3 * v as usize;
    if n < needed {
        return Err(GenerationError::CampaignTooSmall { requests: n, volatility: v, needed });
    }
    let vf = f64::from(v);
    let initial = choose(campaign.iter().map(|r| r.id).collect(), n.div_ceil(3), rng);

    let first = (horizon.start + 2.0 * horizon.duration() / (3.0 * vf)).ceil().max(horizon.start.floor() + 1.0);
    let last = horizon.end.floor();
    let available = if last >= first { (last - first) as usize + 1 } else { 0 };
    if available < v as usize {
        return Err(GenerationError::HorizonTooShort { available, volatility: v });
    }
    let mut times: Vec<Seconds> =
        index::sample(rng, available, v as usize).into_iter().map(|k| first + k as f64).collect();
    times.sort_by(f64::total_cmp);

    let add_target = (2 * n).div_ceil(needed);
    let remove_target = n.div_ceil(needed);
    let mut active: Vec<RequestId> = initial.clone();
    let mut pool: Vec<RequestId> = campaign.iter().map(|r| r.id).filter(|r| initial.binary_search(r).is_err()).collect();
    let opens_after = |r: &RequestId, t: Seconds| campaign[r.index()].window.start > t;

    let mut events = Vec::with_capacity(v as usize);
    for time in times {
        let removable: Vec<RequestId> = active.iter().copied().filter(|r| opens_after(r, time)).collect();
        let removed = choose(removable, remove_target, rng);
        let addable: Vec<RequestId> = pool.iter().copied().filter(|r| opens_after(r, time)).collect();
        let added = choose(addable, add_target, rng);
        active.retain(|r| removed.binary_search(r).is_err());
        active.extend(&added);
        active.sort();
        pool.retain(|r| added.binary_search(r).is_err());
        events.push(ChangeEvent {
            time,
            add_shortfall: add_target - added.len(),
            remove_shortfall: remove_target - removed.len(),
            added,
            removed,
        });
    }
    Ok(Dynamics { initial, events })
}
