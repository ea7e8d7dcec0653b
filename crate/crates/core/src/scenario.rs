//! Scenario construction from a config and its versioned file format.

use crate::config::{ConfigError, ScenarioConfig};
use crate::geometry::{contact_capacity, Constellation, GroundStation, SatelliteTrack};
use crate::problem::generate::{generate_campaign, generate_dynamics, generate_tasks, GenerationError};
use crate::problem::{AgentId, Catalog, CatalogError, DcospInstance, Downlink, DownlinkId, InstanceError};
use crate::rng::{stream, CAMPAIGN_STREAM, DYNAMICS_STREAM, HORIZON_STREAM, VOLUME_STREAM};
use crate::time::TimeInterval;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("scenario file has format version {found}, expected {SCENARIO_FORMAT_VERSION}")]
    Version { found: u32 },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    pub index: usize,
    pub seed: u64,
    pub volatility: u32,
    pub constellation: Constellation,
    pub stations: Vec<GroundStation>,
    pub dcosp: DcospInstance,
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        if s.format_version != SCENARIO_FORMAT_VERSION {
            return Err(ScenarioError::Version { found: s.format_version });
        }
        s.dcosp.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Contacts with every station, merged where passes over different stations overlap.
fn agent_contacts(track: &SatelliteTrack, stations: &[GroundStation]) -> Vec<(TimeInterval, u64)> {
    let mut all: Vec<(TimeInterval, f64)> = stations
        .iter()
        .flat_map(|st| track.contact_windows(st).into_iter().map(move |w| (w, st.downlink_rate)))
        .collect();
    all.sort_by(|a, b| a.0.start.total_cmp(&b.0.start));
    let mut merged: Vec<(TimeInterval, f64)> = Vec::new();
    for (w, rate) in all {
        match merged.last_mut() {
            Some((last, r)) if w.start <= last.end => {
                *last = last.hull(&w);
                *r = r.max(rate);
            }
            _ => merged.push((w, rate)),
        }
    }
    merged.into_iter().map(|(w, rate)| (w, contact_capacity(&w, rate))).collect()
}

/// Builds scenario `index` of the suite described by `config`.
pub fn build_scenario(config: &ScenarioConfig, index: usize) -> Result<Scenario, ScenarioError> {
    config.validate()?;
    let seed = config.seeds.scenario + index as u64;
    let constellation = config.constellation.resolve()?;
    let targets = config.targets.resolve()?;

    let start = if config.horizon.random_start {
        let range = config.horizon.start_range_s.floor() as u64;
        stream(seed, HORIZON_STREAM).random_range(0..range) as f64
    } else {
        0.0
    };
    let horizon = TimeInterval::new(start, start + config.horizon.length_s);

    let campaign = generate_campaign(&targets, horizon, config.periodicity, &mut stream(seed, CAMPAIGN_STREAM))?;

    struct Visibility {
        access: Vec<Vec<TimeInterval>>,
        contacts: Vec<(TimeInterval, u64)>,
    }
    let visibility: Vec<Visibility> = constellation
        .satellites
        .par_iter()
        .map(|sat| {
            let track = SatelliteTrack::new(constellation.plane_of(sat), sat.index_in_plane, horizon, config.scan_step_s);
            Visibility {
                access: targets.iter().map(|t| track.access_windows(sat, t)).collect(),
                contacts: agent_contacts(&track, &config.stations),
            }
        })
        .collect();

    let mut volume_rng = stream(seed, VOLUME_STREAM);
    let mut tasks = Vec::new();
    let mut downlinks = Vec::new();
    for (k, vis) in visibility.iter().enumerate() {
        let agent = AgentId(k as u32);
        let mine = generate_tasks(
            agent,
            &campaign,
            |target| &vis.access[target as usize][..],
            &config.tasks,
            tasks.len() as u32,
            &mut volume_rng,
        )?;
        tasks.extend(mine);
        for &(interval, capacity) in &vis.contacts {
            downlinks.push(Downlink { id: DownlinkId(downlinks.len() as u32), agent, interval, capacity });
        }
    }

    let mut dyn_rng = stream(seed, DYNAMICS_STREAM);
    let volatility = config.volatility.sample(&mut dyn_rng)?;
    let dynamics = generate_dynamics(&campaign, horizon, volatility, &mut dyn_rng)?;
    let catalog = Catalog::new(constellation.satellites.clone(), campaign, tasks, downlinks)?;
    let dcosp = DcospInstance::new(horizon, catalog, dynamics.initial, dynamics.events)?.with_targets(targets);
    Ok(Scenario {
        format_version: SCENARIO_FORMAT_VERSION,
        name: config.name.clone(),
        index,
        seed,
        volatility,
        constellation,
        stations: config.stations.clone(),
        dcosp,
    })
}

/// Every scenario of the suite, built in parallel and returned in index order.
pub fn build_suite(config: &ScenarioConfig) -> Result<Vec<Scenario>, ScenarioError> {
    (0..config.scenarios).into_par_iter().map(|k| build_scenario(config, k)).collect()
}
