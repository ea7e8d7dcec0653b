//! Geometric neighborhood decomposition: agents are grouped by orbital plane
//! and phase, and each request is handed to the neighborhoods best placed to
//! serve it. No agent communication is involved.

use crate::geometry::Target;
use crate::problem::{AgentId, Catalog, RequestId};
use crate::time::Seconds;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("neighborhood size must be at least 1")]
    ZeroSize,
    #[error("allocation count n must be at least 1")]
    ZeroAllocation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GndParams {
    /// Neighborhoods each request is allocated to.
    pub n: usize,
    /// Satellites per neighborhood within a plane.
    pub neighborhood_size: usize,
    /// Edge of the lat/lon tile grid used to bias requests to members.
    pub tile_deg: f64,
    pub seed: u64,
}

impl Default for GndParams {
    fn default() -> Self {
        Self { n: 2, neighborhood_size: 5, tile_deg: 10.0, seed: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub id: usize,
    pub plane: u32,
    /// Sorted member agents A_N.
    pub members: Vec<AgentId>,
    /// Allocated requests R_N.
    pub requests: BTreeSet<RequestId>,
    /// The member each allocated request is biased towards.
    pub bias: BTreeMap<RequestId, AgentId>,
}

impl Neighborhood {
    pub fn contains(&self, agent: AgentId) -> bool {
        self.members.binary_search(&agent).is_ok()
    }
}

/// Splits every plane into runs of `size` consecutive satellites by phase.
pub fn partition_agents(catalog: &Catalog, size: usize) -> Result<Vec<Neighborhood>, DecompositionError> {
    if size == 0 {
        return Err(DecompositionError::ZeroSize);
    }
    let mut planes: BTreeMap<u32, Vec<(u32, AgentId)>> = BTreeMap::new();
    for a in catalog.agents() {
        planes.entry(a.plane).or_default().push((a.index_in_plane, AgentId(a.id)));
    }
    let mut out = Vec::new();
    for (plane, mut sats) in planes {
        sats.sort();
        for chunk in sats.chunks(size) {
            let mut members: Vec<AgentId> = chunk.iter().map(|&(_, a)| a).collect();
            members.sort();
            out.push(Neighborhood {
                id: out.len(),
                plane,
                members,
                requests: BTreeSet::new(),
                bias: BTreeMap::new(),
            });
        }
    }
    Ok(out)
}

/// Agents with at least one schedulable task for a request after `now`.
pub fn candidate_agents(catalog: &Catalog, request: RequestId, now: Seconds) -> BTreeSet<AgentId> {
    catalog
        .tasks_of_request(request)
        .iter()
        .map(|&t| catalog.task(t))
        .filter(|t| t.interval.start > now && !catalog.is_blocked(t.id))
        .map(|t| t.agent)
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SupplyTable {
    /// Per request: plane → satellites of that plane able to serve it.
    pub per_plane: BTreeMap<RequestId, BTreeMap<u32, u32>>,
    pub total: BTreeMap<RequestId, u32>,
}

impl SupplyTable {
    pub fn total(&self, r: RequestId) -> u32 {
        self.total.get(&r).copied().unwrap_or(0)
    }
}

pub fn compute_supply(catalog: &Catalog, requests: &BTreeSet<RequestId>, now: Seconds) -> SupplyTable {
    let mut table = SupplyTable::default();
    for &r in requests {
        let mut planes: BTreeMap<u32, u32> = BTreeMap::new();
        for a in candidate_agents(catalog, r, now) {
            *planes.entry(catalog.agent(a).plane).or_default() += 1;
        }
        table.total.insert(r, planes.values().sum());
        table.per_plane.insert(r, planes);
    }
    table
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub neighborhoods: Vec<Neighborhood>,
    pub unallocatable: Vec<RequestId>,
    pub supply: SupplyTable,
}

impl Decomposition {
    pub fn membership_of(&self, agent: AgentId) -> Option<usize> {
        self.neighborhoods.iter().position(|n| n.contains(agent))
    }

    /// Neighborhood index of every agent.
    pub fn membership(&self, agents: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; agents];
        for n in &self.neighborhoods {
            for a in &n.members {
                out[a.index()] = n.id;
            }
        }
        out
    }
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Tile key of a target; unknown targets fall back to their id.
fn tile_key(target_id: u32, targets: &[Target], tile_deg: f64) -> u64 {
    match targets.get(target_id as usize).filter(|t| t.id == target_id) {
        Some(t) => {
            let row = ((t.latitude_deg + 90.0) / tile_deg).floor() as i64;
            let col = ((t.longitude_deg + 180.0) / tile_deg).floor() as i64;
            ((row as u64) << 32) ^ (col as u64)
        }
        None => u64::from(target_id) | 1 << 63,
    }
}

/// Allocates each request to the `n` neighborhoods with the highest ratio of
/// supply to already-allocated overlapping requests, in ascending order of
/// total supply.
pub fn allocate(
    catalog: &Catalog,
    targets: &[Target],
    requests: &BTreeSet<RequestId>,
    mut neighborhoods: Vec<Neighborhood>,
    supply: SupplyTable,
    now: Seconds,
    params: &GndParams,
) -> Result<Decomposition, DecompositionError> {
    if params.n == 0 {
        return Err(DecompositionError::ZeroAllocation);
    }
    let mut order: Vec<RequestId> = requests.iter().copied().collect();
    order.sort_by_key(|&r| (supply.total(r), r));

    let mut unallocatable = Vec::new();
    for r in order {
        let window = catalog.request(r).window;
        let able = candidate_agents(catalog, r, now);
        let mut scored: Vec<(usize, u64, u64)> = Vec::new();
        for (k, nb) in neighborhoods.iter().enumerate() {
            let local = nb.members.iter().filter(|a| able.contains(a)).count() as u64;
            if local == 0 {
                continue;
            }
            let conflicts =
                nb.requests.iter().filter(|&&o| catalog.request(o).window.overlaps(&window)).count() as u64;
            scored.push((k, local, 1 + conflicts));
        }
        if scored.is_empty() {
            unallocatable.push(r);
            continue;
        }
        // descending local/(1+conflicts), compared exactly; ties by neighborhood id
        scored.sort_by(|a, b| (b.1 * a.2).cmp(&(a.1 * b.2)).then(a.0.cmp(&b.0)));
        let key = mix(tile_key(catalog.request(r).target, targets, params.tile_deg) ^ mix(params.seed));
        for &(k, _, _) in scored.iter().take(params.n) {
            let nb = &mut neighborhoods[k];
            let serving: Vec<AgentId> = nb.members.iter().copied().filter(|a| able.contains(a)).collect();
            let biased = serving[(key % serving.len() as u64) as usize];
            nb.requests.insert(r);
            nb.bias.insert(r, biased);
        }
    }
    Ok(Decomposition { neighborhoods, unallocatable, supply })
}

/// GND(n) over the requests active at `now`.
pub fn gnd(
    catalog: &Catalog,
    targets: &[Target],
    requests: &BTreeSet<RequestId>,
    now: Seconds,
    params: &GndParams,
) -> Result<Decomposition, DecompositionError> {
    let neighborhoods = partition_agents(catalog, params.neighborhood_size)?;
    let supply = compute_supply(catalog, requests, now);
    allocate(catalog, targets, requests, neighborhoods, supply, now, params)
}

/// The trivial decomposition: one neighborhood holding every agent and
/// request, with no per-agent bias.
pub fn single_neighborhood(catalog: &Catalog, requests: &BTreeSet<RequestId>, now: Seconds) -> Decomposition {
    let members: Vec<AgentId> = catalog.agent_ids().collect();
    let (allocated, unallocatable): (Vec<RequestId>, Vec<RequestId>) =
        requests.iter().copied().partition(|&r| !candidate_agents(catalog, r, now).is_empty());
    let allocated: BTreeSet<RequestId> = allocated.into_iter().collect();
    Decomposition {
        neighborhoods: vec![Neighborhood { id: 0, plane: 0, members, requests: allocated, bias: BTreeMap::new() }],
        unallocatable,
        supply: SupplyTable::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SatelliteSpec, DEFAULT_MEMORY_CAPACITY};
    use crate::problem::CatalogBuilder;
    use proptest::prelude::*;

    fn sats(planes: &[u32]) -> Vec<SatelliteSpec> {
        let mut out = Vec::new();
        for (p, &count) in planes.iter().enumerate() {
            for i in 0..count {
                out.push(SatelliteSpec {
                    id: out.len() as u32,
                    plane: p as u32,
                    index_in_plane: i,
                    max_off_nadir_deg: 45.0,
                    memory_capacity: DEFAULT_MEMORY_CAPACITY,
                });
            }
        }
        out
    }

    #[test]
    fn size_one_isolates_every_agent() {
        let c = CatalogBuilder::with_agents(sats(&[3, 2])).build();
        let parts = partition_agents(&c, 1).unwrap();
        assert_eq!(parts.len(), 5);
        assert!(parts.iter().all(|n| n.members.len() == 1));
    }

    #[test]
    fn ninety_five_in_tens() {
        let c = CatalogBuilder::with_agents(sats(&[95])).build();
        let sizes: Vec<usize> = partition_agents(&c, 10).unwrap().iter().map(|n| n.members.len()).collect();
        assert_eq!(sizes, [10, 10, 10, 10, 10, 10, 10, 10, 10, 5]);
    }

    proptest! {
        #[test]
        fn partition_is_a_partition(planes in prop::collection::vec(1u32..20, 1..6), size in 1usize..8) {
            let c = CatalogBuilder::with_agents(sats(&planes)).build();
            let parts = partition_agents(&c, size).unwrap();
            let mut seen = BTreeSet::new();
            for n in &parts {
                prop_assert!(n.members.len() <= size);
                let plane = c.agent(n.members[0]).plane;
                for a in &n.members {
                    prop_assert!(seen.insert(*a));
                    prop_assert_eq!(c.agent(*a).plane, plane);
                }
            }
            prop_assert_eq!(seen.len(), c.agent_count());
        }
    }

    #[test]
    fn zero_size_is_rejected() {
        let c = CatalogBuilder::with_agents(sats(&[2])).build();
        assert_eq!(partition_agents(&c, 0), Err(DecompositionError::ZeroSize));
    }

    #[test]
    fn supply_counts_satellites_per_plane() {
        let mut b = CatalogBuilder::with_agents(sats(&[14, 14]));
        let seen = b.request(0.0, 10_000.0);
        let unseen = b.request(0.0, 10_000.0);
        for a in 0..14 {
            b.task(seen, a, 100.0 + f64::from(a), 1);
            b.task(seen, a, 500.0 + f64::from(a), 1);
        }
        let c = b.build();
        let requests: BTreeSet<_> = [seen, unseen].into();
        let s = compute_supply(&c, &requests, 0.0);
        assert_eq!(s.total(seen), 14);
        assert_eq!(s.per_plane[&seen].get(&0), Some(&14));
        assert_eq!(s.per_plane[&seen].get(&1), None);
        assert_eq!(s.total(unseen), 0);
        let d = allocate(&c, &[], &requests, partition_agents(&c, 5).unwrap(), s, 0.0, &GndParams::default()).unwrap();
        assert_eq!(d.unallocatable, vec![unseen]);
    }

    #[test]
    fn empty_neighborhood_beats_conflicted_one() {
        // agents 0,1 form neighborhood 0 and agents 2,3 neighborhood 1; equal supply
        let mut b = CatalogBuilder::with_agents(sats(&[4]));
        let first = b.request(0.0, 5_000.0);
        let second = b.request(1_000.0, 6_000.0);
        b.task(first, 0, 100.0, 1);
        b.task(second, 0, 1_100.0, 1);
        b.task(second, 2, 1_100.0, 1);
        let c = b.build();
        let requests: BTreeSet<_> = [first, second].into();
        let supply = compute_supply(&c, &requests, 0.0);
        let params = GndParams { n: 1, neighborhood_size: 2, ..GndParams::default() };
        let d = allocate(&c, &[], &requests, partition_agents(&c, 2).unwrap(), supply, 0.0, &params).unwrap();
        assert!(d.neighborhoods[0].requests.contains(&first));
        // neighborhood 0 scores 1/2 for `second`, neighborhood 1 scores 1/1
        assert!(d.neighborhoods[1].requests.contains(&second));
        assert!(!d.neighborhoods[0].requests.contains(&second));
    }

    fn random_catalog(seed: u64) -> Catalog {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, 9);
        let mut b = CatalogBuilder::with_agents(sats(&[6, 6, 4]));
        for _ in 0..25 {
            let s: f64 = rng.random_range(0.0..20_000.0);
            let r = b.request(s, s + 5_000.0);
            for a in 0..16 {
                if rng.random_bool(0.3) {
                    b.task(r, a, s + rng.random_range(0.0..4_000.0), 10);
                }
            }
        }
        b.build()
    }

    proptest! {
        #[test]
        fn every_request_lands_in_min_n_positive(seed in 0u64..500, n in 1usize..5) {
            let c = random_catalog(seed);
            let requests: BTreeSet<_> = (0..25).map(RequestId).collect();
            let params = GndParams { n, neighborhood_size: 3, ..GndParams::default() };
            let d = gnd(&c, &[], &requests, 0.0, &params).unwrap();
            for &r in &requests {
                let able = candidate_agents(&c, r, 0.0);
                let positive = d.neighborhoods.iter().filter(|nb| nb.members.iter().any(|a| able.contains(a))).count();
                let holding: Vec<_> = d.neighborhoods.iter().filter(|nb| nb.requests.contains(&r)).collect();
                prop_assert_eq!(holding.len(), n.min(positive));
                prop_assert_eq!(positive == 0, d.unallocatable.contains(&r));
                for nb in holding {
                    let biased = nb.bias[&r];
                    prop_assert!(nb.contains(biased));
                    prop_assert!(able.contains(&biased));
                }
            }
            // deterministic
            prop_assert_eq!(gnd(&c, &[], &requests, 0.0, &params).unwrap(), d);
        }
    }

    #[test]
    fn saturated_n_puts_requests_everywhere_possible() {
        let c = random_catalog(7);
        let requests: BTreeSet<_> = (0..25).map(RequestId).collect();
        let params = GndParams { n: 100, neighborhood_size: 3, ..GndParams::default() };
        let d = gnd(&c, &[], &requests, 0.0, &params).unwrap();
        for nb in &d.neighborhoods {
            for &r in &requests {
                let able = candidate_agents(&c, r, 0.0);
                assert_eq!(nb.requests.contains(&r), nb.members.iter().any(|a| able.contains(a)));
            }
        }
    }

    #[test]
    fn wider_cone_never_lowers_supply() {
        use crate::geometry::{Constellation, SatelliteTrack, Target};
        use crate::time::TimeInterval;
        let horizon = TimeInterval::new(0.0, 86_400.0);
        let target = Target { id: 0, latitude_deg: 40.0, longitude_deg: -100.0 };
        let count = |off: f64| {
            let mut con = Constellation::walker(500.0);
            con.satellites.iter_mut().for_each(|s| s.max_off_nadir_deg = off);
            let mut b = CatalogBuilder::with_agents(con.satellites.clone());
            let r = b.request(0.0, 86_400.0);
            for s in con.satellites.iter().take(28) {
                let track = SatelliteTrack::new(con.plane_of(s), s.index_in_plane, horizon, 10.0);
                for w in track.access_windows(s, &target) {
                    if w.duration() >= 63.0 {
                        b.task(r, s.id, w.start, 1);
                    }
                }
            }
            let c = b.build();
            compute_supply(&c, &[r].into(), -1.0).total(r)
        };
        assert!(count(45.0) >= count(30.0));
    }
}
