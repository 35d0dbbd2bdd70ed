//! Run orchestration: user drops, mobility, and the per-slot
//! channel -> schedule -> transmit -> account loop.
//!
//! Each slot:
//! 1. users walk `speed * slot_duration` along their heading;
//! 2. channels are refreshed, with scatterers redrawn every coherence block
//!    and delay phases advanced by the user's displacement in between;
//! 3. every resource block is scheduled on the channel state the scheduler
//!    sees (one slot old by default);
//! 4. the realized SINR on the current channels decides whether each
//!    transport block decodes;
//! 5. the PF averages are updated and delivered bits accumulated.
//!
//! Runs with the same master seed and run index share drops, trajectories and
//! fading in every serving mode; only serving sets and what follows differ.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{generate_paths, ChannelVector, LinkResponse};
use crate::link_adaptation::McsTable;
use crate::phy::{noise_power, LinkBudget, PhyError};
use crate::scenario::{Point, Scenario, ScenarioError, ServingMode};
use crate::scheduler::{link_budgets, schedule_rb, PfState, RbContext, ScheduledRb, SchedulerError};
use crate::seeds::{derive_seed, mix, rng_from, Purpose};

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;
const MAX_HEADING_DRAWS: usize = 64;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot place users: no outdoor area found inside the bounds")]
    Placement,
    #[error("slot {slot}, RB {rb}: {source}")]
    Slot {
        slot: usize,
        rb: usize,
        #[source]
        source: SchedulerError,
    },
    #[error("slot {slot}, RB {rb}, user {user}: {source}")]
    Link {
        slot: usize,
        rb: usize,
        user: usize,
        #[source]
        source: PhyError,
    },
    #[error("campaign needs at least one run and one mode")]
    EmptyCampaign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: usize,
    pub position: Point,
    /// Heading in radians.
    pub direction: f64,
    pub delivered_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub run_index: usize,
    /// Master seed of the campaign; per-purpose seeds are derived from it.
    pub rng_seed: u64,
    pub num_slots: usize,
    pub mode: ServingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run_index: usize,
    pub mode: ServingMode,
    pub num_slots: usize,
    /// Average throughput of each user over the run, bits/s.
    pub user_throughput_bps: Vec<f64>,
    pub delivered_bits: f64,
    /// Transport blocks attempted (one per scheduled user per RB with an MCS).
    pub transmissions: u64,
    pub block_errors: u64,
    /// Sum over slots and RBs of the number of co-scheduled users.
    pub scheduled_layers: u64,
}

/// Hooks into the slot loop, for traces and audits.
pub trait SlotObserver {
    /// Called after channels are refreshed. `channels[rb][k][l]`.
    fn on_channels(&mut self, _slot: usize, _users: &[UserState], _channels: &[Vec<Vec<ChannelVector>>]) {}
    /// Called once per slot with every RB's allocation and realized budgets.
    fn on_slot(&mut self, _slot: usize, _rbs: &[ScheduledRb], _realized: &[Vec<LinkBudget>]) {}
}

impl SlotObserver for () {}

/// `num_users` positions uniform over the outdoor area, headings uniform over
/// `[0, 2 pi)`.
pub fn drop_users(scenario: &Scenario, seed: u64) -> Result<Vec<UserState>, EngineError> {
    let mut rng = rng_from(seed);
    let b = scenario.bounds;
    (0..scenario.num_users)
        .map(|id| {
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let p = Point::new(
                    rng.random_range(b.x_min_m..=b.x_max_m),
                    rng.random_range(b.y_min_m..=b.y_max_m),
                );
                if !scenario.is_indoor(p) {
                    return Ok(UserState {
                        id,
                        position: p,
                        direction: rng.random_range(0.0..TAU),
                        delivered_bits: 0.0,
                    });
                }
            }
            Err(EngineError::Placement)
        })
        .collect()
}

fn walk_is_clear(scenario: &Scenario, from: Point, to: Point) -> bool {
    // Sample the segment every half meter so long steps cannot jump a wall.
    let n = (from.distance(&to) / 0.5).ceil().max(1.0) as usize;
    (1..=n).all(|i| {
        let t = i as f64 / n as f64;
        scenario.is_outdoor(Point::new(from.x + t * (to.x - from.x), from.y + t * (to.y - from.y)))
    })
}

/// Advances a user by `speed * dt` along its heading. A step that would leave
/// the bounds or enter a building is retried with fresh uniform headings; if
/// none works the user stays put.
pub fn step_mobility<R: Rng + ?Sized>(user: &UserState, dt: f64, scenario: &Scenario, rng: &mut R) -> UserState {
    let step = scenario.user_speed_mps * dt;
    let mut direction = user.direction;
    for _ in 0..MAX_HEADING_DRAWS {
        let next = Point::new(
            user.position.x + step * direction.cos(),
            user.position.y + step * direction.sin(),
        );
        if walk_is_clear(scenario, user.position, next) {
            return UserState {
                position: next,
                direction,
                ..user.clone()
            };
        }
        direction = rng.random_range(0.0..TAU);
    }
    UserState {
        direction,
        ..user.clone()
    }
}

/// Serving base stations (ascending ids) from each BS's RB-averaged gain:
/// the `C` strongest for the mode's cluster size, ties to the lower id.
pub fn serving_set(avg_gain: &[f64], mode: ServingMode) -> Vec<usize> {
    let size = mode.cluster_size(avg_gain.len()).min(avg_gain.len());
    let mut order: Vec<usize> = (0..avg_gain.len()).collect();
    order.sort_by(|&a, &b| avg_gain[b].total_cmp(&avg_gain[a]).then(a.cmp(&b)));
    order.truncate(size);
    order.sort_unstable();
    order
}

/// RB-averaged `|h_kl|^2` of user `k` toward each BS.
pub fn average_gains(channels: &[Vec<Vec<ChannelVector>>], k: usize) -> Vec<f64> {
    let num_bs = channels.first().map_or(0, |rb| rb[k].len());
    let mut avg = vec![0.0; num_bs];
    for rb in channels {
        for (a, h) in avg.iter_mut().zip(&rb[k]) {
            *a += h.norm_sqr();
        }
    }
    let n = channels.len().max(1) as f64;
    avg.iter_mut().for_each(|a| *a /= n);
    avg
}

/// Channels of every user on every RB, indexed `[rb][k][l]`.
fn build_channels(scenario: &Scenario, links: &[Vec<LinkResponse>]) -> Vec<Vec<Vec<ChannelVector>>> {
    let num_rb = scenario.band.num_resource_blocks;
    // [k][l][rb] first so each link's phases are computed together.
    let per_user: Vec<Vec<Vec<ChannelVector>>> = links
        .par_iter()
        .enumerate()
        .map(|(k, user_links)| {
            user_links
                .iter()
                .map(|link| (0..num_rb).map(|rb| link.channel_vector(scenario, k, rb)).collect())
                .collect()
        })
        .collect();
    (0..num_rb)
        .map(|rb| {
            per_user
                .iter()
                .map(|user| user.iter().map(|link| link[rb].clone()).collect())
                .collect()
        })
        .collect()
}

pub fn run_simulation(scenario: &Scenario, mcs: &McsTable, config: &RunConfig) -> Result<RunMetrics, EngineError> {
    run_simulation_observed(scenario, mcs, config, &mut ())
}

pub fn run_simulation_observed(
    scenario: &Scenario,
    mcs: &McsTable,
    config: &RunConfig,
    observer: &mut dyn SlotObserver,
) -> Result<RunMetrics, EngineError> {
    let band = &scenario.band;
    let num_rb = band.num_resource_blocks;
    let params = &scenario.scheduler;
    let dt = band.slot_duration_s;
    let coherence = scenario.channel.coherence_slots;

    let mut users = drop_users(scenario, derive_seed(config.rng_seed, config.run_index, Purpose::Drop))?;
    let num_users = users.len();
    let mut mobility = rng_from(derive_seed(config.rng_seed, config.run_index, Purpose::Mobility));
    let fading = derive_seed(config.rng_seed, config.run_index, Purpose::Fading);

    let tx_power_w: Vec<f64> = scenario.base_stations.iter().map(|bs| bs.tx_power_w()).collect();
    let noise_w = noise_power(band, scenario.noise_figure_db);
    let mut pf = PfState::new(num_users, params.pf_horizon_slots, params.pf_floor_bps);

    let mut metrics = RunMetrics {
        run_index: config.run_index,
        mode: config.mode,
        num_slots: config.num_slots,
        user_throughput_bps: vec![0.0; num_users],
        delivered_bits: 0.0,
        transmissions: 0,
        block_errors: 0,
        scheduled_layers: 0,
    };
    if num_users == 0 {
        return Ok(metrics);
    }

    let mut block_links: Vec<Vec<LinkResponse>> = Vec::new();
    let mut anchors: Vec<Point> = Vec::new();
    let mut previous: Option<Vec<Vec<Vec<ChannelVector>>>> = None;
    let all_users: Vec<usize> = (0..num_users).collect();

    for slot in 0..config.num_slots {
        if slot > 0 {
            for u in users.iter_mut() {
                *u = step_mobility(u, dt, scenario, &mut mobility);
            }
        }

        let links: Vec<Vec<LinkResponse>> = if slot % coherence == 0 {
            let block = (slot / coherence) as u64;
            block_links = users
                .par_iter()
                .map(|u| {
                    let seed = mix(mix(fading, block), u.id as u64);
                    scenario
                        .base_stations
                        .iter()
                        .map(|bs| LinkResponse::new(scenario, bs, u.position, generate_paths(scenario, bs, u.position, seed)))
                        .collect()
                })
                .collect();
            anchors = users.iter().map(|u| u.position).collect();
            block_links.clone()
        } else {
            block_links
                .iter()
                .zip(&anchors)
                .zip(&users)
                .map(|((row, anchor), u)| {
                    let delta = Point::new(u.position.x - anchor.x, u.position.y - anchor.y);
                    row.iter().map(|link| link.displaced(delta)).collect()
                })
                .collect()
        };
        let current = build_channels(scenario, &links);
        observer.on_channels(slot, &users, &current);

        let csi = match (&previous, params.csi_delay_slots) {
            (Some(prev), 1) => prev,
            _ => &current,
        };
        let serving_sets: Vec<Vec<usize>> = (0..num_users)
            .map(|k| serving_set(&average_gains(csi, k), config.mode))
            .collect();

        let scheduled: Vec<ScheduledRb> = (0..num_rb)
            .into_par_iter()
            .map(|rb| {
                let ctx = RbContext {
                    rb,
                    channels: &csi[rb],
                    serving_sets: &serving_sets,
                    tx_power_w: &tx_power_w,
                    num_rb,
                    noise_w,
                    rb_bandwidth_hz: band.rb_bandwidth_hz,
                    mcs,
                    correlation_threshold: params.correlation_threshold,
                };
                schedule_rb(&ctx, &all_users, &pf).map_err(|source| EngineError::Slot { slot, rb, source })
            })
            .collect::<Result<_, _>>()?;

        let realized: Vec<Vec<LinkBudget>> = scheduled
            .par_iter()
            .map(|s| {
                link_budgets(&current[s.rb], &s.users, &s.precoders, &s.power, &s.serving_sets, noise_w).map_err(
                    |source| EngineError::Link {
                        slot,
                        rb: s.rb,
                        user: s.users.first().copied().unwrap_or(0),
                        source,
                    },
                )
            })
            .collect::<Result<_, _>>()?;

        let mut bits = vec![0.0; num_users];
        for (s, budgets) in scheduled.iter().zip(&realized) {
            metrics.scheduled_layers += s.users.len() as u64;
            for ((&k, chosen), budget) in s.users.iter().zip(&s.mcs).zip(budgets) {
                let Some(m) = *chosen else { continue };
                metrics.transmissions += 1;
                let eff = mcs.transport_outcome(m, budget.sinr_db());
                if eff == 0.0 {
                    metrics.block_errors += 1;
                }
                bits[k] += eff * band.rb_bandwidth_hz * dt;
            }
        }
        observer.on_slot(slot, &scheduled, &realized);

        pf.update(&bits, dt);
        for (u, b) in users.iter_mut().zip(&bits) {
            u.delivered_bits += b;
        }
        previous = Some(current);
    }

    let duration = config.num_slots as f64 * dt;
    for (out, u) in metrics.user_throughput_bps.iter_mut().zip(&users) {
        *out = if duration > 0.0 { u.delivered_bits / duration } else { 0.0 };
    }
    metrics.delivered_bits = users.iter().map(|u| u.delivered_bits).sum();
    Ok(metrics)
}

/// All runs of one serving mode and their pooled per-user averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: ServingMode,
    pub runs: Vec<RunMetrics>,
    /// Per-user averages of every run, concatenated in run order.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub master_seed: u64,
    pub num_runs: usize,
    pub num_slots: usize,
    pub modes: Vec<ModeResult>,
}

impl Campaign {
    pub fn mode(&self, mode: ServingMode) -> Option<&ModeResult> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Every (run, mode) pair with run-indexed seeds. Runs execute in parallel;
/// results do not depend on the number of worker threads.
pub fn run_campaign(
    scenario: &Scenario,
    mcs: &McsTable,
    master_seed: u64,
    num_runs: usize,
    modes: &[ServingMode],
) -> Result<Campaign, EngineError> {
    if num_runs == 0 || modes.is_empty() {
        return Err(EngineError::EmptyCampaign);
    }
    let jobs: Vec<(usize, usize)> = (0..modes.len())
        .flat_map(|m| (0..num_runs).map(move |r| (m, r)))
        .collect();
    let results: Vec<RunMetrics> = jobs
        .par_iter()
        .map(|&(m, r)| {
            let mut mode_scenario = scenario.clone();
            mode_scenario.serving_mode = modes[m];
            let config = RunConfig {
                run_index: r,
                rng_seed: master_seed,
                num_slots: scenario.num_slots,
                mode: modes[m],
            };
            run_simulation(&mode_scenario, mcs, &config)
        })
        .collect::<Result<_, _>>()?;

    let mut results = results.into_iter();
    let modes = modes
        .iter()
        .map(|&mode| {
            let runs: Vec<RunMetrics> = results.by_ref().take(num_runs).collect();
            let samples = runs.iter().flat_map(|r| r.user_throughput_bps.iter().copied()).collect();
            ModeResult { mode, runs, samples }
        })
        .collect();
    Ok(Campaign {
        master_seed,
        num_runs,
        num_slots: scenario.num_slots,
        modes,
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = all cores).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Building, Rect};

    #[test]
    fn no_users_no_drops() {
        let s = Scenario {
            num_users: 0,
            ..Scenario::default()
        };
        assert!(drop_users(&s, 1).unwrap().is_empty());
    }

    #[test]
    fn drops_are_reproducible_and_outdoor() {
        let s = Scenario::default();
        let a = drop_users(&s, 99).unwrap();
        assert_eq!(a, drop_users(&s, 99).unwrap());
        assert_ne!(a, drop_users(&s, 100).unwrap());
        for u in &a {
            assert!(s.is_outdoor(u.position));
            assert!((0.0..TAU).contains(&u.direction));
        }
    }

    #[test]
    fn fully_built_area_cannot_host_users() {
        let mut s = Scenario::default();
        s.buildings = vec![Building::new(s.bounds, 50.0)];
        s.base_stations.truncate(1);
        s.base_stations[0].height_m = 60.0;
        assert!(matches!(drop_users(&s, 1), Err(EngineError::Placement)));
    }

    #[test]
    fn straight_walk_in_open_area() {
        let s = Scenario {
            buildings: vec![],
            ..Scenario::default()
        };
        let u = UserState {
            id: 0,
            position: Point::new(100.0, 100.0),
            direction: 0.0,
            delivered_bits: 0.0,
        };
        let mut rng = rng_from(0);
        let next = step_mobility(&u, 2.0, &s, &mut rng);
        assert!((next.position.x - 103.0).abs() < 1e-12);
        assert_eq!(next.position.y, 100.0);
    }

    #[test]
    fn walking_into_a_wall_turns_around() {
        let mut s = Scenario::default();
        s.buildings = vec![Building::new(Rect::new(200.0, 0.0, 300.0, 552.0), 20.0)];
        let u = UserState {
            id: 0,
            position: Point::new(199.9, 50.0),
            direction: 0.0,
            delivered_bits: 0.0,
        };
        let mut rng = rng_from(5);
        let next = step_mobility(&u, 1.0, &s, &mut rng);
        assert!(s.is_outdoor(next.position));
        assert_ne!(next.direction, 0.0);
    }

    #[test]
    fn serving_set_modes() {
        let gains = [0.2, 0.9, 0.9, 0.1, 0.5, 0.3];
        assert_eq!(serving_set(&gains, ServingMode::UserCentric), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(serving_set(&gains, ServingMode::NetworkCentric), vec![1]);
        assert_eq!(serving_set(&gains, ServingMode::Cluster(1)), vec![1]);
        assert_eq!(serving_set(&gains, ServingMode::Cluster(3)), vec![1, 2, 4]);
    }

    #[test]
    fn zero_slots_zero_throughput() {
        let s = Scenario::default();
        let cfg = RunConfig {
            run_index: 0,
            rng_seed: 3,
            num_slots: 0,
            mode: ServingMode::UserCentric,
        };
        let m = run_simulation(&s, &McsTable::default(), &cfg).unwrap();
        assert_eq!(m.user_throughput_bps, vec![0.0; s.num_users]);
        assert_eq!(m.transmissions, 0);
    }
}
