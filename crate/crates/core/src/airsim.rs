//! Seeded simulation of aircraft trajectories and range-limited sensors.
//!
//! Each case owns a ChaCha8 stream seeded from a SplitMix64 mix of the
//! corpus seed and the case index, so every artifact of a case is a pure
//! function of `(params, seed)` on any platform. Draw order within a case:
//! base speeds, then per aircraft its start and heading, then sensor
//! centres, then each aircraft's velocity noise step by step.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest fleet the decision procedures accept; interval counting
/// enumerates every subset of up to this many aircraft.
pub const MAX_AIRCRAFT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("sensor radius must lie in (0, 0.5), got {0}")]
    InvalidRadius(f64),
    #[error("need between 2 and {MAX_AIRCRAFT} aircraft, got {0}")]
    AircraftCount(usize),
    #[error("need at least one sensor")]
    NoSensors,
    #[error("time step must be positive and divide the horizon, got dt={dt} horizon={horizon}")]
    TimeGrid { dt: f64, horizon: f64 },
    #[error("invalid speed range [{0}, {1}]")]
    SpeedRange(f64, f64),
    #[error("{0} must be non-negative and finite")]
    Parameter(&'static str),
}

/// Corpus-wide generation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub aircraft: usize,
    pub sensors: usize,
    pub radius: f64,
    pub dt: f64,
    pub horizon: f64,
    pub sigma2: f64,
    pub period: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Minimum separation enforced between base speeds.
    pub speed_gap: f64,
    /// Starts are drawn uniformly from `[0, start_extent]²`.
    pub start_extent: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            aircraft: 3,
            sensors: 4,
            radius: 0.3,
            dt: 0.01,
            horizon: 1.0,
            sigma2: 0.2,
            period: 1.0,
            speed_min: 0.4,
            speed_max: 0.5,
            speed_gap: 0.005,
            start_extent: 0.2,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(2..=MAX_AIRCRAFT).contains(&self.aircraft) {
            return Err(SimError::AircraftCount(self.aircraft));
        }
        if self.sensors == 0 {
            return Err(SimError::NoSensors);
        }
        check_radius(self.radius)?;
        self.steps()?;
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max && self.speed_max.is_finite())
        {
            return Err(SimError::SpeedRange(self.speed_min, self.speed_max));
        }
        for (name, value) in [
            ("sigma2", self.sigma2),
            ("speed_gap", self.speed_gap),
            ("start_extent", self.start_extent),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SimError::Parameter(name));
            }
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(SimError::Parameter("period"));
        }
        Ok(())
    }

    /// Number of steps of size `dt` covering the horizon.
    pub fn steps(&self) -> Result<usize, SimError> {
        steps_for(self.dt, self.horizon)
    }
}

fn steps_for(dt: f64, horizon: f64) -> Result<usize, SimError> {
    let bad = SimError::TimeGrid { dt, horizon };
    if !(dt > 0.0 && horizon > 0.0 && dt.is_finite() && horizon.is_finite()) {
        return Err(bad);
    }
    let steps = (horizon / dt).round();
    if (steps * dt - horizon).abs() > 1e-9 * horizon.max(1.0) || steps < 1.0 {
        return Err(bad);
    }
    Ok(steps as usize)
}

fn check_radius(r: f64) -> Result<(), SimError> {
    if r > 0.0 && r < 0.5 {
        Ok(())
    } else {
        Err(SimError::InvalidRadius(r))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AircraftConfig {
    pub start: [f64; 2],
    /// Unit heading.
    pub direction: [f64; 2],
    pub base_speed: f64,
    pub sigma2: f64,
    pub period: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub center: [f64; 2],
    pub radius: f64,
    pub interval: f64,
}

impl SensorConfig {
    pub fn covers(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Time-ordered samples `(t, x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    pub samples: Vec<[f64; 3]>,
}

/// Speed readings of one sensor, keyed by 1-based aircraft index. Only
/// aircraft with at least one reading appear.
pub type SensorReadings = BTreeMap<usize, Vec<[f64; 2]>>;

/// One simulated scenario. Aircraft and sensors are numbered from 1 in
/// `truth` and `readings`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: u64,
    pub seed: u64,
    pub params: GenerationParams,
    pub aircraft: Vec<AircraftConfig>,
    pub sensors: Vec<SensorConfig>,
    /// Aircraft indices by ascending base speed.
    pub truth: Vec<usize>,
    pub readings: BTreeMap<usize, SensorReadings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<Vec<Trajectory>>,
}

impl Case {
    /// Re-runs the simulation to recover trajectories dropped at write time.
    pub fn regenerate_trajectories(&self) -> Result<Vec<Trajectory>, SimError> {
        Ok(simulate(&self.params, self.seed)?.trajectories)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-case seed: `splitmix64(global ^ splitmix64(index))`.
pub fn case_seed(global_seed: u64, index: u64) -> u64 {
    splitmix64(global_seed ^ splitmix64(index))
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integrates the noisy velocity from the start point. At `t = k·dt` each
/// component magnitude is drawn from `N(base_speed, sigma2·|sin 2πt| / T)`
/// (negative draws clamp to 0), scaled by the heading and accumulated; the
/// sample at step `k` already includes the step-`k` velocity.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    cfg: &AircraftConfig,
    dt: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory, SimError> {
    let steps = steps_for(dt, horizon)?;
    let mut x = cfg.start[0];
    let mut y = cfg.start[1];
    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let variance = cfg.sigma2 * (2.0 * PI * t).sin().abs() / cfg.period;
        let vx = cfg.direction[0] * draw_speed(cfg.base_speed, variance, rng);
        let vy = cfg.direction[1] * draw_speed(cfg.base_speed, variance, rng);
        x += vx * dt;
        y += vy * dt;
        samples.push([t, x, y]);
    }
    Ok(Trajectory { samples })
}

fn draw_speed<R: Rng + ?Sized>(mean: f64, variance: f64, rng: &mut R) -> f64 {
    if variance <= 0.0 {
        return mean.max(0.0);
    }
    let normal = Normal::new(mean, variance.sqrt()).expect("finite positive deviation");
    normal.sample(rng).max(0.0)
}

/// Sensor centres uniform in `[r, 1-r]²`, so every disc stays on the map.
pub fn place_sensors<R: Rng + ?Sized>(
    count: usize,
    radius: f64,
    interval: f64,
    rng: &mut R,
) -> Result<Vec<SensorConfig>, SimError> {
    check_radius(radius)?;
    Ok((0..count)
        .map(|_| {
            let x = rng.random_range(radius..=1.0 - radius);
            let y = rng.random_range(radius..=1.0 - radius);
            SensorConfig {
                center: [x, y],
                radius,
                interval,
            }
        })
        .collect())
}

/// Instantaneous speeds `(t, |Δp| / Δt)` over every interval whose two
/// endpoints both lie inside the sensor disc.
pub fn sense(trajectory: &Trajectory, sensor: &SensorConfig) -> Vec<[f64; 2]> {
    trajectory
        .samples
        .windows(2)
        .filter(|w| sensor.covers(w[0][1], w[0][2]) && sensor.covers(w[1][1], w[1][2]))
        .map(|w| {
            let dx = w[1][1] - w[0][1];
            let dy = w[1][2] - w[0][2];
            [w[0][0], (dx * dx + dy * dy).sqrt() / sensor.interval]
        })
        .collect()
}

/// Base speeds uniform in the configured range, then nudged apart in
/// ascending order until consecutive speeds differ by at least `gap`.
fn draw_base_speeds<R: Rng + ?Sized>(params: &GenerationParams, rng: &mut R) -> Vec<f64> {
    let mut speeds: Vec<f64> = (0..params.aircraft)
        .map(|_| rng.random_range(params.speed_min..=params.speed_max))
        .collect();
    let mut order: Vec<usize> = (0..speeds.len()).collect();
    order.sort_by(|&a, &b| speeds[a].total_cmp(&speeds[b]).then(a.cmp(&b)));
    for w in 1..order.len() {
        let floor = speeds[order[w - 1]] + params.speed_gap;
        if speeds[order[w]] < floor {
            speeds[order[w]] = floor;
        }
    }
    speeds
}

struct Simulation {
    aircraft: Vec<AircraftConfig>,
    sensors: Vec<SensorConfig>,
    trajectories: Vec<Trajectory>,
}

fn simulate(params: &GenerationParams, seed: u64) -> Result<Simulation, SimError> {
    params.validate()?;
    let mut rng = rng_for(seed);
    let speeds = draw_base_speeds(params, &mut rng);
    let aircraft: Vec<AircraftConfig> = speeds
        .iter()
        .map(|&base_speed| {
            let start = [
                rng.random_range(0.0..=params.start_extent),
                rng.random_range(0.0..=params.start_extent),
            ];
            let angle = rng.random_range(0.0..=FRAC_PI_2);
            AircraftConfig {
                start,
                direction: [angle.cos(), angle.sin()],
                base_speed,
                sigma2: params.sigma2,
                period: params.period,
            }
        })
        .collect();
    let sensors = place_sensors(params.sensors, params.radius, params.dt, &mut rng)?;
    let trajectories = aircraft
        .iter()
        .map(|cfg| simulate_trajectory(cfg, params.dt, params.horizon, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Simulation {
        aircraft,
        sensors,
        trajectories,
    })
}

/// Aircraft indices (1-based) sorted by ascending base speed.
pub fn truth_order(aircraft: &[AircraftConfig]) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=aircraft.len()).collect();
    order.sort_by(|&a, &b| {
        aircraft[a - 1]
            .base_speed
            .total_cmp(&aircraft[b - 1].base_speed)
            .then(a.cmp(&b))
    });
    order
}

/// Builds one case. `full` keeps the trajectories in the record.
pub fn generate_case(
    params: &GenerationParams,
    id: u64,
    seed: u64,
    full: bool,
) -> Result<Case, SimError> {
    let sim = simulate(params, seed)?;
    let readings = sim
        .sensors
        .iter()
        .enumerate()
        .map(|(s, sensor)| {
            let per_aircraft: SensorReadings = sim
                .trajectories
                .iter()
                .enumerate()
                .filter_map(|(a, traj)| {
                    let speeds = sense(traj, sensor);
                    (!speeds.is_empty()).then_some((a + 1, speeds))
                })
                .collect();
            (s + 1, per_aircraft)
        })
        .collect();
    Ok(Case {
        id,
        seed,
        params: params.clone(),
        truth: truth_order(&sim.aircraft),
        aircraft: sim.aircraft,
        sensors: sim.sensors,
        readings,
        trajectories: full.then_some(sim.trajectories),
    })
}

/// Cases `0..count`, generated in parallel, returned in id order.
pub fn generate_corpus(
    params: &GenerationParams,
    global_seed: u64,
    count: u64,
    full: bool,
) -> Result<Vec<Case>, SimError> {
    params.validate()?;
    (0..count)
        .into_par_iter()
        .map(|id| generate_case(params, id, case_seed(global_seed, id), full))
        .collect()
}
