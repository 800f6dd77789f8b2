//! Resolved simulation configuration.
//!
//! Every field has a default; the `fogverse` crate parses partial TOML files
//! over these defaults and rejects unknown keys. [`Config::validate`] checks
//! every constraint and names the first offending key.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

use sha2::{Digest as _, Sha256};

use crate::infra::{LinkParams, TaskKind};
use crate::time::SimTime;
use crate::workload::{Profiles, Rates, ServiceModel, TaskProfile};
use crate::world::WorldGrid;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub constraint: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        ConfigError { key: key.into(), constraint: constraint.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config `{}`: {}", self.key, self.constraint)
    }
}

impl core::error::Error for ConfigError {}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Config {
    pub topology: TopologyConfig,
    pub world: WorldConfig,
    pub workload: WorkloadConfig,
    pub ledger: LedgerConfig,
    pub experiment: ExperimentConfig,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LinkConfig {
    pub propagation_ms: f64,
    pub bandwidth_mbps: f64,
}

impl LinkConfig {
    pub fn params(&self) -> LinkParams {
        LinkParams::new(SimTime::from_ms_f64(self.propagation_ms), self.bandwidth_mbps)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TopologyConfig {
    pub device_mips: f64,
    pub fog_mips: f64,
    pub edge_mips: f64,
    pub cloud_mips: f64,
    /// Each region gets `ceil(users_in_region / devices_per_fog)` fog
    /// servers (at least one).
    pub devices_per_fog: u32,
    pub device_fog: LinkConfig,
    pub fog_edge: LinkConfig,
    pub edge_cloud: LinkConfig,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            device_mips: 1_000.0,
            fog_mips: 20_000.0,
            edge_mips: 20_000.0,
            cloud_mips: 200_000.0,
            devices_per_fog: 1,
            device_fog: LinkConfig { propagation_ms: 2.0, bandwidth_mbps: 100.0 },
            fog_edge: LinkConfig { propagation_ms: 5.0, bandwidth_mbps: 1_000.0 },
            edge_cloud: LinkConfig { propagation_ms: 30.0, bandwidth_mbps: 10_000.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct WorldConfig {
    pub users: u32,
    pub width: f64,
    pub height: f64,
    pub regions_x: u32,
    pub regions_y: u32,
    /// Spatial index cell size; must be at least `radius`.
    pub cell: f64,
    /// Messaging radius.
    pub radius: f64,
    /// World units per second.
    pub speed: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            users: 500,
            width: 1_000.0,
            height: 1_000.0,
            regions_x: 10,
            regions_y: 10,
            cell: 50.0,
            radius: 30.0,
            speed: 1.5,
        }
    }
}

impl WorldConfig {
    pub fn grid(&self) -> Result<WorldGrid, ConfigError> {
        WorldGrid::new(self.width, self.height, self.regions_x, self.regions_y, self.cell)
            .map_err(|e| ConfigError::new("world", e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ProfileConfig {
    pub length_mi: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub per_neighbor_mi: f64,
    pub upload_bytes: u64,
    pub download_bytes: u64,
}

impl ProfileConfig {
    const fn new(length_mi: f64, upload_bytes: u64, download_bytes: u64) -> Self {
        ProfileConfig { length_mi, per_neighbor_mi: 0.0, upload_bytes, download_bytes }
    }

    fn profile(&self, kind: TaskKind) -> TaskProfile {
        TaskProfile {
            kind,
            base_length_mi: self.length_mi,
            per_neighbor_mi: self.per_neighbor_mi,
            upload_bytes: self.upload_bytes,
            download_bytes: self.download_bytes,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct WorkloadConfig {
    /// Movement tick; every avatar emits one navigation and one collision
    /// task per tick.
    pub tick_ms: f64,
    pub message_rate_per_user_s: f64,
    pub tx_rate_per_user_s: f64,
    /// Zero disables universe simulation tasks.
    pub universe_period_ms: f64,
    pub service: ServiceModel,
    pub navigation: ProfileConfig,
    pub collision: ProfileConfig,
    pub social: ProfileConfig,
    pub transaction: ProfileConfig,
    pub universe: ProfileConfig,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            tick_ms: 1_000.0,
            message_rate_per_user_s: 0.05,
            tx_rate_per_user_s: 0.01,
            universe_period_ms: 1_000.0,
            service: ServiceModel::Deterministic,
            navigation: ProfileConfig::new(50.0, 2_000, 1_000),
            collision: ProfileConfig { per_neighbor_mi: 1.0, ..ProfileConfig::new(20.0, 1_000, 500) },
            social: ProfileConfig::new(30.0, 1_000, 1_000),
            transaction: ProfileConfig::new(2_800.0, 2_000, 500),
            universe: ProfileConfig::new(10_000.0, 0, 0),
        }
    }
}

impl WorkloadConfig {
    pub fn profiles(&self) -> Profiles {
        Profiles {
            navigation: self.navigation.profile(TaskKind::SpatialNavigation),
            collision: self.collision.profile(TaskKind::CollisionDetection),
            social: self.social.profile(TaskKind::SocialInteraction),
            transaction: self.transaction.profile(TaskKind::TransactionValidation),
            universe: self.universe.profile(TaskKind::UniverseSimulation),
        }
    }

    pub fn rates(&self) -> Rates {
        Rates { message_per_user_s: self.message_rate_per_user_s, transaction_per_user_s: self.tx_rate_per_user_s }
    }

    pub fn tick(&self) -> SimTime {
        SimTime::from_ms_f64(self.tick_ms)
    }

    pub fn universe_period(&self) -> Option<SimTime> {
        (self.universe_period_ms > 0.0).then(|| SimTime::from_ms_f64(self.universe_period_ms))
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LedgerConfig {
    pub batch_size: u32,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig { batch_size: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ExperimentConfig {
    pub horizon_s: f64,
    /// Records created before this are left out of aggregates.
    pub warmup_s: f64,
    pub base_seed: u64,
    pub replications: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { horizon_s: 600.0, warmup_s: 100.0, base_seed: 42, replications: 3 }
    }
}

impl ExperimentConfig {
    pub fn horizon(&self) -> SimTime {
        SimTime::from_ms_f64(self.horizon_s * 1_000.0)
    }

    pub fn warmup(&self) -> SimTime {
        SimTime::from_ms_f64(self.warmup_s * 1_000.0)
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(key, "must be a positive finite number"))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(key, "must be a non-negative finite number"))
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.topology;
        positive("topology.device_mips", t.device_mips)?;
        positive("topology.fog_mips", t.fog_mips)?;
        positive("topology.edge_mips", t.edge_mips)?;
        positive("topology.cloud_mips", t.cloud_mips)?;
        if t.devices_per_fog == 0 {
            return Err(ConfigError::new("topology.devices_per_fog", "must be at least 1"));
        }
        for (name, l) in [("device_fog", &t.device_fog), ("fog_edge", &t.fog_edge), ("edge_cloud", &t.edge_cloud)] {
            non_negative(&format!("topology.{name}.propagation_ms"), l.propagation_ms)?;
            positive(&format!("topology.{name}.bandwidth_mbps"), l.bandwidth_mbps)?;
        }

        let w = &self.world;
        if w.users == 0 {
            return Err(ConfigError::new("world.users", "must be at least 1"));
        }
        positive("world.width", w.width)?;
        positive("world.height", w.height)?;
        if w.regions_x == 0 {
            return Err(ConfigError::new("world.regions_x", "must be at least 1"));
        }
        if w.regions_y == 0 {
            return Err(ConfigError::new("world.regions_y", "must be at least 1"));
        }
        positive("world.cell", w.cell)?;
        non_negative("world.radius", w.radius)?;
        if w.radius > w.cell {
            return Err(ConfigError::new("world.radius", "must not exceed world.cell"));
        }
        non_negative("world.speed", w.speed)?;

        let wl = &self.workload;
        positive("workload.tick_ms", wl.tick_ms)?;
        if wl.tick() == SimTime::ZERO {
            return Err(ConfigError::new("workload.tick_ms", "must be at least one microsecond"));
        }
        non_negative("workload.message_rate_per_user_s", wl.message_rate_per_user_s)?;
        non_negative("workload.tx_rate_per_user_s", wl.tx_rate_per_user_s)?;
        non_negative("workload.universe_period_ms", wl.universe_period_ms)?;
        if wl.universe_period_ms > 0.0 && wl.universe_period() == Some(SimTime::ZERO) {
            return Err(ConfigError::new("workload.universe_period_ms", "must be zero or at least one microsecond"));
        }
        for (name, p) in [
            ("navigation", &wl.navigation),
            ("collision", &wl.collision),
            ("social", &wl.social),
            ("transaction", &wl.transaction),
            ("universe", &wl.universe),
        ] {
            positive(&format!("workload.{name}.length_mi"), p.length_mi)?;
            non_negative(&format!("workload.{name}.per_neighbor_mi"), p.per_neighbor_mi)?;
            if name != "collision" && p.per_neighbor_mi != 0.0 {
                return Err(ConfigError::new(
                    format!("workload.{name}.per_neighbor_mi"),
                    "only collision tasks scale with neighbours",
                ));
            }
        }

        if self.ledger.batch_size == 0 {
            return Err(ConfigError::new("ledger.batch_size", "must be at least 1"));
        }

        let e = &self.experiment;
        non_negative("experiment.horizon_s", e.horizon_s)?;
        non_negative("experiment.warmup_s", e.warmup_s)?;
        if e.replications == 0 {
            return Err(ConfigError::new("experiment.replications", "must be at least 1"));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the config's `Debug` form.
    pub fn digest(&self) -> String {
        let d: [u8; 32] = Sha256::digest(format!("{self:?}").as_bytes()).into();
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
