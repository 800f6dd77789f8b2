//! Deterministic discrete-event simulation of a tiered fog/edge/cloud
//! metaverse deployment.
//!
//! The crate is `no_std` (it needs `alloc`) so the whole model can be embedded
//! anywhere; file formats, configuration parsing and the CLI live in the
//! `fogverse` companion crate.
//!
//! Layout follows the simulation's layers:
//!
//! * [`engine`]: virtual clock, event queue and named random streams.
//! * [`infra`]: tree topology, link transfer model and FIFO compute queues.
//! * [`world`]: the gridded virtual map, avatars and proximity queries.
//! * [`workload`]: task generation and placement policies.
//! * [`ledger`]: the hash-chained record of asset purchases.
//! * [`metrics`]: latency records and aggregation.
//! * [`scenario`]: wires everything together into runnable scenarios and sweeps.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod config;
pub mod engine;
pub mod infra;
pub mod ledger;
pub mod metrics;
pub mod queueing;
pub mod scenario;
pub mod time;
pub mod workload;
pub mod world;

pub use config::{Config, ConfigError};
pub use engine::{Engine, Event, RngStream, StreamId};
pub use infra::{Infrastructure, NodeId, Task, TaskId, TaskKind, Tier, Topology};
pub use ledger::{Block, Chain, Transaction};
pub use metrics::{LatencyRecord, ScenarioResult};
pub use scenario::{run_scenario, sweep, RunOutput, ScenarioLabel, Simulation, SweepParam, SweepSpec};
pub use time::SimTime;
pub use workload::PolicyKind;
pub use world::{RegionId, UserId, WorldGrid};
