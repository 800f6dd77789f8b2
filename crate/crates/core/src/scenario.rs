//! Discrete-event scenario runs and parameter sweeps.
//!
//! A task moves through four events: creation, arrival at its server after
//! the uplink transfer, service completion, and delivery of the response
//! after the downlink transfer. Movement ticks are synchronous for all
//! avatars; messages and purchases are superposed Poisson streams over the
//! user population.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::config::{Config, ConfigError, TopologyConfig};
use crate::engine::{Engine, Event, RngStream, StreamId};
use crate::infra::{Infrastructure, NodeId, Task, TaskId, TaskKind, Tier, Topology, TopologyError, TopologySpec};
use crate::ledger::{Chain, Transaction};
use crate::metrics::{Aggregator, LatencyRecord, ScenarioResult, TaskCounts};
use crate::time::SimTime;
use crate::workload::{place, MessageOutcome, PolicyKind, Workload};
use crate::world::{UserId, World};

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioError {
    Config(ConfigError),
    Topology(TopologyError),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Config(e) => e.fmt(f),
            ScenarioError::Topology(e) => write!(f, "topology: {e}"),
        }
    }
}

impl core::error::Error for ScenarioError {}

impl From<ConfigError> for ScenarioError {
    fn from(e: ConfigError) -> Self {
        ScenarioError::Config(e)
    }
}

impl From<TopologyError> for ScenarioError {
    fn from(e: TopologyError) -> Self {
        ScenarioError::Topology(e)
    }
}

/// Generated infrastructure: `devices[u]` is user `u`'s end device.
#[derive(Clone, Debug)]
pub struct Deployment {
    pub topology: Topology,
    pub devices: Vec<NodeId>,
}

/// Builds the four-tier tree for the avatars' starting regions and assigns
/// each avatar its home fog.
///
/// Node order: the cloud, one edge per region in row-major order, then per
/// region its fog servers followed by its devices. A region holds
/// `max(1, ceil(users / devices_per_fog))` fogs; device `i` of the region
/// hangs under fog `i / devices_per_fog`.
pub fn deploy(cfg: &TopologyConfig, world: &mut World) -> Result<Deployment, TopologyError> {
    let grid = *world.grid();
    let mut spec = TopologySpec::new(grid.regions_x(), grid.regions_y());
    spec.device_fog = Some(cfg.device_fog.params());
    spec.fog_edge = Some(cfg.fog_edge.params());
    spec.edge_cloud = Some(cfg.edge_cloud.params());

    let cloud = spec.add_node(Tier::CloudServer, cfg.cloud_mips, None);
    let regions: Vec<_> = grid.regions().collect();
    let edges: Vec<NodeId> = regions
        .iter()
        .map(|&r| {
            let e = spec.add_node(Tier::EdgeServer, cfg.edge_mips, Some(r));
            spec.attach(e, cloud);
            e
        })
        .collect();

    let mut members: Vec<Vec<UserId>> = alloc::vec![Vec::new(); regions.len()];
    for a in world.avatars() {
        members[a.region.linear(grid.regions_x())].push(a.user);
    }

    let per_fog = cfg.devices_per_fog.max(1) as usize;
    let mut devices = alloc::vec![NodeId(0); world.user_count()];
    for (ri, users) in members.iter().enumerate() {
        let region = Some(regions[ri]);
        let fogs: Vec<NodeId> = (0..users.len().div_ceil(per_fog).max(1))
            .map(|_| {
                let f = spec.add_node(Tier::FogServer, cfg.fog_mips, region);
                spec.attach(f, edges[ri]);
                f
            })
            .collect();
        for (i, &u) in users.iter().enumerate() {
            let fog = fogs[i / per_fog];
            let d = spec.add_node(Tier::EndDevice, cfg.device_mips, region);
            spec.attach(d, fog);
            devices[u.0 as usize] = d;
            world.avatar_mut(u).expect("known user").home_fog = fog;
        }
    }

    Ok(Deployment { topology: Topology::build(&spec)?, devices })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leg {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimEvent {
    MovementTick,
    MessageSend,
    TxSubmit,
    UniverseTick,
    /// A manually injected task comes into existence.
    TaskArrival {
        slot: u32,
    },
    TransferComplete {
        slot: u32,
        leg: Leg,
    },
    ServiceComplete {
        slot: u32,
    },
    BlockFormed,
}

impl SimEvent {
    fn tag(self) -> (u8, u32) {
        match self {
            SimEvent::MovementTick => (0, 0),
            SimEvent::MessageSend => (1, 0),
            SimEvent::TxSubmit => (2, 0),
            SimEvent::UniverseTick => (3, 0),
            SimEvent::TaskArrival { slot } => (4, slot),
            SimEvent::TransferComplete { slot, leg: Leg::Up } => (5, slot),
            SimEvent::TransferComplete { slot, leg: Leg::Down } => (6, slot),
            SimEvent::ServiceComplete { slot } => (7, slot),
            SimEvent::BlockFormed => (8, 0),
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

#[derive(Clone, Debug)]
struct InFlight {
    task: Task,
    tx: Option<Transaction>,
    started: bool,
    server: NodeId,
    uplink: SimTime,
    wait: SimTime,
    service: SimTime,
}

/// Identifies a run inside a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioLabel {
    pub scenario: String,
    pub param: String,
    pub value: f64,
    pub replication: u32,
}

impl ScenarioLabel {
    pub fn single(policy: PolicyKind, seed: u64) -> Self {
        ScenarioLabel {
            scenario: format!("run/{policy}/s{seed}"),
            param: "none".to_string(),
            value: 0.0,
            replication: 0,
        }
    }
}

/// Output of a finished run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub result: ScenarioResult,
    pub chain: Chain,
}

pub struct Simulation {
    policy: PolicyKind,
    seed: u64,
    config_digest: String,
    horizon: SimTime,
    tick: SimTime,
    universe_period: Option<SimTime>,
    radius: f64,
    batch: usize,
    engine: Engine<SimEvent>,
    infra: Infrastructure,
    world: World,
    devices: Vec<NodeId>,
    workload: Workload,
    movement: RngStream,
    chain: Chain,
    slots: Vec<Option<InFlight>>,
    free: Vec<u32>,
    aggregator: Aggregator,
    counts: TaskCounts,
    transcript: u64,
}

impl Simulation {
    /// A fully populated run with every arrival process scheduled.
    pub fn new(cfg: &Config, policy: PolicyKind, seed: u64) -> Result<Self, ScenarioError> {
        cfg.validate()?;
        let grid = cfg.world.grid()?;
        let mut movement = RngStream::new(seed, StreamId::Movement);
        let world = World::random(grid, cfg.world.users, cfg.world.speed, &mut movement);
        let mut sim = Self::assemble(cfg, policy, seed, world, movement)?;
        sim.start_processes();
        Ok(sim)
    }

    /// A run over a given world with nothing scheduled; feed it with
    /// [`Simulation::inject`]. The world's avatar count overrides
    /// `cfg.world.users`.
    pub fn manual(cfg: &Config, policy: PolicyKind, seed: u64, world: World) -> Result<Self, ScenarioError> {
        cfg.validate()?;
        let movement = RngStream::new(seed, StreamId::Movement);
        Self::assemble(cfg, policy, seed, world, movement)
    }

    fn assemble(
        cfg: &Config,
        policy: PolicyKind,
        seed: u64,
        mut world: World,
        movement: RngStream,
    ) -> Result<Self, ScenarioError> {
        let Deployment { topology, devices } = deploy(&cfg.topology, &mut world)?;
        let wl = &cfg.workload;
        Ok(Simulation {
            policy,
            seed,
            config_digest: cfg.digest(),
            horizon: cfg.experiment.horizon(),
            tick: wl.tick(),
            universe_period: wl.universe_period(),
            radius: cfg.world.radius,
            batch: cfg.ledger.batch_size as usize,
            engine: Engine::new(),
            infra: Infrastructure::new(topology),
            world,
            devices,
            workload: Workload::new(wl.profiles(), wl.rates(), wl.service, seed),
            movement,
            chain: Chain::new(),
            slots: Vec::new(),
            free: Vec::new(),
            aggregator: Aggregator::new(cfg.experiment.warmup()),
            counts: TaskCounts::default(),
            transcript: FNV_OFFSET,
        })
    }

    fn start_processes(&mut self) {
        let users = self.world.user_count();
        self.engine.schedule(self.tick, SimEvent::MovementTick);
        if let Some(gap) = self.workload.next_message_gap(users) {
            self.engine.schedule(gap, SimEvent::MessageSend);
        }
        if let Some(gap) = self.workload.next_transaction_gap(users) {
            self.engine.schedule(gap, SimEvent::TxSubmit);
        }
        if let Some(p) = self.universe_period {
            self.engine.schedule(p, SimEvent::UniverseTick);
        }
    }

    pub fn topology(&self) -> &Topology {
        self.infra.topology()
    }

    pub fn infrastructure(&self) -> &Infrastructure {
        &self.infra
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn devices(&self) -> &[NodeId] {
        &self.devices
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn counts(&self) -> TaskCounts {
        let mut c = self.counts;
        c.in_flight = self.slots.iter().flatten().filter(|f| f.started).count() as u64;
        c.blocks = self.chain.blocks().len() as u64;
        c
    }

    pub fn engine(&self) -> &Engine<SimEvent> {
        &self.engine
    }

    /// Schedules a task of `kind` to be created at `at` from the owner's
    /// device (the cloud when ownerless), with the configured profile.
    pub fn inject(&mut self, kind: TaskKind, owner: Option<UserId>, neighbors: usize, at: SimTime) -> TaskId {
        let origin = owner.map_or(self.infra.topology().cloud(), |u| self.devices[u.0 as usize]);
        let task = self.workload.make_task(kind, owner, origin, neighbors, at);
        let id = task.id;
        let slot = self.store(task, None, false);
        self.engine.schedule(at, SimEvent::TaskArrival { slot });
        id
    }

    fn store(&mut self, task: Task, tx: Option<Transaction>, started: bool) -> u32 {
        let entry = InFlight {
            task,
            tx,
            started,
            server: NodeId(0),
            uplink: SimTime::ZERO,
            wait: SimTime::ZERO,
            service: SimTime::ZERO,
        };
        match self.free.pop() {
            Some(s) => {
                self.slots[s as usize] = Some(entry);
                s
            }
            None => {
                self.slots.push(Some(entry));
                self.slots.len() as u32 - 1
            }
        }
    }

    fn slot(&mut self, slot: u32) -> &mut InFlight {
        self.slots[slot as usize].as_mut().expect("live slot")
    }

    /// Places a task and starts its uplink transfer.
    fn launch(&mut self, eng: &mut Engine<SimEvent>, slot: u32, now: SimTime) {
        let topo = self.infra.topology();
        let f = self.slots[slot as usize].as_ref().expect("live slot");
        let region = f.task.owner.map(|u| self.world.avatar(u).expect("known user").region);
        let server = place(f.task.kind, f.task.origin, region, self.policy, topo);
        let uplink = topo.transfer_between(f.task.upload_bytes, f.task.origin, server).expect("known nodes");
        let f = self.slot(slot);
        f.started = true;
        f.server = server;
        f.uplink = uplink;
        self.counts.generated += 1;
        eng.schedule(now + uplink, SimEvent::TransferComplete { slot, leg: Leg::Up });
    }

    fn spawn(&mut self, eng: &mut Engine<SimEvent>, task: Task, tx: Option<Transaction>, now: SimTime) {
        let slot = self.store(task, tx, true);
        self.launch(eng, slot, now);
    }

    fn handle(&mut self, eng: &mut Engine<SimEvent>, ev: Event<SimEvent>, sink: &mut dyn FnMut(&LatencyRecord)) {
        let now = ev.fire_at;
        let (tag, slot) = ev.payload.tag();
        let mut h = fnv1a(self.transcript, &now.as_us().to_le_bytes());
        h = fnv1a(h, &ev.seq.to_le_bytes());
        h = fnv1a(h, &[tag]);
        self.transcript = fnv1a(h, &slot.to_le_bytes());

        let users = self.world.user_count();
        match ev.payload {
            SimEvent::MovementTick => {
                self.world.tick(self.tick, &mut self.movement);
                for task in self.workload.tick_tasks(&self.world, &self.devices, now) {
                    self.spawn(eng, task, None, now);
                }
                eng.schedule(now + self.tick, SimEvent::MovementTick);
            }
            SimEvent::MessageSend => {
                match self.workload.message(&self.world, &self.devices, self.radius, now) {
                    MessageOutcome::Sent { task, .. } => self.spawn(eng, task, None, now),
                    MessageOutcome::Skipped { .. } => self.counts.skipped_messages += 1,
                }
                if let Some(gap) = self.workload.next_message_gap(users) {
                    eng.schedule(now + gap, SimEvent::MessageSend);
                }
            }
            SimEvent::TxSubmit => {
                let tx = self.workload.draw_transaction(users, now);
                let origin = self.devices[tx.buyer.0 as usize];
                match self.workload.transaction_task(&tx, origin, now) {
                    Ok(task) => self.spawn(eng, task, Some(tx), now),
                    Err(_) => self.counts.rejected_transactions += 1,
                }
                if let Some(gap) = self.workload.next_transaction_gap(users) {
                    eng.schedule(now + gap, SimEvent::TxSubmit);
                }
            }
            SimEvent::UniverseTick => {
                let cloud = self.infra.topology().cloud();
                let task = self.workload.make_task(TaskKind::UniverseSimulation, None, cloud, 0, now);
                self.spawn(eng, task, None, now);
                if let Some(p) = self.universe_period {
                    eng.schedule(now + p, SimEvent::UniverseTick);
                }
            }
            SimEvent::TaskArrival { slot } => self.launch(eng, slot, now),
            SimEvent::TransferComplete { slot, leg: Leg::Up } => {
                let f = self.slots[slot as usize].as_ref().expect("live slot");
                let exec = self.infra.execute(&f.task, f.server, now);
                let f = self.slot(slot);
                f.wait = exec.wait();
                f.service = exec.service();
                eng.schedule(exec.completion, SimEvent::ServiceComplete { slot });
            }
            SimEvent::ServiceComplete { slot } => {
                let f = self.slots[slot as usize].as_mut().expect("live slot");
                if let Some(tx) = f.tx.take() {
                    self.chain.push_validated(tx);
                    if self.chain.pending() >= self.batch {
                        eng.schedule(now, SimEvent::BlockFormed);
                    }
                }
                let f = self.slots[slot as usize].as_ref().expect("live slot");
                let down = self
                    .infra
                    .topology()
                    .transfer_between(f.task.download_bytes, f.server, f.task.origin)
                    .expect("known nodes");
                eng.schedule(now + down, SimEvent::TransferComplete { slot, leg: Leg::Down });
            }
            SimEvent::TransferComplete { slot, leg: Leg::Down } => {
                let f = self.slots[slot as usize].take().expect("live slot");
                self.free.push(slot);
                let downlink = now - (f.task.created_at + f.uplink + f.wait + f.service);
                let rec = LatencyRecord::new(&f.task, self.policy, f.server, f.uplink, f.wait, f.service, downlink);
                debug_assert_eq!(rec.created_at + rec.total, now);
                self.counts.completed += 1;
                self.aggregator.add(&rec);
                sink(&rec);
            }
            SimEvent::BlockFormed => {
                self.chain.form_block(self.batch, now);
            }
        }
    }

    /// Dispatches every event up to the configured horizon, handing each
    /// completed record to `sink`.
    pub fn run(&mut self, sink: &mut dyn FnMut(&LatencyRecord)) {
        self.run_until(self.horizon, sink);
    }

    pub fn run_until(&mut self, horizon: SimTime, sink: &mut dyn FnMut(&LatencyRecord)) {
        let mut engine = core::mem::take(&mut self.engine);
        engine.run_until(horizon, |eng, ev| self.handle(eng, ev, sink));
        self.engine = engine;
    }

    /// Flushes the ledger at the current clock and summarises the run.
    pub fn finish(mut self, label: ScenarioLabel) -> RunOutput {
        let now = self.engine.now();
        self.chain.flush(self.batch, now);
        let counts = self.counts();
        let (overall, per_kind) = self.aggregator.summarise();
        let result = ScenarioResult {
            scenario: label.scenario,
            policy: self.policy,
            param: label.param,
            value: label.value,
            replication: label.replication,
            seed: self.seed,
            config_digest: self.config_digest,
            overall,
            per_kind,
            counts,
            transcript: self.transcript,
        };
        RunOutput { result, chain: self.chain }
    }
}

/// One complete run of `cfg` under `policy`.
pub fn run_scenario(cfg: &Config, policy: PolicyKind, seed: u64) -> Result<RunOutput, ScenarioError> {
    run_scenario_with(cfg, policy, seed, ScenarioLabel::single(policy, seed), &mut |_| {})
}

pub fn run_scenario_with(
    cfg: &Config,
    policy: PolicyKind,
    seed: u64,
    label: ScenarioLabel,
    sink: &mut dyn FnMut(&LatencyRecord),
) -> Result<RunOutput, ScenarioError> {
    let mut sim = Simulation::new(cfg, policy, seed)?;
    sim.run(sink);
    Ok(sim.finish(label))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepParam {
    /// Number of users; every other parameter stays fixed.
    UserCount,
    /// Aggregate purchases per second across all users.
    TxRate,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::UserCount => "user_count",
            SweepParam::TxRate => "tx_rate",
        }
    }

    /// 100 to 1000 users in steps of 100; 1 to 50 purchases per second.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::UserCount => (1..=10).map(|i| f64::from(i * 100)).collect(),
            SweepParam::TxRate => alloc::vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
        }
    }

    /// Copy of `base` with the swept parameter set to `value`.
    pub fn apply(self, base: &Config, value: f64) -> Result<Config, ConfigError> {
        let mut cfg = base.clone();
        match self {
            SweepParam::UserCount => {
                if !(value >= 1.0 && value <= f64::from(u32::MAX) && libm::trunc(value) == value) {
                    return Err(ConfigError::new("sweep.values", "user counts must be positive integers"));
                }
                cfg.world.users = value as u32;
            }
            SweepParam::TxRate => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(ConfigError::new("sweep.values", "transaction rates must be non-negative"));
                }
                cfg.workload.tx_rate_per_user_s = value / f64::from(cfg.world.users);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownParam;

impl fmt::Display for UnknownParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown sweep parameter (expected `user_count` or `tx_rate`)")
    }
}

impl core::error::Error for UnknownParam {}

impl FromStr for SweepParam {
    type Err = UnknownParam;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "user_count" => Ok(SweepParam::UserCount),
            "tx_rate" => Ok(SweepParam::TxRate),
            _ => Err(UnknownParam),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    /// Strictly increasing.
    pub values: Vec<f64>,
    pub replications: u32,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.values.is_empty() {
            return Err(ConfigError::new("sweep.values", "must not be empty"));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::new("sweep.values", "must be strictly increasing"));
        }
        if self.replications == 0 {
            return Err(ConfigError::new("sweep.replications", "must be at least 1"));
        }
        Ok(())
    }
}

/// A single run of a sweep, ready to execute.
#[derive(Clone, Debug)]
pub struct ScenarioPlan {
    pub label: ScenarioLabel,
    pub config: Config,
    pub policy: PolicyKind,
    pub seed: u64,
}

impl ScenarioPlan {
    pub fn run(&self) -> ScenarioResult {
        run_scenario_with(&self.config, self.policy, self.seed, self.label.clone(), &mut |_| {})
            .expect("plans are validated")
            .result
    }
}

/// Every run of `spec` over `base`, ordered by value, then policy, then
/// replication. Replication `r` uses seed `base_seed + r` under both policies.
pub fn plan(base: &Config, spec: &SweepSpec) -> Result<Vec<ScenarioPlan>, ConfigError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.values.len() * 2 * spec.replications as usize);
    for &value in &spec.values {
        let config = spec.param.apply(base, value)?;
        for policy in PolicyKind::ALL {
            for rep in 0..spec.replications {
                out.push(ScenarioPlan {
                    label: ScenarioLabel {
                        scenario: format!("{}={}/{}/r{}", spec.param, value, policy, rep),
                        param: spec.param.name().to_string(),
                        value,
                        replication: rep,
                    },
                    config: config.clone(),
                    policy,
                    seed: spec.base_seed.wrapping_add(u64::from(rep)),
                });
            }
        }
    }
    Ok(out)
}

/// Runs a sweep serially.
pub fn sweep(base: &Config, spec: &SweepSpec) -> Result<Vec<ScenarioResult>, ConfigError> {
    Ok(plan(base, spec)?.iter().map(ScenarioPlan::run).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Avatar, Point, RegionId};
    use alloc::vec;

    fn small() -> Config {
        let mut c = Config::default();
        c.world.users = 40;
        c.experiment.horizon_s = 20.0;
        c.experiment.warmup_s = 2.0;
        c
    }

    #[test]
    fn deploy_shapes_tree() {
        let mut c = small();
        c.topology.devices_per_fog = 3;
        let grid = c.world.grid().unwrap();
        let mut rng = RngStream::new(1, StreamId::Movement);
        let mut world = World::random(grid, 40, 1.0, &mut rng);
        let d = deploy(&c.topology, &mut world).unwrap();
        let t = &d.topology;
        let count = |tier| t.nodes().iter().filter(|n| n.tier == tier).count();
        assert_eq!(count(Tier::CloudServer), 1);
        assert_eq!(count(Tier::EdgeServer), 100);
        assert_eq!(count(Tier::EndDevice), 40);
        for a in world.avatars() {
            let dev = d.devices[a.user.0 as usize];
            assert_eq!(t.ancestor(dev, Tier::FogServer), Some(a.home_fog));
            assert_eq!(t.ancestor(dev, Tier::EdgeServer), t.edge_of_region(a.region));
        }
    }

    #[test]
    fn run_conserves_tasks_and_is_repeatable() {
        let c = small();
        let a = run_scenario(&c, PolicyKind::FogEdge, 5).unwrap();
        let b = run_scenario(&c, PolicyKind::FogEdge, 5).unwrap();
        assert_eq!(a.result, b.result);
        assert!(a.result.counts.conserved());
        assert!(a.result.counts.generated > 0);
        assert!(a.chain.verify());
        assert!(a.result.percentiles_ordered());
    }

    #[test]
    fn records_add_up() {
        let c = small();
        let mut n = 0u64;
        let mut sink = |r: &LatencyRecord| {
            assert!(r.is_consistent());
            n += 1;
        };
        let out =
            run_scenario_with(&c, PolicyKind::CloudOnly, 3, ScenarioLabel::single(PolicyKind::CloudOnly, 3), &mut sink)
                .unwrap();
        assert_eq!(n, out.result.counts.completed);
    }

    #[test]
    fn injected_task_follows_links() {
        let mut c = small();
        c.workload.universe_period_ms = 0.0;
        let grid = c.world.grid().unwrap();
        let p = Point::new(5.0, 5.0);
        let avatar = Avatar {
            user: UserId(0),
            pos: p,
            waypoint: p,
            speed: 0.0,
            home_fog: NodeId(0),
            region: RegionId { rx: 0, ry: 0 },
        };
        let world = World::new(grid, vec![avatar]).unwrap();
        let mut sim = Simulation::manual(&c, PolicyKind::FogEdge, 1, world).unwrap();
        sim.inject(TaskKind::SpatialNavigation, Some(UserId(0)), 0, SimTime::from_ms(1));
        let mut recs = Vec::new();
        sim.run(&mut |r| recs.push(r.clone()));
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        // 2000 B up over 100 Mb/s = 160 µs plus 2 ms; 50 MI at 20k MIPS = 2.5 ms.
        assert_eq!(r.uplink, SimTime::from_us(2_160));
        assert_eq!(r.service, SimTime::from_us(2_500));
        assert_eq!(r.downlink, SimTime::from_us(2_080));
        assert_eq!(r.wait, SimTime::ZERO);
    }

    #[test]
    fn sweep_params_parse_and_apply() {
        assert_eq!("tx_rate".parse::<SweepParam>(), Ok(SweepParam::TxRate));
        assert!("users".parse::<SweepParam>().is_err());
        let c = SweepParam::TxRate.apply(&Config::default(), 50.0).unwrap();
        assert!((c.workload.tx_rate_per_user_s * f64::from(c.world.users) - 50.0).abs() < 1e-9);
        assert!(SweepParam::UserCount.apply(&Config::default(), 2.5).is_err());
    }

    #[test]
    fn plan_order_and_seeds() {
        let spec = SweepSpec { param: SweepParam::UserCount, values: vec![10.0, 20.0], replications: 2, base_seed: 9 };
        let p = plan(&small(), &spec).unwrap();
        let ids: Vec<_> = p.iter().map(|s| s.label.scenario.as_str()).collect();
        assert_eq!(ids[0], "user_count=10/cloud/r0");
        assert_eq!(ids[3], "user_count=10/fogedge/r1");
        assert_eq!(ids[4], "user_count=20/cloud/r0");
        assert_eq!(p[3].seed, 10);
        let bad = SweepSpec { values: vec![20.0, 10.0], ..spec };
        assert!(plan(&small(), &bad).is_err());
    }
}
