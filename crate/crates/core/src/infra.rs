//! Tiered topology (device → fog → edge → cloud), the link transfer model and
//! per-node FIFO compute queues.
//!
//! The topology is a strict tree: every non-cloud node has exactly one parent
//! one tier up, so the route between two nodes is the unique path through
//! their lowest common ancestor. Links carry a one-way propagation delay and
//! a bandwidth; transferring `b` bytes over a link takes
//! `propagation + 8·b / bandwidth` (bits over Mbit/s gives microseconds).
//! Links have no contention. Compute queues are unbounded, FIFO and
//! non-preemptive.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::metrics::LatencyRecord;
use crate::time::SimTime;
use crate::workload::PolicyKind;
use crate::world::{RegionId, UserId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    EndDevice,
    FogServer,
    EdgeServer,
    CloudServer,
}

impl Tier {
    pub fn parent(self) -> Option<Tier> {
        match self {
            Tier::EndDevice => Some(Tier::FogServer),
            Tier::FogServer => Some(Tier::EdgeServer),
            Tier::EdgeServer => Some(Tier::CloudServer),
            Tier::CloudServer => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::EndDevice => "device",
            Tier::FogServer => "fog",
            Tier::EdgeServer => "edge",
            Tier::CloudServer => "cloud",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkNode {
    pub id: NodeId,
    pub tier: Tier,
    pub capacity_mips: f64,
    pub region: Option<RegionId>,
    pub parent: Option<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkParams {
    pub propagation: SimTime,
    pub bandwidth_mbps: f64,
}

impl LinkParams {
    pub fn new(propagation: SimTime, bandwidth_mbps: f64) -> Self {
        LinkParams { propagation, bandwidth_mbps }
    }
}

/// A link between a node and its parent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub child: NodeId,
    pub parent: NodeId,
    pub propagation: SimTime,
    pub bandwidth_mbps: f64,
}

impl Link {
    pub fn transfer_time(&self, bytes: u64) -> SimTime {
        let serialisation_us = libm::round(bytes as f64 * 8.0 / self.bandwidth_mbps);
        self.propagation + SimTime::from_us(serialisation_us as u64)
    }
}

/// Total time to push `bytes` across `route`, hop by hop.
pub fn transfer_time(bytes: u64, route: &[Link]) -> SimTime {
    route.iter().map(|l| l.transfer_time(bytes)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeSpec {
    pub tier: Tier,
    pub capacity_mips: f64,
    pub region: Option<RegionId>,
}

/// Input to [`build_topology`]. Node ids are indices into `nodes`;
/// `attachments` lists `(child, parent)` pairs.
#[derive(Clone, Debug, Default)]
pub struct TopologySpec {
    pub regions_x: u32,
    pub regions_y: u32,
    pub nodes: Vec<NodeSpec>,
    pub attachments: Vec<(NodeId, NodeId)>,
    pub device_fog: Option<LinkParams>,
    pub fog_edge: Option<LinkParams>,
    pub edge_cloud: Option<LinkParams>,
}

impl TopologySpec {
    pub fn new(regions_x: u32, regions_y: u32) -> Self {
        TopologySpec { regions_x, regions_y, ..Default::default() }
    }

    pub fn add_node(&mut self, tier: Tier, capacity_mips: f64, region: Option<RegionId>) -> NodeId {
        self.nodes.push(NodeSpec { tier, capacity_mips, region });
        NodeId(self.nodes.len() as u32 - 1)
    }

    pub fn attach(&mut self, child: NodeId, parent: NodeId) {
        self.attachments.push((child, parent));
    }

    fn link_params(&self, child: Tier) -> Option<LinkParams> {
        match child {
            Tier::EndDevice => self.device_fog,
            Tier::FogServer => self.fog_edge,
            Tier::EdgeServer => self.edge_cloud,
            Tier::CloudServer => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TopologyError {
    NoCloud,
    ExtraCloud(NodeId),
    UnknownNode(NodeId),
    NonPositiveCapacity(NodeId),
    Orphan(NodeId),
    MultipleParents(NodeId),
    /// Parent is not exactly one tier above the child. Also rejects cycles,
    /// since tiers strictly ascend along any valid parent chain.
    TierMismatch {
        child: NodeId,
        parent: NodeId,
    },
    EdgeWithoutRegion(NodeId),
    RegionOutOfRange(NodeId),
    RegionWithoutEdge(RegionId),
    EdgeWithoutFog(NodeId),
    MissingLinkParams {
        node: NodeId,
        tier: Tier,
    },
    InvalidLinkParams(Tier),
    EmptyRegionGrid,
}

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TopologyError::*;
        match self {
            NoCloud => f.write_str("topology has no cloud node"),
            ExtraCloud(n) => write!(f, "node {n}: a second cloud node"),
            UnknownNode(n) => write!(f, "node {n}: unknown node referenced"),
            NonPositiveCapacity(n) => write!(f, "node {n}: capacity must be positive"),
            Orphan(n) => write!(f, "node {n}: has no parent"),
            MultipleParents(n) => write!(f, "node {n}: has more than one parent"),
            TierMismatch { child, parent } => {
                write!(f, "node {child}: parent {parent} is not exactly one tier up")
            }
            EdgeWithoutRegion(n) => write!(f, "node {n}: edge server without a region"),
            RegionOutOfRange(n) => write!(f, "node {n}: region outside the region grid"),
            RegionWithoutEdge(r) => write!(f, "region {r} has no edge server"),
            EdgeWithoutFog(n) => write!(f, "node {n}: edge server with no fog servers"),
            MissingLinkParams { node, tier } => {
                write!(f, "node {node}: no link parameters for {} uplinks", tier.name())
            }
            InvalidLinkParams(t) => write!(f, "{} uplink bandwidth must be positive", t.name()),
            EmptyRegionGrid => f.write_str("region grid must be at least 1x1"),
        }
    }
}

impl core::error::Error for TopologyError {}

#[derive(Clone, Debug, PartialEq)]
pub enum InfraError {
    UnknownNode(NodeId),
}

impl fmt::Display for InfraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfraError::UnknownNode(n) => write!(f, "unknown node {n}"),
        }
    }
}

impl core::error::Error for InfraError {}

/// A validated tree topology.
#[derive(Clone, Debug)]
pub struct Topology {
    nodes: Vec<NetworkNode>,
    /// `uplinks[i]` is node i's link to its parent (`None` for the cloud).
    uplinks: Vec<Option<Link>>,
    depth: Vec<u8>,
    cloud: NodeId,
    edge_by_region: Vec<NodeId>,
    regions_x: u32,
}

pub fn build_topology(spec: &TopologySpec) -> Result<Topology, TopologyError> {
    Topology::build(spec)
}

impl Topology {
    pub fn build(spec: &TopologySpec) -> Result<Topology, TopologyError> {
        if spec.regions_x == 0 || spec.regions_y == 0 {
            return Err(TopologyError::EmptyRegionGrid);
        }
        let n = spec.nodes.len();
        let mut cloud = None;
        for (i, node) in spec.nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            if !(node.capacity_mips.is_finite() && node.capacity_mips > 0.0) {
                return Err(TopologyError::NonPositiveCapacity(id));
            }
            if node.tier == Tier::CloudServer {
                if cloud.is_some() {
                    return Err(TopologyError::ExtraCloud(id));
                }
                cloud = Some(id);
            }
            if node.tier == Tier::EdgeServer {
                let r = node.region.ok_or(TopologyError::EdgeWithoutRegion(id))?;
                if r.rx >= spec.regions_x || r.ry >= spec.regions_y {
                    return Err(TopologyError::RegionOutOfRange(id));
                }
            }
        }
        let cloud = cloud.ok_or(TopologyError::NoCloud)?;

        let mut parent: Vec<Option<NodeId>> = vec![None; n];
        for &(child, par) in &spec.attachments {
            let c = spec.nodes.get(child.0 as usize).ok_or(TopologyError::UnknownNode(child))?;
            let p = spec.nodes.get(par.0 as usize).ok_or(TopologyError::UnknownNode(par))?;
            if c.tier.parent() != Some(p.tier) {
                return Err(TopologyError::TierMismatch { child, parent: par });
            }
            if parent[child.0 as usize].replace(par).is_some() {
                return Err(TopologyError::MultipleParents(child));
            }
        }

        let mut uplinks = Vec::with_capacity(n);
        let mut fogs_per_edge = vec![0u32; n];
        for (i, node) in spec.nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            match parent[i] {
                None if node.tier != Tier::CloudServer => return Err(TopologyError::Orphan(id)),
                None => uplinks.push(None),
                Some(p) => {
                    let params = spec
                        .link_params(node.tier)
                        .ok_or(TopologyError::MissingLinkParams { node: id, tier: node.tier })?;
                    if !(params.bandwidth_mbps.is_finite() && params.bandwidth_mbps > 0.0) {
                        return Err(TopologyError::InvalidLinkParams(node.tier));
                    }
                    if node.tier == Tier::FogServer {
                        fogs_per_edge[p.0 as usize] += 1;
                    }
                    uplinks.push(Some(Link {
                        child: id,
                        parent: p,
                        propagation: params.propagation,
                        bandwidth_mbps: params.bandwidth_mbps,
                    }));
                }
            }
        }

        let regions = spec.regions_x as usize * spec.regions_y as usize;
        let mut edge_by_region: Vec<Option<NodeId>> = vec![None; regions];
        for (i, node) in spec.nodes.iter().enumerate() {
            if node.tier == Tier::EdgeServer {
                let id = NodeId(i as u32);
                if fogs_per_edge[i] == 0 {
                    return Err(TopologyError::EdgeWithoutFog(id));
                }
                let slot = &mut edge_by_region[node.region.expect("checked").linear(spec.regions_x)];
                // lowest id wins when a region has several edges
                slot.get_or_insert(id);
            }
        }
        let edge_by_region = edge_by_region
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let r = RegionId::new(i as u32 % spec.regions_x, i as u32 / spec.regions_x);
                e.ok_or(TopologyError::RegionWithoutEdge(r))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let nodes = spec
            .nodes
            .iter()
            .enumerate()
            .map(|(i, s)| NetworkNode {
                id: NodeId(i as u32),
                tier: s.tier,
                capacity_mips: s.capacity_mips,
                region: s.region,
                parent: parent[i],
            })
            .collect::<Vec<_>>();
        let depth = nodes
            .iter()
            .map(|node| match node.tier {
                Tier::CloudServer => 0,
                Tier::EdgeServer => 1,
                Tier::FogServer => 2,
                Tier::EndDevice => 3,
            })
            .collect();

        Ok(Topology { nodes, uplinks, depth, cloud, edge_by_region, regions_x: spec.regions_x })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&NetworkNode> {
        self.nodes.get(id.0 as usize)
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.uplinks.iter().flatten()
    }

    /// Link from `child` to its parent.
    pub fn uplink(&self, child: NodeId) -> Option<&Link> {
        self.uplinks.get(child.0 as usize).and_then(Option::as_ref)
    }

    pub fn uplink_mut(&mut self, child: NodeId) -> Option<&mut Link> {
        self.uplinks.get_mut(child.0 as usize).and_then(Option::as_mut)
    }

    pub fn cloud(&self) -> NodeId {
        self.cloud
    }

    pub fn edge_of_region(&self, region: RegionId) -> Option<NodeId> {
        self.edge_by_region.get(region.linear(self.regions_x)).copied()
    }

    /// Nearest ancestor (or `id` itself) at `tier`.
    pub fn ancestor(&self, mut id: NodeId, tier: Tier) -> Option<NodeId> {
        loop {
            let node = self.node(id)?;
            if node.tier == tier {
                return Some(id);
            }
            id = node.parent?;
        }
    }

    fn check(&self, id: NodeId) -> Result<(), InfraError> {
        if (id.0 as usize) < self.nodes.len() {
            Ok(())
        } else {
            Err(InfraError::UnknownNode(id))
        }
    }

    /// Walks the unique tree path, calling `f` for each link in travel order.
    fn walk(&self, from: NodeId, to: NodeId, mut f: impl FnMut(&Link)) {
        let (mut a, mut b) = (from, to);
        let mut down: [Option<&Link>; 4] = [None; 4];
        let mut nd = 0;
        while self.depth[a.0 as usize] > self.depth[b.0 as usize] {
            let l = self.uplinks[a.0 as usize].as_ref().expect("non-root");
            f(l);
            a = l.parent;
        }
        while self.depth[b.0 as usize] > self.depth[a.0 as usize] {
            let l = self.uplinks[b.0 as usize].as_ref().expect("non-root");
            down[nd] = Some(l);
            nd += 1;
            b = l.parent;
        }
        while a != b {
            let la = self.uplinks[a.0 as usize].as_ref().expect("non-root");
            let lb = self.uplinks[b.0 as usize].as_ref().expect("non-root");
            f(la);
            down[nd] = Some(lb);
            nd += 1;
            a = la.parent;
            b = lb.parent;
        }
        for l in down[..nd].iter().rev() {
            f(l.expect("filled"));
        }
    }

    /// Links from `from` to `to` in travel order; empty when `from == to`.
    pub fn path(&self, from: NodeId, to: NodeId) -> Result<Vec<Link>, InfraError> {
        self.check(from)?;
        self.check(to)?;
        let mut out = Vec::new();
        self.walk(from, to, |l| out.push(*l));
        Ok(out)
    }

    /// Same as `transfer_time(bytes, &path(from, to))` without allocating.
    pub fn transfer_between(&self, bytes: u64, from: NodeId, to: NodeId) -> Result<SimTime, InfraError> {
        self.check(from)?;
        self.check(to)?;
        let mut total = SimTime::ZERO;
        self.walk(from, to, |l| total += l.transfer_time(bytes));
        Ok(total)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskKind {
    SpatialNavigation,
    CollisionDetection,
    SocialInteraction,
    TransactionValidation,
    UniverseSimulation,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::SpatialNavigation,
        TaskKind::CollisionDetection,
        TaskKind::SocialInteraction,
        TaskKind::TransactionValidation,
        TaskKind::UniverseSimulation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::SpatialNavigation => "spatial_navigation",
            TaskKind::CollisionDetection => "collision_detection",
            TaskKind::SocialInteraction => "social_interaction",
            TaskKind::TransactionValidation => "transaction_validation",
            TaskKind::UniverseSimulation => "universe_simulation",
        }
    }

    pub fn from_name(s: &str) -> Option<TaskKind> {
        TaskKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One unit of compute demand. `origin` is where the request starts and the
/// response returns: the owner's device, or the cloud for system tasks.
#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub kind: TaskKind,
    pub owner: Option<UserId>,
    pub origin: NodeId,
    /// Million instructions.
    pub length_mi: f64,
    pub upload_bytes: u64,
    pub download_bytes: u64,
    pub created_at: SimTime,
}

/// `length / capacity`, rounded to the microsecond.
pub fn service_time(length_mi: f64, capacity_mips: f64) -> SimTime {
    SimTime::from_ms_f64(length_mi * 1_000.0 / capacity_mips)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Execution {
    pub arrival: SimTime,
    pub start: SimTime,
    pub completion: SimTime,
}

impl Execution {
    pub fn wait(&self) -> SimTime {
        self.start - self.arrival
    }

    pub fn service(&self) -> SimTime {
        self.completion - self.start
    }
}

/// FIFO, non-preemptive server state for one node. Optionally keeps the
/// arrival log so completions can be replayed.
#[derive(Clone, Debug, Default)]
pub struct ComputeQueue {
    busy_until: SimTime,
    log: Option<Vec<(SimTime, SimTime, SimTime)>>,
}

impl ComputeQueue {
    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    /// `C = max(A, C_prev) + S`.
    pub fn admit(&mut self, arrival: SimTime, service: SimTime) -> Execution {
        let start = arrival.max(self.busy_until);
        let completion = start + service;
        self.busy_until = completion;
        if let Some(log) = &mut self.log {
            log.push((arrival, service, completion));
        }
        Execution { arrival, start, completion }
    }

    /// `(arrival, service, completion)` triples in admission order.
    pub fn log(&self) -> Option<&[(SimTime, SimTime, SimTime)]> {
        self.log.as_deref()
    }
}

/// Topology plus the compute queue of every node.
#[derive(Clone, Debug)]
pub struct Infrastructure {
    topology: Topology,
    queues: Vec<ComputeQueue>,
}

impl Infrastructure {
    pub fn new(topology: Topology) -> Self {
        let queues = vec![ComputeQueue::default(); topology.len()];
        Infrastructure { topology, queues }
    }

    /// Enables per-node arrival logs.
    pub fn with_logs(mut self) -> Self {
        for q in &mut self.queues {
            q.log = Some(Vec::new());
        }
        self
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn queue(&self, node: NodeId) -> Option<&ComputeQueue> {
        self.queues.get(node.0 as usize)
    }

    /// Runs `task` on `at`, arriving at `arrival`. Calls must come in
    /// arrival order per node for the FIFO discipline to hold.
    pub fn execute(&mut self, task: &Task, at: NodeId, arrival: SimTime) -> Execution {
        assert!(arrival >= task.created_at, "task {} arrives before it exists", task.id);
        let capacity = self.topology.node(at).expect("known node").capacity_mips;
        self.queues[at.0 as usize].admit(arrival, service_time(task.length_mi, capacity))
    }

    /// Runs the whole request/response cycle for `task` on `server` in one
    /// step. Valid when tasks are fed in order of arrival at the server.
    pub fn end_to_end_latency(&mut self, task: &Task, server: NodeId, policy: PolicyKind) -> LatencyRecord {
        let uplink = self.topology.transfer_between(task.upload_bytes, task.origin, server).expect("known nodes");
        let exec = self.execute(task, server, task.created_at + uplink);
        let downlink = self.topology.transfer_between(task.download_bytes, server, task.origin).expect("known nodes");
        LatencyRecord::new(task, policy, server, uplink, exec.wait(), exec.service(), downlink)
    }
}
