//! Task generation from world activity, and the placement policies.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::engine::{RngStream, StreamId};
use crate::infra::{NodeId, Task, TaskId, TaskKind, Tier, Topology};
use crate::ledger::{AssetId, LedgerError, Transaction, TxId};
use crate::time::SimTime;
use crate::world::{RegionId, UserId, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    /// Every task runs on the cloud.
    CloudOnly,
    /// Avatar tasks on the home fog, social and trading tasks on the regional
    /// edge, universe simulation on the cloud.
    FogEdge,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 2] = [PolicyKind::CloudOnly, PolicyKind::FogEdge];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::CloudOnly => "cloud",
            PolicyKind::FogEdge => "fogedge",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownPolicy;

impl fmt::Display for UnknownPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("policy must be `cloud` or `fogedge`")
    }
}

impl core::error::Error for UnknownPolicy {}

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cloud" => Ok(PolicyKind::CloudOnly),
            "fogedge" => Ok(PolicyKind::FogEdge),
            _ => Err(UnknownPolicy),
        }
    }
}

/// Where a task runs. Pure in its inputs: same kind, origin, region and
/// policy always give the same node.
///
/// `region` is the owner's current region; it only matters for social and
/// transaction tasks under `FogEdge`.
pub fn place(kind: TaskKind, origin: NodeId, region: Option<RegionId>, policy: PolicyKind, topo: &Topology) -> NodeId {
    match (policy, kind) {
        (PolicyKind::CloudOnly, _) | (PolicyKind::FogEdge, TaskKind::UniverseSimulation) => topo.cloud(),
        (PolicyKind::FogEdge, TaskKind::SpatialNavigation | TaskKind::CollisionDetection) => {
            topo.ancestor(origin, Tier::FogServer).expect("avatar tasks originate below a fog server")
        }
        (PolicyKind::FogEdge, TaskKind::SocialInteraction | TaskKind::TransactionValidation) => region
            .and_then(|r| topo.edge_of_region(r))
            .or_else(|| topo.ancestor(origin, Tier::EdgeServer))
            .expect("every region has an edge server"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskProfile {
    pub kind: TaskKind,
    pub base_length_mi: f64,
    /// Extra length per collision candidate; only collision tasks use it.
    pub per_neighbor_mi: f64,
    pub upload_bytes: u64,
    pub download_bytes: u64,
}

impl TaskProfile {
    pub fn length_for(&self, neighbors: usize) -> f64 {
        self.base_length_mi + self.per_neighbor_mi * neighbors as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profiles {
    pub navigation: TaskProfile,
    pub collision: TaskProfile,
    pub social: TaskProfile,
    pub transaction: TaskProfile,
    pub universe: TaskProfile,
}

impl Profiles {
    pub fn get(&self, kind: TaskKind) -> &TaskProfile {
        match kind {
            TaskKind::SpatialNavigation => &self.navigation,
            TaskKind::CollisionDetection => &self.collision,
            TaskKind::SocialInteraction => &self.social,
            TaskKind::TransactionValidation => &self.transaction,
            TaskKind::UniverseSimulation => &self.universe,
        }
    }
}

/// How a task's length becomes its service demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ServiceModel {
    /// The profile length as-is.
    #[default]
    Deterministic,
    /// Exponentially distributed with the profile length as mean.
    Exponential,
}

/// Rates are per user per second.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates {
    pub message_per_user_s: f64,
    pub transaction_per_user_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MessageOutcome {
    Sent {
        task: Task,
        target: UserId,
    },
    /// No other user within the messaging radius.
    Skipped {
        sender: UserId,
    },
}

/// Stateful task factory. Owns the messaging, transaction and service
/// random streams; movement randomness stays with the world.
#[derive(Clone, Debug)]
pub struct Workload {
    profiles: Profiles,
    rates: Rates,
    service: ServiceModel,
    next_task: u64,
    next_tx: u64,
    messaging: RngStream,
    transactions: RngStream,
    service_rng: RngStream,
}

impl Workload {
    pub fn new(profiles: Profiles, rates: Rates, service: ServiceModel, seed: u64) -> Self {
        Workload {
            profiles,
            rates,
            service,
            next_task: 0,
            next_tx: 0,
            messaging: RngStream::new(seed, StreamId::Messaging),
            transactions: RngStream::new(seed, StreamId::Transactions),
            service_rng: RngStream::new(seed, StreamId::Service),
        }
    }

    pub fn profiles(&self) -> &Profiles {
        &self.profiles
    }

    pub fn tasks_created(&self) -> u64 {
        self.next_task
    }

    fn length(&mut self, mean: f64) -> f64 {
        match self.service {
            ServiceModel::Deterministic => mean,
            ServiceModel::Exponential => self
                .service_rng
                .exponential_ms(1.0 / mean)
                .expect("profile lengths are positive")
                .max(f64::MIN_POSITIVE),
        }
    }

    /// Builds a task from its profile with `neighbors` collision candidates.
    pub fn make_task(
        &mut self,
        kind: TaskKind,
        owner: Option<UserId>,
        origin: NodeId,
        neighbors: usize,
        now: SimTime,
    ) -> Task {
        let p = *self.profiles.get(kind);
        let length_mi = self.length(p.length_for(neighbors));
        let id = TaskId(self.next_task);
        self.next_task += 1;
        Task {
            id,
            kind,
            owner,
            origin,
            length_mi,
            upload_bytes: p.upload_bytes,
            download_bytes: p.download_bytes,
            created_at: now,
        }
    }

    /// One navigation and one collision task per avatar, in user order.
    /// `devices[u]` is user `u`'s end device.
    pub fn tick_tasks(&mut self, world: &World, devices: &[NodeId], now: SimTime) -> Vec<Task> {
        let mut out = Vec::with_capacity(world.user_count() * 2);
        for a in world.avatars() {
            let dev = devices[a.user.0 as usize];
            out.push(self.make_task(TaskKind::SpatialNavigation, Some(a.user), dev, 0, now));
            let k = world.collision_candidates(a.user);
            out.push(self.make_task(TaskKind::CollisionDetection, Some(a.user), dev, k, now));
        }
        out
    }

    fn gap(rng: &mut RngStream, per_user_s: f64, users: usize) -> Option<SimTime> {
        let rate_per_ms = per_user_s * users as f64 / 1_000.0;
        (rate_per_ms > 0.0).then(|| rng.exponential(rate_per_ms).expect("positive rate"))
    }

    /// Time to the next message from the superposed per-user processes.
    pub fn next_message_gap(&mut self, users: usize) -> Option<SimTime> {
        Self::gap(&mut self.messaging, self.rates.message_per_user_s, users)
    }

    pub fn next_transaction_gap(&mut self, users: usize) -> Option<SimTime> {
        Self::gap(&mut self.transactions, self.rates.transaction_per_user_s, users)
    }

    /// A uniformly chosen sender messages a uniformly chosen user within
    /// `radius`; skipped when nobody is in range.
    pub fn message(&mut self, world: &World, devices: &[NodeId], radius: f64, now: SimTime) -> MessageOutcome {
        let users = world.user_count() as u64;
        let sender = UserId(self.messaging.below(users) as u32);
        let near = world.nearby_users(sender, radius).expect("radius validated against cell size");
        if near.is_empty() {
            return MessageOutcome::Skipped { sender };
        }
        let target = near[self.messaging.below(near.len() as u64) as usize];
        let task = self.make_task(TaskKind::SocialInteraction, Some(sender), devices[sender.0 as usize], 0, now);
        MessageOutcome::Sent { task, target }
    }

    /// Draws a purchase: uniform buyer, uniform seller among the others, a
    /// fresh asset and an amount in `1..=1000`. With a single user the
    /// seller equals the buyer and validation will reject it.
    pub fn draw_transaction(&mut self, users: usize, now: SimTime) -> Transaction {
        let users = users as u64;
        let buyer = self.transactions.below(users);
        let seller = if users > 1 {
            let s = self.transactions.below(users - 1);
            if s >= buyer {
                s + 1
            } else {
                s
            }
        } else {
            buyer
        };
        let amount = 1 + self.transactions.below(1_000) as i64;
        let id = TxId(self.next_tx);
        self.next_tx += 1;
        Transaction {
            id,
            buyer: UserId(buyer as u32),
            seller: UserId(seller as u32),
            asset: AssetId(id.0),
            amount,
            submitted_at: now,
        }
    }

    /// Validation task for `tx`, submitted from the buyer's device. Malformed
    /// transactions are refused before any task exists.
    pub fn transaction_task(&mut self, tx: &Transaction, origin: NodeId, now: SimTime) -> Result<Task, LedgerError> {
        tx.validate()?;
        Ok(self.make_task(TaskKind::TransactionValidation, Some(tx.buyer), origin, 0, now))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infra::{build_topology, LinkParams, TopologySpec};
    use crate::world::{Avatar, Point, WorldGrid};
    use alloc::vec;

    fn profiles() -> Profiles {
        let p = |kind, base, up, down| TaskProfile {
            kind,
            base_length_mi: base,
            per_neighbor_mi: 0.0,
            upload_bytes: up,
            download_bytes: down,
        };
        Profiles {
            navigation: p(TaskKind::SpatialNavigation, 50.0, 2048, 1024),
            collision: TaskProfile { per_neighbor_mi: 10.0, ..p(TaskKind::CollisionDetection, 20.0, 1024, 512) },
            social: p(TaskKind::SocialInteraction, 30.0, 1024, 1024),
            transaction: p(TaskKind::TransactionValidation, 200.0, 2048, 512),
            universe: p(TaskKind::UniverseSimulation, 10_000.0, 0, 0),
        }
    }

    /// 2x1 regions; cloud 0, edges 1 and 4, fogs 2 and 5, devices 3 and 6.
    fn topo() -> Topology {
        let mut s = TopologySpec::new(2, 1);
        let cloud = s.add_node(Tier::CloudServer, 1e5, None);
        for r in 0..2 {
            let e = s.add_node(Tier::EdgeServer, 1e4, Some(RegionId::new(r, 0)));
            let f = s.add_node(Tier::FogServer, 1e3, None);
            let d = s.add_node(Tier::EndDevice, 1e2, None);
            s.attach(e, cloud);
            s.attach(f, e);
            s.attach(d, f);
        }
        let l = LinkParams::new(SimTime::from_ms(1), 100.0);
        s.device_fog = Some(l);
        s.fog_edge = Some(l);
        s.edge_cloud = Some(l);
        build_topology(&s).unwrap()
    }

    fn rates(msg: f64, tx: f64) -> Rates {
        Rates { message_per_user_s: msg, transaction_per_user_s: tx }
    }

    fn lone_world() -> World {
        let g = WorldGrid::new(200.0, 100.0, 2, 1, 50.0).unwrap();
        let a = Avatar {
            user: UserId(0),
            pos: Point::new(10.0, 10.0),
            waypoint: Point::new(10.0, 10.0),
            speed: 0.0,
            home_fog: NodeId(2),
            region: RegionId::new(0, 0),
        };
        World::new(g, vec![a]).unwrap()
    }

    #[test]
    fn fogedge_placement() {
        let t = topo();
        let dev = NodeId(3);
        let r1 = Some(RegionId::new(1, 0));
        assert_eq!(place(TaskKind::SpatialNavigation, dev, r1, PolicyKind::FogEdge, &t), NodeId(2));
        assert_eq!(place(TaskKind::CollisionDetection, dev, r1, PolicyKind::FogEdge, &t), NodeId(2));
        // current region, not home region
        assert_eq!(place(TaskKind::SocialInteraction, dev, r1, PolicyKind::FogEdge, &t), NodeId(4));
        assert_eq!(place(TaskKind::TransactionValidation, dev, r1, PolicyKind::FogEdge, &t), NodeId(4));
        assert_eq!(
            place(TaskKind::TransactionValidation, dev, Some(RegionId::new(0, 0)), PolicyKind::FogEdge, &t),
            NodeId(1)
        );
        assert_eq!(place(TaskKind::UniverseSimulation, NodeId(0), None, PolicyKind::FogEdge, &t), NodeId(0));
    }

    #[test]
    fn cloud_only_placement() {
        let t = topo();
        for kind in TaskKind::ALL {
            assert_eq!(place(kind, NodeId(6), Some(RegionId::new(1, 0)), PolicyKind::CloudOnly, &t), t.cloud());
        }
    }

    #[test]
    fn lone_avatar_tick() {
        let w = lone_world();
        let mut wl = Workload::new(profiles(), rates(0.0, 0.0), ServiceModel::Deterministic, 1);
        let tasks = wl.tick_tasks(&w, &[NodeId(3)], SimTime::from_ms(100));
        assert_eq!(tasks.len(), 2);
        assert_eq!((tasks[0].kind, tasks[0].length_mi), (TaskKind::SpatialNavigation, 50.0));
        assert_eq!((tasks[1].kind, tasks[1].length_mi), (TaskKind::CollisionDetection, 20.0));
        assert_eq!(tasks[1].id, TaskId(1));
    }

    #[test]
    fn collision_length_scales_with_candidates() {
        let g = WorldGrid::new(200.0, 100.0, 2, 1, 50.0).unwrap();
        let avatars = (0..4)
            .map(|u| Avatar {
                user: UserId(u),
                pos: Point::new(10.0, 10.0),
                waypoint: Point::new(10.0, 10.0),
                speed: 0.0,
                home_fog: NodeId(2),
                region: RegionId::new(0, 0),
            })
            .collect();
        let w = World::new(g, avatars).unwrap();
        let mut wl = Workload::new(profiles(), rates(0.0, 0.0), ServiceModel::Deterministic, 1);
        let tasks = wl.tick_tasks(&w, &[NodeId(3); 4], SimTime::ZERO);
        assert!(tasks.iter().filter(|t| t.kind == TaskKind::CollisionDetection).all(|t| t.length_mi == 50.0));
    }

    #[test]
    fn disabled_messaging_never_fires() {
        let mut wl = Workload::new(profiles(), rates(0.0, 0.01), ServiceModel::Deterministic, 1);
        assert_eq!(wl.next_message_gap(1_000), None);
        assert!(wl.next_transaction_gap(1_000).is_some());
    }

    #[test]
    fn message_without_neighbour_is_skipped() {
        let w = lone_world();
        let mut wl = Workload::new(profiles(), rates(1.0, 0.0), ServiceModel::Deterministic, 1);
        assert_eq!(wl.message(&w, &[NodeId(3)], 30.0, SimTime::ZERO), MessageOutcome::Skipped { sender: UserId(0) });
        assert_eq!(wl.tasks_created(), 0);
    }

    #[test]
    fn transaction_count_matches_poisson_mean() {
        // 100 users at 0.01/s for 1000 s: expect 1000 arrivals.
        let mut wl = Workload::new(profiles(), rates(0.0, 0.01), ServiceModel::Deterministic, 5);
        let horizon = SimTime::from_secs(1_000);
        let mut t = SimTime::ZERO;
        let mut n = 0u32;
        loop {
            t += wl.next_transaction_gap(100).unwrap();
            if t > horizon {
                break;
            }
            n += 1;
        }
        assert!((900..=1100).contains(&n), "{n} transactions");
    }

    #[test]
    fn self_trade_refused_before_task_creation() {
        let mut wl = Workload::new(profiles(), rates(0.0, 1.0), ServiceModel::Deterministic, 1);
        let tx = wl.draw_transaction(1, SimTime::ZERO);
        assert_eq!(tx.buyer, tx.seller);
        assert!(wl.transaction_task(&tx, NodeId(3), SimTime::ZERO).is_err());
        assert_eq!(wl.tasks_created(), 0);
        let tx = wl.draw_transaction(2, SimTime::ZERO);
        assert_ne!(tx.buyer, tx.seller);
        assert!(wl.transaction_task(&tx, NodeId(3), SimTime::ZERO).is_ok());
    }

    #[test]
    fn exponential_service_lengths_have_profile_mean() {
        let mut wl = Workload::new(profiles(), rates(0.0, 0.0), ServiceModel::Exponential, 11);
        let n = 50_000;
        let sum: f64 = (0..n)
            .map(|_| wl.make_task(TaskKind::SocialInteraction, None, NodeId(0), 0, SimTime::ZERO).length_mi)
            .sum();
        let mean = sum / n as f64;
        assert!((mean - 30.0).abs() < 0.03 * 30.0, "mean {mean}");
    }

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.name().parse::<PolicyKind>(), Ok(p));
        }
        assert!("edge".parse::<PolicyKind>().is_err());
    }
}
