//! Latency records and their aggregation into scenario summaries.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::infra::{NodeId, Task, TaskId, TaskKind};
use crate::time::SimTime;
use crate::workload::PolicyKind;
use crate::world::UserId;

/// End-to-end latency of one task, split into its four components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatencyRecord {
    pub task_id: TaskId,
    pub kind: TaskKind,
    pub owner: Option<UserId>,
    pub policy: PolicyKind,
    pub placed_on: NodeId,
    pub uplink: SimTime,
    pub wait: SimTime,
    pub service: SimTime,
    pub downlink: SimTime,
    pub total: SimTime,
    pub created_at: SimTime,
}

impl LatencyRecord {
    pub fn new(
        task: &Task,
        policy: PolicyKind,
        placed_on: NodeId,
        uplink: SimTime,
        wait: SimTime,
        service: SimTime,
        downlink: SimTime,
    ) -> Self {
        LatencyRecord {
            task_id: task.id,
            kind: task.kind,
            owner: task.owner,
            policy,
            placed_on,
            uplink,
            wait,
            service,
            downlink,
            total: uplink + wait + service + downlink,
            created_at: task.created_at,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.total == self.uplink + self.wait + self.service + self.downlink
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricsError {
    Empty,
    NonPositiveBaseline,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::Empty => f.write_str("percentile of an empty sample"),
            MetricsError::NonPositiveBaseline => f.write_str("baseline latency must be positive"),
        }
    }
}

impl core::error::Error for MetricsError {}

/// Nearest-rank percentile of an ascending sample: the value at 1-based rank
/// `ceil(p/100 · n)`, with rank 0 lifted to 1.
pub fn percentile(sorted: &[SimTime], p: f64) -> Result<SimTime, MetricsError> {
    if sorted.is_empty() {
        return Err(MetricsError::Empty);
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let n = sorted.len();
    let rank = libm::ceil(p.clamp(0.0, 100.0) / 100.0 * n as f64) as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Fractional improvement of `fogedge_mean` over `cloud_mean`. Negative when
/// the fog/edge deployment is slower.
pub fn latency_reduction(cloud_mean: f64, fogedge_mean: f64) -> Result<f64, MetricsError> {
    if cloud_mean.is_nan() || cloud_mean <= 0.0 {
        return Err(MetricsError::NonPositiveBaseline);
    }
    Ok((cloud_mean - fogedge_mean) / cloud_mean)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub p50: SimTime,
    pub p95: SimTime,
    pub p99: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KindSummary {
    pub count: u64,
    /// `None` when no record was aggregated.
    pub stats: Option<LatencyStats>,
}

impl KindSummary {
    pub fn from_totals(mut totals: Vec<SimTime>) -> Self {
        totals.sort_unstable();
        let count = totals.len() as u64;
        if count == 0 {
            return KindSummary { count, stats: None };
        }
        let sum: u128 = totals.iter().map(|t| u128::from(t.as_us())).sum();
        let stats = LatencyStats {
            mean_ms: sum as f64 / count as f64 / 1_000.0,
            p50: percentile(&totals, 50.0).expect("non-empty"),
            p95: percentile(&totals, 95.0).expect("non-empty"),
            p99: percentile(&totals, 99.0).expect("non-empty"),
        };
        KindSummary { count, stats: Some(stats) }
    }

    pub fn mean_ms(&self) -> Option<f64> {
        self.stats.map(|s| s.mean_ms)
    }
}

/// Collects per-kind totals of every record created at or after `warmup`.
#[derive(Clone, Debug)]
pub struct Aggregator {
    warmup: SimTime,
    totals: [Vec<SimTime>; 5],
}

impl Aggregator {
    pub fn new(warmup: SimTime) -> Self {
        Aggregator { warmup, totals: Default::default() }
    }

    pub fn add(&mut self, rec: &LatencyRecord) {
        if rec.created_at >= self.warmup {
            self.totals[rec.kind.index()].push(rec.total);
        }
    }

    pub fn summarise(self) -> (KindSummary, [KindSummary; 5]) {
        let overall: Vec<SimTime> = self.totals.iter().flatten().copied().collect();
        let overall = KindSummary::from_totals(overall);
        let per_kind = self.totals.map(KindSummary::from_totals);
        (overall, per_kind)
    }
}

/// Task bookkeeping for one run. `generated == completed + in_flight`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TaskCounts {
    pub generated: u64,
    pub completed: u64,
    pub in_flight: u64,
    pub skipped_messages: u64,
    pub rejected_transactions: u64,
    pub blocks: u64,
}

impl TaskCounts {
    pub fn conserved(&self) -> bool {
        self.generated == self.completed + self.in_flight
    }
}

/// Summary of one scenario run.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    pub scenario: String,
    pub policy: PolicyKind,
    pub param: String,
    pub value: f64,
    pub replication: u32,
    pub seed: u64,
    pub config_digest: String,
    pub overall: KindSummary,
    pub per_kind: [KindSummary; 5],
    pub counts: TaskCounts,
    /// FNV-1a digest of the dispatched event transcript.
    pub transcript: u64,
}

impl ScenarioResult {
    pub fn kind(&self, kind: TaskKind) -> &KindSummary {
        &self.per_kind[kind.index()]
    }

    /// Percentile ordering holds for every populated summary.
    pub fn percentiles_ordered(&self) -> bool {
        core::iter::once(&self.overall).chain(self.per_kind.iter()).all(|s| match s.stats {
            Some(st) => st.p50 <= st.p95 && st.p95 <= st.p99,
            None => true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn ms(v: &[u64]) -> Vec<SimTime> {
        v.iter().map(|&x| SimTime::from_ms(x)).collect()
    }

    #[test]
    fn percentile_examples() {
        let s = ms(&[10, 20, 30, 40]);
        assert_eq!(percentile(&s, 50.0), Ok(SimTime::from_ms(20)));
        assert_eq!(percentile(&s, 100.0), Ok(SimTime::from_ms(40)));
        assert_eq!(percentile(&s, 0.0), Ok(SimTime::from_ms(10)));
        for p in [0.0, 1.0, 50.0, 99.9, 100.0] {
            assert_eq!(percentile(&ms(&[7]), p), Ok(SimTime::from_ms(7)));
        }
        assert_eq!(percentile(&[], 50.0), Err(MetricsError::Empty));
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(latency_reduction(200.0, 100.0), Ok(0.5));
        assert_eq!(latency_reduction(80.0, 80.0), Ok(0.0));
        assert_eq!(latency_reduction(100.0, 150.0), Ok(-0.5));
        assert_eq!(latency_reduction(0.0, 1.0), Err(MetricsError::NonPositiveBaseline));
        assert_eq!(latency_reduction(-5.0, 1.0), Err(MetricsError::NonPositiveBaseline));
    }

    #[test]
    fn empty_summary_has_no_stats() {
        let s = KindSummary::from_totals(vec![]);
        assert_eq!(s.count, 0);
        assert_eq!(s.stats, None);
    }

    #[test]
    fn summary_mean_is_exact_for_integers() {
        let s = KindSummary::from_totals(ms(&[30, 10, 20]));
        assert_eq!(s.mean_ms(), Some(20.0));
        assert_eq!(s.stats.unwrap().p50, SimTime::from_ms(20));
    }

    proptest! {
        #[test]
        fn percentile_bounds(mut v in proptest::collection::vec(0u64..1_000_000, 1..300)) {
            v.sort_unstable();
            let s: Vec<SimTime> = v.iter().map(|&x| SimTime::from_us(x)).collect();
            let p = |q| percentile(&s, q).unwrap();
            prop_assert!(s[0] <= p(50.0));
            prop_assert!(p(50.0) <= p(95.0));
            prop_assert!(p(95.0) <= p(99.0));
            prop_assert!(p(99.0) <= *s.last().unwrap());
        }

        #[test]
        fn reduction_identity(c in 0.001f64..1e6, f in 0.0f64..1e6) {
            let r = latency_reduction(c, f).unwrap();
            prop_assert!((r - (1.0 - f / c)).abs() <= 1e-12 * (1.0 + (f / c).abs()));
        }
    }
}
