//! Single-server M/M/1 check of the event engine and FIFO compute queue.

use core::fmt;

use crate::engine::{Engine, RngStream, StreamId};
use crate::infra::ComputeQueue;
use crate::time::SimTime;

#[derive(Clone, Debug, PartialEq)]
pub enum QueueingError {
    NonPositiveRate,
    /// `λ ≥ μ`: the queue has no steady state.
    Unstable {
        lambda: f64,
        mu: f64,
    },
}

impl fmt::Display for QueueingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueueingError::NonPositiveRate => f.write_str("rates must be positive"),
            QueueingError::Unstable { lambda, mu } => write!(f, "unstable queue: lambda {lambda} >= mu {mu}"),
        }
    }
}

impl core::error::Error for QueueingError {}

/// Mean time in queue (excluding service) of a stable M/M/1: `ρ / (μ − λ)`.
pub fn mm1_mean_wait(lambda: f64, mu: f64) -> Result<f64, QueueingError> {
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(QueueingError::NonPositiveRate);
    }
    if lambda >= mu {
        return Err(QueueingError::Unstable { lambda, mu });
    }
    Ok((lambda / mu) / (mu - lambda))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mm1Report {
    pub tasks: u64,
    pub mean_wait_ms: f64,
    pub analytic_wait_ms: f64,
}

impl Mm1Report {
    pub fn relative_error(&self) -> f64 {
        (self.mean_wait_ms - self.analytic_wait_ms).abs() / self.analytic_wait_ms
    }
}

/// Simulates `tasks` Poisson arrivals (rate `lambda` per ms) into one FIFO
/// server with exponential service (rate `mu` per ms).
pub fn run_mm1(lambda: f64, mu: f64, tasks: u64, seed: u64) -> Result<Mm1Report, QueueingError> {
    let analytic = mm1_mean_wait(lambda, mu)?;
    let mut arrivals = RngStream::new(seed, StreamId::Custom(1));
    let mut services = RngStream::new(seed, StreamId::Custom(2));
    let mut engine: Engine<()> = Engine::new();
    let mut queue = ComputeQueue::default();
    let mut wait_us: u128 = 0;
    let mut admitted = 0u64;

    engine.schedule(arrivals.exponential(lambda).expect("checked"), ());
    engine.run_until(SimTime::MAX, |eng, ev| {
        let service = services.exponential(mu).expect("checked");
        wait_us += u128::from(queue.admit(ev.fire_at, service).wait().as_us());
        admitted += 1;
        if admitted < tasks {
            let gap = arrivals.exponential(lambda).expect("checked");
            eng.schedule(ev.fire_at + gap, ());
        }
    });

    Ok(Mm1Report {
        tasks: admitted,
        mean_wait_ms: wait_us as f64 / admitted.max(1) as f64 / 1_000.0,
        analytic_wait_ms: analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        assert_eq!(mm1_mean_wait(0.05, 0.1), Ok(10.0));
        assert!(matches!(mm1_mean_wait(0.1, 0.1), Err(QueueingError::Unstable { .. })));
        assert_eq!(mm1_mean_wait(0.0, 0.1), Err(QueueingError::NonPositiveRate));
    }

    #[test]
    fn light_load_matches_theory() {
        let r = run_mm1(0.02, 0.1, 50_000, 7).unwrap();
        assert_eq!(r.tasks, 50_000);
        assert!(r.relative_error() < 0.1, "{r:?}");
    }
}
