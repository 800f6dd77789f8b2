//! Output files.
//!
//! * `results.csv`: one row per scenario and task kind plus an `overall` row.
//! * `scenarios.csv`: task counts and event-transcript digest per scenario.
//! * `plot_<param>.dat`: whitespace-separated mean latency per swept value.
//! * `run_metadata.toml`: the resolved configuration and run parameters.
//! * `records.csv` and `chain.txt`: per-task records and the ledger of a
//!   single run.
//!
//! Latencies are written in milliseconds with three decimals, which is exact
//! for the microsecond clock. Means use the shortest round-tripping float.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fogverse_core::ledger::Hex;
use fogverse_core::metrics::{KindSummary, LatencyStats, TaskCounts};
use fogverse_core::{Chain, Config, LatencyRecord, PolicyKind, ScenarioResult, SimTime, SweepParam, TaskKind};
use serde::Serialize;

use crate::config::to_toml;
use crate::{Error, Result};

pub const RESULTS_HEADER: [&str; 13] = [
    "scenario",
    "policy",
    "param",
    "value",
    "replication",
    "kind",
    "count",
    "mean_ms",
    "p50_ms",
    "p95_ms",
    "p99_ms",
    "seed",
    "config_digest",
];

pub const SCENARIOS_HEADER: [&str; 14] = [
    "scenario",
    "policy",
    "param",
    "value",
    "replication",
    "seed",
    "config_digest",
    "generated",
    "completed",
    "in_flight",
    "skipped_messages",
    "rejected_transactions",
    "blocks",
    "transcript",
];

pub const RECORDS_HEADER: [&str; 11] = [
    "task_id",
    "kind",
    "owner",
    "policy",
    "placed_on",
    "created_at_ms",
    "uplink_ms",
    "wait_ms",
    "service_ms",
    "downlink_ms",
    "total_ms",
];

const OVERALL: &str = "overall";

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Write { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn fmt_f64(v: f64) -> String {
    // `{}` on f64 is the shortest string that parses back to the same value
    format!("{v}")
}

fn summary_cells(s: &KindSummary) -> [String; 5] {
    match s.stats {
        Some(st) => {
            [s.count.to_string(), fmt_f64(st.mean_ms), st.p50.to_string(), st.p95.to_string(), st.p99.to_string()]
        }
        None => [s.count.to_string(), String::new(), String::new(), String::new(), String::new()],
    }
}

pub fn write_results(path: &Path, results: &[ScenarioResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(RESULTS_HEADER).map_err(csv_err(path))?;
    for r in results {
        let rows = std::iter::once((OVERALL, &r.overall)).chain(TaskKind::ALL.iter().map(|k| (k.name(), r.kind(*k))));
        for (kind, s) in rows {
            let [count, mean, p50, p95, p99] = summary_cells(s);
            w.write_record([
                r.scenario.as_str(),
                r.policy.name(),
                &r.param,
                &fmt_f64(r.value),
                &r.replication.to_string(),
                kind,
                &count,
                &mean,
                &p50,
                &p95,
                &p99,
                &r.seed.to_string(),
                &r.config_digest,
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn write_scenarios(path: &Path, results: &[ScenarioResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(SCENARIOS_HEADER).map_err(csv_err(path))?;
    for r in results {
        let c = &r.counts;
        w.write_record([
            r.scenario.clone(),
            r.policy.name().to_string(),
            r.param.clone(),
            fmt_f64(r.value),
            r.replication.to_string(),
            r.seed.to_string(),
            r.config_digest.clone(),
            c.generated.to_string(),
            c.completed.to_string(),
            c.in_flight.to_string(),
            c.skipped_messages.to_string(),
            c.rejected_transactions.to_string(),
            c.blocks.to_string(),
            format!("{:016x}", r.transcript),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Mean of the per-replication means for one (value, policy) cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub value: f64,
    pub policy: PolicyKind,
    pub mean_ms: f64,
}

/// Which latency a sweep plots: all tasks for user sweeps, transaction
/// validation for transaction-rate sweeps.
pub fn plotted_kind(param: SweepParam) -> Option<TaskKind> {
    match param {
        SweepParam::UserCount => None,
        SweepParam::TxRate => Some(TaskKind::TransactionValidation),
    }
}

/// Replication-averaged curve of `results`, in first-seen value order.
/// Cells where no replication has data are left out.
pub fn curve(results: &[ScenarioResult], kind: Option<TaskKind>) -> Vec<CurvePoint> {
    let mut cells: Vec<(f64, PolicyKind, f64, u32)> = Vec::new();
    for r in results {
        let s = kind.map_or(&r.overall, |k| r.kind(k));
        let Some(m) = s.mean_ms() else { continue };
        match cells.iter_mut().find(|c| c.0 == r.value && c.1 == r.policy) {
            Some(c) => {
                c.2 += m;
                c.3 += 1;
            }
            None => cells.push((r.value, r.policy, m, 1)),
        }
    }
    cells.into_iter().map(|(value, policy, sum, n)| CurvePoint { value, policy, mean_ms: sum / f64::from(n) }).collect()
}

/// Two columns per policy: swept value and mean latency.
pub fn write_plot(path: &Path, param: SweepParam, results: &[ScenarioResult]) -> Result<()> {
    let points = curve(results, plotted_kind(param));
    let what = plotted_kind(param).map_or("all tasks", |k| k.name());
    let mut values: Vec<f64> = points.iter().map(|p| p.value).collect();
    values.dedup();
    let mut w = create(path)?;
    let mut out = format!("# mean latency ({what}) vs {param}\n#");
    for p in PolicyKind::ALL {
        out.push_str(&format!(" {p}_{param} {p}_mean_ms"));
    }
    out.push('\n');
    for v in values {
        for (i, policy) in PolicyKind::ALL.iter().enumerate() {
            let mean = points
                .iter()
                .find(|p| p.value == v && p.policy == *policy)
                .map_or_else(|| "NaN".to_string(), |p| format!("{:.6}", p.mean_ms));
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{} {}", fmt_f64(v), mean));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Run parameters recorded next to the outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunInfo {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config_digest: String,
    pub version: String,
    pub notes: Vec<String>,
}

impl RunInfo {
    pub fn new(command: &str, cfg: &Config) -> Self {
        RunInfo {
            command: command.to_string(),
            param: None,
            values: Vec::new(),
            replications: None,
            base_seed: None,
            policy: None,
            seed: None,
            config_digest: cfg.digest(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            notes: vec![
                "latencies exclude records created before experiment.warmup_s".to_string(),
                "percentiles are nearest-rank".to_string(),
                "tx_rate sweep values are aggregate purchases per second; per-user rate = value / world.users"
                    .to_string(),
                "messages and purchases are Poisson streams superposed over all users; movement ticks are synchronous"
                    .to_string(),
            ],
        }
    }
}

pub fn write_metadata(path: &Path, info: &RunInfo, cfg: &Config) -> Result<()> {
    let mut out = String::from("[run]\n");
    out.push_str(&toml::to_string(info).expect("run info serialises"));
    // re-root the resolved config under `config.`
    let resolved: toml::Table = toml::from_str(&to_toml(cfg)).expect("round trip");
    let mut wrapper = toml::Table::new();
    wrapper.insert("config".to_string(), toml::Value::Table(resolved));
    out.push('\n');
    out.push_str(&toml::to_string(&wrapper).expect("table serialises"));
    std::fs::write(path, out).map_err(io_err(path))
}

/// Streams latency records to CSV.
pub struct RecordWriter {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(RECORDS_HEADER).map_err(csv_err(path))?;
        Ok(RecordWriter { path: path.to_path_buf(), w })
    }

    pub fn write(&mut self, r: &LatencyRecord) -> Result<()> {
        let owner = r.owner.map_or_else(String::new, |u| u.0.to_string());
        self.w
            .write_record([
                r.task_id.0.to_string(),
                r.kind.name().to_string(),
                owner,
                r.policy.name().to_string(),
                r.placed_on.0.to_string(),
                r.created_at.to_string(),
                r.uplink.to_string(),
                r.wait.to_string(),
                r.service.to_string(),
                r.downlink.to_string(),
                r.total.to_string(),
            ])
            .map_err(csv_err(&self.path))
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(io_err(&self.path))
    }
}

/// One line per block: index, hash, previous hash, transaction count and
/// formation time in ms.
pub fn write_chain(path: &Path, chain: &Chain) -> Result<()> {
    let mut w = create(path)?;
    let mut out = String::from("# index hash prev_hash txs formed_at_ms\n");
    for b in chain.blocks() {
        out.push_str(&format!("{} {} {} {} {}\n", b.index, Hex(&b.hash), Hex(&b.prev_hash), b.txs.len(), b.formed_at));
    }
    w.write_all(out.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Writes `results.csv`, `scenarios.csv`, `run_metadata.toml` and, for
/// sweeps, the plot file into `dir`.
pub fn emit(
    dir: &Path,
    results: &[ScenarioResult],
    cfg: &Config,
    info: &RunInfo,
    param: Option<SweepParam>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_results(&dir.join("results.csv"), results)?;
    write_scenarios(&dir.join("scenarios.csv"), results)?;
    if let Some(p) = param {
        write_plot(&dir.join(format!("plot_{p}.dat")), p, results)?;
    }
    write_metadata(&dir.join("run_metadata.toml"), info, cfg)
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Malformed { path: path.to_path_buf(), reason: reason.into() }
}

fn field<T: FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed(path, format!("bad `{name}` in line {}", rec.position().map_or(0, |p| p.line()))))
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let h = r.headers().map_err(csv_err(path))?;
    if h.iter().ne(header.iter().copied()) {
        return Err(malformed(path, "unexpected header"));
    }
    r.records().collect::<Result<Vec<_>, _>>().map_err(csv_err(path))
}

fn parse_summary(path: &Path, rec: &csv::StringRecord) -> Result<KindSummary> {
    let count: u64 = field(path, rec, 6, "count")?;
    if rec.get(7).is_some_and(str::is_empty) {
        return Ok(KindSummary { count, stats: None });
    }
    Ok(KindSummary {
        count,
        stats: Some(LatencyStats {
            mean_ms: field(path, rec, 7, "mean_ms")?,
            p50: field::<SimTime>(path, rec, 8, "p50_ms")?,
            p95: field::<SimTime>(path, rec, 9, "p95_ms")?,
            p99: field::<SimTime>(path, rec, 10, "p99_ms")?,
        }),
    })
}

/// Reads back `results.csv` and `scenarios.csv` from `dir`.
pub fn read_results(dir: &Path) -> Result<Vec<ScenarioResult>> {
    let spath = dir.join("scenarios.csv");
    let rpath = dir.join("results.csv");
    let scen = read_csv(&spath, &SCENARIOS_HEADER)?;
    let rows = read_csv(&rpath, &RESULTS_HEADER)?;
    if rows.len() != scen.len() * (TaskKind::ALL.len() + 1) {
        return Err(malformed(&rpath, "row count does not match scenarios.csv"));
    }
    let mut out = Vec::with_capacity(scen.len());
    for (s, chunk) in scen.iter().zip(rows.chunks(TaskKind::ALL.len() + 1)) {
        let scenario = s.get(0).unwrap_or_default().to_string();
        let policy: PolicyKind = field(&spath, s, 1, "policy")?;
        let transcript = u64::from_str_radix(s.get(13).unwrap_or_default(), 16)
            .map_err(|_| malformed(&spath, "bad `transcript`"))?;
        let mut per_kind = [KindSummary { count: 0, stats: None }; 5];
        let mut overall = None;
        for row in chunk {
            if row.get(0) != Some(scenario.as_str()) {
                return Err(malformed(&rpath, format!("rows for `{scenario}` out of order")));
            }
            let summary = parse_summary(&rpath, row)?;
            match row.get(5) {
                Some(OVERALL) => overall = Some(summary),
                Some(k) => {
                    let kind =
                        TaskKind::from_name(k).ok_or_else(|| malformed(&rpath, format!("unknown kind `{k}`")))?;
                    per_kind[kind.index()] = summary;
                }
                None => return Err(malformed(&rpath, "missing kind")),
            }
        }
        out.push(ScenarioResult {
            scenario,
            policy,
            param: s.get(2).unwrap_or_default().to_string(),
            value: field(&spath, s, 3, "value")?,
            replication: field(&spath, s, 4, "replication")?,
            seed: field(&spath, s, 5, "seed")?,
            config_digest: s.get(6).unwrap_or_default().to_string(),
            overall: overall.ok_or_else(|| malformed(&rpath, "missing overall row"))?,
            per_kind,
            counts: TaskCounts {
                generated: field(&spath, s, 7, "generated")?,
                completed: field(&spath, s, 8, "completed")?,
                in_flight: field(&spath, s, 9, "in_flight")?,
                skipped_messages: field(&spath, s, 10, "skipped_messages")?,
                rejected_transactions: field(&spath, s, 11, "rejected_transactions")?,
                blocks: field(&spath, s, 12, "blocks")?,
            },
            transcript,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_print_shortest() {
        assert_eq!(fmt_f64(100.0), "100");
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn tx_sweeps_plot_transactions() {
        assert_eq!(plotted_kind(SweepParam::TxRate), Some(TaskKind::TransactionValidation));
        assert_eq!(plotted_kind(SweepParam::UserCount), None);
    }
}
