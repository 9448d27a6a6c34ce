//! Run metrics: delivery probability, end-to-end delay statistics, collision
//! ratio, and the success-rate score.
//!
//! All ratios are exact count quotients; delay statistics are computed over
//! delivered pairs only, in log order and in f64 seconds, so an independent
//! second pass over the serialized log reproduces them bit for bit.

use thiserror::Error;

use crate::engine::{nanos_to_secs, EventLog};
use crate::protocols::ProtocolKind;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("event log has no intended (message, receiver) pairs")]
    EmptyLog,
}

/// End-to-end delay statistics over delivered pairs, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayStats {
    pub mean_s: f64,
    pub p50_s: f64,
    pub p95_s: f64,
    pub max_s: f64,
}

/// Outcome tallies; the four outcome counts partition the intended pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutcomeCounts {
    pub intended: usize,
    pub delivered: usize,
    pub collided: usize,
    pub dropped_shadow: usize,
    pub out_of_range: usize,
    pub frames_sent: usize,
    pub frames_collided: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// delivered / intended.
    pub delivery_probability: f64,
    pub delay: DelayStats,
    /// collided frames / frames sent.
    pub collision_ratio: f64,
    /// delivery_probability * clamp(mean_delay / dmax) / n_users.
    pub m_success: f64,
    pub counts: OutcomeCounts,
}

/// Computes the report from a log. `n_users` is the population the
/// success-rate score divides by; `dmax_s` normalizes mean delay into [0, 1].
pub fn compute_metrics(
    log: &EventLog,
    n_users: u32,
    dmax_s: f64,
) -> Result<MetricsReport, MetricsError> {
    let mut counts = OutcomeCounts {
        intended: log.outcomes.len(),
        frames_sent: log.frames.len(),
        frames_collided: log.frames.iter().filter(|f| f.collided).count(),
        ..Default::default()
    };
    if counts.intended == 0 {
        return Err(MetricsError::EmptyLog);
    }

    let mut delays: Vec<f64> = Vec::new();
    for r in &log.outcomes {
        use crate::engine::Outcome::*;
        match r.outcome {
            Delivered { .. } => {
                counts.delivered += 1;
                delays.push(nanos_to_secs(r.delay_ns().unwrap_or(0)));
            }
            Collided => counts.collided += 1,
            DroppedShadow => counts.dropped_shadow += 1,
            OutOfRange => counts.out_of_range += 1,
        }
    }

    let delivery_probability = counts.delivered as f64 / counts.intended as f64;
    let collision_ratio = if counts.frames_sent == 0 {
        0.0
    } else {
        counts.frames_collided as f64 / counts.frames_sent as f64
    };

    let delay = if delays.is_empty() {
        DelayStats::default()
    } else {
        let mean_s = delays.iter().sum::<f64>() / delays.len() as f64;
        let mut sorted = delays.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        DelayStats {
            mean_s,
            p50_s: percentile(&sorted, 0.50),
            p95_s: percentile(&sorted, 0.95),
            max_s: *sorted.last().unwrap(),
        }
    };

    let d_norm = (delay.mean_s / dmax_s).clamp(0.0, 1.0);
    let m_success = delivery_probability * d_norm / n_users.max(1) as f64;

    Ok(MetricsReport { delivery_probability, delay, collision_ratio, m_success, counts })
}

/// Nearest-rank percentile over sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).max(1);
    sorted[rank - 1]
}

/// One results row of a run or sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub protocol: ProtocolKind,
    pub n_vehicles: u32,
    pub seed: u64,
    pub report: MetricsReport,
}

pub const RESULTS_HEADER: &str =
    "protocol,n_vehicles,seed,delivery_prob,delay_mean_s,delay_p95_s,collision_ratio,m_success";

/// Serializes rows in the given order under the fixed results header.
pub fn results_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.report;
        out.push_str(&format!(
            "{},{},{},{:.6},{:.9},{:.9},{:.6},{:.6}\n",
            row.protocol,
            row.n_vehicles,
            row.seed,
            r.delivery_probability,
            r.delay.mean_s,
            r.delay.p95_s,
            r.collision_ratio,
            r.m_success
        ));
    }
    out
}

/// Gnuplot-style plot data, one file per metric: rows are densities, columns
/// are per-protocol means over seeds.
pub fn plot_data(rows: &[ReportRow]) -> Vec<(String, String)> {
    let mut protocols: Vec<ProtocolKind> = rows.iter().map(|r| r.protocol).collect();
    protocols.sort_unstable();
    protocols.dedup();
    let mut densities: Vec<u32> = rows.iter().map(|r| r.n_vehicles).collect();
    densities.sort_unstable();
    densities.dedup();

    let metrics: [(&str, fn(&MetricsReport) -> f64); 4] = [
        ("delivery_prob", |r| r.delivery_probability),
        ("delay_mean_s", |r| r.delay.mean_s),
        ("collision_ratio", |r| r.collision_ratio),
        ("m_success", |r| r.m_success),
    ];

    metrics
        .iter()
        .map(|(name, get)| {
            let mut out = format!("# n_vehicles");
            for p in &protocols {
                out.push_str(&format!(" {p}"));
            }
            out.push('\n');
            for &d in &densities {
                out.push_str(&format!("{d}"));
                for p in &protocols {
                    let vals: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.protocol == *p && r.n_vehicles == d)
                        .map(|r| get(&r.report))
                        .collect();
                    let mean = if vals.is_empty() {
                        f64::NAN
                    } else {
                        vals.iter().sum::<f64>() / vals.len() as f64
                    };
                    out.push_str(&format!(" {mean:.9}"));
                }
                out.push('\n');
            }
            (format!("{name}.dat"), out)
        })
        .collect()
}
