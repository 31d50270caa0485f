//! Metrics and sweep summary CSV.

use std::io::Write;

use fecsim_core::metrics::MetricsRecord;

pub const METRICS_HEADER: [&str; 9] = [
    "eventual_ratio",
    "deadline_ratio",
    "rec_p50_s",
    "rec_p95_s",
    "rec_p99_s",
    "rec_max_s",
    "goodput_bps",
    "max_queue_delay_s",
    "overhead",
];

pub const SUMMARY_HEADER: [&str; 11] = [
    "axis_value",
    "rep",
    "eventual_ratio",
    "deadline_ratio",
    "rec_p50_s",
    "rec_p95_s",
    "rec_p99_s",
    "rec_max_s",
    "goodput_bps",
    "max_queue_delay_s",
    "overhead",
];

/// Metric columns in header order. Quantiles are empty when no packet
/// needed recovery.
pub fn metric_fields(m: &MetricsRecord) -> Vec<String> {
    let q = |f: fn(&fecsim_core::metrics::Quantiles) -> f64| m.recovery_delay.as_ref().map(|r| f(r).to_string()).unwrap_or_default();
    vec![
        m.eventual_delivery_ratio.to_string(),
        m.deadline_delivery_ratio.to_string(),
        q(|r| r.p50),
        q(|r| r.p95),
        q(|r| r.p99),
        q(|r| r.max),
        m.mean_goodput.to_string(),
        m.max_sender_queue_delay.to_string(),
        m.repair_overhead_measured.to_string(),
    ]
}

pub fn write_metrics<W: Write>(m: &MetricsRecord, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    w.write_record(metric_fields(m))?;
    w.flush()?;
    Ok(())
}

/// One sweep result row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub axis_value: String,
    pub rep: u64,
    pub metrics: MetricsRecord,
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let mut fields = vec![r.axis_value.clone(), r.rep.to_string()];
        fields.extend(metric_fields(&r.metrics));
        w.write_record(fields)?;
    }
    w.flush()?;
    Ok(())
}
