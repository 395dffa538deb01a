//! Result serialization: the long-format sweep/matrix CSV (one row per
//! replication) and the JSON summary of per-cell aggregates.

use std::io;

use serde::Serialize;

use crate::harness::{ProportionCell, RunResult};

pub const RESULTS_CSV_HEADER: [&str; 9] = [
    "scenario",
    "grade",
    "ttg_s",
    "bias_s",
    "sd_s",
    "replication",
    "fuel_l",
    "savings_pct",
    "baseline_fuel_l",
];

/// Long-format results: one row per replication, cells in input order.
pub fn write_results_csv<W: io::Write>(writer: W, results: &[RunResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_CSV_HEADER)?;
    for r in results {
        let fb = r.baseline_fuel_l;
        for (rep, fuel) in r.fuel_per_rep_l.iter().enumerate() {
            let savings = fb.map(|b| 100.0 * (b - fuel) / b);
            w.write_record([
                r.spec.kind.label().to_string(),
                r.spec.grade.label().to_string(),
                r.spec.ttg_s.to_string(),
                r.spec.bias_s.to_string(),
                r.spec.sd_s.to_string(),
                rep.to_string(),
                fuel.to_string(),
                savings.map(|s| s.to_string()).unwrap_or_default(),
                fb.map(|b| b.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CellSummary<'a> {
    scenario: &'a str,
    grade: &'a str,
    ttg_s: f64,
    bias_s: f64,
    sd_s: f64,
    replications: usize,
    mean_fuel_l: f64,
    baseline_fuel_l: Option<f64>,
    savings_vs_baseline_pct: Option<f64>,
    fuel_per_rep_l: &'a [f64],
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    master_seed: u64,
    cells: Vec<CellSummary<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    proportion_surface: Option<&'a [ProportionCell]>,
}

/// Deterministic JSON summary: per-cell means, savings, and (when present)
/// the savings-proportion surface.
pub fn summary_json(
    master_seed: u64,
    results: &[RunResult],
    proportions: Option<&[ProportionCell]>,
) -> String {
    let summary = Summary {
        master_seed,
        cells: results
            .iter()
            .map(|r| CellSummary {
                scenario: r.spec.kind.label(),
                grade: r.spec.grade.label(),
                ttg_s: r.spec.ttg_s,
                bias_s: r.spec.bias_s,
                sd_s: r.spec.sd_s,
                replications: r.spec.replications,
                mean_fuel_l: r.mean_fuel_l,
                baseline_fuel_l: r.baseline_fuel_l,
                savings_vs_baseline_pct: r.savings_vs_baseline_pct,
                fuel_per_rep_l: &r.fuel_per_rep_l,
            })
            .collect(),
        proportion_surface: proportions,
    };
    serde_json::to_string_pretty(&summary).expect("summary serialization is infallible")
}
