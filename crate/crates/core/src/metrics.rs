//! Fairness and dispersion statistics over allocation histories.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::AllocationResult;
use crate::model::AgentId;
use crate::swarmsim::Iteration;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("history has no iterations")]
    EmptyHistory,
    #[error("iteration {iteration} does not match the history rosters: {message}")]
    RosterMismatch { iteration: usize, message: String },
}

/// `(Σx)² / (n·Σx²)`; 1 for an even split, `1/n` when one entry holds all.
pub fn jains_index(x: &[f64]) -> Result<f64, MetricsError> {
    if x.is_empty() {
        return Err(MetricsError::Domain("empty vector".into()));
    }
    if let Some(v) = x.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(MetricsError::Domain(format!(
            "{v} is not a non-negative finite value"
        )));
    }
    let sum: f64 = x.iter().sum();
    let squares: f64 = x.iter().map(|v| v * v).sum();
    if squares == 0.0 {
        return Err(MetricsError::Domain("all entries are zero".into()));
    }
    Ok((sum * sum / (x.len() as f64 * squares)).min(1.0))
}

/// Allocation results of consecutive iterations over fixed rosters.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationHistory {
    pub workers: Vec<AgentId>,
    pub services: Vec<String>,
    pub iterations: Vec<AllocationResult>,
}

impl AllocationHistory {
    pub fn new(workers: Vec<AgentId>, services: Vec<String>) -> Self {
        Self {
            workers,
            services,
            iterations: Vec::new(),
        }
    }

    pub fn push(&mut self, result: AllocationResult) -> Result<(), MetricsError> {
        let iteration = self.iterations.len();
        for a in &result.assignments {
            if self.workers.get(a.worker_index) != Some(&a.worker) {
                return Err(MetricsError::RosterMismatch {
                    iteration,
                    message: format!("unknown worker `{}`", a.worker),
                });
            }
            if self.services.get(a.service_index) != Some(&a.service) {
                return Err(MetricsError::RosterMismatch {
                    iteration,
                    message: format!("unknown service `{}`", a.service),
                });
            }
        }
        self.iterations.push(result);
        Ok(())
    }

    /// History of a simulated experiment; rosters come from the first run.
    pub fn from_iterations(runs: &[Iteration]) -> Result<Self, MetricsError> {
        let first = runs.first().ok_or(MetricsError::EmptyHistory)?;
        let workers = first.swarm.workers.iter().map(|w| w.id.clone()).collect();
        let mut history = Self::new(workers, first.services.clone());
        for run in runs {
            history.push(run.allocation.clone())?;
        }
        Ok(history)
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    fn non_empty(&self) -> Result<(), MetricsError> {
        if self.iterations.is_empty() {
            Err(MetricsError::EmptyHistory)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std_deviation: f64,
    /// `std_deviation / mean`, 0 when every cost is 0.
    pub coefficient_of_variation: f64,
}

/// Statistics over every per-assignment cost of every iteration.
pub fn cost_dispersion(history: &AllocationHistory) -> Result<Dispersion, MetricsError> {
    history.non_empty()?;
    let costs: Vec<f64> = history
        .iterations
        .iter()
        .flat_map(|r| r.assignments.iter().map(|a| a.cost))
        .collect();
    if costs.is_empty() {
        return Err(MetricsError::Domain("no assignments in history".into()));
    }
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let variance = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    let std_deviation = variance.sqrt();
    Ok(Dispersion {
        count: costs.len(),
        mean,
        std_deviation,
        coefficient_of_variation: if mean > 0.0 {
            std_deviation / mean
        } else {
            0.0
        },
    })
}

/// Worker × service assignment counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub workers: Vec<AgentId>,
    pub services: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl FrequencyTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn worker_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Workers that received at least one assignment.
    pub fn active_workers(&self) -> usize {
        self.worker_totals().iter().filter(|&&t| t > 0).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("worker");
        for s in &self.services {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
        for (w, row) in self.workers.iter().zip(&self.counts) {
            out.push_str(w.as_str());
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn allocation_frequency(history: &AllocationHistory) -> Result<FrequencyTable, MetricsError> {
    history.non_empty()?;
    let mut counts = vec![vec![0u64; history.services.len()]; history.workers.len()];
    for r in &history.iterations {
        for a in &r.assignments {
            counts[a.worker_index][a.service_index] += 1;
        }
    }
    Ok(FrequencyTable {
        workers: history.workers.clone(),
        services: history.services.clone(),
        counts,
    })
}

/// Per-iteration Jain's index over cumulative per-worker totals, computed
/// on allocated cost (canonical) and on assignment counts. A cumulative
/// vector that is still all zero counts as perfectly even (1.0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessSeries {
    pub cost_based: Vec<f64>,
    pub count_based: Vec<f64>,
}

impl FairnessSeries {
    pub fn final_cost_index(&self) -> Option<f64> {
        self.cost_based.last().copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,jain_cost,jain_count\n");
        for (i, (c, k)) in self.cost_based.iter().zip(&self.count_based).enumerate() {
            let _ = writeln!(out, "{i},{c:.6},{k:.6}");
        }
        out
    }
}

pub fn fairness_series(history: &AllocationHistory) -> Result<FairnessSeries, MetricsError> {
    history.non_empty()?;
    let m = history.workers.len();
    let mut cost = vec![0.0; m];
    let mut count = vec![0.0; m];
    let index = |x: &[f64]| {
        if x.iter().all(|v| *v == 0.0) {
            Ok(1.0)
        } else {
            jains_index(x)
        }
    };
    let mut series = FairnessSeries {
        cost_based: Vec::with_capacity(history.len()),
        count_based: Vec::with_capacity(history.len()),
    };
    for r in &history.iterations {
        for a in &r.assignments {
            cost[a.worker_index] += a.cost;
            count[a.worker_index] += 1.0;
        }
        series.cost_based.push(index(&cost)?);
        series.count_based.push(index(&count)?);
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub const REPORT_HEADER: &str = "iteration,worker,service,cost,jain_cumulative";

/// Rounds to the 6 decimals both report formats carry.
fn six(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Serialize)]
struct ReportRow<'a> {
    iteration: usize,
    worker: &'a str,
    service: &'a str,
    cost: f64,
    jain_cumulative: f64,
}

/// One row per assignment, iterations in order and services in roster
/// order within an iteration. `jain_cumulative` is the cost-based index
/// after that iteration.
pub fn emit_report(
    history: &AllocationHistory,
    format: ReportFormat,
) -> Result<String, MetricsError> {
    let series = fairness_series(history)?;
    let rows = history.iterations.iter().enumerate().flat_map(|(i, r)| {
        let jain = series.cost_based[i];
        r.assignments.iter().map(move |a| ReportRow {
            iteration: i,
            worker: a.worker.as_str(),
            service: &a.service,
            cost: six(a.cost),
            jain_cumulative: six(jain),
        })
    });
    Ok(match format {
        ReportFormat::Csv => {
            let mut out = format!("{REPORT_HEADER}\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.6},{:.6}",
                    r.iteration, r.worker, r.service, r.cost, r.jain_cumulative
                );
            }
            out
        }
        ReportFormat::Json => {
            let rows: Vec<ReportRow> = rows.collect();
            let mut out = serde_json::to_string_pretty(&rows).expect("rows serialize");
            out.push('\n');
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::Assignment;
    use proptest::prelude::*;

    fn result(assignments: &[(usize, usize, f64)]) -> AllocationResult {
        AllocationResult {
            assignments: assignments
                .iter()
                .map(|&(w, s, cost)| Assignment {
                    service: format!("s{s}"),
                    service_index: s,
                    worker: AgentId::new(format!("w{w}")).unwrap(),
                    worker_index: w,
                    unit: format!("s{s}"),
                    cost,
                })
                .collect(),
            total_cost: assignments.iter().map(|a| a.2).sum(),
            total_cost_scaled: 0,
            feasible: true,
            unassigned: vec![],
            configurations: vec![],
            chosen: 0,
        }
    }

    fn history(m: usize, n: usize, runs: &[&[(usize, usize, f64)]]) -> AllocationHistory {
        let mut h = AllocationHistory::new(
            (0..m)
                .map(|i| AgentId::new(format!("w{i}")).unwrap())
                .collect(),
            (0..n).map(|j| format!("s{j}")).collect(),
        );
        for r in runs {
            h.push(result(r)).unwrap();
        }
        h
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jains_index(&[3.0; 5]).unwrap(), 1.0);
        assert_eq!(jains_index(&[1.0, 0.0]).unwrap(), 0.5);
        assert!(jains_index(&[0.0, 0.0]).is_err());
        assert!(jains_index(&[1.0, -1.0]).is_err());
        assert!(jains_index(&[]).is_err());
    }

    #[test]
    fn dispersion_examples() {
        let h = history(2, 2, &[&[(0, 0, 1.0), (1, 1, 3.0)]]);
        let d = cost_dispersion(&h).unwrap();
        assert_eq!((d.std_deviation, d.coefficient_of_variation), (1.0, 0.5));
        let h = history(2, 2, &[&[(0, 0, 4.0), (1, 1, 4.0)]]);
        let d = cost_dispersion(&h).unwrap();
        assert_eq!((d.std_deviation, d.coefficient_of_variation), (0.0, 0.0));
        assert_eq!(
            cost_dispersion(&history(1, 1, &[])),
            Err(MetricsError::EmptyHistory)
        );
    }

    #[test]
    fn frequency_counts() {
        let h = history(
            3,
            2,
            &[&[(0, 0, 1.0), (1, 1, 2.0)], &[(0, 1, 1.0), (1, 0, 2.0)]],
        );
        let f = allocation_frequency(&h).unwrap();
        assert_eq!(f.total(), 4);
        assert_eq!(f.counts[2], vec![0, 0]);
        assert_eq!(f.active_workers(), 2);
        assert_eq!(f.to_csv(), "worker,s0,s1\nw0,1,1\nw1,1,1\nw2,0,0\n");
    }

    #[test]
    fn rejects_foreign_rosters() {
        let mut h = history(1, 1, &[]);
        assert!(h.push(result(&[(1, 0, 1.0)])).is_err());
    }

    #[test]
    fn report_formats_agree() {
        let h = history(2, 2, &[&[(0, 0, 1.5), (1, 1, 2.25)], &[(1, 0, 3.0)]]);
        let csv = emit_report(&h, ReportFormat::Csv).unwrap();
        assert!(csv.starts_with("iteration,worker,service,cost,jain_cumulative\n"));
        let json: Vec<serde_json::Value> =
            serde_json::from_str(&emit_report(&h, ReportFormat::Json).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(lines.len(), json.len());
        for (line, obj) in lines.iter().zip(&json) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(
                f[0].parse::<u64>().unwrap(),
                obj["iteration"].as_u64().unwrap()
            );
            assert_eq!(f[1], obj["worker"]);
            assert_eq!(f[2], obj["service"]);
            assert_eq!(f[3].parse::<f64>().unwrap(), obj["cost"].as_f64().unwrap());
            assert_eq!(
                f[4].parse::<f64>().unwrap(),
                obj["jain_cumulative"].as_f64().unwrap()
            );
        }
    }

    #[test]
    fn fairness_series_is_cumulative() {
        let h = history(2, 1, &[&[(0, 0, 2.0)], &[(1, 0, 2.0)]]);
        let s = fairness_series(&h).unwrap();
        assert_eq!(s.cost_based, vec![0.5, 1.0]);
        assert_eq!(s.count_based, vec![0.5, 1.0]);
    }

    proptest! {
        #[test]
        fn jain_bounds_and_scale(x in proptest::collection::vec(0.0..1e3f64, 1..40), c in 1e-3..1e3f64) {
            prop_assume!(x.iter().any(|v| *v > 0.0));
            let j = jains_index(&x).unwrap();
            let n = x.len() as f64;
            prop_assert!(j >= 1.0 / n - 1e-12 && j <= 1.0);
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert!((jains_index(&scaled).unwrap() - j).abs() < 1e-9);
        }

        #[test]
        fn k_active_of_n(n in 1usize..=32, k_seed in 0usize..32, share in 0.01..100.0f64) {
            let k = 1 + k_seed % n;
            let mut x = vec![0.0; n];
            x[..k].fill(share);
            prop_assert!((jains_index(&x).unwrap() - k as f64 / n as f64).abs() < 1e-12);
        }
    }
}
