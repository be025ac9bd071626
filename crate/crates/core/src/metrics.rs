//! Evaluation: Dasgupta cost, constraint violations and run comparisons.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dendrogram::Dendrogram;
use crate::error::Result;
use crate::model::{DistanceMatrix, FlatHierarchy, IndexedConstraints};

/// `Σ_{i<j} (1 − d_ij) · |leaves(lca(i, j))|`.
///
/// Every pair meets at exactly one merge, so the sum is accumulated merge by
/// merge over the cross pairs of the two children.
pub fn dasgupta_cost(dd: &Dendrogram, d: &DistanceMatrix) -> f64 {
    let n = dd.n();
    let mut members: Vec<Vec<usize>> = (0..n).map(|p| vec![p]).collect();
    members.resize(n + dd.len(), Vec::new());
    let mut cost = 0.0;
    for m in dd.merges() {
        let left = std::mem::take(&mut members[m.left]);
        let right = std::mem::take(&mut members[m.right]);
        let size = (left.len() + right.len()) as f64;
        let mut cross = 0.0;
        for &a in &left {
            for &b in &right {
                cross += 1.0 - d.get(a, b);
            }
        }
        cost += size * cross;
        let (mut big, small) = if left.len() >= right.len() {
            (left, right)
        } else {
            (right, left)
        };
        big.extend(small);
        members[m.id] = big;
    }
    cost
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerViolations {
    pub layer: usize,
    pub constraints: usize,
    pub violated_must_links: usize,
    pub violated_cannot_links: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationSummary {
    /// Violated constraints over all constraints of all layers; 0 when there
    /// are none.
    pub rate: f64,
    pub total: usize,
    pub violated: usize,
    pub per_layer: Vec<LayerViolations>,
}

/// Layer `j` of `fh` is checked against layer `j` of the constraints: a
/// must-link is violated when its points sit in different clusters, a
/// cannot-link when they share one.
pub fn violation_rate(fh: &FlatHierarchy, constraints: &IndexedConstraints) -> ViolationSummary {
    let mut per_layer = Vec::with_capacity(constraints.layers.len());
    let (mut total, mut violated) = (0, 0);
    for (j, layer) in constraints.layers.iter().enumerate() {
        let (vm, vc) = match fh.layers.get(j) {
            Some(_) => {
                let a = fh.assignment(j);
                (
                    layer.must_link.iter().filter(|&&(p, q)| a[p] != a[q]).count(),
                    layer.cannot_link.iter().filter(|&&(p, q)| a[p] == a[q]).count(),
                )
            }
            None => (layer.must_link.len(), layer.cannot_link.len()),
        };
        let c = layer.len();
        total += c;
        violated += vm + vc;
        per_layer.push(LayerViolations {
            layer: j + 1,
            constraints: c,
            violated_must_links: vm,
            violated_cannot_links: vc,
            rate: ratio(vm + vc, c),
        });
    }
    ViolationSummary {
        rate: ratio(violated, total),
        total,
        violated,
        per_layer,
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dasgupta_cost: f64,
    pub violation_rate: f64,
    pub violations: ViolationSummary,
    /// Seconds spent in Step I and Step II.
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn new(
        dd: &Dendrogram,
        d: &DistanceMatrix,
        fh: &FlatHierarchy,
        constraints: &IndexedConstraints,
        wall_time: f64,
        warnings: Vec<String>,
    ) -> Self {
        let violations = violation_rate(fh, constraints);
        EvalReport {
            dasgupta_cost: dasgupta_cost(dd, d),
            violation_rate: violations.rate,
            violations,
            wall_time,
            warnings,
        }
    }
}

/// Relative change from an unconstrained run to a constrained one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `(u − c) / u` for the Dasgupta cost.
    pub cost_improvement: f64,
    /// `(u − c) / u` for the violation rate.
    pub compliance_improvement: f64,
    /// `(t_c − t_u) / t_u`.
    pub time_increase: f64,
    /// `t_c / t_u`.
    pub time_ratio: f64,
}

fn relative(base: f64, delta: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        delta / base
    }
}

pub fn compare_runs(constrained: &EvalReport, unconstrained: &EvalReport) -> Comparison {
    let (c, u) = (constrained, unconstrained);
    Comparison {
        cost_improvement: relative(u.dasgupta_cost, u.dasgupta_cost - c.dasgupta_cost),
        compliance_improvement: relative(u.violation_rate, u.violation_rate - c.violation_rate),
        time_increase: relative(u.wall_time, c.wall_time - u.wall_time),
        time_ratio: if u.wall_time == 0.0 {
            0.0
        } else {
            c.wall_time / u.wall_time
        },
    }
}

/// One row of the per-dataset comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub method: String,
    pub constrained: bool,
    pub dasgupta_cost: f64,
    pub violation_rate: f64,
    pub wall_time: f64,
    /// `wall_time` divided by the largest wall time in the table.
    pub normalized_time: f64,
}

/// Fills `normalized_time` so that the largest entry is 1.
pub fn normalize_times(rows: &mut [ComparisonRow]) {
    let top = rows.iter().map(|r| r.wall_time).fold(0.0, f64::max);
    for r in rows {
        r.normalized_time = if top > 0.0 { r.wall_time / top } else { 0.0 };
    }
}

pub fn write_comparison_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| crate::error::Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}
