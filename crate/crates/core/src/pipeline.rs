//! Step I followed by Step II, timed.

use std::time::{Duration, Instant};

use crate::coarsening::{run_step1, CoarseningConfig, Step1Report};
use crate::cuts::{extract_flat_hierarchy, LayerCutResult};
use crate::dendrogram::Dendrogram;
use crate::error::Result;
use crate::metrics::EvalReport;
use crate::model::{DistanceMatrix, FlatHierarchy, IndexedConstraints};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub dendrogram: Dendrogram,
    pub step1: Step1Report,
    pub hierarchy: FlatHierarchy,
    pub cuts: Vec<LayerCutResult>,
    /// Monotonic time of Step I plus Step II.
    pub elapsed: Duration,
}

impl PipelineOutput {
    pub fn evaluate(&self, d: &DistanceMatrix, constraints: &IndexedConstraints) -> EvalReport {
        EvalReport::new(
            &self.dendrogram,
            d,
            &self.hierarchy,
            constraints,
            self.elapsed.as_secs_f64(),
            self.step1.warnings(),
        )
    }
}

/// `step1` drives the coarsening, `step2` the cuts. They differ only for
/// baselines that coarsen without constraints but still cut with them.
pub fn run_pipeline_with(
    d: &DistanceMatrix,
    step1: &IndexedConstraints,
    step2: &IndexedConstraints,
    cfg: &CoarseningConfig,
) -> Result<PipelineOutput> {
    let start = Instant::now();
    let (dendrogram, report) = run_step1(d, step1, cfg)?;
    let (hierarchy, cuts) = extract_flat_hierarchy(&dendrogram, step2)?;
    let elapsed = start.elapsed();
    Ok(PipelineOutput {
        dendrogram,
        step1: report,
        hierarchy,
        cuts,
        elapsed,
    })
}

pub fn run_pipeline(
    d: &DistanceMatrix,
    constraints: &IndexedConstraints,
    cfg: &CoarseningConfig,
) -> Result<PipelineOutput> {
    run_pipeline_with(d, constraints, constraints, cfg)
}

/// Same cuts, but Step I sees no constraints.
pub fn run_unconstrained(
    d: &DistanceMatrix,
    constraints: &IndexedConstraints,
    cfg: &CoarseningConfig,
) -> Result<PipelineOutput> {
    let none = IndexedConstraints::empty(constraints.layers.len());
    run_pipeline_with(d, &none, constraints, cfg)
}
