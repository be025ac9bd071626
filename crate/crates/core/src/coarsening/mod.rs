//! Step I: layer-driven constrained coarsening that produces a dendrogram.

mod bottom_up;
mod local_variation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bottom_up::{merge_step_constrained, BottomUpState, MergeRecord};
pub use local_variation::{
    contract, edge_costs, greedy_matching, local_variation_pass, LocalVariationPass, TEST_VECTORS,
};

use crate::constraints::{lift_with, solve_soft_qp, status_with, FeasibleSet, PenaltyWeights, QpOptions};
use crate::dendrogram::{Dendrogram, Merge};
use crate::error::{Error, Result};
use crate::linkage::LinkageMethod;
use crate::model::{laplacian_from_distances, DistanceMatrix, IndexedConstraints, IndexedLayer, LaplacianView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoarseningMethod {
    BottomUp,
    LocalVariation,
}

impl fmt::Display for CoarseningMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoarseningMethod::BottomUp => "bottom-up",
            CoarseningMethod::LocalVariation => "local-variation",
        })
    }
}

impl FromStr for CoarseningMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bottom-up" => Ok(CoarseningMethod::BottomUp),
            "local-variation" => Ok(CoarseningMethod::LocalVariation),
            other => Err(Error::validation(format!("unknown coarsening method {other:?}"))),
        }
    }
}

/// Progress measure that ends a layer's loop once it reaches the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopGuard {
    /// Fraction of the layer's must-links whose points share a supernode;
    /// 1 when the layer has none. Cannot-links hold on the singleton
    /// partition and only break as merges proceed, so they never signal
    /// that a layer still needs merging.
    #[default]
    MustLinks,
    /// Fraction of all the layer's constraints that hold.
    AllPairs,
}

impl LoopGuard {
    pub fn measure(self, layer: &IndexedLayer, node_of: impl Fn(usize) -> usize) -> f64 {
        match self {
            LoopGuard::AllPairs => status_with(layer, node_of),
            LoopGuard::MustLinks => {
                if layer.must_link.is_empty() {
                    return 1.0;
                }
                let ok = layer
                    .must_link
                    .iter()
                    .filter(|&&(a, b)| node_of(a) == node_of(b))
                    .count();
                ok as f64 / layer.must_link.len() as f64
            }
        }
    }
}

impl fmt::Display for LoopGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoopGuard::MustLinks => "must-links",
            LoopGuard::AllPairs => "all-pairs",
        })
    }
}

impl FromStr for LoopGuard {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "must-links" => Ok(LoopGuard::MustLinks),
            "all-pairs" => Ok(LoopGuard::AllPairs),
            other => Err(Error::validation(format!("unknown loop guard {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseningConfig {
    pub method: CoarseningMethod,
    /// Used by the bottom-up engine only.
    pub linkage: LinkageMethod,
    pub weights: PenaltyWeights,
    /// Cap on merges (bottom-up) or passes (local variation) per layer.
    pub i_max: usize,
    /// A layer's loop stops once `guard` reaches this value.
    pub threshold: f64,
    pub guard: LoopGuard,
    /// Seeds the eigen-solver start vector of the local-variation engine.
    pub seed: u64,
    /// Quadratic-program settings for the local-variation engine.
    pub qp: QpOptions,
}

impl Default for CoarseningConfig {
    fn default() -> Self {
        CoarseningConfig {
            method: CoarseningMethod::BottomUp,
            linkage: LinkageMethod::Average,
            weights: PenaltyWeights::default(),
            i_max: usize::MAX,
            threshold: 0.75,
            guard: LoopGuard::MustLinks,
            seed: 0,
            qp: QpOptions::default(),
        }
    }
}

impl CoarseningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.i_max == 0 {
            return Err(Error::validation("i_max must be positive"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::validation(format!(
                "threshold must lie in (0, 1], got {}",
                self.threshold
            )));
        }
        PenaltyWeights::new(self.weights.lambda1, self.weights.lambda2)?;
        Ok(())
    }
}

/// What happened while one layer's constraints drove the coarsening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: usize,
    pub constraints: usize,
    /// Merges (bottom-up) or passes (local variation) run for this layer.
    pub iterations: usize,
    /// Fraction of all the layer's constraints that hold, before and after.
    pub status_before: f64,
    pub status_after: f64,
    /// Loop guard value when the loop stopped.
    pub guard_after: f64,
    /// The loop stopped on `i_max` with the threshold still unmet.
    pub exhausted: bool,
    /// Most lifted pairs dropped at once for being both must- and
    /// cannot-linked.
    pub conflicts: usize,
    pub qp_solves: usize,
    pub qp_unconverged: usize,
    pub qp_iterations: usize,
    pub supernodes_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step1Report {
    pub method: CoarseningMethod,
    /// Feasible set of the constraint update: the box relaxation (closed
    /// form) for bottom-up, the configured one for local variation.
    pub feasible_set: FeasibleSet,
    pub layers: Vec<LayerReport>,
    /// Merges or passes run after the last layer to complete the tree.
    pub completion_iterations: usize,
}

impl Step1Report {
    /// No layer stopped on `i_max` and every constraint solve converged.
    pub fn converged(&self) -> bool {
        self.layers.iter().all(|l| !l.exhausted && l.qp_unconverged == 0)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.layers {
            if l.exhausted {
                out.push(format!(
                    "layer {}: i_max reached with the loop guard at {:.1}%",
                    l.layer,
                    100.0 * l.guard_after
                ));
            }
            if l.conflicts > 0 {
                out.push(format!(
                    "layer {}: {} conflicting lifted pairs dropped",
                    l.layer, l.conflicts
                ));
            }
            if l.qp_unconverged > 0 {
                out.push(format!(
                    "layer {}: {} of {} constraint solves hit the iteration cap",
                    l.layer, l.qp_unconverged, l.qp_solves
                ));
            }
        }
        out
    }

    pub fn has_convergence_warning(&self) -> bool {
        self.layers.iter().any(|l| l.qp_unconverged > 0)
    }
}

/// Runs the layer loop and completes the tree without constraints after
/// the last layer.
pub fn run_step1(
    d: &DistanceMatrix,
    constraints: &IndexedConstraints,
    cfg: &CoarseningConfig,
) -> Result<(Dendrogram, Step1Report)> {
    cfg.validate()?;
    let n = d.n();
    for layer in &constraints.layers {
        if let Some(&(_, b)) = layer.must_link.iter().chain(&layer.cannot_link).max_by_key(|p| p.1) {
            if b >= n {
                return Err(Error::validation(format!("constraint references point {b} of {n}")));
            }
        }
    }
    match cfg.method {
        CoarseningMethod::BottomUp => Ok(run_bottom_up(d, constraints, cfg)),
        CoarseningMethod::LocalVariation => run_local_variation(d, constraints, cfg),
    }
}

fn empty_report(layer: usize, c: &IndexedLayer, status: f64) -> LayerReport {
    LayerReport {
        layer,
        constraints: c.len(),
        iterations: 0,
        status_before: status,
        status_after: status,
        guard_after: 0.0,
        exhausted: false,
        conflicts: 0,
        qp_solves: 0,
        qp_unconverged: 0,
        qp_iterations: 0,
        supernodes_after: 0,
    }
}

fn run_bottom_up(
    d: &DistanceMatrix,
    constraints: &IndexedConstraints,
    cfg: &CoarseningConfig,
) -> (Dendrogram, Step1Report) {
    let mut st = BottomUpState::new(d, cfg.linkage);
    let mut layers = Vec::with_capacity(constraints.layers.len());
    for (j, layer) in constraints.layers.iter().enumerate() {
        let mut rep = empty_report(j + 1, layer, st.status(layer));
        st.anchor();
        let lifted = st.lift(layer);
        rep.conflicts = lifted.conflicts.len();
        st.apply_constraints(&lifted, &cfg.weights);
        while st.guard(cfg.guard, layer) < cfg.threshold && rep.iterations < cfg.i_max && st.supernodes() > 1 {
            st.merge_closest();
            rep.iterations += 1;
            let lifted = st.lift(layer);
            rep.conflicts = rep.conflicts.max(lifted.conflicts.len());
            st.apply_constraints(&lifted, &cfg.weights);
        }
        rep.status_after = st.status(layer);
        rep.guard_after = st.guard(cfg.guard, layer);
        rep.exhausted = rep.guard_after < cfg.threshold && rep.iterations >= cfg.i_max;
        rep.supernodes_after = st.supernodes();
        layers.push(rep);
    }
    let done = st.merges().len();
    let dendrogram = st.complete();
    let report = Step1Report {
        method: CoarseningMethod::BottomUp,
        feasible_set: FeasibleSet::Box,
        layers,
        completion_iterations: dendrogram.len() - done,
    };
    (dendrogram, report)
}

/// Symmetry, row-sum and box tolerance every constraint solve must meet.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Coarsening state of the local-variation engine.
struct LvState {
    /// Operator the passes match on: `base` after the latest constraint
    /// solve.
    l: LaplacianView,
    /// Anchor of the current layer, coarsened along with `l`.
    base: LaplacianView,
    sizes: Vec<usize>,
    /// Dendrogram node held by each supernode.
    node: Vec<usize>,
    /// Supernode of each original point.
    assign: Vec<usize>,
    /// `(left, right, pass, adjusted distance)`.
    merges: Vec<(usize, usize, usize, f64)>,
    passes: usize,
    seed: u64,
}

impl LvState {
    fn pass(&mut self) -> Result<()> {
        let n = self.assign.len();
        self.passes += 1;
        let p = local_variation_pass(&self.l, &self.sizes, self.seed.wrapping_add(self.passes as u64))?;
        let mut node = vec![usize::MAX; p.coarse.n()];
        for &(i, j) in &p.pairs {
            let id = n + self.merges.len();
            let (a, b) = (self.node[i].min(self.node[j]), self.node[i].max(self.node[j]));
            self.merges.push((a, b, self.passes, -self.l.get(i, j)));
            node[p.contraction[i]] = id;
        }
        for (i, &c) in p.contraction.iter().enumerate() {
            if node[c] == usize::MAX {
                node[c] = self.node[i];
            }
        }
        for a in &mut self.assign {
            *a = p.contraction[*a];
        }
        self.base = contract(&self.base, &self.sizes, &p.contraction, p.coarse.n())?;
        self.node = node;
        self.sizes = p.coarse_sizes;
        self.l = p.coarse;
        Ok(())
    }

    fn constrain(&mut self, layer: &IndexedLayer, cfg: &CoarseningConfig, rep: &mut LayerReport) {
        let lifted = lift_with(layer, self.l.n(), |p| self.assign[p]);
        rep.conflicts = rep.conflicts.max(lifted.conflicts.len());
        if lifted.is_empty() {
            self.l = self.base.clone();
            return;
        }
        let sol = solve_soft_qp(&self.base, &lifted, &cfg.weights, &cfg.qp);
        rep.qp_solves += 1;
        rep.qp_iterations += sol.iterations;
        if !sol.converged {
            rep.qp_unconverged += 1;
        }
        debug_assert!(sol.laplacian.check_feasible(FEASIBILITY_TOL).is_ok());
        self.l = sol.laplacian;
    }

    fn status(&self, layer: &IndexedLayer) -> f64 {
        status_with(layer, |p| self.assign[p])
    }

    fn guard(&self, guard: LoopGuard, layer: &IndexedLayer) -> f64 {
        guard.measure(layer, |p| self.assign[p])
    }
}

fn run_local_variation(
    d: &DistanceMatrix,
    constraints: &IndexedConstraints,
    cfg: &CoarseningConfig,
) -> Result<(Dendrogram, Step1Report)> {
    let n = d.n();
    let l = laplacian_from_distances(d);
    let mut st = LvState {
        base: l.clone(),
        l,
        sizes: vec![1; n],
        node: (0..n).collect(),
        assign: (0..n).collect(),
        merges: Vec::with_capacity(n - 1),
        passes: 0,
        seed: cfg.seed,
    };
    let mut layers = Vec::with_capacity(constraints.layers.len());
    for (j, layer) in constraints.layers.iter().enumerate() {
        let mut rep = empty_report(j + 1, layer, st.status(layer));
        st.base = st.l.clone();
        st.constrain(layer, cfg, &mut rep);
        while st.guard(cfg.guard, layer) < cfg.threshold && rep.iterations < cfg.i_max && st.l.n() > 1 {
            st.pass()?;
            rep.iterations += 1;
            if st.l.n() > 1 {
                st.constrain(layer, cfg, &mut rep);
            }
        }
        rep.status_after = st.status(layer);
        rep.guard_after = st.guard(cfg.guard, layer);
        rep.exhausted = rep.guard_after < cfg.threshold && rep.iterations >= cfg.i_max;
        rep.supernodes_after = st.l.n();
        layers.push(rep);
    }
    let constrained_passes = st.passes;
    while st.l.n() > 1 {
        st.pass()?;
    }

    // Pass counters become heights on [0, largest contracted distance].
    let top = st.merges.iter().map(|m| m.3).fold(0.0, f64::max);
    let total = st.passes.max(1) as f64;
    let merges = st
        .merges
        .iter()
        .enumerate()
        .map(|(k, &(left, right, pass, _))| Merge {
            left,
            right,
            height: top * pass as f64 / total,
            id: n + k,
        })
        .collect();
    let report = Step1Report {
        method: CoarseningMethod::LocalVariation,
        feasible_set: cfg.qp.feasible,
        layers,
        completion_iterations: st.passes - constrained_passes,
    };
    Ok((Dendrogram::from_parts_unchecked(n, merges), report))
}
