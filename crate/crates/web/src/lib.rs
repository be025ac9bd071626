//! WebAssembly bindings behind `www/index.html`.
//!
//! Each export wraps a plain function that is also tested natively. Nothing
//! here reads the clock, which is unavailable on `wasm32-unknown-unknown`.

use clues::constraints::closed_form_entry;
use clues::cuts::{cut_objective, extract_flat_hierarchy, optimal_cut, CutInterval};
use clues::metrics::{dasgupta_cost, violation_rate};
use clues::model::normalize_condensed;
use clues::{
    run_step1, CoarseningConfig, CoarseningMethod, IndexedConstraints, IndexedLayer, LinkageMethod, PenaltyWeights,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterView {
    /// `(left, right, height, id)` per merge, leaves first.
    pub merges: Vec<(usize, usize, f64, usize)>,
    /// Height of the Step II cut.
    pub cut: f64,
    /// Cluster index of every point at the cut.
    pub assignment: Vec<usize>,
    pub clusters: usize,
    pub violation_rate: f64,
    pub dasgupta_cost: f64,
}

fn pairs(flat: &[u32], n: usize) -> Result<Vec<(usize, usize)>, String> {
    if flat.len() % 2 != 0 {
        return Err("pair lists need an even number of indices".into());
    }
    flat.chunks(2)
        .map(|p| {
            let (a, b) = (p[0] as usize, p[1] as usize);
            if a >= n || b >= n || a == b {
                Err(format!("bad pair ({a}, {b}) for {n} points"))
            } else {
                Ok((a, b))
            }
        })
        .collect()
}

/// Clusters 2-D points `xy = [x0, y0, x1, y1, ...]` under one layer of
/// index-pair constraints and cuts the tree once.
pub fn cluster_view(
    xy: &[f64],
    must_links: &[u32],
    cannot_links: &[u32],
    method: &str,
    linkage: &str,
    lambda1: f64,
    lambda2: f64,
    threshold: f64,
) -> Result<ClusterView, String> {
    let e = |err: clues::Error| err.to_string();
    if xy.len() % 2 != 0 || xy.len() < 4 {
        return Err("need at least two points as x, y pairs".into());
    }
    let n = xy.len() / 2;
    let mut data = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            data.push((xy[2 * i] - xy[2 * j]).hypot(xy[2 * i + 1] - xy[2 * j + 1]));
        }
    }
    let d = normalize_condensed(n, data).map_err(e)?;
    let layer = IndexedLayer::new(pairs(must_links, n)?, pairs(cannot_links, n)?);
    let constraints = IndexedConstraints { layers: vec![layer] };
    let cfg = CoarseningConfig {
        method: method.parse::<CoarseningMethod>().map_err(e)?,
        linkage: linkage.parse::<LinkageMethod>().map_err(e)?,
        weights: PenaltyWeights::new(lambda1, lambda2).map_err(e)?,
        threshold,
        i_max: n,
        ..CoarseningConfig::default()
    };
    let (dd, _) = run_step1(&d, &constraints, &cfg).map_err(e)?;
    let (fh, cuts) = extract_flat_hierarchy(&dd, &constraints).map_err(e)?;
    Ok(ClusterView {
        merges: dd.merges().iter().map(|m| (m.left, m.right, m.height, m.id)).collect(),
        cut: cuts[0].chosen,
        assignment: fh.assignment(0),
        clusters: fh.layers[0].clusters.len(),
        violation_rate: violation_rate(&fh, &constraints).rate,
        dasgupta_cost: dasgupta_cost(&dd, &d),
    })
}

/// `samples` rows of `[c, must-linked value, cannot-linked value]` for the
/// entrywise constraint update over `c` in `[-1, 0]`, flattened.
pub fn update_table(lambda1: f64, lambda2: f64, samples: usize) -> Result<Vec<f64>, String> {
    let w = PenaltyWeights::new(lambda1, lambda2).map_err(|e| e.to_string())?;
    let samples = samples.max(2);
    Ok((0..samples)
        .flat_map(|k| {
            let c = -1.0 + k as f64 / (samples - 1) as f64;
            [
                c,
                closed_form_entry(c, true, false, &w),
                closed_form_entry(c, false, true, &w),
            ]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutProfile {
    pub heights: Vec<f64>,
    pub objective: Vec<f64>,
    pub solution_low: f64,
    pub solution_high: f64,
    pub chosen: f64,
    pub minimum: f64,
}

/// Objective of a cut over `[0, 1]` for intervals `[low0, high0, low1, ...]`.
pub fn cut_profile(bounds: &[f64], samples: usize) -> Result<CutProfile, String> {
    if bounds.len() % 2 != 0 {
        return Err("intervals need low, high pairs".into());
    }
    let intervals: Vec<CutInterval> = bounds
        .chunks(2)
        .map(|p| CutInterval {
            low: p[0].min(p[1]),
            high: p[0].max(p[1]),
        })
        .collect();
    let best = optimal_cut(&intervals).map_err(|e| e.to_string())?;
    let samples = samples.max(2);
    let heights: Vec<f64> = (0..samples).map(|k| k as f64 / (samples - 1) as f64).collect();
    Ok(CutProfile {
        objective: heights.iter().map(|&h| cut_objective(&intervals, h)).collect(),
        heights,
        solution_low: best.solution_low,
        solution_high: best.solution_high,
        chosen: best.chosen,
        minimum: best.objective,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|m| JsError::new(&m))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON-encoded [`ClusterView`].
#[wasm_bindgen(js_name = clusterPoints)]
#[allow(clippy::too_many_arguments)]
pub fn cluster_points(
    xy: &[f64],
    must_links: &[u32],
    cannot_links: &[u32],
    method: &str,
    linkage: &str,
    lambda1: f64,
    lambda2: f64,
    threshold: f64,
) -> Result<String, JsError> {
    to_js(cluster_view(
        xy,
        must_links,
        cannot_links,
        method,
        linkage,
        lambda1,
        lambda2,
        threshold,
    ))
}

#[wasm_bindgen(js_name = updateCurve)]
pub fn update_curve(lambda1: f64, lambda2: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    update_table(lambda1, lambda2, samples).map_err(|m| JsError::new(&m))
}

/// JSON-encoded [`CutProfile`].
#[wasm_bindgen(js_name = cutProfile)]
pub fn cut_profile_js(bounds: &[f64], samples: usize) -> Result<String, JsError> {
    to_js(cut_profile(bounds, samples))
}
