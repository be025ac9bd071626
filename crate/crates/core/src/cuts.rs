//! Step II: one optimal horizontal cut per constraint layer.

use serde::{Deserialize, Serialize};

use crate::dendrogram::{Dendrogram, LcaIndex};
use crate::error::{Error, Result};
use crate::model::{FlatHierarchy, FlatLayer, IndexedConstraints, IndexedLayer};
use crate::union_find::UnionFind;

/// Points tied together by a layer's must-links, with the cannot-links that
/// touch them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintGroup {
    /// Sorted.
    pub members: Vec<usize>,
    pub must_links: Vec<(usize, usize)>,
    pub cannot_links: Vec<(usize, usize)>,
}

/// Heights between which a group is intact and none of its cannot-links is
/// yet violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutInterval {
    pub low: f64,
    pub high: f64,
}

impl CutInterval {
    /// Distance from `h` to the interval.
    #[inline]
    pub fn distance(&self, h: f64) -> f64 {
        (h - h.clamp(self.low, self.high)).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCutResult {
    /// 1-based.
    pub layer: usize,
    pub intervals: Vec<CutInterval>,
    pub solution_low: f64,
    pub solution_high: f64,
    /// Midpoint of the solution set, before the nesting adjustment.
    pub optimal: f64,
    /// Height actually used to cut.
    pub chosen: f64,
    /// Objective at `chosen`.
    pub objective: f64,
    /// Set when the layer had no constraints and was cut to `k` clusters.
    pub fallback_k: Option<usize>,
}

/// Connected components of the must-link graph; points that only carry
/// cannot-links form singleton groups. Ordered by smallest member.
pub fn constraint_groups(layer: &IndexedLayer, n: usize) -> Vec<ConstraintGroup> {
    let mut uf = UnionFind::new(n);
    let mut touched = vec![false; n];
    for &(a, b) in &layer.must_link {
        uf.union(a, b);
        touched[a] = true;
        touched[b] = true;
    }
    for &(a, b) in &layer.cannot_link {
        touched[a] = true;
        touched[b] = true;
    }
    let mut group_of_root = vec![usize::MAX; n];
    let mut groups: Vec<ConstraintGroup> = Vec::new();
    for p in (0..n).filter(|&p| touched[p]) {
        let r = uf.find(p);
        if group_of_root[r] == usize::MAX {
            group_of_root[r] = groups.len();
            groups.push(ConstraintGroup {
                members: Vec::new(),
                must_links: Vec::new(),
                cannot_links: Vec::new(),
            });
        }
        groups[group_of_root[r]].members.push(p);
    }
    for &(a, b) in &layer.must_link {
        let g = group_of_root[uf.find(a)];
        groups[g].must_links.push((a, b));
    }
    for &(a, b) in &layer.cannot_link {
        let (ga, gb) = (group_of_root[uf.find(a)], group_of_root[uf.find(b)]);
        groups[ga].cannot_links.push((a, b));
        if gb != ga {
            groups[gb].cannot_links.push((a, b));
        }
    }
    groups
}

/// `low`: height at which every must-link of the group holds. `high`: the
/// first height `>= low` at which one of its cannot-links breaks, or the
/// root height if it has none.
pub fn interval_for_group(lca: &LcaIndex, root_height: f64, g: &ConstraintGroup) -> CutInterval {
    let low = g
        .must_links
        .iter()
        .map(|&(a, b)| lca.merge_height(a, b))
        .fold(0.0, f64::max);
    let high = g
        .cannot_links
        .iter()
        .map(|&(a, b)| lca.merge_height(a, b))
        .reduce(f64::min)
        .map_or(root_height, |h| h.max(low));
    CutInterval { low, high }
}

/// Total distance from `h` to every interval.
pub fn cut_objective(intervals: &[CutInterval], h: f64) -> f64 {
    intervals.iter().map(|i| i.distance(h)).sum()
}

/// Minimizes [`cut_objective`]. With the `2k` endpoints sorted, every point
/// of `[e_k, e_{k+1}]` is optimal; the midpoint is returned as `optimal`
/// and `chosen`.
pub fn optimal_cut(intervals: &[CutInterval]) -> Result<LayerCutResult> {
    if intervals.is_empty() {
        return Err(Error::Empty("no intervals to cut".into()));
    }
    let k = intervals.len();
    let mut ends: Vec<f64> = intervals.iter().flat_map(|i| [i.low, i.high]).collect();
    ends.sort_by(f64::total_cmp);
    let (lo, hi) = (ends[k - 1], ends[k]);
    let mid = 0.5 * (lo + hi);
    Ok(LayerCutResult {
        layer: 1,
        intervals: intervals.to_vec(),
        solution_low: lo,
        solution_high: hi,
        optimal: mid,
        chosen: mid,
        objective: cut_objective(intervals, mid),
        fallback_k: None,
    })
}

/// Half the smallest positive gap between distinct merge heights.
pub fn nesting_epsilon(dd: &Dendrogram) -> f64 {
    let h = dd.heights();
    let gap = h.windows(2).map(|w| w[1] - w[0]).filter(|&g| g > 0.0).reduce(f64::min);
    match gap {
        Some(g) => 0.5 * g,
        None => 1e-12 * dd.root_height().max(1.0),
    }
}

/// Height whose cut leaves `k` clusters (fewer when merge heights tie).
pub fn height_for_k(dd: &Dendrogram, k: usize) -> f64 {
    let h = dd.heights();
    let n = dd.n();
    let k = k.clamp(1, n);
    if k == 1 {
        return dd.root_height();
    }
    // Keep the first n - k merges.
    let kept = n - k;
    let above = h[kept];
    if kept == 0 {
        0.5 * above
    } else {
        0.5 * (h[kept - 1] + above)
    }
}

/// Cuts the dendrogram once per layer, finest first, with cut heights
/// strictly increasing so the layers nest.
pub fn extract_flat_hierarchy(
    dd: &Dendrogram,
    constraints: &IndexedConstraints,
) -> Result<(FlatHierarchy, Vec<LayerCutResult>)> {
    let n = dd.n();
    let lca = dd.lca_index();
    let root = dd.root_height();
    let eps = nesting_epsilon(dd);
    let mut layers = Vec::with_capacity(constraints.layers.len());
    let mut results = Vec::with_capacity(constraints.layers.len());
    let mut prev: Option<(f64, usize)> = None;

    for (j, layer) in constraints.layers.iter().enumerate() {
        let groups = constraint_groups(layer, n);
        let mut res = if groups.is_empty() {
            let k = prev.map_or(2, |(_, count)| count.saturating_sub(1).max(1));
            let h = height_for_k(dd, k);
            LayerCutResult {
                layer: j + 1,
                intervals: Vec::new(),
                solution_low: h,
                solution_high: h,
                optimal: h,
                chosen: h,
                objective: 0.0,
                fallback_k: Some(k),
            }
        } else {
            let intervals: Vec<CutInterval> = groups.iter().map(|g| interval_for_group(&lca, root, g)).collect();
            optimal_cut(&intervals)?
        };
        res.layer = j + 1;
        if let Some((h_prev, _)) = prev {
            res.chosen = res.chosen.max(h_prev + eps);
            res.objective = cut_objective(&res.intervals, res.chosen);
        }
        let clusters = dd.clusters_at(res.chosen);
        prev = Some((res.chosen, clusters.len()));
        layers.push(FlatLayer {
            cut: res.chosen,
            clusters,
        });
        results.push(res);
    }
    let fh = FlatHierarchy { n, layers };
    fh.check()?;
    Ok((fh, results))
}
