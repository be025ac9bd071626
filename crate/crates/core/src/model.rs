//! Shared data types: points, distances, Laplacians, constraint programs and
//! flat hierarchies.
//!
//! Symmetric matrices are stored as a condensed upper triangle (row-major,
//! diagonal excluded), the same layout SciPy uses for pairwise distances.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when checking that a raw matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Position of `(i, j)`, `i < j`, inside a condensed upper triangle of an
/// `n x n` matrix.
#[inline]
pub fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

#[inline]
pub(crate) fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// The labelled data points being clustered.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPointSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl DataPointSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::degenerate(format!(
                "need at least 2 data points, got {}",
                labels.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::validation(format!("duplicate label {label:?}")));
            }
        }
        Ok(DataPointSet { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// Symmetric dissimilarities in `[0, 1]` with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps a condensed upper triangle whose entries already lie in `[0, 1]`.
    pub fn from_condensed(n: usize, data: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::degenerate(format!("need at least 2 points, got {n}")));
        }
        if data.len() != n * (n - 1) / 2 {
            return Err(Error::validation(format!(
                "condensed matrix for n={n} needs {} entries, got {}",
                n * (n - 1) / 2,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::validation(format!(
                "distance {bad} outside [0, 1]; normalize first"
            )));
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = ordered(i, j);
        self.data[condensed_index(self.n, a, b)]
    }

    pub fn condensed(&self) -> &[f64] {
        &self.data
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Scale a raw symmetric, nonnegative, zero-diagonal matrix so that its
/// largest off-diagonal entry becomes 1.
pub fn normalize_distances(raw: &[Vec<f64>]) -> Result<DistanceMatrix> {
    let n = raw.len();
    if n < 2 {
        return Err(Error::degenerate(format!("need at least 2 points, got {n}")));
    }
    for (i, row) in raw.iter().enumerate() {
        if row.len() != n {
            return Err(Error::validation(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    let mut data = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let d = raw[i][i];
        if !d.is_finite() || d.abs() > SYMMETRY_TOL {
            return Err(Error::validation(format!("diagonal entry ({i},{i}) = {d} is not zero")));
        }
        for j in (i + 1)..n {
            let (a, b) = (raw[i][j], raw[j][i]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::validation(format!("entry ({i},{j}) is not finite")));
            }
            if (a - b).abs() > SYMMETRY_TOL {
                return Err(Error::validation(format!(
                    "matrix not symmetric at ({i},{j}): {a} vs {b}"
                )));
            }
            if a < 0.0 {
                return Err(Error::validation(format!("negative distance {a} at ({i},{j})")));
            }
            data.push(a);
        }
    }
    normalize_condensed(n, data)
}

/// Same as [`normalize_distances`] for a condensed upper triangle.
pub fn normalize_condensed(n: usize, mut data: Vec<f64>) -> Result<DistanceMatrix> {
    let max = data.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::degenerate("all distances are zero"));
    }
    if max != 1.0 {
        for d in &mut data {
            *d /= max;
        }
    }
    DistanceMatrix::from_condensed(n, data)
}

/// Graph Laplacian parametrized by its off-diagonal entries.
///
/// Off-diagonals are `L_ij = -d_ij`, so they lie in `[-1, 0]` for a
/// normalized distance matrix. The diagonal is never stored; it is the
/// negated off-diagonal row sum, which makes every row sum to zero exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianView {
    n: usize,
    offdiag: Vec<f64>,
}

impl LaplacianView {
    pub fn from_offdiag(n: usize, offdiag: Vec<f64>) -> Result<Self> {
        if offdiag.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::validation("off-diagonal length does not match n"));
        }
        if let Some(bad) = offdiag.iter().find(|x| !(-1.0..=0.0).contains(*x)) {
            return Err(Error::validation(format!(
                "Laplacian off-diagonal {bad} outside [-1, 0]"
            )));
        }
        Ok(LaplacianView { n, offdiag })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag(i)
        } else {
            let (a, b) = ordered(i, j);
            self.offdiag[condensed_index(self.n, a, b)]
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        -(0..self.n)
            .filter(|&j| j != i)
            .map(|j| {
                let (a, b) = ordered(i, j);
                self.offdiag[condensed_index(self.n, a, b)]
            })
            .sum::<f64>()
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub(crate) fn offdiag_mut(&mut self) -> &mut [f64] {
        &mut self.offdiag
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = self.offdiag[condensed_index(self.n, i, j)];
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        for (i, row) in out.iter_mut().enumerate() {
            row[i] = -row.iter().sum::<f64>();
        }
        out
    }

    /// Back to distances, `d_ij = -L_ij`.
    pub fn to_distances(&self) -> DistanceMatrix {
        DistanceMatrix {
            n: self.n,
            data: self.offdiag.iter().map(|&x| -x).collect(),
        }
    }

    /// Check membership in the Laplacian feasible set on the dense matrix:
    /// symmetry, zero row sums and off-diagonals in `[-1, 0]`.
    pub fn check_feasible(&self, tol: f64) -> Result<()> {
        let dense = self.to_dense();
        for i in 0..self.n {
            let row_sum: f64 = dense[i].iter().sum();
            if row_sum.abs() > tol {
                return Err(Error::validation(format!("row {i} sums to {row_sum}")));
            }
            for j in 0..self.n {
                if (dense[i][j] - dense[j][i]).abs() > tol {
                    return Err(Error::validation(format!("asymmetric at ({i},{j})")));
                }
                if i != j && !(-1.0 - tol..=tol).contains(&dense[i][j]) {
                    return Err(Error::validation(format!(
                        "off-diagonal ({i},{j}) = {} outside [-1, 0]",
                        dense[i][j]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `L_ij = -d_ij` off the diagonal.
pub fn laplacian_from_distances(d: &DistanceMatrix) -> LaplacianView {
    LaplacianView {
        n: d.n,
        offdiag: d.data.iter().map(|&x| -x).collect(),
    }
}

/// Must-link and cannot-link pairs of one layer, by label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintLayer {
    #[serde(default)]
    pub must_link: Vec<(String, String)>,
    #[serde(default)]
    pub cannot_link: Vec<(String, String)>,
}

/// Layer-based pairwise constraints, finest layer first.
///
/// A precedence between levels is expressed as a cannot-link in layer `j`
/// followed by a must-link on the same pair in layer `j + 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintProgram {
    pub layers: Vec<ConstraintLayer>,
}

/// One problem found by [`validate_constraints`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintViolation {
    UnknownLabel { layer: usize, label: String },
    Contradiction { layer: usize, a: String, b: String },
    SelfPair { layer: usize, label: String },
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintViolation::UnknownLabel { layer, label } => {
                write!(f, "layer {}: unknown label {label:?}", layer + 1)
            }
            ConstraintViolation::Contradiction { layer, a, b } => write!(
                f,
                "layer {}: pair ({a:?}, {b:?}) is both must-link and cannot-link",
                layer + 1
            ),
            ConstraintViolation::SelfPair { layer, label } => {
                write!(f, "layer {}: pair links {label:?} with itself", layer + 1)
            }
        }
    }
}

/// Report every unknown label, self pair and same-layer ML/CL contradiction.
pub fn validate_constraints(cp: &ConstraintProgram, points: &DataPointSet) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    for (layer, l) in cp.layers.iter().enumerate() {
        let mut seen_unknown = BTreeSet::new();
        let mut check = |label: &String, out: &mut Vec<ConstraintViolation>| {
            if points.position(label).is_none() && seen_unknown.insert(label.clone()) {
                out.push(ConstraintViolation::UnknownLabel {
                    layer,
                    label: label.clone(),
                });
            }
        };
        for (a, b) in l.must_link.iter().chain(&l.cannot_link) {
            check(a, &mut out);
            check(b, &mut out);
            if a == b {
                out.push(ConstraintViolation::SelfPair {
                    layer,
                    label: a.clone(),
                });
            }
        }
        let key = |a: &String, b: &String| {
            if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            }
        };
        let ml: BTreeSet<_> = l.must_link.iter().map(|(a, b)| key(a, b)).collect();
        let cl: BTreeSet<_> = l.cannot_link.iter().map(|(a, b)| key(a, b)).collect();
        for (a, b) in ml.intersection(&cl) {
            out.push(ConstraintViolation::Contradiction {
                layer,
                a: a.clone(),
                b: b.clone(),
            });
        }
    }
    out
}

/// Constraint pairs of one layer as sorted, deduplicated point-index pairs
/// `(i, j)` with `i < j`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexedLayer {
    pub must_link: Vec<(usize, usize)>,
    pub cannot_link: Vec<(usize, usize)>,
}

impl IndexedLayer {
    pub fn new(
        must_link: impl IntoIterator<Item = (usize, usize)>,
        cannot_link: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let canon = |it: &mut dyn Iterator<Item = (usize, usize)>| -> Vec<(usize, usize)> {
            let set: BTreeSet<_> = it.filter(|(a, b)| a != b).map(|(a, b)| ordered(a, b)).collect();
            set.into_iter().collect()
        };
        IndexedLayer {
            must_link: canon(&mut must_link.into_iter()),
            cannot_link: canon(&mut cannot_link.into_iter()),
        }
    }

    pub fn len(&self) -> usize {
        self.must_link.len() + self.cannot_link.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexedConstraints {
    pub layers: Vec<IndexedLayer>,
}

impl IndexedConstraints {
    pub fn empty(layers: usize) -> Self {
        IndexedConstraints {
            layers: vec![IndexedLayer::default(); layers],
        }
    }

    pub fn total(&self) -> usize {
        self.layers.iter().map(IndexedLayer::len).sum()
    }

    pub fn to_program(&self, points: &DataPointSet) -> ConstraintProgram {
        let name = |(a, b): &(usize, usize)| (points.label(*a).to_owned(), points.label(*b).to_owned());
        ConstraintProgram {
            layers: self
                .layers
                .iter()
                .map(|l| ConstraintLayer {
                    must_link: l.must_link.iter().map(name).collect(),
                    cannot_link: l.cannot_link.iter().map(name).collect(),
                })
                .collect(),
        }
    }
}

impl ConstraintProgram {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constraint program serializes")
    }

    pub fn is_empty(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.must_link.is_empty() && l.cannot_link.is_empty())
    }

    /// Map labels to point indices. Fails with every problem listed if
    /// [`validate_constraints`] reports anything.
    pub fn resolve(&self, points: &DataPointSet) -> Result<IndexedConstraints> {
        let problems = validate_constraints(self, points);
        if !problems.is_empty() {
            let msg: Vec<String> = problems.iter().map(ToString::to_string).collect();
            return Err(Error::validation(msg.join("; ")));
        }
        Ok(self.resolve_lenient(points).0)
    }

    /// Like [`resolve`](Self::resolve) but drops pairs with unknown labels
    /// and returns how many were dropped. Same-layer contradictions are kept:
    /// the soft constraints let the geometry arbitrate them.
    pub fn resolve_lenient(&self, points: &DataPointSet) -> (IndexedConstraints, usize) {
        let mut dropped = 0;
        let mut map = |pairs: &[(String, String)]| -> Vec<(usize, usize)> {
            pairs
                .iter()
                .filter_map(|(a, b)| match (points.position(a), points.position(b)) {
                    (Some(i), Some(j)) => Some((i, j)),
                    _ => {
                        dropped += 1;
                        None
                    }
                })
                .collect()
        };
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let ml = map(&l.must_link);
                let cl = map(&l.cannot_link);
                IndexedLayer::new(ml, cl)
            })
            .collect();
        (IndexedConstraints { layers }, dropped)
    }
}

/// Assignment of every original point to a supernode; ids are `0..count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    count: usize,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            count: n,
        }
    }

    /// Relabels arbitrary group keys to contiguous ids in order of first
    /// appearance.
    pub fn from_keys(keys: &[usize]) -> Self {
        let mut remap = HashMap::new();
        let assignment = keys
            .iter()
            .map(|k| {
                let next = remap.len();
                *remap.entry(*k).or_insert(next)
            })
            .collect();
        Partition {
            assignment,
            count: remap.len(),
        }
    }

    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (g, members) in groups.iter().enumerate() {
            for &p in members {
                if p >= n || assignment[p] != usize::MAX {
                    return Err(Error::validation(format!("point {p} missing or assigned twice")));
                }
                assignment[p] = g;
            }
        }
        if assignment.contains(&usize::MAX) {
            return Err(Error::validation("partition does not cover every point"));
        }
        Ok(Partition::from_keys(&assignment))
    }

    pub fn supernode(&self, point: usize) -> usize {
        self.assignment[point]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (p, &g) in self.assignment.iter().enumerate() {
            out[g].push(p);
        }
        out
    }
}

/// One level of a [`FlatHierarchy`]: the cut height and the clusters it
/// yields, each a sorted list of point indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatLayer {
    pub cut: f64,
    pub clusters: Vec<Vec<usize>>,
}

/// Nested partitions, finest layer first.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatHierarchy {
    pub n: usize,
    pub layers: Vec<FlatLayer>,
}

#[derive(Serialize, Deserialize)]
struct FlatLayerJson {
    cut: f64,
    clusters: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct FlatHierarchyJson {
    layers: Vec<FlatLayerJson>,
}

impl FlatHierarchy {
    /// Cluster id of every point in layer `j`.
    pub fn assignment(&self, j: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n];
        for (c, members) in self.layers[j].clusters.iter().enumerate() {
            for &p in members {
                out[p] = c;
            }
        }
        out
    }

    /// Every layer covers all points exactly once, each layer's clusters are
    /// unions of the previous layer's, and cut heights do not decrease.
    pub fn check(&self) -> Result<()> {
        for (j, layer) in self.layers.iter().enumerate() {
            Partition::from_groups(self.n, &layer.clusters)
                .map_err(|e| Error::validation(format!("layer {}: {e}", j + 1)))?;
            if j > 0 {
                let prev = &self.layers[j - 1];
                if layer.cut < prev.cut {
                    return Err(Error::validation(format!("cut heights decrease at layer {}", j + 1)));
                }
                let coarse = self.assignment(j);
                for cluster in &prev.clusters {
                    let first = coarse[cluster[0]];
                    if cluster.iter().any(|&p| coarse[p] != first) {
                        return Err(Error::validation(format!(
                            "layer {} splits a cluster of layer {j}",
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self, points: &DataPointSet) -> String {
        let doc = FlatHierarchyJson {
            layers: self
                .layers
                .iter()
                .map(|l| FlatLayerJson {
                    cut: l.cut,
                    clusters: l
                        .clusters
                        .iter()
                        .map(|c| c.iter().map(|&p| points.label(p).to_owned()).collect())
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("hierarchy serializes")
    }

    pub fn from_json(text: &str, points: &DataPointSet) -> Result<Self> {
        let doc: FlatHierarchyJson = serde_json::from_str(text)?;
        let mut layers = Vec::with_capacity(doc.layers.len());
        for l in doc.layers {
            let mut clusters = Vec::with_capacity(l.clusters.len());
            for c in l.clusters {
                let mut ids = c
                    .iter()
                    .map(|label| {
                        points
                            .position(label)
                            .ok_or_else(|| Error::validation(format!("unknown label {label:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                ids.sort_unstable();
                clusters.push(ids);
            }
            layers.push(FlatLayer { cut: l.cut, clusters });
        }
        let fh = FlatHierarchy {
            n: points.len(),
            layers,
        };
        fh.check()?;
        Ok(fh)
    }

    /// Indented plain-text tree, coarsest layer at the top level.
    pub fn render_text(&self, points: &DataPointSet) -> String {
        let mut out = String::from("root\n");
        if self.layers.is_empty() {
            return out;
        }
        let top = self.layers.len() - 1;
        let all: Vec<usize> = (0..self.n).collect();
        self.render_level(points, top, &all, 1, &mut out);
        out
    }

    fn render_level(&self, points: &DataPointSet, layer: usize, within: &[usize], depth: usize, out: &mut String) {
        let inside: BTreeSet<usize> = within.iter().copied().collect();
        for (c, members) in self.layers[layer].clusters.iter().enumerate() {
            if !members.iter().all(|p| inside.contains(p)) {
                continue;
            }
            let indent = "  ".repeat(depth);
            out.push_str(&format!("{indent}[L{} c{}] ({} points)\n", layer + 1, c, members.len()));
            if layer == 0 {
                let words: Vec<&str> = members.iter().map(|&p| points.label(p)).collect();
                out.push_str(&format!("{indent}  {{{}}}\n", words.join(", ")));
            } else {
                self.render_level(points, layer - 1, members, depth + 1, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(labels: &[&str]) -> DataPointSet {
        DataPointSet::new(labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn condensed_layout_matches_row_major_upper_triangle() {
        let n = 5;
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                assert_eq!(condensed_index(n, i, j), k);
                k += 1;
            }
        }
    }

    #[test]
    fn normalize_scales_by_max() {
        let raw = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        let d = normalize_distances(&raw).unwrap();
        assert_eq!(d.get(0, 1), 1.0);

        let raw = vec![vec![0.0, 4.0, 2.0], vec![4.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let d = normalize_distances(&raw).unwrap();
        assert_eq!(d.get(0, 2), 0.5);
        assert_eq!(d.get(1, 2), 0.25);
    }

    #[test]
    fn normalize_three_by_three_hand_scaled() {
        // {0, 3, 6} scaled by hand: every entry divided by 6.
        let raw = vec![vec![0.0, 3.0, 6.0], vec![3.0, 0.0, 3.0], vec![6.0, 3.0, 0.0]];
        let expected = [[0.0, 0.5, 1.0], [0.5, 0.0, 0.5], [1.0, 0.5, 0.0]];
        let d = normalize_distances(&raw).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.get(i, j), expected[i][j]);
            }
        }
    }

    #[test]
    fn normalize_is_identity_when_max_is_one() {
        let raw = vec![vec![0.0, 0.3, 1.0], vec![0.3, 0.0, 0.7], vec![1.0, 0.7, 0.0]];
        let d = normalize_distances(&raw).unwrap();
        assert_eq!(d.to_dense(), raw);
    }

    #[test]
    fn normalize_rejects_bad_input() {
        let asym = vec![vec![0.0, 1.0], vec![1.1, 0.0]];
        assert!(matches!(normalize_distances(&asym), Err(Error::Validation(_))));
        let zero = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert!(matches!(normalize_distances(&zero), Err(Error::Degenerate(_))));
        let nan = vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]];
        assert!(normalize_distances(&nan).is_err());
        // within tolerance is accepted
        let near = vec![vec![0.0, 1.0], vec![1.0 + 1e-12, 0.0]];
        assert!(normalize_distances(&near).is_ok());
    }

    #[test]
    fn laplacian_two_points() {
        let d = DistanceMatrix::from_condensed(2, vec![0.5]).unwrap();
        let l = laplacian_from_distances(&d);
        assert_eq!(l.get(0, 1), -0.5);
        assert_eq!(l.get(0, 0), 0.5);
        assert_eq!(l.get(1, 1), 0.5);
    }

    #[test]
    fn laplacian_zero_distance_is_zero_entry() {
        let d = DistanceMatrix::from_condensed(3, vec![0.0, 1.0, 1.0]).unwrap();
        let l = laplacian_from_distances(&d);
        assert_eq!(l.get(0, 1), 0.0);
    }

    #[test]
    fn laplacian_diagonal_is_row_sum() {
        // d01 = 0.2, d02 = 0.4, d12 = 0.6; row sums by hand.
        let d = DistanceMatrix::from_condensed(3, vec![0.2, 0.4, 0.6]).unwrap();
        let l = laplacian_from_distances(&d);
        let expected = [0.2 + 0.4, 0.2 + 0.6, 0.4 + 0.6];
        for (i, e) in expected.iter().enumerate() {
            assert!((l.diag(i) - e).abs() < 1e-15);
        }
        l.check_feasible(1e-12).unwrap();
        assert_eq!(l.to_distances(), d);
    }

    #[test]
    fn validate_reports_contradiction_and_unknown() {
        let points = pts(&["a", "b", "c"]);
        let cp = ConstraintProgram {
            layers: vec![ConstraintLayer {
                must_link: vec![("a".into(), "b".into())],
                cannot_link: vec![("b".into(), "a".into())],
            }],
        };
        let v = validate_constraints(&cp, &points);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], ConstraintViolation::Contradiction { .. }));

        assert!(validate_constraints(&ConstraintProgram::default(), &points).is_empty());

        let cp = ConstraintProgram {
            layers: vec![ConstraintLayer {
                must_link: vec![("a".into(), "zzz".into())],
                cannot_link: vec![],
            }],
        };
        let v = validate_constraints(&cp, &points);
        assert_eq!(
            v,
            vec![ConstraintViolation::UnknownLabel {
                layer: 0,
                label: "zzz".into()
            }]
        );
        assert!(cp.resolve(&points).is_err());
        let (ix, dropped) = cp.resolve_lenient(&points);
        assert_eq!(dropped, 1);
        assert!(ix.layers[0].is_empty());
    }

    #[test]
    fn constraint_json_shape() {
        let text =
            r#"{"layers": [{"must_link": [["a","b"]], "cannot_link": [["a","c"]]}, {"must_link": [["a","c"]]}]}"#;
        let cp = ConstraintProgram::from_json(text).unwrap();
        assert_eq!(cp.layers.len(), 2);
        assert_eq!(cp.layers[1].must_link, vec![("a".to_string(), "c".to_string())]);
        assert!(cp.layers[1].cannot_link.is_empty());
        let back = ConstraintProgram::from_json(&cp.to_json()).unwrap();
        assert_eq!(back, cp);
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(DataPointSet::new(vec!["a".into(), "a".into()]).is_err());
        assert!(DataPointSet::new(vec!["a".into()]).is_err());
    }

    #[test]
    fn partition_relabels_contiguously() {
        let p = Partition::from_keys(&[7, 3, 7, 9]);
        assert_eq!(p.assignment(), &[0, 1, 0, 2]);
        assert_eq!(p.count(), 3);
        assert_eq!(p.groups(), vec![vec![0, 2], vec![1], vec![3]]);
    }

    #[test]
    fn hierarchy_check_catches_non_nested() {
        let fh = FlatHierarchy {
            n: 3,
            layers: vec![
                FlatLayer {
                    cut: 0.1,
                    clusters: vec![vec![0, 1], vec![2]],
                },
                FlatLayer {
                    cut: 0.2,
                    clusters: vec![vec![0], vec![1, 2]],
                },
            ],
        };
        assert!(fh.check().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn raw_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
            (2usize..12).prop_flat_map(|n| {
                proptest::collection::vec(0.0f64..50.0, n * (n - 1) / 2).prop_map(move |vals| {
                    let mut m = vec![vec![0.0; n]; n];
                    let mut k = 0;
                    for i in 0..n {
                        for j in (i + 1)..n {
                            m[i][j] = vals[k];
                            m[j][i] = vals[k];
                            k += 1;
                        }
                    }
                    m[0][n - 1] += 1.0;
                    m[n - 1][0] = m[0][n - 1];
                    m
                })
            })
        }

        proptest! {
            #[test]
            fn normalized_laplacian_is_feasible(raw in raw_matrix()) {
                let d = normalize_distances(&raw).unwrap();
                prop_assert!(d.condensed().iter().all(|x| (0.0..=1.0).contains(x)));
                let l = laplacian_from_distances(&d);
                prop_assert!(l.check_feasible(1e-12).is_ok());
            }

            #[test]
            fn normalize_is_idempotent(raw in raw_matrix()) {
                let once = normalize_distances(&raw).unwrap();
                let twice = normalize_distances(&once.to_dense()).unwrap();
                prop_assert_eq!(once, twice);
            }
        }
    }
}
