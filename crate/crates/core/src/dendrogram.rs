//! Stepwise dendrograms: merge records, tree queries and export formats.
//!
//! Leaves are nodes `0..n`; the `k`-th merge creates node `n + k`, so a
//! complete tree over `n` leaves has `n - 1` merges and root `2n - 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DataPointSet;
use crate::union_find::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

#[derive(Serialize, Deserialize)]
struct DendrogramJson {
    n: usize,
    merges: Vec<(usize, usize, f64, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Dendrogram {
    /// Builds a complete dendrogram, validating every structural invariant.
    pub fn new(n: usize, merges: Vec<Merge>) -> Result<Self> {
        let d = Dendrogram { n, merges };
        d.check()?;
        Ok(d)
    }

    /// Builds a dendrogram from `(a, b, height)` steps where `a` and `b`
    /// refer to nodes by the same numbering; ids are assigned in order.
    pub fn from_steps(n: usize, steps: &[(usize, usize, f64)]) -> Result<Self> {
        let merges = steps
            .iter()
            .enumerate()
            .map(|(k, &(left, right, height))| Merge {
                left,
                right,
                height,
                id: n + k,
            })
            .collect();
        Dendrogram::new(n, merges)
    }

    pub(crate) fn from_parts_unchecked(n: usize, merges: Vec<Merge>) -> Self {
        Dendrogram { n, merges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn root(&self) -> usize {
        2 * self.n - 2
    }

    pub fn root_height(&self) -> f64 {
        self.merges.last().map_or(0.0, |m| m.height)
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// `n - 1` merges, ids in sequence, every node used as a child exactly
    /// once (except the root) and only after it exists, finite heights that
    /// never decrease.
    pub fn check(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::validation("dendrogram needs at least 2 leaves"));
        }
        if self.merges.len() != n - 1 {
            return Err(Error::validation(format!(
                "expected {} merges for {n} leaves, got {}",
                n - 1,
                self.merges.len()
            )));
        }
        let mut used = vec![false; 2 * n - 1];
        let mut last = f64::NEG_INFINITY;
        for (k, m) in self.merges.iter().enumerate() {
            if m.id != n + k {
                return Err(Error::validation(format!(
                    "merge {k} has id {}, expected {}",
                    m.id,
                    n + k
                )));
            }
            for child in [m.left, m.right] {
                if child >= m.id {
                    return Err(Error::validation(format!(
                        "merge {k} uses node {child} before it exists"
                    )));
                }
                if std::mem::replace(&mut used[child], true) {
                    return Err(Error::validation(format!("node {child} merged twice")));
                }
            }
            if !m.height.is_finite() || m.height < 0.0 {
                return Err(Error::validation(format!("merge {k} has invalid height {}", m.height)));
            }
            if m.height < last {
                return Err(Error::validation(format!(
                    "heights decrease at merge {k}: {} after {last}",
                    m.height
                )));
            }
            last = m.height;
        }
        Ok(())
    }

    /// Height of every node; leaves sit at 0.
    pub fn node_heights(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.n + self.merges.len()];
        for m in &self.merges {
            h[m.id] = m.height;
        }
        h
    }

    /// Parent of every node; the root maps to itself.
    pub fn parents(&self) -> Vec<usize> {
        let total = self.n + self.merges.len();
        let mut p: Vec<usize> = (0..total).collect();
        for m in &self.merges {
            p[m.left] = m.id;
            p[m.right] = m.id;
        }
        p
    }

    pub fn lca_index(&self) -> LcaIndex {
        LcaIndex::new(self)
    }

    /// Flat clusters obtained by keeping only merges with height `<= h`.
    /// Returns a cluster id per leaf, numbered by first appearance.
    pub fn cut_at(&self, h: f64) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n);
        let mut rep: Vec<usize> = (0..self.n + self.merges.len()).collect();
        for m in &self.merges {
            let (a, b) = (rep[m.left], rep[m.right]);
            if m.height <= h {
                uf.union(a, b);
            }
            rep[m.id] = a;
        }
        let roots: Vec<usize> = (0..self.n).map(|i| uf.find(i)).collect();
        crate::model::Partition::from_keys(&roots).assignment().to_vec()
    }

    /// Groups of leaves, each sorted, ordered by smallest member.
    pub fn clusters_at(&self, h: f64) -> Vec<Vec<usize>> {
        let assign = self.cut_at(h);
        let k = assign.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); k];
        for (p, &c) in assign.iter().enumerate() {
            out[c].push(p);
        }
        out
    }

    pub fn to_json(&self, labels: Option<&DataPointSet>) -> String {
        let doc = DendrogramJson {
            n: self.n,
            merges: self.merges.iter().map(|m| (m.left, m.right, m.height, m.id)).collect(),
            labels: labels.map(|l| l.labels().to_vec()),
        };
        serde_json::to_string(&doc).expect("dendrogram serializes")
    }

    /// Parses the JSON export; returns the labels when the file carries them.
    pub fn from_json(text: &str) -> Result<(Self, Option<Vec<String>>)> {
        let doc: DendrogramJson = serde_json::from_str(text)?;
        let merges = doc
            .merges
            .into_iter()
            .map(|(left, right, height, id)| Merge {
                left,
                right,
                height,
                id,
            })
            .collect();
        let d = Dendrogram::new(doc.n, merges)?;
        if let Some(labels) = &doc.labels {
            if labels.len() != doc.n {
                return Err(Error::validation(format!(
                    "dendrogram has {} labels for {} leaves",
                    labels.len(),
                    doc.n
                )));
            }
        }
        Ok((d, doc.labels))
    }

    /// Newick string with branch lengths equal to the height difference
    /// between a node and its parent.
    pub fn to_newick(&self, labels: &DataPointSet) -> String {
        let heights = self.node_heights();
        let mut children = vec![None; self.n + self.merges.len()];
        for m in &self.merges {
            children[m.id] = Some((m.left, m.right));
        }
        let mut out = String::new();
        // Iterative post-order so deep caterpillar trees do not recurse.
        enum Step {
            Enter(usize, f64),
            Between,
            Leave(usize, f64),
        }
        let root = self.root();
        let mut stack = vec![Step::Enter(root, heights[root])];
        while let Some(step) = stack.pop() {
            match step {
                Step::Enter(node, parent_h) => match children[node] {
                    Some((l, r)) => {
                        out.push('(');
                        stack.push(Step::Leave(node, parent_h));
                        stack.push(Step::Enter(r, heights[node]));
                        stack.push(Step::Between);
                        stack.push(Step::Enter(l, heights[node]));
                    }
                    None => {
                        out.push_str(&newick_label(labels.label(node)));
                        out.push_str(&format!(":{}", parent_h - heights[node]));
                    }
                },
                Step::Between => out.push(','),
                Step::Leave(node, parent_h) => {
                    out.push(')');
                    if node != root {
                        out.push_str(&format!(":{}", parent_h - heights[node]));
                    }
                }
            }
        }
        out.push(';');
        out
    }
}

fn newick_label(label: &str) -> String {
    let special = |c: char| c.is_whitespace() || "()[]':;,".contains(c);
    if label.chars().any(special) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_owned()
    }
}

/// Lowest-common-ancestor queries by walking parent links with depths.
#[derive(Debug, Clone)]
pub struct LcaIndex {
    parent: Vec<usize>,
    depth: Vec<usize>,
    height: Vec<f64>,
}

impl LcaIndex {
    pub fn new(d: &Dendrogram) -> Self {
        let parent = d.parents();
        let total = parent.len();
        let mut depth = vec![0usize; total];
        // Parents always have larger ids, so a descending sweep sees the
        // parent's depth first.
        for v in (0..total).rev() {
            if parent[v] != v {
                depth[v] = depth[parent[v]] + 1;
            }
        }
        LcaIndex {
            parent,
            depth,
            height: d.node_heights(),
        }
    }

    pub fn lca(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    /// Height at which `a` and `b` first share a cluster.
    pub fn merge_height(&self, a: usize, b: usize) -> f64 {
        if a == b {
            0.0
        } else {
            self.height[self.lca(a, b)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_leaf() -> Dendrogram {
        // (a,b)@0.2, (c,d)@0.3, root@0.9
        Dendrogram::from_steps(4, &[(0, 1, 0.2), (2, 3, 0.3), (4, 5, 0.9)]).unwrap()
    }

    #[test]
    fn validates_structure() {
        assert!(Dendrogram::from_steps(3, &[(0, 1, 0.5)]).is_err());
        assert!(Dendrogram::from_steps(3, &[(0, 1, 0.5), (0, 2, 0.6)]).is_err());
        assert!(Dendrogram::from_steps(3, &[(0, 1, 0.5), (3, 2, 0.4)]).is_err());
        assert!(Dendrogram::from_steps(3, &[(0, 1, 0.5), (4, 2, 0.6)]).is_err());
        assert!(Dendrogram::from_steps(3, &[(0, 1, 0.5), (3, 2, 0.5)]).is_ok());
    }

    #[test]
    fn lca_heights() {
        let d = four_leaf();
        let idx = d.lca_index();
        assert_eq!(idx.merge_height(0, 1), 0.2);
        assert_eq!(idx.merge_height(3, 2), 0.3);
        assert_eq!(idx.merge_height(0, 3), 0.9);
        assert_eq!(idx.lca(0, 2), 6);
    }

    #[test]
    fn cuts() {
        let d = four_leaf();
        assert_eq!(d.clusters_at(0.1), vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(d.clusters_at(0.25), vec![vec![0, 1], vec![2], vec![3]]);
        assert_eq!(d.clusters_at(0.5), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(d.clusters_at(0.9), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn json_round_trip_with_labels() {
        let d = four_leaf();
        let labels = DataPointSet::new(vec!["a".into(), "b".into(), "c".into(), "d".into()]).unwrap();
        let text = d.to_json(Some(&labels));
        assert!(text.starts_with(r#"{"n":4,"merges":[[0,1,0.2,4],"#));
        let (back, l) = Dendrogram::from_json(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(l.unwrap(), labels.labels());
    }

    #[test]
    fn newick_branch_lengths() {
        let d = four_leaf();
        let labels = DataPointSet::new(vec!["a".into(), "b".into(), "c d".into(), "e".into()]).unwrap();
        let nwk = d.to_newick(&labels);
        assert_eq!(nwk, "((a:0.2,b:0.2):0.7,('c d':0.3,e:0.3):0.6000000000000001);");
    }
}
