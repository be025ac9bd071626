//! Linkage criteria and nearest-neighbour-chain agglomeration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dendrogram::{Dendrogram, Merge};
use crate::error::{Error, Result};
use crate::model::{condensed_index, ordered, DistanceMatrix};
use crate::union_find::UnionFind;

/// Reducible linkage criteria. Centroid and median are left out because
/// they can produce inversions, which nearest-neighbour chains cannot handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkageMethod {
    Single,
    Complete,
    Average,
    Weighted,
    Ward,
}

impl LinkageMethod {
    pub const ALL: [LinkageMethod; 5] = [
        LinkageMethod::Single,
        LinkageMethod::Complete,
        LinkageMethod::Average,
        LinkageMethod::Weighted,
        LinkageMethod::Ward,
    ];

    /// Ward's recurrence runs on squared dissimilarities.
    pub fn on_squares(self) -> bool {
        self == LinkageMethod::Ward
    }

    #[inline]
    pub(crate) fn to_working(self, d: f64) -> f64 {
        if self.on_squares() {
            d * d
        } else {
            d
        }
    }

    #[inline]
    pub(crate) fn to_height(self, w: f64) -> f64 {
        if self.on_squares() {
            w.sqrt()
        } else {
            w
        }
    }

    /// Lance-Williams update: dissimilarity between `a ∪ b` and `x`, in
    /// working units. The result is floored at `d_ab`; for reducible
    /// criteria this only absorbs rounding.
    #[inline]
    pub(crate) fn update(self, d_ax: f64, d_bx: f64, d_ab: f64, size_a: usize, size_b: usize, size_x: usize) -> f64 {
        let (sa, sb, sx) = (size_a as f64, size_b as f64, size_x as f64);
        let v = match self {
            LinkageMethod::Single => d_ax.min(d_bx),
            LinkageMethod::Complete => d_ax.max(d_bx),
            LinkageMethod::Average => (sa * d_ax + sb * d_bx) / (sa + sb),
            LinkageMethod::Weighted => 0.5 * (d_ax + d_bx),
            LinkageMethod::Ward => ((sx + sa) * d_ax + (sx + sb) * d_bx - sx * d_ab) / (sa + sb + sx),
        };
        v.max(d_ab)
    }
}

impl fmt::Display for LinkageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LinkageMethod::Single => "single",
            LinkageMethod::Complete => "complete",
            LinkageMethod::Average => "average",
            LinkageMethod::Weighted => "weighted",
            LinkageMethod::Ward => "ward",
        };
        f.write_str(s)
    }
}

impl FromStr for LinkageMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(LinkageMethod::Single),
            "complete" => Ok(LinkageMethod::Complete),
            "average" => Ok(LinkageMethod::Average),
            "weighted" => Ok(LinkageMethod::Weighted),
            "ward" => Ok(LinkageMethod::Ward),
            "centroid" | "median" => Err(Error::validation(format!(
                "{s} linkage is not reducible and is not supported"
            ))),
            other => Err(Error::validation(format!("unknown linkage {other:?}"))),
        }
    }
}

/// Dense condensed matrix over `n` slots plus the bookkeeping shared by the
/// agglomeration engines: which slots are alive, their sizes and the
/// dendrogram node each one currently holds.
#[derive(Debug, Clone)]
pub(crate) struct ClusterTable {
    pub n: usize,
    pub work: Vec<f64>,
    pub active: Vec<usize>,
    pub size: Vec<usize>,
    pub node: Vec<usize>,
}

impl ClusterTable {
    pub fn new(d: &DistanceMatrix, method: LinkageMethod) -> Self {
        let n = d.n();
        ClusterTable {
            n,
            work: d.condensed().iter().map(|&x| method.to_working(x)).collect(),
            active: (0..n).collect(),
            size: vec![1; n],
            node: (0..n).collect(),
        }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let (i, j) = ordered(a, b);
        self.work[condensed_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        let (i, j) = ordered(a, b);
        self.work[condensed_index(self.n, i, j)] = v;
    }

    /// Merge slot `b` into slot `a`, updating `a`'s row with the linkage
    /// recurrence, and deactivate `b`.
    pub fn merge_slots(&mut self, method: LinkageMethod, a: usize, b: usize, new_node: usize) {
        let d_ab = self.get(a, b);
        let (sa, sb) = (self.size[a], self.size[b]);
        for idx in 0..self.active.len() {
            let x = self.active[idx];
            if x == a || x == b {
                continue;
            }
            let v = method.update(self.get(a, x), self.get(b, x), d_ab, sa, sb, self.size[x]);
            self.set(a, x, v);
        }
        self.size[a] = sa + sb;
        self.node[a] = new_node;
        let pos = self.active.binary_search(&b).expect("b is active");
        self.active.remove(pos);
    }

    /// Active pair with the smallest working value; ties go to the
    /// lexicographically smallest slot pair.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ia, &a) in self.active.iter().enumerate() {
            // condensed_index(n, a, b) == base + b
            let base = (a * self.n - a * (a + 1) / 2) as isize - (a as isize + 1);
            for &b in &self.active[ia + 1..] {
                let v = self.work[(base + b as isize) as usize];
                if best.map_or(true, |(_, _, bv)| v < bv) {
                    best = Some((a, b, v));
                }
            }
        }
        best
    }
}

/// Agglomerate the active slots of `table` to a single cluster with
/// nearest-neighbour chains. Returns the merges (in slot terms) sorted by
/// height, with working values converted back to heights.
pub(crate) fn nn_chain_steps(table: &mut ClusterTable, method: LinkageMethod) -> Vec<(usize, usize, f64)> {
    let mut steps = Vec::with_capacity(table.active.len().saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    while table.active.len() > 1 {
        if chain.is_empty() {
            chain.push(table.active[0]);
        }
        let (a, b, d_ab) = loop {
            let a = *chain.last().expect("chain not empty");
            let (mut best, mut best_d) = if chain.len() >= 2 {
                let prev = chain[chain.len() - 2];
                (prev, table.get(a, prev))
            } else {
                (usize::MAX, f64::INFINITY)
            };
            for &x in &table.active {
                if x == a {
                    continue;
                }
                let v = table.get(a, x);
                if v < best_d {
                    best_d = v;
                    best = x;
                }
            }
            if chain.len() >= 2 && best == chain[chain.len() - 2] {
                chain.pop();
                chain.pop();
                break (a, best, best_d);
            }
            chain.push(best);
        };
        let (keep, gone) = ordered(a, b);
        steps.push((keep, gone, d_ab));
        table.merge_slots(method, keep, gone, usize::MAX);
    }
    // Stable: merges discovered earlier stay first among equal heights, which
    // keeps every child ahead of its parent.
    steps.sort_by(|x, y| x.2.total_cmp(&y.2));
    steps.into_iter().map(|(a, b, w)| (a, b, method.to_height(w))).collect()
}

/// Turn slot-level merge steps into dendrogram merges. `slot_node` gives the
/// node held by every slot before the first step; new node ids start at
/// `next_id`. Heights are floored at `floor` and at each other so the
/// sequence never decreases.
pub(crate) fn relabel_steps(
    steps: &[(usize, usize, f64)],
    slot_node: &[usize],
    next_id: usize,
    floor: f64,
) -> Vec<Merge> {
    let mut uf = UnionFind::new(slot_node.len());
    let mut node_of_root = slot_node.to_vec();
    let mut running = floor;
    let mut out = Vec::with_capacity(steps.len());
    for (k, &(a, b, h)) in steps.iter().enumerate() {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let (left, right) = ordered(node_of_root[ra], node_of_root[rb]);
        let id = next_id + k;
        running = running.max(h);
        out.push(Merge {
            left,
            right,
            height: running,
            id,
        });
        let r = uf.union(ra, rb).expect("steps join distinct clusters");
        node_of_root[r] = id;
    }
    out
}

/// Unconstrained agglomerative clustering with nearest-neighbour chains,
/// `O(n²)` time. Heights are linkage dissimilarities at merge time.
pub fn nn_chain_linkage(d: &DistanceMatrix, method: LinkageMethod) -> Dendrogram {
    let n = d.n();
    let mut table = ClusterTable::new(d, method);
    let steps = nn_chain_steps(&mut table, method);
    let slot_node: Vec<usize> = (0..n).collect();
    let merges = relabel_steps(&steps, &slot_node, n, 0.0);
    Dendrogram::from_parts_unchecked(n, merges)
}
