//! Greedy bottom-up agglomeration with per-merge soft-constraint updates.

use super::LoopGuard;
use crate::constraints::{closed_form_entry, lift_with, status_with, LiftedConstraints, PenaltyWeights};
use crate::dendrogram::{Dendrogram, Merge};
use crate::linkage::{nn_chain_steps, relabel_steps, ClusterTable, LinkageMethod};
use crate::model::{ordered, DistanceMatrix, IndexedLayer, Partition};

/// Record of one constrained merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeRecord {
    pub merge: Merge,
    /// Adjusted distance between the two supernodes when they merged,
    /// before the monotonicity floor.
    pub distance: f64,
}

/// Merge state of the bottom-up engine: the (constraint-adjusted) linkage
/// matrix over live supernodes, plus the dendrogram built so far.
///
/// Supernodes are identified by slots `0..n`; a merged cluster keeps the
/// smaller slot of its two parts.
#[derive(Debug, Clone)]
pub struct BottomUpState {
    method: LinkageMethod,
    table: ClusterTable,
    slot_of_point: Vec<usize>,
    members: Vec<Vec<usize>>,
    merges: Vec<Merge>,
    running_max: f64,
    base: ClusterTable,
    touched: Vec<(usize, usize)>,
}

impl BottomUpState {
    pub fn new(d: &DistanceMatrix, method: LinkageMethod) -> Self {
        let n = d.n();
        let table = ClusterTable::new(d, method);
        BottomUpState {
            method,
            base: table.clone(),
            table,
            slot_of_point: (0..n).collect(),
            members: (0..n).map(|p| vec![p]).collect(),
            merges: Vec::with_capacity(n - 1),
            running_max: 0.0,
            touched: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.table.n
    }

    pub fn supernodes(&self) -> usize {
        self.table.active.len()
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn partition(&self) -> Partition {
        Partition::from_keys(&self.slot_of_point)
    }

    /// Current adjusted distance between the supernodes holding points
    /// `a` and `b` (0 if they already share one).
    pub fn distance_between_points(&self, a: usize, b: usize) -> f64 {
        let (s, t) = (self.slot_of_point[a], self.slot_of_point[b]);
        if s == t {
            0.0
        } else {
            self.method.to_height(self.table.get(s, t))
        }
    }

    pub fn lift(&self, layer: &IndexedLayer) -> LiftedConstraints {
        lift_with(layer, self.n(), |p| self.slot_of_point[p])
    }

    pub fn status(&self, layer: &IndexedLayer) -> f64 {
        status_with(layer, |p| self.slot_of_point[p])
    }

    pub fn guard(&self, guard: LoopGuard, layer: &IndexedLayer) -> f64 {
        guard.measure(layer, |p| self.slot_of_point[p])
    }

    /// Apply the closed-form update to every lifted pair, in place.
    ///
    /// The update is stated for distances in `[0, 1]`. Ward heights can grow
    /// past 1, so for Ward the entries are rescaled by the largest live
    /// height first; for the other criteria the scale is always 1.
    /// Freeze the current matrix as the anchor that later updates start
    /// from. The anchor follows every merge through the linkage recurrence.
    pub fn anchor(&mut self) {
        self.base = self.table.clone();
        self.touched.clear();
    }

    /// Reset the pairs adjusted by the previous update to their anchored
    /// values, then apply the closed-form update to every lifted pair.
    /// Updates therefore never stack on one another.
    pub fn apply_constraints(&mut self, lifted: &LiftedConstraints, w: &PenaltyWeights) {
        for (s, t) in self.touched.drain(..) {
            self.table.set(s, t, self.base.get(s, t));
        }
        if lifted.is_empty() {
            return;
        }
        let scale = if self.method.on_squares() {
            let mut max = 0.0f64;
            for (ia, &a) in self.table.active.iter().enumerate() {
                for &b in &self.table.active[ia + 1..] {
                    max = max.max(self.table.get(a, b));
                }
            }
            self.method.to_height(max).max(1.0)
        } else {
            1.0
        };
        let method = self.method;
        let mut adjust = |s: usize, t: usize, ml: bool, cl: bool| {
            let d = method.to_height(self.table.get(s, t)) / scale;
            let l = closed_form_entry(-d, ml, cl, w);
            self.table.set(s, t, method.to_working(-l * scale));
        };
        for &(s, t) in &lifted.must_links {
            adjust(s, t, true, false);
        }
        for &(s, t) in &lifted.cannot_links {
            adjust(s, t, false, true);
        }
        self.touched
            .extend(lifted.must_links.iter().chain(&lifted.cannot_links).copied());
    }

    /// Merge the closest pair of supernodes. Returns `None` when only one
    /// supernode is left.
    pub fn merge_closest(&mut self) -> Option<MergeRecord> {
        let (a, b, w) = self.table.closest_pair()?;
        Some(self.merge_slots(a, b, w))
    }

    fn merge_slots(&mut self, a: usize, b: usize, w: f64) -> MergeRecord {
        let (a, b) = ordered(a, b);
        let distance = self.method.to_height(w);
        self.running_max = self.running_max.max(distance);
        let id = self.n() + self.merges.len();
        let (l, r) = ordered(self.table.node[a], self.table.node[b]);
        let merge = Merge {
            left: l,
            right: r,
            height: self.running_max,
            id,
        };
        self.table.merge_slots(self.method, a, b, id);
        self.base.merge_slots(self.method, a, b, id);
        // the new row is recomputed from anchored values only
        for idx in 0..self.table.active.len() {
            let x = self.table.active[idx];
            if x != a {
                self.table.set(a, x, self.base.get(a, x));
            }
        }
        let moved = std::mem::take(&mut self.members[b]);
        for &p in &moved {
            self.slot_of_point[p] = a;
        }
        self.members[a].extend(moved);
        self.merges.push(merge);
        MergeRecord { merge, distance }
    }

    /// Merge everything that is left without constraints (nearest-neighbour
    /// chains on the current adjusted matrix) and return the dendrogram.
    pub fn complete(mut self) -> Dendrogram {
        let n = self.n();
        if self.table.active.len() > 1 {
            let slot_node = self.table.node.clone();
            let steps = nn_chain_steps(&mut self.table, self.method);
            let tail = relabel_steps(&steps, &slot_node, n + self.merges.len(), self.running_max);
            self.merges.extend(tail);
        }
        Dendrogram::from_parts_unchecked(n, self.merges)
    }
}

/// One constrained bottom-up step: lift the layer's constraints onto the
/// current supernodes, adjust the matrix with the closed-form update, then
/// merge the closest pair under the adjusted distances.
pub fn merge_step_constrained(
    state: &mut BottomUpState,
    layer: &IndexedLayer,
    w: &PenaltyWeights,
) -> Option<MergeRecord> {
    let lifted = state.lift(layer);
    state.apply_constraints(&lifted, w);
    state.merge_closest()
}
