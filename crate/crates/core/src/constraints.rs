//! Soft-constrained Laplacian adjustment.
//!
//! Given a (coarsened) Laplacian `Lc`, the adjusted Laplacian solves
//!
//! ```text
//! min  ½‖L − Lc‖²  +  λ1/2 Σ_ML L_ij²  +  λ2/2 Σ_CL (L_ij + 1)²
//! ```
//!
//! over Laplacians whose off-diagonals lie in `[-1, 0]`. Must-links pull an
//! entry toward 0 (distance 0), cannot-links toward −1 (distance 1). The
//! Frobenius norm and the penalty sums run over ordered pairs, so each
//! unordered pair contributes twice, matching the symmetric matrix.
//!
//! With the feasible set relaxed to the box `[-1, 0]` the entries decouple
//! and [`closed_form_update`] gives the exact minimizer. [`solve_soft_qp`]
//! handles both the box and the full Laplacian set (diagonal tied to the row
//! sums) by projected gradient on the off-diagonal entries.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{condensed_index, ordered, IndexedLayer, LaplacianView, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl PenaltyWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
            return Err(Error::validation(format!(
                "penalty weights must be finite and nonnegative, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(PenaltyWeights { lambda1, lambda2 })
    }
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        PenaltyWeights {
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }
}

/// Point constraints of one layer mapped onto supernodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiftedConstraints {
    /// Supernode pairs `(s, t)`, `s < t`, each listed once.
    pub must_links: Vec<(usize, usize)>,
    pub cannot_links: Vec<(usize, usize)>,
    /// Supernode pairs that received both kinds; dropped from both sets.
    pub conflicts: Vec<(usize, usize)>,
    /// Must-links whose endpoints already share a supernode.
    pub satisfied_ml: usize,
    /// Cannot-links whose endpoints already share a supernode.
    pub violated_cl: usize,
}

impl LiftedConstraints {
    pub fn is_empty(&self) -> bool {
        self.must_links.is_empty() && self.cannot_links.is_empty()
    }
}

/// Lift a layer's point pairs onto the supernodes of `p`.
pub fn lift_constraints(layer: &IndexedLayer, p: &Partition) -> LiftedConstraints {
    lift_with(layer, p.count(), |x| p.supernode(x))
}

/// `node_of` maps points to ids below `nodes`. Lifted pairs are listed once
/// each, in order of first occurrence (must-links scanned first).
pub(crate) fn lift_with(layer: &IndexedLayer, nodes: usize, node_of: impl Fn(usize) -> usize) -> LiftedConstraints {
    const ML: u8 = 1;
    const CL: u8 = 2;
    const SEEN: u8 = 4;
    let mut out = LiftedConstraints::default();
    let mut mark = vec![0u8; nodes * nodes.saturating_sub(1) / 2];
    let key = |a: usize, b: usize| {
        let (s, t) = ordered(node_of(a), node_of(b));
        (s != t).then(|| (s, t, condensed_index(nodes, s, t)))
    };
    for &(a, b) in &layer.must_link {
        match key(a, b) {
            Some((_, _, k)) => mark[k] |= ML,
            None => out.satisfied_ml += 1,
        }
    }
    for &(a, b) in &layer.cannot_link {
        match key(a, b) {
            Some((_, _, k)) => mark[k] |= CL,
            None => out.violated_cl += 1,
        }
    }
    for &(a, b) in &layer.must_link {
        if let Some((s, t, k)) = key(a, b) {
            if mark[k] & SEEN == 0 {
                mark[k] |= SEEN;
                if mark[k] & CL != 0 {
                    out.conflicts.push((s, t));
                } else {
                    out.must_links.push((s, t));
                }
            }
        }
    }
    for &(a, b) in &layer.cannot_link {
        if let Some((s, t, k)) = key(a, b) {
            if mark[k] & SEEN == 0 {
                mark[k] |= SEEN;
                out.cannot_links.push((s, t));
            }
        }
    }
    out
}

/// Fraction of the layer's constraints satisfied by `p`: a must-link holds
/// when both points share a supernode, a cannot-link when they do not.
/// An empty layer is fully satisfied.
pub fn constraint_status(p: &Partition, layer: &IndexedLayer) -> f64 {
    status_with(layer, |x| p.supernode(x))
}

pub(crate) fn status_with(layer: &IndexedLayer, node_of: impl Fn(usize) -> usize) -> f64 {
    let total = layer.len();
    if total == 0 {
        return 1.0;
    }
    let ml_ok = layer
        .must_link
        .iter()
        .filter(|&&(a, b)| node_of(a) == node_of(b))
        .count();
    let cl_ok = layer
        .cannot_link
        .iter()
        .filter(|&&(a, b)| node_of(a) != node_of(b))
        .count();
    (ml_ok + cl_ok) as f64 / total as f64
}

/// Minimizer of `½(x − c)² + λ1·ml/2 · x² + λ2·cl/2 · (x + 1)²` over `[-1, 0]`.
#[inline]
pub fn closed_form_entry(c: f64, must_link: bool, cannot_link: bool, w: &PenaltyWeights) -> f64 {
    let l1 = if must_link { w.lambda1 } else { 0.0 };
    let l2 = if cannot_link { w.lambda2 } else { 0.0 };
    if l1 == 0.0 && l2 == 0.0 {
        return c;
    }
    ((c - l2) / (1.0 + l1 + l2)).clamp(-1.0, 0.0)
}

/// Entrywise closed-form solution of the box-relaxed problem. Entries not
/// touched by a lifted constraint are returned unchanged.
pub fn closed_form_update(lc: &LaplacianView, lifted: &LiftedConstraints, w: &PenaltyWeights) -> LaplacianView {
    let n = lc.n();
    let mut out = lc.clone();
    let x = out.offdiag_mut();
    for &(i, j) in &lifted.must_links {
        let k = condensed_index(n, i, j);
        x[k] = closed_form_entry(x[k], true, false, w);
    }
    for &(i, j) in &lifted.cannot_links {
        let k = condensed_index(n, i, j);
        x[k] = closed_form_entry(x[k], false, true, w);
    }
    out
}

/// Which feasible set the quadratic program is posed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibleSet {
    /// Off-diagonals in `[-1, 0]`, diagonal determined by the row sums.
    Laplacian,
    /// Every entry an independent variable in `[-1, 0]`.
    Box,
}

impl fmt::Display for FeasibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeasibleSet::Laplacian => "laplacian",
            FeasibleSet::Box => "box",
        })
    }
}

impl FromStr for FeasibleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(FeasibleSet::Laplacian),
            "box" => Ok(FeasibleSet::Box),
            other => Err(Error::validation(format!("unknown feasible set {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub feasible: FeasibleSet,
    pub tol: f64,
    /// `None` means `10·m²`.
    pub max_iter: Option<usize>,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            feasible: FeasibleSet::Laplacian,
            tol: 1e-8,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub laplacian: LaplacianView,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub feasible: FeasibleSet,
}

struct SoftQp<'a> {
    m: usize,
    c: &'a [f64],
    ml: Vec<usize>,
    cl: Vec<usize>,
    w: PenaltyWeights,
    coupled: bool,
}

impl SoftQp<'_> {
    fn row_residuals(&self, x: &[f64], r: &mut [f64]) {
        r.iter_mut().for_each(|v| *v = 0.0);
        let mut k = 0;
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                let d = x[k] - self.c[k];
                r[i] += d;
                r[j] += d;
                k += 1;
            }
        }
    }

    /// In box mode the constant contributed by the free diagonal is dropped.
    fn objective(&self, x: &[f64], r: &mut [f64]) -> f64 {
        let mut f: f64 = x.iter().zip(self.c).map(|(a, b)| (a - b) * (a - b)).sum();
        f += self.w.lambda1 * self.ml.iter().map(|&k| x[k] * x[k]).sum::<f64>();
        f += self.w.lambda2 * self.cl.iter().map(|&k| (x[k] + 1.0) * (x[k] + 1.0)).sum::<f64>();
        if self.coupled {
            self.row_residuals(x, r);
            f += 0.5 * r.iter().map(|v| v * v).sum::<f64>();
        }
        f
    }

    fn gradient(&self, x: &[f64], r: &mut [f64], g: &mut [f64]) {
        for ((gk, xk), ck) in g.iter_mut().zip(x).zip(self.c) {
            *gk = 2.0 * (xk - ck);
        }
        for &k in &self.ml {
            g[k] += 2.0 * self.w.lambda1 * x[k];
        }
        for &k in &self.cl {
            g[k] += 2.0 * self.w.lambda2 * (x[k] + 1.0);
        }
        if self.coupled {
            self.row_residuals(x, r);
            let mut k = 0;
            for i in 0..self.m {
                for j in (i + 1)..self.m {
                    g[k] += r[i] + r[j];
                    k += 1;
                }
            }
        }
    }

    fn lipschitz(&self) -> f64 {
        let l1 = if self.ml.is_empty() { 0.0 } else { self.w.lambda1 };
        let l2 = if self.cl.is_empty() { 0.0 } else { self.w.lambda2 };
        let coupling = if self.coupled && self.m >= 2 {
            2.0 * self.m as f64 - 2.0
        } else {
            0.0
        };
        2.0 * (1.0 + l1 + l2) + coupling
    }
}

fn build_qp<'a>(
    lc: &'a LaplacianView,
    lifted: &LiftedConstraints,
    w: &PenaltyWeights,
    feasible: FeasibleSet,
) -> SoftQp<'a> {
    let m = lc.n();
    SoftQp {
        m,
        c: lc.offdiag(),
        ml: lifted
            .must_links
            .iter()
            .map(|&(i, j)| condensed_index(m, i, j))
            .collect(),
        cl: lifted
            .cannot_links
            .iter()
            .map(|&(i, j)| condensed_index(m, i, j))
            .collect(),
        w: *w,
        coupled: feasible == FeasibleSet::Laplacian,
    }
}

/// Objective value of `l` for the problem anchored at `lc`.
pub fn soft_qp_objective(
    l: &LaplacianView,
    lc: &LaplacianView,
    lifted: &LiftedConstraints,
    w: &PenaltyWeights,
    feasible: FeasibleSet,
) -> f64 {
    let qp = build_qp(lc, lifted, w, feasible);
    let mut r = vec![0.0; lc.n()];
    qp.objective(l.offdiag(), &mut r)
}

/// Box mode runs projected gradient (monotone accelerated variant, step
/// `1/Lipschitz`) on the off-diagonal entries. Laplacian mode runs a
/// damped semismooth Newton method on the dual over the `m` row residuals,
/// whose conditioning does not degrade with `m` the way the primal's does.
///
/// Projected gradient stops once an iteration both decreases the objective
/// by less than `tol` relative and moves the iterate by less than `tol` in
/// the max norm; Newton stops once the dual gradient is below `tol` in the
/// max norm. If `max_iter` runs out first, the best iterate is returned
/// with `converged = false`. Iterates always lie in `[-1, 0]`.
pub fn solve_soft_qp(
    lc: &LaplacianView,
    lifted: &LiftedConstraints,
    w: &PenaltyWeights,
    opts: &QpOptions,
) -> QpSolution {
    let m = lc.n();
    let qp = build_qp(lc, lifted, w, opts.feasible);
    let (x, iterations, converged) = if qp.coupled {
        let max_iter = opts.max_iter.unwrap_or(10 * m * m).max(1);
        dual_newton(&qp, opts.tol, max_iter)
    } else {
        projected_gradient(&qp, opts.tol, opts.max_iter.unwrap_or(10 * m * m).max(1))
    };
    let mut r = vec![0.0; m];
    let objective = qp.objective(&x, &mut r);
    QpSolution {
        laplacian: LaplacianView::from_offdiag(m, x).expect("iterate stays in the box"),
        objective,
        iterations,
        converged,
        feasible: opts.feasible,
    }
}

fn projected_gradient(qp: &SoftQp, tol: f64, max_iter: usize) -> (Vec<f64>, usize, bool) {
    let m = qp.m;
    let step = 1.0 / qp.lipschitz();
    let len = qp.c.len();
    let mut r = vec![0.0; m];
    let mut g = vec![0.0; len];
    let mut x: Vec<f64> = qp.c.iter().map(|v| v.clamp(-1.0, 0.0)).collect();
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut z = vec![0.0; len];
    let mut fx = qp.objective(&x, &mut r);
    let mut t = 1.0f64;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        qp.gradient(&y, &mut r, &mut g);
        let mut moved = 0.0f64;
        for k in 0..len {
            z[k] = (y[k] - step * g[k]).clamp(-1.0, 0.0);
            moved = moved.max((z[k] - y[k]).abs());
        }
        let fz = qp.objective(&z, &mut r);

        std::mem::swap(&mut x_prev, &mut x);
        let f_prev = fx;
        if fz <= f_prev {
            x.copy_from_slice(&z);
            fx = fz;
        } else {
            x.copy_from_slice(&x_prev);
        }
        debug_assert!(fx <= f_prev, "objective increased: {f_prev} -> {fx}");

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let (a, b) = (t / t_next, (t - 1.0) / t_next);
        for k in 0..len {
            y[k] = x[k] + a * (z[k] - x[k]) + b * (x[k] - x_prev[k]);
        }
        t = t_next;

        let decrease = f_prev - fx;
        if moved <= tol && decrease <= tol * f_prev.abs() {
            return (x, iterations, true);
        }
    }
    (x, iterations, false)
}

/// Entry terms of the objective written as `q_k(x) = w_k x² − 2 t_k x + κ_k`,
/// so that the dual's inner minimizer is `x_k(s) = clamp((t_k − s/2) / w_k)`.
struct DualEntries {
    weight: Vec<f64>,
    target: Vec<f64>,
    offset: Vec<f64>,
}

impl DualEntries {
    fn new(qp: &SoftQp) -> Self {
        let mut weight = vec![1.0; qp.c.len()];
        let mut target = qp.c.to_vec();
        let mut offset: Vec<f64> = qp.c.iter().map(|c| c * c).collect();
        for &k in &qp.ml {
            weight[k] += qp.w.lambda1;
        }
        for &k in &qp.cl {
            weight[k] += qp.w.lambda2;
            target[k] -= qp.w.lambda2;
            offset[k] += qp.w.lambda2;
        }
        DualEntries { weight, target, offset }
    }

    #[inline]
    fn term(&self, k: usize, x: f64) -> f64 {
        (self.weight[k] * x - 2.0 * self.target[k]) * x + self.offset[k]
    }

    #[inline]
    fn primal(&self, k: usize, s: f64) -> f64 {
        ((self.target[k] - 0.5 * s) / self.weight[k]).clamp(-1.0, 0.0)
    }
}

/// Dual of `min Σ q_k(x_k) + ½‖r‖²` with `r = B(x − c)`: maximize
/// `g(y) = Σ_k min_x [q_k(x) + (y_i + y_j)(x − c_k)] − ½‖y‖²`. `g` is
/// concave with gradient `B(x(y) − c) − y`; its generalized Hessian is
/// `−(B D Bᵀ + I)` with `D_k = 1/(2 w_k)` on unclamped entries.
fn dual_newton(qp: &SoftQp, tol: f64, max_iter: usize) -> (Vec<f64>, usize, bool) {
    let m = qp.m;
    let e = DualEntries::new(qp);
    let mut y = vec![0.0; m];
    let mut x = vec![0.0; qp.c.len()];
    let mut grad = vec![0.0; m];

    let value = |y: &[f64], x: &mut [f64]| -> f64 {
        let mut v = -0.5 * y.iter().map(|a| a * a).sum::<f64>();
        let mut k = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                let s = y[i] + y[j];
                let xk = e.primal(k, s);
                x[k] = xk;
                v += e.term(k, xk) + s * (xk - qp.c[k]);
                k += 1;
            }
        }
        v
    };

    let mut gy = value(&y, &mut x);
    let mut iterations = 0;
    loop {
        qp.row_residuals(&x, &mut grad);
        for (g, yi) in grad.iter_mut().zip(&y) {
            *g -= yi;
        }
        let err = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if err <= tol {
            return (x, iterations, true);
        }
        if iterations >= max_iter {
            return (x, iterations, false);
        }
        iterations += 1;

        let mut h = DMatrix::<f64>::identity(m, m);
        let mut k = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                let s = y[i] + y[j];
                let free = (e.target[k] - 0.5 * s) / e.weight[k];
                if free > -1.0 && free < 0.0 {
                    let d = 0.5 / e.weight[k];
                    h[(i, i)] += d;
                    h[(j, j)] += d;
                    h[(i, j)] += d;
                    h[(j, i)] += d;
                }
                k += 1;
            }
        }
        let rhs = DVector::from_column_slice(&grad);
        let dir = match h.cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => rhs.clone(),
        };
        let slope = dir.dot(&rhs);

        let mut step = 1.0;
        let mut trial = vec![0.0; m];
        let mut x_trial = vec![0.0; x.len()];
        loop {
            for i in 0..m {
                trial[i] = y[i] + step * dir[i];
            }
            let gt = value(&trial, &mut x_trial);
            if gt >= gy + 1e-4 * step * slope || step < 1e-12 {
                if gt >= gy {
                    y.copy_from_slice(&trial);
                    std::mem::swap(&mut x, &mut x_trial);
                    gy = gt;
                }
                break;
            }
            step *= 0.5;
        }
        if step < 1e-12 {
            // no further ascent is representable; x(y) is as good as it gets
            return (x, iterations, false);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{laplacian_from_distances, DistanceMatrix};

    const W1: PenaltyWeights = PenaltyWeights {
        lambda1: 1.0,
        lambda2: 1.0,
    };

    /// Scalar oracle: grid search for the minimizer of a 1-D function over
    /// [-1, 0], refined around the best grid point.
    fn grid_argmin(f: impl Fn(f64) -> f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let steps = 100_000;
        for s in 0..=steps {
            let x = -1.0 + s as f64 / steps as f64;
            let v = f(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        best.1
    }

    #[test]
    fn closed_form_matches_scalar_oracle() {
        assert_eq!(closed_form_entry(-0.4, false, false, &W1), -0.4);

        let oracle = grid_argmin(|x| 0.5 * (x + 0.6).powi(2) + 0.5 * x * x);
        assert!((oracle - -0.3).abs() < 1e-5);
        assert!((closed_form_entry(-0.6, true, false, &W1) - -0.3).abs() < 1e-15);

        let oracle = grid_argmin(|x| 0.5 * (x + 0.2).powi(2) + 0.5 * (x + 1.0).powi(2));
        assert!((oracle - -0.6).abs() < 1e-5);
        assert!((closed_form_entry(-0.2, false, true, &W1) - -0.6).abs() < 1e-15);

        assert_eq!(closed_form_entry(-1.0, false, true, &W1), -1.0);
    }

    fn lifted(ml: &[(usize, usize)], cl: &[(usize, usize)]) -> LiftedConstraints {
        LiftedConstraints {
            must_links: ml.to_vec(),
            cannot_links: cl.to_vec(),
            ..Default::default()
        }
    }

    #[test]
    fn closed_form_update_touches_only_constrained_entries() {
        let d = DistanceMatrix::from_condensed(3, vec![0.6, 0.2, 0.4]).unwrap();
        let lc = laplacian_from_distances(&d);
        let out = closed_form_update(&lc, &lifted(&[(0, 1)], &[(0, 2)]), &W1);
        assert!((out.get(0, 1) - -0.3).abs() < 1e-15);
        assert!((out.get(0, 2) - -0.6).abs() < 1e-15);
        assert_eq!(out.get(1, 2), -0.4);
    }

    #[test]
    fn qp_identity_without_constraints() {
        let d = DistanceMatrix::from_condensed(3, vec![0.6, 0.2, 0.4]).unwrap();
        let lc = laplacian_from_distances(&d);
        let sol = solve_soft_qp(&lc, &LiftedConstraints::default(), &W1, &QpOptions::default());
        assert_eq!(sol.laplacian, lc);
        assert_eq!(sol.objective, 0.0);
        assert!(sol.converged);
    }

    #[test]
    fn qp_two_nodes_must_link() {
        // One free variable x with objective (x + 0.5)² + x² + ½·2(x + 0.5)²
        // (the two diagonal residuals). Brute-force it.
        let f = |x: f64| 2.0 * (x + 0.5).powi(2) + x * x;
        let oracle = grid_argmin(f);
        let d = DistanceMatrix::from_condensed(2, vec![0.5]).unwrap();
        let lc = laplacian_from_distances(&d);
        let sol = solve_soft_qp(&lc, &lifted(&[(0, 1)], &[]), &W1, &QpOptions::default());
        assert!((sol.laplacian.get(0, 1) - oracle).abs() < 1e-5);
        // In the box relaxation the same instance gives the closed form.
        let opts = QpOptions {
            feasible: FeasibleSet::Box,
            tol: 1e-12,
            max_iter: None,
        };
        let sol = solve_soft_qp(&lc, &lifted(&[(0, 1)], &[]), &W1, &opts);
        assert!((sol.laplacian.get(0, 1) - -0.25).abs() < 1e-10);
        sol.laplacian.check_feasible(1e-12).unwrap();
    }

    #[test]
    fn lift_maps_and_counts() {
        // a=0, b=1, c=2, d=3
        let p = Partition::from_keys(&[0, 1, 2, 3]);
        let l = lift_constraints(&IndexedLayer::new([(0, 1)], []), &p);
        assert_eq!(l.must_links, vec![(0, 1)]);

        let p = Partition::from_keys(&[0, 0, 1]);
        let l = lift_constraints(&IndexedLayer::new([], [(0, 1)]), &p);
        assert!(l.cannot_links.is_empty());
        assert_eq!(l.violated_cl, 1);

        // {a,c} in s1, {b,d} in s2: ML(a,b) and CL(c,d) land on the same pair.
        let p = Partition::from_keys(&[0, 1, 0, 1]);
        let l = lift_constraints(&IndexedLayer::new([(0, 1)], [(2, 3)]), &p);
        assert!(l.must_links.is_empty() && l.cannot_links.is_empty());
        assert_eq!(l.conflicts, vec![(0, 1)]);
    }

    #[test]
    fn status_counts() {
        let layer = IndexedLayer::new([], [(0, 1), (2, 3)]);
        assert_eq!(constraint_status(&Partition::singletons(4), &layer), 1.0);
        let layer = IndexedLayer::new([(0, 1), (2, 3)], []);
        assert_eq!(constraint_status(&Partition::from_keys(&[0, 0, 0, 0]), &layer), 1.0);
        // partition {a,b},{c},{d}; ML (a,b) ok, (c,d) not; CL (a,c) ok.
        let layer = IndexedLayer::new([(0, 1), (2, 3)], [(0, 2)]);
        let p = Partition::from_keys(&[0, 0, 1, 2]);
        assert!((constraint_status(&p, &layer) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(constraint_status(&p, &IndexedLayer::default()), 1.0);
    }

    #[test]
    fn weights_validated() {
        assert!(PenaltyWeights::new(-1.0, 0.0).is_err());
        assert!(PenaltyWeights::new(f64::NAN, 0.0).is_err());
        assert!(PenaltyWeights::new(0.0, 2.0).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn closed_form_stays_in_box(c in -1.0f64..=0.0, ml: bool, cl: bool,
                                        l1 in 0.0f64..10.0, l2 in 0.0f64..10.0) {
                let w = PenaltyWeights { lambda1: l1, lambda2: l2 };
                let x = closed_form_entry(c, ml, cl, &w);
                prop_assert!((-1.0..=0.0).contains(&x));
                if !ml && !cl {
                    prop_assert_eq!(x.to_bits(), c.to_bits());
                }
            }

            #[test]
            fn laplacian_mode_meets_projected_gradient_optimality(
                    m in 2usize..24, seed: u64, l in prop::sample::select(vec![0.5, 1.0, 4.0])) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
                let len = m * (m - 1) / 2;
                let c: Vec<f64> = (0..len).map(|_| -rng.random::<f64>()).collect();
                let lc = LaplacianView::from_offdiag(m, c).unwrap();
                let mut cons = LiftedConstraints::default();
                for i in 0..m {
                    for j in (i + 1)..m {
                        match rng.random_range(0..5) {
                            0 => cons.must_links.push((i, j)),
                            1 => cons.cannot_links.push((i, j)),
                            _ => {}
                        }
                    }
                }
                let w = PenaltyWeights { lambda1: l, lambda2: l };
                let sol = solve_soft_qp(&lc, &cons, &w, &QpOptions::default());
                prop_assert!(sol.converged);
                sol.laplacian.check_feasible(1e-9).unwrap();
                // fixed point of the projected gradient map certifies optimality
                let qp = build_qp(&lc, &cons, &w, FeasibleSet::Laplacian);
                let x = sol.laplacian.offdiag();
                let (mut r, mut g) = (vec![0.0; m], vec![0.0; len]);
                qp.gradient(x, &mut r, &mut g);
                let step = 1.0 / qp.lipschitz();
                for k in 0..len {
                    let moved = (x[k] - step * g[k]).clamp(-1.0, 0.0) - x[k];
                    prop_assert!(moved.abs() < 1e-9, "entry {} moves by {}", k, moved);
                }
            }

            #[test]
            fn larger_lambda1_pulls_must_links_toward_zero(c in -1.0f64..=0.0,
                    l1 in 0.0f64..10.0, extra in 0.0f64..10.0, l2 in 0.0f64..5.0) {
                let a = closed_form_entry(c, true, false, &PenaltyWeights { lambda1: l1, lambda2: l2 });
                let b = closed_form_entry(c, true, false, &PenaltyWeights { lambda1: l1 + extra, lambda2: l2 });
                prop_assert!(b.abs() <= a.abs());
            }
        }
    }
}
