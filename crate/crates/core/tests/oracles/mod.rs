//! Slow, direct reference implementations used to cross-check the library.
#![allow(dead_code)]

use clues::{Dendrogram, DistanceMatrix, LinkageMethod};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Euclidean distances of `n` uniform points in the unit cube of `dim`
/// dimensions, scaled so the largest is 1.
pub fn random_euclidean(n: usize, dim: usize, seed: u64) -> DistanceMatrix {
    let mut rng = StdRng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut data = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            data.push(s.sqrt());
        }
    }
    let max = data.iter().cloned().fold(0.0, f64::max);
    DistanceMatrix::from_condensed(n, data.into_iter().map(|x| x / max).collect()).unwrap()
}

/// Agglomerative clustering that recomputes every cluster distance from
/// the member points at every step. Weighted linkage has no member-level
/// definition, so it keeps the pairwise table and averages the two parent
/// rows. Returns merge heights in merge order.
pub fn naive_linkage_heights(d: &DistanceMatrix, method: LinkageMethod) -> Vec<f64> {
    let n = d.n();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut wpgma: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d.get(i, j)).collect()).collect();
    let mut heights = Vec::with_capacity(n - 1);
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let v = match method {
                    LinkageMethod::Weighted => wpgma[a][b],
                    _ => cluster_distance(d, &clusters[a], &clusters[b], method),
                };
                if v < best.0 {
                    best = (v, a, b);
                }
            }
        }
        let (h, a, b) = best;
        heights.push(h);
        let merged_row: Vec<f64> = (0..clusters.len()).map(|x| 0.5 * (wpgma[a][x] + wpgma[b][x])).collect();
        for x in 0..clusters.len() {
            wpgma[a][x] = merged_row[x];
            wpgma[x][a] = merged_row[x];
        }
        wpgma[a][a] = 0.0;
        wpgma.remove(b);
        for row in &mut wpgma {
            row.remove(b);
        }
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
    }
    heights
}

fn cluster_distance(d: &DistanceMatrix, a: &[usize], b: &[usize], method: LinkageMethod) -> f64 {
    let cross = || a.iter().flat_map(|&i| b.iter().map(move |&j| d.get(i, j)));
    match method {
        LinkageMethod::Single => cross().fold(f64::INFINITY, f64::min),
        LinkageMethod::Complete => cross().fold(0.0, f64::max),
        LinkageMethod::Average => cross().sum::<f64>() / (a.len() * b.len()) as f64,
        LinkageMethod::Ward => {
            // 2|A||B|/(|A|+|B|) · ‖c_A − c_B‖², with the centroid gap
            // written through squared distances only
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let sq = |xs: &[usize], ys: &[usize]| -> f64 {
                xs.iter()
                    .flat_map(|&i| ys.iter().map(move |&j| d.get(i, j).powi(2)))
                    .sum()
            };
            let gap = sq(a, b) / (na * nb) - sq(a, a) / (2.0 * na * na) - sq(b, b) / (2.0 * nb * nb);
            (2.0 * na * nb / (na + nb) * gap).max(0.0).sqrt()
        }
        LinkageMethod::Weighted => unreachable!("weighted linkage is table-driven"),
    }
}

/// Rooted binary tree over leaf ids.
#[derive(Debug, Clone)]
pub enum Tree {
    Leaf(usize),
    Node(Box<Tree>, Box<Tree>),
}

impl Tree {
    pub fn leaves(&self) -> Vec<usize> {
        match self {
            Tree::Leaf(x) => vec![*x],
            Tree::Node(l, r) => {
                let mut v = l.leaves();
                v.extend(r.leaves());
                v
            }
        }
    }

    fn edges(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node(l, r) => 1 + l.edges() + r.edges(),
        }
    }

    /// Graft `leaf` above the `k`-th node in pre-order.
    fn graft(&self, k: &mut usize, leaf: usize) -> Tree {
        if *k == 0 {
            *k = usize::MAX;
            return Tree::Node(Box::new(self.clone()), Box::new(Tree::Leaf(leaf)));
        }
        *k = k.wrapping_sub(1);
        match self {
            Tree::Leaf(x) => Tree::Leaf(*x),
            Tree::Node(l, r) => {
                let l2 = l.graft(k, leaf);
                let r2 = r.graft(k, leaf);
                Tree::Node(Box::new(l2), Box::new(r2))
            }
        }
    }

    /// Merge list in post-order; heights count merges so they increase.
    pub fn to_dendrogram(&self, n: usize) -> Dendrogram {
        fn walk(t: &Tree, n: usize, steps: &mut Vec<(usize, usize, f64)>) -> usize {
            match t {
                Tree::Leaf(x) => *x,
                Tree::Node(l, r) => {
                    let a = walk(l, n, steps);
                    let b = walk(r, n, steps);
                    steps.push((a.min(b), a.max(b), steps.len() as f64 + 1.0));
                    n + steps.len() - 1
                }
            }
        }
        let mut steps = Vec::new();
        walk(self, n, &mut steps);
        Dendrogram::from_steps(n, &steps).unwrap()
    }
}

/// Every rooted binary tree on leaves `0..n`, `(2n − 3)!!` of them.
pub fn all_trees(n: usize) -> Vec<Tree> {
    let mut trees = vec![Tree::Leaf(0)];
    for leaf in 1..n {
        let mut next = Vec::new();
        for t in &trees {
            for k in 0..t.edges() {
                let mut pos = k;
                next.push(t.graft(&mut pos, leaf));
            }
        }
        trees = next;
    }
    trees
}

/// Dasgupta cost from the definition: for each pair, descend from the root
/// to the smallest subtree holding both and count its leaves.
pub fn dasgupta_by_lca(t: &Tree, d: &DistanceMatrix) -> f64 {
    let n = d.n();
    let mut cost = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut node = t;
            loop {
                match node {
                    Tree::Node(l, r) => {
                        let ll = l.leaves();
                        let (li, lj) = (ll.contains(&i), ll.contains(&j));
                        if li && lj {
                            node = l;
                        } else if !li && !lj {
                            node = r;
                        } else {
                            break;
                        }
                    }
                    Tree::Leaf(_) => unreachable!("two leaves never share a leaf"),
                }
            }
            cost += (1.0 - d.get(i, j)) * node.leaves().len() as f64;
        }
    }
    cost
}

/// Entry-wise coordinate descent on the full (row-coupled) objective
/// `Σ_k (x_k − c_k)² + λ1 Σ_ML x_k² + λ2 Σ_CL (x_k + 1)² + ½ Σ_i r_i²`,
/// `r_i` the row sum of `x − c`, each coordinate minimized exactly over
/// `[-1, 0]`. Pass `coupled = false` to drop the row term.
pub fn coordinate_descent_qp(
    m: usize,
    c: &[f64],
    ml: &[(usize, usize)],
    cl: &[(usize, usize)],
    l1: f64,
    l2: f64,
    coupled: bool,
) -> Vec<Vec<f64>> {
    let mut x = vec![vec![0.0; m]; m];
    let mut cc = vec![vec![0.0; m]; m];
    let mut k = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            cc[i][j] = c[k];
            cc[j][i] = c[k];
            x[i][j] = c[k].clamp(-1.0, 0.0);
            x[j][i] = x[i][j];
            k += 1;
        }
    }
    let has = |set: &[(usize, usize)], i: usize, j: usize| set.contains(&(i, j));
    for _sweep in 0..200_000 {
        let mut moved = 0.0f64;
        for i in 0..m {
            for j in (i + 1)..m {
                let row = |r: usize, x: &Vec<Vec<f64>>| -> f64 {
                    (0..m).filter(|&q| q != r).map(|q| x[r][q] - cc[r][q]).sum()
                };
                let (a1, a2) = (
                    if has(ml, i, j) { l1 } else { 0.0 },
                    if has(cl, i, j) { l2 } else { 0.0 },
                );
                let cur = x[i][j];
                let mut grad = 2.0 * (cur - cc[i][j]) + 2.0 * a1 * cur + 2.0 * a2 * (cur + 1.0);
                let mut curv = 2.0 * (1.0 + a1 + a2);
                if coupled {
                    grad += row(i, &x) + row(j, &x);
                    curv += 2.0;
                }
                let next = (cur - grad / curv).clamp(-1.0, 0.0);
                moved = moved.max((next - cur).abs());
                x[i][j] = next;
                x[j][i] = next;
            }
        }
        if moved < 1e-14 {
            break;
        }
    }
    x
}

/// Objective of a flat cut, evaluated on a regular grid of `step` over
/// `[0, top]`: `(argmin, min)`.
pub fn grid_cut(intervals: &[(f64, f64)], top: f64, step: f64) -> (f64, f64) {
    let steps = (top / step).ceil() as usize;
    let mut best = (0.0, f64::INFINITY);
    for s in 0..=steps {
        let h = s as f64 * step;
        let v: f64 = intervals.iter().map(|&(lo, hi)| (h - h.clamp(lo, hi)).abs()).sum();
        if v < best.1 {
            best = (h, v);
        }
    }
    best
}
