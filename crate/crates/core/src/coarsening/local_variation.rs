//! Edge-based local-variation coarsening on the affinity graph `w = 1 - d`.
//!
//! One pass scores every pair by how much contracting it would distort a
//! block of low-frequency test vectors, greedily contracts a matching of
//! cheapest pairs and returns the coarsened distance structure.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::model::{condensed_index, LaplacianView};

/// Number of non-trivial test vectors used to score contractions.
pub const TEST_VECTORS: usize = 10;

/// Above this size the eigenvectors come from Lanczos instead of a dense
/// symmetric eigensolver.
const DENSE_EIGEN_LIMIT: usize = 200;

/// Eigenvalues below this are treated as zero and their vectors ignored.
const NULL_EIGENVALUE: f64 = 1e-10;

/// Result of one coarsening pass.
#[derive(Debug, Clone)]
pub struct LocalVariationPass {
    /// Coarse node of every fine node; coarse ids follow the smallest fine
    /// member.
    pub contraction: Vec<usize>,
    /// Contracted pairs `(i, j)`, `i < j`, in the order they were chosen
    /// (ascending cost).
    pub pairs: Vec<(usize, usize)>,
    /// Cost of each contracted pair.
    pub costs: Vec<f64>,
    /// Coarse Laplacian: each entry is minus the size-weighted mean distance
    /// between the members of the two coarse nodes.
    pub coarse: LaplacianView,
    pub coarse_sizes: Vec<usize>,
}

/// Affinity `w_ij = 1 - d_ij = 1 + L_ij` and weighted degrees.
fn affinity(l: &LaplacianView) -> (DMatrix<f64>, Vec<f64>) {
    let m = l.n();
    let mut w = DMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            let a = 1.0 + l.offdiag()[k];
            w[(i, j)] = a;
            w[(j, i)] = a;
            k += 1;
        }
    }
    let deg = (0..m).map(|i| w.row(i).sum()).collect();
    (w, deg)
}

/// `A = U_K Λ_K^{-1/2}` over the `K` smallest non-zero eigenpairs of the
/// affinity Laplacian. Rows index nodes.
fn test_vectors(w: &DMatrix<f64>, deg: &[f64], k: usize, seed: u64) -> DMatrix<f64> {
    let m = deg.len();
    let mut lap = -w.clone();
    for i in 0..m {
        lap[(i, i)] = deg[i];
    }
    let want = (k + 1).min(m);
    let (values, vectors) = if m <= DENSE_EIGEN_LIMIT {
        smallest_dense(lap, want)
    } else {
        smallest_lanczos(&lap, deg, want, seed)
    };
    let mut a = DMatrix::zeros(m, values.len());
    for (c, &lam) in values.iter().enumerate() {
        if lam > NULL_EIGENVALUE {
            let s = 1.0 / lam.sqrt();
            for r in 0..m {
                a[(r, c)] = vectors[(r, c)] * s;
            }
        }
    }
    a
}

fn smallest_dense(lap: DMatrix<f64>, want: usize) -> (Vec<f64>, DMatrix<f64>) {
    let m = lap.nrows();
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let order = &order[..want];
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, want, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Lanczos with full reorthogonalization on `σI - L`, whose largest
/// eigenpairs are the smallest of `L`. `σ` is a Gershgorin bound.
fn smallest_lanczos(lap: &DMatrix<f64>, deg: &[f64], want: usize, seed: u64) -> (Vec<f64>, DMatrix<f64>) {
    let m = lap.nrows();
    let sigma = 2.0 * deg.iter().cloned().fold(0.0, f64::max) + 1.0;
    let steps = m.min((4 * want).max(60));
    let mut rng = StdRng::seed_from_u64(seed);
    let mut q = DMatrix::<f64>::zeros(m, steps);
    let mut v = nalgebra::DVector::from_fn(m, |_, _| rng.random::<f64>() - 0.5);
    v /= v.norm();
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut used = 0;
    for s in 0..steps {
        q.set_column(s, &v);
        used = s + 1;
        let mut u = &v * sigma - lap * &v;
        let a = v.dot(&u);
        alpha.push(a);
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for p in 0..used {
                let col = q.column(p);
                let c = col.dot(&u);
                u -= col * c;
            }
        }
        let b = u.norm();
        if s + 1 == steps || b < 1e-12 {
            break;
        }
        beta.push(b);
        v = u / b;
    }
    let mut t = DMatrix::<f64>::zeros(used, used);
    for i in 0..used {
        t[(i, i)] = alpha[i];
        if i + 1 < used {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..used).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let take = want.min(used);
    let basis = q.columns(0, used);
    let mut vectors = DMatrix::zeros(m, take);
    let mut values = Vec::with_capacity(take);
    for (c, &i) in order[..take].iter().enumerate() {
        let ritz = basis * eig.eigenvectors.column(i);
        vectors.set_column(c, &ritz);
        values.push((sigma - eig.eigenvalues[i]).max(0.0));
    }
    (values, vectors)
}

/// Cost of contracting `{i, j}`: `‖Bᵀ L_C B‖_F` with `L_C` the Laplacian of
/// the pair restricted to the contraction set (diagonal `2·deg − w`),
/// `B = Π⊥ A_C` and `Π⊥` the projector orthogonal to the constant vector.
///
/// With two rows, `Π⊥ A_C = ½(δ, −δ)` for `δ = a_i − a_j`, so the product is
/// `¼ δδᵀ (L_C[0,0] + L_C[1,1] − 2 L_C[0,1])` and its Frobenius norm is
/// `½ (deg_i + deg_j) ‖δ‖²`.
fn pair_cost(a: &DMatrix<f64>, deg: &[f64], i: usize, j: usize) -> f64 {
    let delta2: f64 = (0..a.ncols()).map(|c| (a[(i, c)] - a[(j, c)]).powi(2)).sum();
    0.5 * (deg[i] + deg[j]) * delta2
}

/// Every pair `(cost, i, j)` with `i < j`, sorted by cost and then by pair.
pub fn edge_costs(l: &LaplacianView, seed: u64) -> Vec<(f64, usize, usize)> {
    let m = l.n();
    let (w, deg) = affinity(l);
    let k = TEST_VECTORS.min(m.saturating_sub(1));
    let a = test_vectors(&w, &deg, k, seed);
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            out.push((pair_cost(&a, &deg, i, j), i, j));
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    out
}

/// Greedy matching: scan pairs in order and keep each one whose endpoints
/// are both still free, up to `⌊m/2⌋` pairs.
pub fn greedy_matching(m: usize, sorted: &[(f64, usize, usize)]) -> Vec<(f64, usize, usize)> {
    let mut taken = vec![false; m];
    let mut out = Vec::with_capacity(m / 2);
    for &(c, i, j) in sorted {
        if out.len() == m / 2 {
            break;
        }
        if !taken[i] && !taken[j] {
            taken[i] = true;
            taken[j] = true;
            out.push((c, i, j));
        }
    }
    out
}

/// One local-variation pass. `sizes[i]` is the number of original points
/// inside node `i`; it weights the coarse distances.
pub fn local_variation_pass(l: &LaplacianView, sizes: &[usize], seed: u64) -> Result<LocalVariationPass> {
    let m = l.n();
    if m < 2 {
        return Err(Error::validation("coarsening needs at least 2 nodes"));
    }
    if sizes.len() != m {
        return Err(Error::validation(format!("{} sizes for {m} nodes", sizes.len())));
    }
    let matching = greedy_matching(m, &edge_costs(l, seed));

    let mut partner = vec![usize::MAX; m];
    for &(_, i, j) in &matching {
        partner[i] = j;
        partner[j] = i;
    }
    let mut contraction = vec![usize::MAX; m];
    let mut next = 0;
    for i in 0..m {
        if contraction[i] == usize::MAX {
            contraction[i] = next;
            if partner[i] != usize::MAX {
                contraction[partner[i]] = next;
            }
            next += 1;
        }
    }

    let mc = next;
    let mut coarse_sizes = vec![0usize; mc];
    for i in 0..m {
        coarse_sizes[contraction[i]] += sizes[i];
    }
    Ok(LocalVariationPass {
        pairs: matching.iter().map(|&(_, i, j)| (i, j)).collect(),
        costs: matching.iter().map(|&(c, _, _)| c).collect(),
        coarse: contract(l, sizes, &contraction, mc)?,
        contraction,
        coarse_sizes,
    })
}

/// Coarse operator under `contraction` (fine node to coarse id in
/// `0..mc`): each coarse distance is the size-weighted mean of the fine
/// distances between the two groups.
pub fn contract(l: &LaplacianView, sizes: &[usize], contraction: &[usize], mc: usize) -> Result<LaplacianView> {
    let m = l.n();
    let mut coarse_sizes = vec![0usize; mc];
    for i in 0..m {
        coarse_sizes[contraction[i]] += sizes[i];
    }
    let mut sum = vec![0.0; mc * (mc.saturating_sub(1)) / 2];
    for i in 0..m {
        for j in (i + 1)..m {
            let (p, q) = (contraction[i], contraction[j]);
            if p == q {
                continue;
            }
            let (p, q) = if p < q { (p, q) } else { (q, p) };
            let d = -l.offdiag()[condensed_index(m, i, j)];
            sum[condensed_index(mc, p, q)] += (sizes[i] * sizes[j]) as f64 * d;
        }
    }
    let mut k = 0;
    for p in 0..mc {
        for q in (p + 1)..mc {
            let mean = sum[k] / (coarse_sizes[p] * coarse_sizes[q]) as f64;
            sum[k] = -mean.clamp(0.0, 1.0);
            k += 1;
        }
    }
    LaplacianView::from_offdiag(mc, sum)
}
