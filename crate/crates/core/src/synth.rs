//! Planted two-level hierarchies with ground-truth-consistent constraints.

use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{normalize_condensed, DataPointSet, DistanceMatrix, IndexedConstraints, IndexedLayer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedConfig {
    pub n: usize,
    pub top_clusters: usize,
    pub subclusters_per_top: usize,
    pub dim: usize,
    /// Standard deviation of top-cluster centres around the origin.
    pub top_spread: f64,
    /// Standard deviation of subcluster centres around their top centre.
    pub sub_spread: f64,
    /// Standard deviation of points around their subcluster centre.
    pub noise: f64,
    /// Fraction of all pairs sampled as constraints in each layer.
    pub constraint_fraction: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n: 128,
            top_clusters: 3,
            subclusters_per_top: 3,
            dim: 8,
            top_spread: 4.0,
            sub_spread: 1.5,
            noise: 0.5,
            constraint_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub points: DataPointSet,
    pub distances: DistanceMatrix,
    /// Layer 1 follows the subclusters, layer 2 the top clusters.
    pub constraints: IndexedConstraints,
    pub top_of: Vec<usize>,
    pub sub_of: Vec<usize>,
}

/// Points are assigned to subclusters round-robin; Euclidean distances are
/// normalized to `[0, 1]`. Each layer samples its own set of pairs; a pair
/// is a must-link when both points share the layer's ground-truth cluster
/// and a cannot-link otherwise.
pub fn planted_hierarchy(cfg: &PlantedConfig, seed: u64) -> Result<PlantedInstance> {
    let k = cfg.top_clusters * cfg.subclusters_per_top;
    if cfg.n < 2 || k == 0 || cfg.dim == 0 {
        return Err(Error::validation(
            "planted instance needs n >= 2 and at least one cluster",
        ));
    }
    if !(0.0..=1.0).contains(&cfg.constraint_fraction) {
        return Err(Error::validation("constraint fraction must lie in [0, 1]"));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut gauss = |scale: f64, centre: &[f64]| -> Vec<f64> {
        centre
            .iter()
            .map(|c| {
                let z: f64 = StandardNormal.sample(&mut rng);
                c + scale * z
            })
            .collect()
    };
    let origin = vec![0.0; cfg.dim];
    let tops: Vec<Vec<f64>> = (0..cfg.top_clusters).map(|_| gauss(cfg.top_spread, &origin)).collect();
    let subs: Vec<Vec<f64>> = (0..k)
        .map(|s| gauss(cfg.sub_spread, &tops[s / cfg.subclusters_per_top]))
        .collect();
    let sub_of: Vec<usize> = (0..cfg.n).map(|i| i % k).collect();
    let top_of: Vec<usize> = sub_of.iter().map(|s| s / cfg.subclusters_per_top).collect();
    let xs: Vec<Vec<f64>> = sub_of.iter().map(|&s| gauss(cfg.noise, &subs[s])).collect();

    let n = cfg.n;
    let mut data = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            data.push(d2.sqrt());
        }
    }
    let distances = normalize_condensed(n, data)?;

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let count = (cfg.constraint_fraction * pairs.len() as f64).round() as usize;
    let mut layers = Vec::with_capacity(2);
    for truth in [&sub_of, &top_of] {
        let mut picked: Vec<usize> = sample(&mut rng, pairs.len(), count).into_vec();
        picked.sort_unstable();
        let (ml, cl): (Vec<(usize, usize)>, Vec<(usize, usize)>) = picked
            .iter()
            .map(|&p| pairs[p])
            .partition(|&(a, b)| truth[a] == truth[b]);
        layers.push(IndexedLayer::new(ml, cl));
    }

    let width = (n - 1).to_string().len();
    let labels = (0..n).map(|i| format!("p{i:0width$}")).collect();
    Ok(PlantedInstance {
        points: DataPointSet::new(labels)?,
        distances,
        constraints: IndexedConstraints { layers },
        top_of,
        sub_of,
    })
}

/// `count` evenly spaced noise levels on `[low, high]`.
pub fn noise_sweep(low: f64, high: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![low],
        _ => (0..count)
            .map(|k| low + (high - low) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}
