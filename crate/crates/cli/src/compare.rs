//! Constrained against unconstrained, for both engines, over a directory of
//! datasets. Datasets run concurrently; rows come out in file-name order.

use std::fs;
use std::path::{Path, PathBuf};

use clues::ingest::{self, CorpusConfig};
use clues::metrics::{normalize_times, write_comparison_csv, ComparisonRow};
use clues::pipeline::{run_pipeline, run_unconstrained};
use clues::{CoarseningMethod, ConstraintProgram, DataPointSet, DistanceMatrix, Error};
use rayon::prelude::*;

use crate::args::{Command, CompareArgs};
use crate::commands::{create_out, load_distances, load_program};
use crate::output::RunManifest;
use crate::Failure;

/// Upper bound on worker threads; unset or 0 means one per core.
pub const THREADS_VAR: &str = "CLUES_THREADS";

const METHODS: [CoarseningMethod; 2] = [CoarseningMethod::BottomUp, CoarseningMethod::LocalVariation];

fn is_dataset(p: &Path) -> bool {
    p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "txt"))
}

fn dataset_name(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn list_datasets(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Failure::io(dir, e))?.path();
        if is_dataset(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn load_dataset(path: &Path, corpus: &CorpusConfig) -> Result<(DataPointSet, DistanceMatrix), Failure> {
    if path.extension().and_then(|e| e.to_str()) == Some("txt") {
        let docs = ingest::read_corpus(path).map_err(|e| Failure::in_file(path, e))?;
        let vocab = ingest::build_vocabulary(&docs, corpus).map_err(|e| Failure::in_file(path, e))?;
        let d = ingest::cooccurrence_distance(&docs, &vocab, corpus)?;
        Ok((vocab, d))
    } else {
        load_distances(path)
    }
}

fn compare_one(
    path: &Path,
    a: &CompareArgs,
    global: &ConstraintProgram,
    corpus: &CorpusConfig,
) -> Result<Vec<ComparisonRow>, Failure> {
    let name = dataset_name(path);
    let (points, d) = load_dataset(path, corpus)?;
    let own = path.with_file_name(format!("{name}.constraints.json"));
    let program = if own.is_file() {
        load_program(&own)?
    } else {
        global.clone()
    };
    let (constraints, dropped) = program.resolve_lenient(&points);
    if dropped > 0 {
        log::warn!("{name}: {dropped} constrained pairs name unknown labels and were dropped");
    }
    let mut rows = Vec::with_capacity(4);
    for method in METHODS {
        let cfg = a.tuning.config(method, d.n())?;
        let runs = [
            (true, run_pipeline(&d, &constraints, &cfg)?),
            (false, run_unconstrained(&d, &constraints, &cfg)?),
        ];
        for (constrained, out) in runs {
            let r = out.evaluate(&d, &constraints);
            for w in &r.warnings {
                log::warn!("{name} ({method}, constrained = {constrained}): {w}");
            }
            rows.push(ComparisonRow {
                dataset: name.clone(),
                method: method.to_string(),
                constrained,
                dasgupta_cost: r.dasgupta_cost,
                violation_rate: r.violation_rate,
                wall_time: r.wall_time,
                normalized_time: 0.0,
            });
        }
    }
    Ok(rows)
}

fn thread_count() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("{THREADS_VAR} must be a nonnegative integer, got {v:?}")).into()),
    }
}

pub fn run_compare(command: &Command, a: &CompareArgs) -> Result<(), Failure> {
    let datasets = list_datasets(&a.datasets)?;
    if datasets.is_empty() {
        return Err(Error::Empty(format!("no *.csv or *.txt datasets in {}", a.datasets.display())).into());
    }
    let global = match &a.constraints {
        Some(p) => load_program(p)?,
        None => ConstraintProgram::default(),
    };
    let mut corpus = CorpusConfig::default();
    if let Some(p) = &a.stopwords {
        corpus.stopwords = ingest::read_stopwords(p).map_err(|e| Failure::in_file(p, e))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Failure::Other(e.to_string()))?;
    let per_dataset: Vec<Vec<ComparisonRow>> = pool.install(|| {
        datasets
            .par_iter()
            .map(|p| {
                compare_one(p, a, &global, &corpus).unwrap_or_else(|e| {
                    log::error!("{}: skipped: {e}", p.display());
                    Vec::new()
                })
            })
            .collect()
    });
    let mut rows: Vec<ComparisonRow> = per_dataset.into_iter().flatten().collect();
    normalize_times(&mut rows);

    create_out(&a.out)?;
    let csv = a.out.join("comparison.csv");
    let file = fs::File::create(&csv).map_err(|e| Failure::io(&csv, e))?;
    write_comparison_csv(file, &rows)?;

    let mut m = RunManifest::new(command);
    m.seed = Some(a.tuning.seed);
    m.corpus = Some(corpus);
    m.inputs = datasets
        .into_iter()
        .chain(a.constraints.clone())
        .chain(a.stopwords.clone())
        .collect();
    m.outputs = vec![csv];
    m.write(&a.out)
}
