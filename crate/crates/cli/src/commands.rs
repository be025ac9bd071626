use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clues::cuts::extract_flat_hierarchy;
use clues::ingest::{self, CorpusConfig};
use clues::metrics::EvalReport;
use clues::pipeline::run_pipeline_with;
use clues::synth::{noise_sweep, planted_hierarchy, PlantedConfig};
use clues::{
    run_step1, ConstraintProgram, DataPointSet, Dendrogram, DistanceMatrix, Error, FlatHierarchy, IndexedConstraints,
    Step1Report,
};

use crate::args::{ClusterArgs, Command, CutArgs, EvalArgs, IngestArgs, ReplayArgs, RunArgs, Step1Args, SynthArgs};
use crate::output::{write_json, write_text, Report, RunManifest, Timing, TOOL};
use crate::{compare, Failure};

pub fn execute(command: Command) -> Result<(), Failure> {
    let command = command.absolutized().map_err(Error::Io)?;
    match &command {
        Command::Ingest(a) => run_ingest(&command, a),
        Command::Cluster(a) => run_cluster(&command, a),
        Command::Cut(a) => run_cut(&command, a),
        Command::Eval(a) => run_eval(&command, a),
        Command::Run(a) => run_full(&command, a),
        Command::Compare(a) => compare::run_compare(&command, a),
        Command::Synth(a) => run_synth(&command, a),
        Command::Replay(a) => run_replay(a),
    }
}

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

pub fn create_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

pub fn load_distances(path: &Path) -> Result<(DataPointSet, DistanceMatrix), Failure> {
    if !path.exists() {
        return Err(Failure::io(path, std::io::ErrorKind::NotFound.into()));
    }
    ingest::load_distance_csv(path).map_err(|e| Failure::in_file(path, e))
}

pub fn load_program(path: &Path) -> Result<ConstraintProgram, Failure> {
    ConstraintProgram::from_json(&read(path)?).map_err(|e| Failure::in_file(path, e))
}

/// Strict: unknown labels and contradictions are validation errors. No file
/// means no layers.
fn load_constraints(path: Option<&Path>, points: &DataPointSet) -> Result<IndexedConstraints, Failure> {
    match path {
        None => Ok(IndexedConstraints::empty(0)),
        Some(p) => load_program(p)?.resolve(points).map_err(|e| Failure::in_file(p, e)),
    }
}

fn step1_constraints(step1: &Step1Args, constraints: &IndexedConstraints) -> IndexedConstraints {
    if step1.unconstrained {
        IndexedConstraints::empty(constraints.layers.len())
    } else {
        constraints.clone()
    }
}

/// Only convergence problems count under `--fail-on-warning`.
fn finish(report: &Step1Report, fail_on_warning: bool) -> Result<(), Failure> {
    let warnings = report.warnings();
    for w in &warnings {
        log::warn!("{w}");
    }
    if fail_on_warning && !report.converged() {
        return Err(Failure::Warning(warnings));
    }
    Ok(())
}

fn outputs(dir: &Path, names: &[&str]) -> Vec<PathBuf> {
    names.iter().map(|n| dir.join(n)).collect()
}

fn run_ingest(command: &Command, a: &IngestArgs) -> Result<(), Failure> {
    let mut cfg = CorpusConfig {
        min_token_count: a.min_count,
        window: a.window,
        max_vocab: a.max_vocab,
        ..CorpusConfig::default()
    };
    if let Some(p) = &a.stopwords {
        cfg.stopwords = ingest::read_stopwords(p).map_err(|e| Failure::in_file(p, e))?;
    }
    let corpus = ingest::read_corpus(&a.corpus).map_err(|e| Failure::in_file(&a.corpus, e))?;
    let vocab = ingest::build_vocabulary(&corpus, &cfg)?;
    let d = ingest::cooccurrence_distance(&corpus, &vocab, &cfg)?;

    create_out(&a.out)?;
    let csv = a.out.join("distances.csv");
    ingest::save_distance_csv(&csv, &vocab, &d)?;
    write_text(&a.out.join("vocab.txt"), &vocab.labels().join("\n"))?;

    let mut m = RunManifest::new(command);
    m.corpus = Some(cfg);
    m.inputs = [Some(a.corpus.clone()), a.stopwords.clone()]
        .into_iter()
        .flatten()
        .collect();
    m.outputs = outputs(&a.out, &["distances.csv", "vocab.txt"]);
    m.write(&a.out)
}

fn run_cluster(command: &Command, a: &ClusterArgs) -> Result<(), Failure> {
    let (points, d) = load_distances(&a.distances)?;
    let constraints = load_constraints(a.constraints.as_deref(), &points)?;
    let cfg = a.step1.tuning.config(a.step1.method, d.n())?;
    let step1 = step1_constraints(&a.step1, &constraints);

    let start = Instant::now();
    let (dd, report) = run_step1(&d, &step1, &cfg)?;
    let wall_time = start.elapsed().as_secs_f64();

    create_out(&a.out)?;
    write_text(&a.out.join("dendrogram.json"), &dd.to_json(Some(&points)))?;
    write_text(&a.out.join("dendrogram.nwk"), &dd.to_newick(&points))?;
    write_json(&a.out.join("step1.json"), &report)?;
    write_json(&a.out.join("timing.json"), &Timing { wall_time })?;

    let mut m = RunManifest::new(command);
    m.seed = Some(cfg.seed);
    m.inputs = [Some(a.distances.clone()), a.constraints.clone()]
        .into_iter()
        .flatten()
        .collect();
    m.outputs = outputs(
        &a.out,
        &["dendrogram.json", "dendrogram.nwk", "step1.json", "timing.json"],
    );
    m.write(&a.out)?;
    finish(&report, a.step1.tuning.fail_on_warning)
}

fn placeholder_labels(n: usize) -> Result<DataPointSet, Failure> {
    Ok(DataPointSet::new((0..n).map(|i| i.to_string()).collect())?)
}

/// Labels stored in the dendrogram win; otherwise the distance CSV header;
/// otherwise the leaf indices.
fn dendrogram_with_labels(path: &Path, distances: Option<&Path>) -> Result<(Dendrogram, DataPointSet), Failure> {
    let (dd, labels) = Dendrogram::from_json(&read(path)?).map_err(|e| Failure::in_file(path, e))?;
    let points = match (labels, distances) {
        (Some(l), _) => DataPointSet::new(l)?,
        (None, Some(p)) => load_distances(p)?.0,
        (None, None) => placeholder_labels(dd.n())?,
    };
    if points.len() != dd.n() {
        return Err(Error::Validation(format!(
            "dendrogram has {} leaves but {} labels were supplied",
            dd.n(),
            points.len()
        ))
        .into());
    }
    Ok((dd, points))
}

fn run_cut(command: &Command, a: &CutArgs) -> Result<(), Failure> {
    let (dd, points) = dendrogram_with_labels(&a.dendrogram, a.distances.as_deref())?;
    let constraints = load_constraints(a.constraints.as_deref(), &points)?;

    let start = Instant::now();
    let (fh, cuts) = extract_flat_hierarchy(&dd, &constraints)?;
    let wall_time = start.elapsed().as_secs_f64();

    create_out(&a.out)?;
    write_text(&a.out.join("hierarchy.json"), &fh.to_json(&points))?;
    write_text(&a.out.join("hierarchy.txt"), &fh.render_text(&points))?;
    write_json(&a.out.join("cuts.json"), &cuts)?;
    write_json(&a.out.join("timing.json"), &Timing { wall_time })?;

    let mut m = RunManifest::new(command);
    m.inputs = [Some(a.dendrogram.clone()), a.constraints.clone(), a.distances.clone()]
        .into_iter()
        .flatten()
        .collect();
    m.outputs = outputs(&a.out, &["hierarchy.json", "hierarchy.txt", "cuts.json", "timing.json"]);
    m.write(&a.out)
}

fn run_eval(command: &Command, a: &EvalArgs) -> Result<(), Failure> {
    let (points, d) = load_distances(&a.distances)?;
    let (dd, _) = Dendrogram::from_json(&read(&a.dendrogram)?).map_err(|e| Failure::in_file(&a.dendrogram, e))?;
    if dd.n() != points.len() {
        return Err(Error::Validation(format!(
            "dendrogram has {} leaves but the distance matrix has {} points",
            dd.n(),
            points.len()
        ))
        .into());
    }
    let fh = FlatHierarchy::from_json(&read(&a.hierarchy)?, &points).map_err(|e| Failure::in_file(&a.hierarchy, e))?;
    let constraints = load_constraints(a.constraints.as_deref(), &points)?;
    let mut wall_time = 0.0;
    for t in &a.timing {
        wall_time += Timing::read(t)?.wall_time;
    }
    let report = EvalReport::new(&dd, &d, &fh, &constraints, wall_time, Vec::new());

    create_out(&a.out)?;
    let r = Report::from(&report);
    write_json(&a.out.join("report.json"), &r)?;
    write_text(&a.out.join("report.csv"), &r.to_csv())?;
    write_json(&a.out.join("timing.json"), &Timing { wall_time })?;

    let mut m = RunManifest::new(command);
    m.inputs = [a.dendrogram.clone(), a.hierarchy.clone(), a.distances.clone()]
        .into_iter()
        .chain(a.constraints.clone())
        .chain(a.timing.iter().cloned())
        .collect();
    m.outputs = outputs(&a.out, &["report.json", "report.csv", "timing.json"]);
    m.write(&a.out)
}

fn run_full(command: &Command, a: &RunArgs) -> Result<(), Failure> {
    let (points, d) = load_distances(&a.distances)?;
    let constraints = load_constraints(a.constraints.as_deref(), &points)?;
    let cfg = a.step1.tuning.config(a.step1.method, d.n())?;
    let step1 = step1_constraints(&a.step1, &constraints);

    let out = run_pipeline_with(&d, &step1, &constraints, &cfg)?;
    let report = out.evaluate(&d, &constraints);

    create_out(&a.out)?;
    let dir = &a.out;
    write_text(&dir.join("dendrogram.json"), &out.dendrogram.to_json(Some(&points)))?;
    write_text(&dir.join("dendrogram.nwk"), &out.dendrogram.to_newick(&points))?;
    write_json(&dir.join("step1.json"), &out.step1)?;
    write_text(&dir.join("hierarchy.json"), &out.hierarchy.to_json(&points))?;
    write_text(&dir.join("hierarchy.txt"), &out.hierarchy.render_text(&points))?;
    write_json(&dir.join("cuts.json"), &out.cuts)?;
    let r = Report::from(&report);
    write_json(&dir.join("report.json"), &r)?;
    write_text(&dir.join("report.csv"), &r.to_csv())?;
    write_json(
        &dir.join("timing.json"),
        &Timing {
            wall_time: report.wall_time,
        },
    )?;

    let mut m = RunManifest::new(command);
    m.seed = Some(cfg.seed);
    m.inputs = [Some(a.distances.clone()), a.constraints.clone()]
        .into_iter()
        .flatten()
        .collect();
    m.outputs = outputs(
        dir,
        &[
            "dendrogram.json",
            "dendrogram.nwk",
            "step1.json",
            "hierarchy.json",
            "hierarchy.txt",
            "cuts.json",
            "report.json",
            "report.csv",
            "timing.json",
        ],
    );
    m.write(dir)?;
    finish(&out.step1, a.step1.tuning.fail_on_warning)
}

fn run_synth(command: &Command, a: &SynthArgs) -> Result<(), Failure> {
    create_out(&a.out)?;
    let width = a.count.saturating_sub(1).to_string().len().max(2);
    let mut written = Vec::new();
    for (k, noise) in noise_sweep(a.noise_low, a.noise_high, a.count).into_iter().enumerate() {
        let cfg = PlantedConfig {
            n: a.n,
            top_clusters: a.top_clusters,
            subclusters_per_top: a.subclusters,
            noise,
            constraint_fraction: a.fraction,
            ..PlantedConfig::default()
        };
        let inst = planted_hierarchy(&cfg, a.seed + k as u64)?;
        let stem = format!("planted-{k:0width$}");
        let csv = a.out.join(format!("{stem}.csv"));
        ingest::save_distance_csv(&csv, &inst.points, &inst.distances)?;
        let cons = a.out.join(format!("{stem}.constraints.json"));
        write_text(&cons, &inst.constraints.to_program(&inst.points).to_json())?;
        written.extend([csv, cons]);
    }
    let mut m = RunManifest::new(command);
    m.seed = Some(a.seed);
    m.outputs = written;
    m.write(&a.out)
}

fn run_replay(a: &ReplayArgs) -> Result<(), Failure> {
    let text = read(&a.manifest)?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| Failure::in_file(&a.manifest, e.into()))?;
    if m.tool != TOOL {
        return Err(Error::Validation(format!("manifest was written by {:?}, not {TOOL}", m.tool)).into());
    }
    if m.version != env!("CARGO_PKG_VERSION") {
        log::warn!(
            "manifest was written by version {}; replaying with {}",
            m.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let command = match &a.out {
        Some(out) => m.invocation.with_out(out),
        None => m.invocation,
    };
    if matches!(command, Command::Replay(_)) {
        return Err(Error::Validation("a manifest cannot record a replay".into()).into());
    }
    execute(command)
}
