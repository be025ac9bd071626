//! Command-line surface. Every argument struct is also the serialized form
//! of its invocation inside `manifest.json`, so a manifest replays exactly.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use clues::{CoarseningConfig, CoarseningMethod, FeasibleSet, LinkageMethod, LoopGuard, PenaltyWeights, QpOptions};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "clues",
    version,
    about = "Soft-constrained hierarchical clustering with layered pairwise constraints"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build a co-occurrence distance matrix and vocabulary from a corpus.
    Ingest(IngestArgs),
    /// Step I: coarsen a distance matrix into a dendrogram.
    Cluster(ClusterArgs),
    /// Step II: cut a dendrogram once per constraint layer.
    Cut(CutArgs),
    /// Score a dendrogram and flat hierarchy.
    Eval(EvalArgs),
    /// Step I, Step II and evaluation in one go.
    Run(RunArgs),
    /// Both engines, constrained and unconstrained, over a directory of datasets.
    Compare(CompareArgs),
    /// Write planted two-level datasets with ground-truth constraints.
    Synth(SynthArgs),
    /// Re-execute the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    /// Paths made absolute so that a manifest does not depend on the working
    /// directory it was written from.
    pub fn absolutized(mut self) -> std::io::Result<Self> {
        fn abs(p: &mut PathBuf) -> std::io::Result<()> {
            *p = std::path::absolute(&*p)?;
            Ok(())
        }
        fn abs_opt(p: &mut Option<PathBuf>) -> std::io::Result<()> {
            p.as_mut().map_or(Ok(()), abs)
        }
        match &mut self {
            Command::Ingest(a) => {
                abs(&mut a.corpus)?;
                abs_opt(&mut a.stopwords)?;
                abs(&mut a.out)?;
            }
            Command::Cluster(a) => {
                abs(&mut a.distances)?;
                abs_opt(&mut a.constraints)?;
                abs(&mut a.out)?;
            }
            Command::Cut(a) => {
                abs(&mut a.dendrogram)?;
                abs_opt(&mut a.constraints)?;
                abs_opt(&mut a.distances)?;
                abs(&mut a.out)?;
            }
            Command::Eval(a) => {
                abs(&mut a.dendrogram)?;
                abs(&mut a.hierarchy)?;
                abs(&mut a.distances)?;
                abs_opt(&mut a.constraints)?;
                for t in &mut a.timing {
                    abs(t)?;
                }
                abs(&mut a.out)?;
            }
            Command::Run(a) => {
                abs(&mut a.distances)?;
                abs_opt(&mut a.constraints)?;
                abs(&mut a.out)?;
            }
            Command::Compare(a) => {
                abs(&mut a.datasets)?;
                abs_opt(&mut a.constraints)?;
                abs_opt(&mut a.stopwords)?;
                abs(&mut a.out)?;
            }
            Command::Synth(a) => abs(&mut a.out)?,
            Command::Replay(a) => {
                abs(&mut a.manifest)?;
                abs_opt(&mut a.out)?;
            }
        }
        Ok(self)
    }

    pub fn with_out(mut self, out: &Path) -> Self {
        let slot = match &mut self {
            Command::Ingest(a) => &mut a.out,
            Command::Cluster(a) => &mut a.out,
            Command::Cut(a) => &mut a.out,
            Command::Eval(a) => &mut a.out,
            Command::Run(a) => &mut a.out,
            Command::Compare(a) => &mut a.out,
            Command::Synth(a) => &mut a.out,
            Command::Replay(a) => return Command::Replay(a.clone()),
        };
        *slot = out.to_path_buf();
        self
    }
}

/// Settings shared by both coarsening engines.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningArgs {
    /// Linkage of the bottom-up engine.
    #[arg(long, default_value = "average")]
    pub linkage: LinkageMethod,
    /// Must-link penalty weight.
    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,
    /// Cannot-link penalty weight.
    #[arg(long, default_value_t = 1.0)]
    pub lambda2: f64,
    /// Merges (bottom-up) or passes (local variation) per layer; defaults to
    /// the number of points.
    #[arg(long)]
    pub imax: Option<usize>,
    /// A layer stops coarsening once the loop guard reaches this fraction.
    #[arg(long, default_value_t = 0.75)]
    pub threshold: f64,
    /// What the threshold is measured on.
    #[arg(long, default_value = "must-links")]
    pub guard: LoopGuard,
    /// Feasible set of the local-variation constraint solve.
    #[arg(long, default_value = "laplacian")]
    pub feasible: FeasibleSet,
    /// Seeds the local-variation eigensolver.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exit with code 4 when a layer hits i_max or a solve hits its
    /// iteration cap.
    #[arg(long)]
    pub fail_on_warning: bool,
}

impl TuningArgs {
    pub fn config(&self, method: CoarseningMethod, n: usize) -> clues::Result<CoarseningConfig> {
        let cfg = CoarseningConfig {
            method,
            linkage: self.linkage,
            weights: PenaltyWeights::new(self.lambda1, self.lambda2)?,
            i_max: self.imax.unwrap_or(n.max(1)),
            threshold: self.threshold,
            guard: self.guard,
            seed: self.seed,
            qp: QpOptions {
                feasible: self.feasible,
                ..QpOptions::default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step1Args {
    /// Coarsening engine.
    #[arg(long, default_value = "bottom-up")]
    pub method: CoarseningMethod,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Coarsen without constraints; they still drive the cuts.
    #[arg(long)]
    pub unconstrained: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestArgs {
    /// Text file, one document per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// File of stopwords, one per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Tokens at most this far apart co-occur.
    #[arg(long, default_value_t = 4)]
    pub window: usize,
    /// Drop tokens seen fewer times than this.
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    /// Keep at most this many of the most frequent tokens.
    #[arg(long, default_value_t = 500)]
    pub max_vocab: usize,
    /// Output directory for distances.csv, vocab.txt and manifest.json.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArgs {
    /// Distance CSV: a header of labels, then one row per point.
    #[arg(long)]
    pub distances: PathBuf,
    /// Layered constraints JSON; without it the run is unconstrained.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[command(flatten)]
    pub step1: Step1Args,
    /// Output directory for dendrogram.json, dendrogram.nwk, step1.json,
    /// timing.json and manifest.json.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutArgs {
    /// Dendrogram JSON written by `cluster` or `run`.
    #[arg(long)]
    pub dendrogram: PathBuf,
    /// Layered constraints JSON; one cut per layer.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Distance CSV, read only for its labels when the dendrogram has none.
    #[arg(long)]
    pub distances: Option<PathBuf>,
    /// Output directory for hierarchy.json, hierarchy.txt, cuts.json,
    /// timing.json and manifest.json.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Dendrogram JSON written by `cluster` or `run`.
    #[arg(long)]
    pub dendrogram: PathBuf,
    /// Flat hierarchy JSON written by `cut` or `run`.
    #[arg(long)]
    pub hierarchy: PathBuf,
    /// Distance CSV the cost is measured against.
    #[arg(long)]
    pub distances: PathBuf,
    /// Layered constraints JSON the violations are counted against.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// timing.json files whose seconds are summed into the wall time.
    #[arg(long)]
    pub timing: Vec<PathBuf>,
    /// Output directory for report.json, report.csv, timing.json and
    /// manifest.json.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArgs {
    /// Distance CSV: a header of labels, then one row per point.
    #[arg(long)]
    pub distances: PathBuf,
    /// Layered constraints JSON; without it the run is unconstrained.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[command(flatten)]
    pub step1: Step1Args,
    /// Output directory for every artifact of cluster, cut and eval.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Directory of distance CSVs (`*.csv`) and corpora (`*.txt`). A file
    /// `<stem>.constraints.json` next to a dataset overrides `--constraints`.
    #[arg(long)]
    pub datasets: PathBuf,
    /// Constraints used for datasets without their own file.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Stopwords applied when ingesting corpora.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Output directory for comparison.csv and manifest.json.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Number of datasets; dataset k uses seed `seed + k`.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Points per dataset.
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub top_clusters: usize,
    #[arg(long, default_value_t = 3)]
    pub subclusters: usize,
    /// Noise of the first dataset.
    #[arg(long, default_value_t = 1.0)]
    pub noise_low: f64,
    /// Noise of the last dataset.
    #[arg(long, default_value_t = 2.0)]
    pub noise_high: f64,
    /// Fraction of all pairs sampled as constraints per layer.
    #[arg(long, default_value_t = 0.1)]
    pub fraction: f64,
    /// Seed of the first dataset.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for planted-*.csv, planted-*.constraints.json and
    /// manifest.json.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A manifest.json written by any other command.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the outputs here instead of the recorded directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
