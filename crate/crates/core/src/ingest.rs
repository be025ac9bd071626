//! Corpus ingestion (vocabulary, PPMI co-occurrence distances) and the
//! distance-matrix CSV format.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_condensed, DataPointSet, DistanceMatrix, SYMMETRY_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub min_token_count: usize,
    pub stopwords: BTreeSet<String>,
    /// Tokens at most this far apart co-occur.
    pub window: usize,
    pub max_vocab: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_token_count: 1,
            stopwords: BTreeSet::new(),
            window: 4,
            max_vocab: 500,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::validation("window must be at least 1"));
        }
        if self.max_vocab < 2 {
            return Err(Error::validation("max_vocab must be at least 2"));
        }
        Ok(())
    }
}

/// Lowercase, drop every character that is neither alphanumeric nor
/// whitespace, split on whitespace.
pub fn tokenize(doc: &str) -> Vec<String> {
    let cleaned: String = doc
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Tokens surviving the stopword and count filters, the `max_vocab` most
/// frequent kept (ties alphabetical), returned in alphabetical order.
pub fn build_vocabulary(corpus: &[String], cfg: &CorpusConfig) -> Result<DataPointSet> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::Empty("corpus has no documents".into()));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        for t in tokenize(doc) {
            if !cfg.stopwords.contains(&t) {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut kept: Vec<(String, usize)> = counts.into_iter().filter(|&(_, c)| c >= cfg.min_token_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    kept.truncate(cfg.max_vocab);
    let mut labels: Vec<String> = kept.into_iter().map(|(t, _)| t).collect();
    labels.sort();
    if labels.len() < 2 {
        return Err(Error::degenerate(format!(
            "vocabulary has {} token(s) after filtering; at least 2 are needed",
            labels.len()
        )));
    }
    DataPointSet::new(labels)
}

/// Symmetric co-occurrence counts of vocabulary tokens within `window`
/// positions of each other, on each document's stream of vocabulary tokens.
pub fn cooccurrence_counts(corpus: &[String], vocab: &DataPointSet, window: usize) -> Vec<Vec<f64>> {
    let v = vocab.len();
    let mut c = vec![vec![0.0; v]; v];
    for doc in corpus {
        let ids: Vec<usize> = tokenize(doc).iter().filter_map(|t| vocab.position(t)).collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(i + 1).take(window) {
                c[a][b] += 1.0;
                c[b][a] += 1.0;
            }
        }
    }
    c
}

/// `max(0, ln(c_ab · N / (r_a · r_b)))` with `r` the row sums and `N` the
/// grand total; zero counts map to 0.
pub fn ppmi(counts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
    let total: f64 = rows.iter().sum();
    counts
        .iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(b, &c)| {
                    if c > 0.0 {
                        (c * total / (rows[a] * rows[b])).ln().max(0.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// PPMI vectors compared by cosine distance, then normalized. A token whose
/// vector is all zero is at distance 1 from every other token.
pub fn cooccurrence_distance(corpus: &[String], vocab: &DataPointSet, cfg: &CorpusConfig) -> Result<DistanceMatrix> {
    cfg.validate()?;
    let vectors = ppmi(&cooccurrence_counts(corpus, vocab, cfg.window));
    let norms: Vec<f64> = vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let n = vocab.len();
    let mut data = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = if norms[i] == 0.0 || norms[j] == 0.0 {
                1.0
            } else {
                let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
                (1.0 - dot / (norms[i] * norms[j])).clamp(0.0, 1.0)
            };
            data.push(d);
        }
    }
    normalize_condensed(n, data)
}

/// One document per non-blank line.
pub fn read_corpus(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_owned)
        .collect())
}

/// One stopword per non-blank line, lowercased.
pub fn read_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

/// Header row of labels, then one row per point. Values are kept when they
/// already lie in `[0, 1]` and divided by the maximum otherwise.
pub fn read_distance_csv<R: Read>(input: R) -> Result<(DataPointSet, DistanceMatrix)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(|e| Error::parse(format!("line 1: {e}")))?.clone();
    let labels: Vec<String> = header.iter().map(str::to_owned).collect();
    let n = labels.len();
    let mut seen = BTreeSet::new();
    for l in &labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::parse(format!("line 1: duplicate label {l:?}")));
        }
    }
    let points = DataPointSet::new(labels).map_err(|e| Error::parse(format!("line 1: {e}")))?;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(format!("{e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != n {
            return Err(Error::parse(format!(
                "line {line}: expected {n} values, found {}",
                rec.len()
            )));
        }
        let row =
            rec.iter()
                .enumerate()
                .map(|(c, s)| {
                    s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                        Error::parse(format!("line {line}, column {}: not a finite number: {s:?}", c + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::parse(format!(
            "expected {n} rows after the header, found {}",
            rows.len()
        )));
    }
    let label = |i: usize| points.label(i).to_owned();
    let mut data = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        if rows[i][i].abs() > SYMMETRY_TOL {
            return Err(Error::parse(format!(
                "line {}: diagonal entry {} is not zero",
                i + 2,
                label(i)
            )));
        }
        for j in (i + 1)..n {
            let (a, b) = (rows[i][j], rows[j][i]);
            if (a - b).abs() > SYMMETRY_TOL {
                return Err(Error::parse(format!(
                    "line {}: cell ({}, {}) = {a} but ({}, {}) = {b}",
                    i + 2,
                    label(i),
                    label(j),
                    label(j),
                    label(i)
                )));
            }
            if a < 0.0 {
                return Err(Error::parse(format!("line {}: negative distance {a}", i + 2)));
            }
            data.push(a);
        }
    }
    let max = data.iter().cloned().fold(0.0, f64::max);
    let d = if max > 1.0 {
        normalize_condensed(n, data)?
    } else {
        DistanceMatrix::from_condensed(n, data)?
    };
    Ok((points, d))
}

pub fn load_distance_csv(path: &Path) -> Result<(DataPointSet, DistanceMatrix)> {
    read_distance_csv(fs::File::open(path)?)
}

/// Values use the shortest representation that reads back exactly.
pub fn write_distance_csv<W: Write>(out: W, points: &DataPointSet, d: &DistanceMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(points.labels()).map_err(io)?;
    let n = d.n();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", d.get(i, j))).collect();
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_distance_csv(path: &Path, points: &DataPointSet, d: &DistanceMatrix) -> Result<()> {
    let mut buf = Vec::new();
    write_distance_csv(&mut buf, points, d)?;
    fs::write(path, buf)?;
    Ok(())
}
