//! Dataset files, splits, representation conversion and perturbations.
//!
//! The interchange format is UTF-8 text: one matrix row per line with
//! whitespace-separated decimal integers, samples separated by one or more
//! blank lines.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::polytope::{facet_enumeration, vertex_enumeration, HRep, VRep};
use crate::properties::Representation;
use crate::tokens::{token_count, Scheme, Vocab};

/// Environment variable naming the root directory for dataset files.
pub const DATA_DIR_ENV: &str = "POLYGEN_DATA_DIR";

/// Identity of the generator behind every seeded operation in this crate:
/// ChaCha with 8 rounds, seeded through `seed_from_u64`, one stream per
/// sample index where per-sample streams are needed.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sample {
    pub id: usize,
    pub rep: Representation,
    pub matrix: Matrix<i64>,
}

/// A block of the input that does not form an integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IllFormedBlock {
    pub id: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParsedSample {
    Sample(Sample),
    IllFormed(IllFormedBlock),
}

impl ParsedSample {
    pub fn id(&self) -> usize {
        match self {
            ParsedSample::Sample(s) => s.id,
            ParsedSample::IllFormed(b) => b.id,
        }
    }

    pub fn as_sample(&self) -> Option<&Sample> {
        match self {
            ParsedSample::Sample(s) => Some(s),
            ParsedSample::IllFormed(_) => None,
        }
    }
}

/// Splits text into blank-line-separated blocks and parses each as a matrix.
///
/// Ids are block positions, so ill-formed blocks keep their place.
pub fn parse_dataset(text: &str, rep: Representation) -> Vec<ParsedSample> {
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
        .into_iter()
        .enumerate()
        .map(|(id, lines)| match parse_block(&lines) {
            Ok(matrix) => ParsedSample::Sample(Sample { id, rep, matrix }),
            Err(reason) => ParsedSample::IllFormed(IllFormedBlock { id, reason }),
        })
        .collect()
}

fn parse_block(lines: &[&str]) -> std::result::Result<Matrix<i64>, String> {
    let rows = lines
        .iter()
        .map(|line| {
            line.split_whitespace()
                .map(|t| t.parse::<i64>().map_err(|_| format!("not an integer: {t:?}")))
                .collect::<std::result::Result<Vec<i64>, String>>()
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    Matrix::from_rows(&rows).map_err(|e| e.to_string())
}

/// Well-formed samples only, re-numbered by position.
pub fn parse_samples(text: &str, rep: Representation) -> Result<Vec<Sample>> {
    parse_dataset(text, rep)
        .into_iter()
        .map(|p| match p {
            ParsedSample::Sample(s) => Ok(s),
            ParsedSample::IllFormed(b) => Err(Error::Parse(format!("block {}: {}", b.id, b.reason))),
        })
        .collect()
}

/// Resolves a dataset path, relative paths against `POLYGEN_DATA_DIR` when set.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Some(root) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&root).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

pub fn load_dataset(path: &Path, rep: Representation) -> Result<Vec<ParsedSample>> {
    let text = std::fs::read_to_string(resolve_data_path(path))?;
    Ok(parse_dataset(&text, rep))
}

/// One line per row, single spaces, every row newline-terminated.
pub fn serialize(matrix: &Matrix<i64>) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        let mut first = true;
        for x in row {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

/// Samples joined by single blank lines.
pub fn serialize_dataset<'a>(matrices: impl IntoIterator<Item = &'a Matrix<i64>>) -> String {
    matrices
        .into_iter()
        .map(serialize)
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub count: usize,
    /// Standard-scheme vocabulary including `<pad>`, `<sos>`, `<eos>`, `<nl>`.
    pub vocab_size: usize,
    /// Longest standard tokenization counting `<sos>` and `<eos>`.
    pub max_tokens_incl_specials: usize,
    /// Longest standard tokenization without `<sos>`/`<eos>` (newlines kept).
    pub max_tokens_excl_specials: usize,
    pub min_rows: usize,
    pub max_rows: usize,
    pub entry_histogram: BTreeMap<i64, u64>,
}

pub fn dataset_stats(samples: &[Sample]) -> DatasetStats {
    let mut entry_histogram = BTreeMap::new();
    let mut max_tokens = 0;
    let mut min_rows = usize::MAX;
    let mut max_rows = 0;
    for s in samples {
        for &x in s.matrix.data() {
            *entry_histogram.entry(x).or_insert(0) += 1;
        }
        max_tokens = max_tokens.max(token_count(s.matrix.nrows(), s.matrix.ncols()));
        min_rows = min_rows.min(s.matrix.nrows());
        max_rows = max_rows.max(s.matrix.nrows());
    }
    DatasetStats {
        count: samples.len(),
        vocab_size: Vocab::build(samples, Scheme::Standard).len(),
        max_tokens_incl_specials: max_tokens,
        max_tokens_excl_specials: max_tokens.saturating_sub(2),
        min_rows: if samples.is_empty() { 0 } else { min_rows },
        max_rows,
        entry_histogram,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    /// Fraction assigned to the first half, as numerator/denominator.
    pub fraction: (u64, u64),
}

impl SplitSpec {
    pub fn halves(seed: u64) -> Self {
        Self {
            seed,
            fraction: (1, 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    A,
    B,
}

/// Persisted split: sorted sample ids per half plus the seed that made them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub rng: String,
    pub seed: u64,
    pub half_a: Vec<usize>,
    pub half_b: Vec<usize>,
}

impl SplitManifest {
    pub fn half_of(&self, id: usize) -> Option<Half> {
        if self.half_a.binary_search(&id).is_ok() {
            Some(Half::A)
        } else if self.half_b.binary_search(&id).is_ok() {
            Some(Half::B)
        } else {
            None
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Seeded partition of the given ids; the first half gets `ceil(n * fraction)`.
///
/// Shuffle: Fisher-Yates from the last position down, drawing
/// `next_u64() % (i + 1)` from ChaCha8 seeded with `seed_from_u64(seed)`.
pub fn half_split(ids: &[usize], spec: SplitSpec) -> SplitManifest {
    let mut order = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in (1..order.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    let (num, den) = spec.fraction;
    let n = order.len() as u64;
    let take = (n * num).div_ceil(den.max(1)).min(n) as usize;
    let mut half_a = order[..take].to_vec();
    let mut half_b = order[take..].to_vec();
    half_a.sort_unstable();
    half_b.sort_unstable();
    SplitManifest {
        rng: RNG_ALGORITHM.to_string(),
        seed: spec.seed,
        half_a,
        half_b,
    }
}

/// Switches a reflexive sample between its two encodings.
///
/// Hyperplane to hull lists the (integral) vertices; hull to hyperplane lists
/// the facet normals, which must all sit at constant one. Rows come out in
/// lexicographic order.
pub fn convert_rep(sample: &Sample) -> Result<Sample> {
    let (rep, mut rows) = match sample.rep {
        Representation::Hyperplane => {
            let vd = vertex_enumeration(&HRep::new(sample.matrix.clone()))?;
            if !vd.is_bounded() {
                return Err(Error::Unbounded);
            }
            let rows = vd.integer_vertices().ok_or(Error::NonLatticeVertex)?;
            (Representation::ConvexHull, rows)
        }
        Representation::ConvexHull => {
            let hull = facet_enumeration(&VRep::new(sample.matrix.clone()))?;
            if !hull.vertex_data.full_dim {
                return Err(Error::NotFullDimensional);
            }
            let rows = hull
                .facets
                .facets
                .iter()
                .map(|f| {
                    if f.offset != 1.into() {
                        return Err(Error::NotReflexive(format!(
                            "facet at constant {} instead of 1",
                            f.offset
                        )));
                    }
                    f.normal
                        .iter()
                        .map(|x| i64::try_from(x).map_err(|_| Error::Overflow))
                        .collect()
                })
                .collect::<Result<Vec<Vec<i64>>>>()?;
            (Representation::Hyperplane, rows)
        }
    };
    rows.sort();
    Ok(Sample {
        id: sample.id,
        rep,
        matrix: Matrix::from_rows(&rows)?,
    })
}

/// Hyperplane samples whose hull encoding tokenizes to fewer than `threshold`
/// tokens under the standard scheme.
pub fn filter_by_vrep_length(samples: &[Sample], threshold: usize) -> Result<Vec<Sample>> {
    let keep = samples
        .par_iter()
        .map(|s| {
            let hull = convert_rep(s)?;
            Ok(token_count(hull.matrix.nrows(), hull.matrix.ncols()) < threshold)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(samples
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(s, _)| s.clone())
        .collect())
}

/// Changes one entry: a uniformly chosen entry among those in `{-1, 0, 1}`;
/// a zero becomes `+1` or `-1` with equal odds, a `+-1` becomes zero.
pub fn perturb<R: RngCore>(sample: &Sample, rng: &mut R) -> Result<Sample> {
    let eligible: Vec<usize> = sample
        .matrix
        .data()
        .iter()
        .enumerate()
        .filter(|(_, x)| (-1..=1).contains(*x))
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleEntry);
    }
    let pos = eligible[(rng.next_u64() % eligible.len() as u64) as usize];
    let cols = sample.matrix.ncols();
    let (i, j) = (pos / cols, pos % cols);
    let mut matrix = sample.matrix.clone();
    let new = match *matrix.get(i, j) {
        0 => {
            if rng.next_u64() & 1 == 0 {
                1
            } else {
                -1
            }
        }
        _ => 0,
    };
    matrix.set(i, j, new);
    Ok(Sample {
        id: sample.id,
        rep: sample.rep,
        matrix,
    })
}
