//! Fixed-length sentence vectors from word-vector matrices.
//!
//! For a sentence of `N` words with `d`-dimensional vectors, each feature
//! column is treated as a length-`N` signal and transformed with the DCT-II
//!
//! ```text
//! c[k] = sqrt(2/N) * sum_{n=0}^{N-1} v_n * cos(pi/N * (n + 1/2) * k)
//! ```
//!
//! using the same `sqrt(2/N)` scale for every `k`, so `c[0] = sqrt(2N) * mean`.
//! The `c[0:K]` encoding concatenates blocks `c[0]`, `c[1]`, ..., `c[K]`, each of
//! width `d`, for a total of `(K + 1) * d` values.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{lookup_sentence, EmbeddingTable, OovPolicy, Tokenizer};
use crate::{Error, Result};

/// Largest coefficient index accepted without an explicit override.
pub const MAX_K: usize = 4;

/// `N x d` word vectors of one sentence, row-major. `N == 0` marks an empty
/// sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceMatrix {
    n_words: usize,
    dim: usize,
    data: Vec<f64>,
}

impl SentenceMatrix {
    pub fn from_row_slice(n_words: usize, dim: usize, data: &[f64]) -> Self {
        assert!(dim >= 1, "sentence matrix needs dim >= 1");
        assert_eq!(data.len(), n_words * dim, "row data does not match shape");
        SentenceMatrix {
            n_words,
            dim,
            data: data.to_vec(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(1, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(rows.len(), dim, &data)
    }

    /// The empty-sentence marker.
    pub fn empty(dim: usize) -> Self {
        Self::from_row_slice(0, dim, &[])
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.n_words == 0
    }

    pub fn row(&self, n: usize) -> Vec<f64> {
        self.data[n * self.dim..(n + 1) * self.dim].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(j)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Which encoder to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderSpec {
    Avg,
    Dct { k: usize },
}

impl EncoderSpec {
    /// A DCT encoder with `K` in `0..=MAX_K`.
    pub fn dct(k: usize) -> Result<Self> {
        if k > MAX_K {
            return Err(Error::Config(format!(
                "K = {k} is outside 0..={MAX_K} (pass --allow-large-k to override)"
            )));
        }
        Ok(EncoderSpec::Dct { k })
    }

    /// Output width for word vectors of dimension `dim`.
    pub fn output_dim(&self, dim: usize) -> usize {
        match *self {
            EncoderSpec::Avg => dim,
            EncoderSpec::Dct { k } => (k + 1) * dim,
        }
    }

    /// The sweep used for result tables: AVG, c[0], c[0:1], ..., c[0:max_k].
    pub fn sweep(max_k: usize) -> Vec<EncoderSpec> {
        std::iter::once(EncoderSpec::Avg)
            .chain((0..=max_k).map(|k| EncoderSpec::Dct { k }))
            .collect()
    }
}

impl fmt::Display for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EncoderSpec::Avg => f.write_str("AVG"),
            EncoderSpec::Dct { k: 0 } => f.write_str("c[0]"),
            EncoderSpec::Dct { k } => write!(f, "c[0:{k}]"),
        }
    }
}

impl FromStr for EncoderSpec {
    type Err = Error;

    /// Parses `AVG`, `c[0]` or `c[0:K]` (any case). No range check.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "avg" {
            return Ok(EncoderSpec::Avg);
        }
        if lower == "c[0]" {
            return Ok(EncoderSpec::Dct { k: 0 });
        }
        lower
            .strip_prefix("c[0:")
            .and_then(|r| r.strip_suffix(']'))
            .and_then(|k| k.parse().ok())
            .map(|k| EncoderSpec::Dct { k })
            .ok_or_else(|| Error::Config(format!("unrecognized encoder {s:?}")))
    }
}

/// What to do with a sentence that has no contributing words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyPolicy {
    #[default]
    Error,
    ZeroVector,
}

/// Coefficients with `k >= N` for sentences shorter than `K + 1` words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShortPolicy {
    #[default]
    ZeroFill,
    /// Evaluate the formula as written.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub empty: EmptyPolicy,
    pub short: ShortPolicy,
}

/// One DCT-II coefficient of a real signal.
pub fn dct_coefficient(signal: &[f64], k: usize) -> Result<f64> {
    let n = signal.len();
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    let step = PI / n as f64 * k as f64;
    let sum: f64 = signal
        .iter()
        .enumerate()
        .map(|(i, v)| v * (step * (i as f64 + 0.5)).cos())
        .sum();
    Ok((2.0 / n as f64).sqrt() * sum)
}

/// Cosine basis rows `0..=k_max` for length `n`, already scaled by `sqrt(2/n)`.
///
/// The angle `pi * (2i + 1) * k / 2n` is reduced modulo `2 pi` in integer
/// arithmetic, and the second half of each row is mirrored from the first
/// with sign `(-1)^k`, so reversing a sentence flips odd blocks exactly.
fn dct_basis(n: usize, k_max: usize, short: ShortPolicy) -> Vec<f64> {
    let scale = (2.0 / n as f64).sqrt();
    let period = 4 * n as u64;
    let mut basis = vec![0.0; (k_max + 1) * n];
    for (k, row) in basis.chunks_exact_mut(n).enumerate() {
        if k >= n && short == ShortPolicy::ZeroFill {
            continue;
        }
        let half = n.div_ceil(2);
        for i in 0..half {
            let m = ((2 * i as u64 + 1) * k as u64) % period;
            row[i] = scale * (PI * m as f64 / (2 * n) as f64).cos();
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for i in half..n {
            row[i] = sign * row[n - 1 - i];
        }
    }
    basis
}

/// Concatenated DCT blocks `c[0..=k]` of every feature column.
pub fn encode_dct(matrix: &SentenceMatrix, k: usize, opts: EncodeOptions) -> Result<Vec<f64>> {
    let d = matrix.dim();
    let n = matrix.n_words();
    if n == 0 {
        return match opts.empty {
            EmptyPolicy::Error => Err(Error::EmptySentence { line: 0 }),
            EmptyPolicy::ZeroVector => Ok(vec![0.0; (k + 1) * d]),
        };
    }
    let basis = dct_basis(n, k, opts.short);
    let mut out = vec![0.0; (k + 1) * d];
    for (block, weights) in out.chunks_exact_mut(d).zip(basis.chunks_exact(n)) {
        for (row, &w) in matrix.rows().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (o, &x) in block.iter_mut().zip(row) {
                *o += w * x;
            }
        }
    }
    Ok(out)
}

/// Mean word vector.
pub fn encode_avg(matrix: &SentenceMatrix, opts: EncodeOptions) -> Result<Vec<f64>> {
    let d = matrix.dim();
    let n = matrix.n_words();
    if n == 0 {
        return match opts.empty {
            EmptyPolicy::Error => Err(Error::EmptySentence { line: 0 }),
            EmptyPolicy::ZeroVector => Ok(vec![0.0; d]),
        };
    }
    let mut out = vec![0.0; d];
    for row in matrix.rows() {
        for (o, &x) in out.iter_mut().zip(row) {
            *o += x;
        }
    }
    let inv = 1.0 / n as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    Ok(out)
}

/// Dispatches on `spec`.
pub fn encode(matrix: &SentenceMatrix, spec: EncoderSpec, opts: EncodeOptions) -> Result<Vec<f64>> {
    match spec {
        EncoderSpec::Avg => encode_avg(matrix, opts),
        EncoderSpec::Dct { k } => encode_dct(matrix, k, opts),
    }
}

/// Per-corpus counters reported alongside the encodings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub oov_tokens: usize,
    pub oov_rate: f64,
    pub empty_sentences: usize,
    /// 1-based line numbers dropped because of `skip_bad`.
    pub skipped_lines: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CorpusEncoding {
    /// One row per (kept) input line.
    pub vectors: DMatrix<f64>,
    pub stats: CorpusStats,
}

/// Settings for [`encode_corpus`].
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub tokenizer: Tokenizer,
    pub oov: OovPolicy,
    pub options: EncodeOptions,
    /// Drop failing lines instead of aborting.
    pub skip_bad: bool,
}

/// Encodes every line of a corpus. Output row `i` corresponds to input line
/// `i` (minus lines dropped under `skip_bad`).
pub fn encode_corpus<S>(
    table: &EmbeddingTable,
    lines: &[S],
    spec: EncoderSpec,
    config: &CorpusConfig,
) -> Result<CorpusEncoding>
where
    S: AsRef<str> + Sync,
{
    let width = spec.output_dim(table.dim());
    let results: Vec<(Result<Vec<f64>>, usize, usize, bool)> = lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| {
            let tokens = config.tokenizer.tokenize(line.as_ref());
            let oov = tokens
                .iter()
                .filter(|t| !table.contains(t.as_str()))
                .count();
            let matrix = lookup_sentence(table, &tokens, config.oov);
            let empty = matrix.is_empty();
            let encoded = encode(&matrix, spec, config.options).map_err(|e| match e {
                Error::EmptySentence { .. } => Error::EmptySentence { line: i + 1 },
                other => other,
            });
            (encoded, tokens.len(), oov, empty)
        })
        .collect();

    let mut stats = CorpusStats::default();
    let mut data = Vec::with_capacity(lines.len() * width);
    for (i, (encoded, n_tokens, oov, empty)) in results.into_iter().enumerate() {
        stats.tokens += n_tokens;
        stats.oov_tokens += oov;
        stats.empty_sentences += usize::from(empty);
        match encoded {
            Ok(v) => {
                data.extend(v);
                stats.sentences += 1;
            }
            Err(_) if config.skip_bad => stats.skipped_lines.push(i + 1),
            Err(e) => return Err(e),
        }
    }
    stats.oov_rate = if stats.tokens == 0 {
        0.0
    } else {
        stats.oov_tokens as f64 / stats.tokens as f64
    };
    Ok(CorpusEncoding {
        vectors: DMatrix::from_row_slice(stats.sentences, width, &data),
        stats,
    })
}
