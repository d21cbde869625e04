//! Tokenization, feature hashing and word-embedding features.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Default size of the hashed feature space.
pub const DEFAULT_HASH_DIMS: usize = 1 << 18;

/// Seed mixed into every feature hash. Changing it invalidates saved MNB models.
pub const HASH_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Token emitted in place of any URL.
pub const URL_TOKEN: &str = "<url>";

#[derive(Debug, Error)]
pub enum TextError {
    #[error("hash dimension must be at least 1")]
    ZeroDims,
    #[error("index {index} out of range for dims {dims}")]
    IndexOutOfRange { index: usize, dims: usize },
    #[error("embedding stream is empty")]
    EmptyEmbeddings,
    #[error("invalid embedding header: {0}")]
    BadHeader(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    InconsistentDim {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("vector for {token:?} has length {found}, table dim is {expected}")]
    VectorLength {
        token: String,
        expected: usize,
        found: usize,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Lowercased tokens in source order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Wraps pre-split tokens, dropping empty ones.
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

fn is_url(chunk: &str) -> bool {
    let trimmed = chunk.trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = trimmed.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Splits text into lowercase word tokens.
///
/// Words are maximal runs of alphanumeric characters (combining marks
/// included) after NFC composition. A `#` directly in front of a word keeps
/// it as a hashtag, whitespace-delimited URLs become [`URL_TOKEN`], and all
/// other punctuation is dropped.
pub fn tokenize(text: &str) -> TokenSeq {
    let composed: String = text.nfc().collect();
    let mut tokens = Vec::new();
    for chunk in composed.split_whitespace() {
        if is_url(chunk) {
            tokens.push(URL_TOKEN.to_string());
            continue;
        }
        let mut current = String::new();
        let mut hashtag = false;
        for ch in chunk.chars() {
            if is_word_char(ch) {
                current.extend(ch.to_lowercase());
            } else {
                if !current.is_empty() {
                    let tok = std::mem::take(&mut current);
                    tokens.push(if hashtag { format!("#{tok}") } else { tok });
                }
                hashtag = ch == '#';
            }
        }
        if !current.is_empty() {
            tokens.push(if hashtag { format!("#{current}") } else { current });
        }
    }
    TokenSeq(tokens)
}

/// Seeded FNV-1a over the seed bytes followed by the token's UTF-8 bytes.
pub fn feature_hash(token: &str) -> u64 {
    HASH_SEED
        .to_le_bytes()
        .iter()
        .chain(token.as_bytes())
        .fold(FNV_OFFSET_BASIS, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Hashed bag-of-words counts. Absent indices are zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseVector {
    dims: usize,
    entries: BTreeMap<usize, u32>,
}

impl SparseVector {
    pub fn zeros(dims: usize) -> Result<Self, TextError> {
        if dims == 0 {
            return Err(TextError::ZeroDims);
        }
        Ok(SparseVector {
            dims,
            entries: BTreeMap::new(),
        })
    }

    /// Builds a vector from `(index, count)` pairs; repeated indices add up and
    /// zero counts are ignored.
    pub fn from_counts<I>(dims: usize, counts: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = (usize, u32)>,
    {
        let mut v = Self::zeros(dims)?;
        for (index, count) in counts {
            if index >= dims {
                return Err(TextError::IndexOutOfRange { index, dims });
            }
            if count > 0 {
                *v.entries.entry(index).or_insert(0) += count;
            }
        }
        Ok(v)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn get(&self, index: usize) -> u32 {
        self.entries.get(&index).copied().unwrap_or(0)
    }

    /// Nonzero entries in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.entries.iter().map(|(&i, &c)| (i, c))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.entries.values().map(|&c| u64::from(c)).sum()
    }

    /// Same vector with every count multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        SparseVector {
            dims: self.dims,
            entries: self
                .entries
                .iter()
                .filter(|_| factor > 0)
                .map(|(&i, &c)| (i, c * factor))
                .collect(),
        }
    }
}

/// Hashes every token into `dims` buckets and counts occurrences. No sign
/// trick: counts stay nonnegative for the multinomial model.
pub fn hash_vectorize(tokens: &TokenSeq, dims: usize) -> Result<SparseVector, TextError> {
    let mut v = SparseVector::zeros(dims)?;
    for tok in tokens.iter() {
        let idx = (feature_hash(tok) % dims as u64) as usize;
        *v.entries.entry(idx).or_insert(0) += 1;
    }
    Ok(v)
}

/// Pre-trained word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vocab: IndexMap<String, Vec<f64>>,
}

/// Result of [`load_embeddings`].
#[derive(Debug, Clone)]
pub struct EmbeddingLoad {
    pub table: EmbeddingTable,
    /// Lines dropped for wrong arity, unparsable numbers or repeated tokens.
    pub skipped: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self, TextError> {
        if dim == 0 {
            return Err(TextError::ZeroDims);
        }
        Ok(EmbeddingTable {
            dim,
            vocab: IndexMap::new(),
        })
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<(), TextError> {
        let token = token.into();
        if vector.len() != self.dim {
            return Err(TextError::VectorLength {
                token,
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.vocab.insert(token, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(Vec::as_slice)
    }

    /// Tokens in file order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vocab.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let a = fields.next()?.parse().ok()?;
    let b = fields.next()?.parse().ok()?;
    fields.next().is_none().then_some((a, b))
}

/// Reads word2vec text format: an optional `vocab_size dim` header, then one
/// `token v1 .. v_dim` line per word.
///
/// With a header, lines of the wrong arity are skipped and counted. Without
/// one, the first line fixes the dimension and any later disagreement is
/// fatal. Repeated tokens keep their first vector.
pub fn load_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingLoad, TextError> {
    let mut table: Option<EmbeddingTable> = None;
    let mut has_header = false;
    let mut skipped = 0;
    let mut saw_line = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !saw_line {
            saw_line = true;
            if let Some((_, dim)) = parse_header(trimmed) {
                if dim == 0 {
                    return Err(TextError::BadHeader(trimmed.to_string()));
                }
                table = Some(EmbeddingTable::new(dim)?);
                has_header = true;
                continue;
            }
        }
        let mut fields = trimmed.split_whitespace();
        let token = fields.next().unwrap_or_default();
        let values: Vec<&str> = fields.collect();
        let table = match table.as_mut() {
            Some(t) => t,
            None => table.insert(EmbeddingTable::new(values.len().max(1))?),
        };
        if values.len() != table.dim {
            if has_header {
                skipped += 1;
                continue;
            }
            return Err(TextError::InconsistentDim {
                line: lineno + 1,
                expected: table.dim,
                found: values.len(),
            });
        }
        let parsed: Result<Vec<f64>, _> = values.iter().map(|v| v.parse::<f64>()).collect();
        match parsed {
            Ok(vec) if vec.iter().all(|x| x.is_finite()) && !table.vocab.contains_key(token) => {
                table.vocab.insert(token.to_string(), vec);
            }
            _ => skipped += 1,
        }
    }

    match table {
        Some(table) if !table.is_empty() || has_header => Ok(EmbeddingLoad { table, skipped }),
        _ => Err(TextError::EmptyEmbeddings),
    }
}

/// Writes the table in word2vec text format with a header. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_embeddings<W: Write>(table: &EmbeddingTable, mut out: W) -> Result<(), TextError> {
    writeln!(out, "{} {}", table.len(), table.dim)?;
    for (token, vector) in table.iter() {
        write!(out, "{token}")?;
        for v in vector {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Row-major `n x dim` matrix of word vectors; the CNN input.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TokenMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        TokenMatrix {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Builds a matrix from rows that must all have length `dim`.
    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self, TextError> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(TextError::InconsistentDim {
                    line: i + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(TokenMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Appends zero rows until there are at least `min_rows`.
    pub fn padded_to(&self, min_rows: usize) -> TokenMatrix {
        let mut out = self.clone();
        if out.rows() < min_rows {
            out.data.resize(min_rows * self.dim, 0.0);
        }
        out
    }
}

/// One row per in-vocabulary token, in source order; unknown tokens are dropped.
pub fn embed_sequence(tokens: &TokenSeq, table: &EmbeddingTable) -> TokenMatrix {
    let mut data = Vec::with_capacity(tokens.len() * table.dim);
    for v in tokens.iter().filter_map(|t| table.get(t)) {
        data.extend_from_slice(v);
    }
    TokenMatrix {
        dim: table.dim,
        data,
    }
}

/// Mean of the in-vocabulary token vectors, or zeros when none are known.
pub fn mean_embedding(tokens: &TokenSeq, table: &EmbeddingTable) -> Vec<f64> {
    let mut acc = vec![0.0; table.dim];
    let mut n = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t)) {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
        n += 1;
    }
    if n > 0 {
        let inv = n as f64;
        acc.iter_mut().for_each(|a| *a /= inv);
    }
    acc
}
