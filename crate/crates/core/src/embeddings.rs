//! Static word vectors: loading, tokenization, document pooling and cosine
//! neighbourhood queries.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, Error, Result};

/// Dense token index. Indices run `0..len()` in first-seen order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `token` if unseen and returns its index.
    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(token.to_string(), i);
        self.tokens.push(token.to_string());
        i
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Word vectors stored column-wise: column `i` is the vector of token `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vectors: DMatrix<f64>,
}

impl EmbeddingTable {
    pub fn from_columns(vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Err(Error::Empty("embedding table"));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("embedding table contains non-finite values".into()));
        }
        Ok(Self { vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    pub fn vector(&self, index: usize) -> DVector<f64> {
        self.vectors.column(index).into_owned()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Pooled document vector together with the number of tokens that hit the
/// vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbedding {
    pub vector: DVector<f64>,
    pub in_vocab: usize,
}

/// Reads a whitespace-delimited `token v1 .. vD` file.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    expected_dim: usize,
) -> Result<(Vocabulary, EmbeddingTable)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), expected_dim)
}

pub fn parse_embeddings(
    reader: impl Read,
    expected_dim: usize,
) -> Result<(Vocabulary, EmbeddingTable)> {
    if expected_dim == 0 {
        return Err(Error::invalid("embedding_dim", "must be positive"));
    }
    let mut vocab = Vocabulary::new();
    let mut data: Vec<f64> = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::Data(format!("line {}: {e}", lineno + 1)))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let values = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::Data(format!("line {}: non-numeric field `{f}`", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != expected_dim {
            return Err(Error::Data(format!(
                "line {}: expected {expected_dim} values, found {}",
                lineno + 1,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "line {}: non-finite value {bad}",
                lineno + 1
            )));
        }
        if vocab.get(token).is_some() {
            continue;
        }
        vocab.insert(token);
        data.extend_from_slice(&values);
    }
    if vocab.is_empty() {
        return Err(Error::Empty("embedding file"));
    }
    let table = EmbeddingTable::from_columns(DMatrix::from_vec(expected_dim, vocab.len(), data))?;
    Ok((vocab, table))
}

/// Writes the table in the same format `load_embeddings` reads. Values use
/// the shortest representation that parses back to the identical `f64`.
pub fn write_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    table: &EmbeddingTable,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (i, token) in vocab.tokens().iter().enumerate() {
        let mut line = token.clone();
        for v in table.vectors.column(i).iter() {
            line.push(' ');
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Mean of the in-vocabulary token vectors. Out-of-vocabulary tokens are
/// skipped; a document with no known token is an error.
pub fn embed_document<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
) -> Result<DocEmbedding> {
    let mut sum = DVector::zeros(table.dim());
    let mut hits = 0usize;
    for t in tokens {
        if let Some(i) = vocab.get(t.as_ref()) {
            sum += table.vectors.column(i);
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(Error::Data(
            "document has no in-vocabulary tokens".to_string(),
        ));
    }
    Ok(DocEmbedding {
        vector: sum / hits as f64,
        in_vocab: hits,
    })
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    ensure_dim("cosine_similarity", a.len(), b.len())?;
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 {
        return Err(Error::ZeroVector("first cosine argument"));
    }
    if nb == 0.0 {
        return Err(Error::ZeroVector("second cosine argument"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// The `k` most cosine-similar words to `query`, best first. Ties go to the
/// lower vocabulary index. Zero-norm table rows rank last with similarity 0.
pub fn nearest_words(
    query: &[f64],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    ensure_dim("nearest_words query", table.dim(), query.len())?;
    let qn = query.iter().map(|v| v * v).sum::<f64>().sqrt();
    if qn == 0.0 {
        return Err(Error::ZeroVector("query"));
    }
    let mut scored: Vec<(usize, f64)> = table
        .vectors
        .column_iter()
        .enumerate()
        .map(|(i, col)| {
            let n = col.norm();
            let s = if n == 0.0 {
                0.0
            } else {
                let dot: f64 = col.iter().zip(query).map(|(a, b)| a * b).sum();
                (dot / (n * qn)).clamp(-1.0, 1.0)
            };
            (i, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k.min(vocab.len()));
    Ok(scored
        .into_iter()
        .map(|(i, s)| (vocab.tokens[i].clone(), s))
        .collect())
}
