//! Document collections, JSONL ingestion, supervision masking and synthetic
//! corpora.

mod mask;
mod synth;

pub use mask::{
    mask_biased_extremity, mask_by_theme, mask_unbiased, mask_weighted, quota, GroupTier,
    MaskState, Protocol,
};
pub use synth::{
    synthesize_corpus, synthesize_lexicon, write_truth, DocTruth, SynthConfig, SynthLexicon,
    SynthTruth,
};

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embeddings::{embed_document, tokenize, EmbeddingTable, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DocContent {
    Text(String),
    /// Precomputed document vector.
    Embedding(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub author: String,
    pub content: DocContent,
    /// Binary party / ideology label; 0 is the first ("D") group.
    pub label: Option<u8>,
    /// Author extremity, e.g. the magnitude of an external ideology score.
    pub extremity: Option<f64>,
    /// Seven-point group tag such as `"slightly liberal"`.
    pub group: Option<String>,
    pub theme: Option<String>,
}

impl Document {
    pub fn tokens(&self) -> Option<Vec<String>> {
        match &self.content {
            DocContent::Text(t) => Some(tokenize(t)),
            DocContent::Embedding(_) => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DocRecord {
    id: String,
    author: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
    #[serde(default)]
    label: Option<i64>,
    #[serde(default)]
    extremity: Option<f64>,
    #[serde(default)]
    group: Option<String>,
    #[serde(default)]
    theme: Option<String>,
}

impl DocRecord {
    fn into_document(self) -> Result<Document> {
        let content = match (self.text, self.embedding) {
            (Some(t), None) => DocContent::Text(t),
            (None, Some(e)) => DocContent::Embedding(e),
            _ => {
                return Err(Error::Data(format!(
                    "document `{}` must carry exactly one of `text` or `embedding`",
                    self.id
                )))
            }
        };
        let label = match self.label {
            None => None,
            Some(l @ (0 | 1)) => Some(l as u8),
            Some(l) => {
                return Err(Error::Data(format!(
                    "document `{}` has label {l}, expected 0 or 1",
                    self.id
                )))
            }
        };
        Ok(Document {
            id: self.id,
            author: self.author,
            content,
            label,
            extremity: self.extremity,
            group: self.group,
            theme: self.theme,
        })
    }

    fn from_document(d: &Document) -> Self {
        let (text, embedding) = match &d.content {
            DocContent::Text(t) => (Some(t.clone()), None),
            DocContent::Embedding(e) => (None, Some(e.clone())),
        };
        Self {
            id: d.id.clone(),
            author: d.author.clone(),
            text,
            embedding,
            label: d.label.map(i64::from),
            extremity: d.extremity,
            group: d.group.clone(),
            theme: d.theme.clone(),
        }
    }
}

/// Documents plus an author index (author id to document positions).
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    authors: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let mut seen = HashSet::new();
        let mut authors: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, d) in docs.iter().enumerate() {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Data(format!("duplicate document id `{}`", d.id)));
            }
            if matches!(d.label, Some(l) if l > 1) {
                return Err(Error::Data(format!("document `{}` has a non-binary label", d.id)));
            }
            authors.entry(d.author.clone()).or_default().push(i);
        }
        Ok(Self { docs, authors })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Author id to positions of that author's documents, in corpus order.
    pub fn authors(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.authors
    }

    pub fn labels(&self) -> Vec<Option<u8>> {
        self.docs.iter().map(|d| d.label).collect()
    }

    /// Sorted, distinct theme tags.
    pub fn theme_tags(&self) -> Vec<String> {
        let mut t: Vec<String> = self.docs.iter().filter_map(|d| d.theme.clone()).collect();
        t.sort();
        t.dedup();
        t
    }

    /// Document vectors as a `dim x N` matrix. Text documents are mean-pooled
    /// through `lexicon`; precomputed vectors must have length `dim`.
    pub fn embed(
        &self,
        lexicon: Option<(&Vocabulary, &EmbeddingTable)>,
        dim: usize,
    ) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(dim, self.docs.len());
        for (j, d) in self.docs.iter().enumerate() {
            match &d.content {
                DocContent::Embedding(v) => {
                    if v.len() != dim {
                        return Err(Error::Data(format!(
                            "document `{}` embedding has {} values, expected {dim}",
                            d.id,
                            v.len()
                        )));
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Data(format!(
                            "document `{}` embedding is not finite",
                            d.id
                        )));
                    }
                    out.column_mut(j).copy_from_slice(v);
                }
                DocContent::Text(t) => {
                    let (vocab, table) = lexicon.ok_or_else(|| {
                        Error::Data(format!(
                            "document `{}` is raw text but no word vectors were given",
                            d.id
                        ))
                    })?;
                    if table.dim() != dim {
                        return Err(Error::Dimension {
                            what: "word vector width",
                            expected: dim,
                            found: table.dim(),
                        });
                    }
                    let e = embed_document(&tokenize(t), vocab, table)
                        .map_err(|e| Error::Data(format!("document `{}`: {e}", d.id)))?;
                    out.column_mut(j).copy_from(&e.vector);
                }
            }
        }
        Ok(out)
    }
}

/// Reads one JSON document object per non-blank line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file))
}

pub fn parse_corpus(reader: impl Read) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::Data(format!("line {}: {e}", lineno + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("line {}: {e}", lineno + 1)))?;
        docs.push(rec.into_document()?);
    }
    Corpus::new(docs)
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for d in corpus.docs() {
        let line = serde_json::to_string(&DocRecord::from_document(d))
            .map_err(|e| Error::Data(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_valid_lines() {
        let src = r#"{"id":"a","author":"x","text":"guns now","label":0}
{"id":"b","author":"y","embedding":[0.5,1.0],"label":null,"extremity":0.3,"group":null,"theme":"gun"}"#;
        let c = parse_corpus(src.as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.docs()[1].content, DocContent::Embedding(vec![0.5, 1.0]));
        assert_eq!(c.docs()[1].theme.as_deref(), Some("gun"));
    }

    #[test]
    fn duplicate_id_names_the_id() {
        let src = r#"{"id":"dup","author":"x","text":"a"}
{"id":"dup","author":"y","text":"b"}"#;
        let err = parse_corpus(src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("dup"), "{err}");
    }

    #[test]
    fn malformed_inputs_rejected() {
        for src in [
            r#"{"id":"a","author":"x","text":"t","label":2}"#,
            r#"{"id":"a","author":"x"}"#,
            r#"{"id":"a","author":"x","text":"t","embedding":[1.0]}"#,
            r#"{"id":"a" "author":"x"}"#,
            "",
        ] {
            assert!(parse_corpus(src.as_bytes()).is_err(), "{src}");
        }
    }

    #[test]
    fn author_index_matches_group_by_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut src = String::new();
        let mut authors = Vec::new();
        for i in 0..100 {
            let a = format!("auth{}", rng.random_range(0..13));
            src.push_str(&format!(
                "{{\"id\":\"d{i}\",\"author\":\"{a}\",\"text\":\"x\",\"label\":{}}}\n",
                i % 2
            ));
            authors.push(a);
        }
        let c = parse_corpus(src.as_bytes()).unwrap();
        let mut expected: Vec<(String, Vec<usize>)> = Vec::new();
        for (i, a) in authors.iter().enumerate() {
            match expected.iter_mut().find(|(name, _)| name == a) {
                Some((_, v)) => v.push(i),
                None => expected.push((a.clone(), vec![i])),
            }
        }
        assert_eq!(c.authors().len(), expected.len());
        for (a, docs) in expected {
            assert_eq!(c.authors()[&a], docs);
        }
    }

    #[test]
    fn write_then_parse_roundtrip() {
        let src = r#"{"id":"a","author":"x","text":"guns now","label":0,"extremity":0.25,"group":"liberal","theme":"gun"}
{"id":"b","author":"y","embedding":[0.1,-3.5e-7],"label":1,"extremity":null,"group":null,"theme":null}"#;
        let c = parse_corpus(src.as_bytes()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        write_corpus(&p, &c).unwrap();
        assert_eq!(load_corpus(&p).unwrap(), c);
    }

    #[test]
    fn embedding_docs_checked_against_dim() {
        let src = r#"{"id":"a","author":"x","embedding":[1.0,2.0]}"#;
        let c = parse_corpus(src.as_bytes()).unwrap();
        assert!(c.embed(None, 2).is_ok());
        assert!(c.embed(None, 3).is_err());
        let src = r#"{"id":"a","author":"x","text":"hello"}"#;
        let c = parse_corpus(src.as_bytes()).unwrap();
        assert!(c.embed(None, 2).is_err());
    }
}
