//! Neutral theme vectors built from seed words, and initial theme
//! assignments for documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::corpus::Corpus;
use crate::embeddings::{nearest_words, EmbeddingTable, Vocabulary};
use crate::error::{Error, Result};

pub const OTHER: &str = "other";

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub theme: String,
    pub seeds: Vec<String>,
    /// Seeds plus neighbours; equals `seeds` until expanded.
    pub expanded: Vec<String>,
}

impl SeedSet {
    pub fn new(theme: impl Into<String>, seeds: Vec<String>) -> Self {
        Self {
            theme: theme.into(),
            expanded: seeds.clone(),
            seeds,
        }
    }
}

/// Reads `{"theme": ["word", ...], ...}`; themes come back in name order.
pub fn load_seed_sets(path: impl AsRef<Path>) -> Result<Vec<SeedSet>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let map: BTreeMap<String, Vec<String>> = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    if map.is_empty() {
        return Err(Error::Empty("seed file"));
    }
    if map.contains_key(OTHER) {
        return Err(Error::Data(format!("`{OTHER}` is reserved and cannot be seeded")));
    }
    Ok(map.into_iter().map(|(t, s)| SeedSet::new(t, s)).collect())
}

pub fn write_seed_sets(path: impl AsRef<Path>, sets: &BTreeMap<String, Vec<String>>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, sets).map_err(|e| Error::Data(e.to_string()))?;
    writeln!(out).map_err(|e| Error::io(path, e))
}

fn mean_vector<S: AsRef<str>>(
    words: &[S],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    theme: &str,
) -> Result<DVector<f64>> {
    if words.is_empty() {
        return Err(Error::Data(format!("theme `{theme}` has no seed words")));
    }
    let mut sum = DVector::zeros(table.dim());
    for w in words {
        let i = vocab.get(w.as_ref()).ok_or_else(|| {
            Error::Data(format!("seed `{}` of theme `{theme}` is not in the vocabulary", w.as_ref()))
        })?;
        sum += table.vectors().column(i);
    }
    Ok(sum / words.len() as f64)
}

/// Adds the `n` words nearest (cosine) to the mean seed vector.
pub fn expand_seeds(
    seeds: &SeedSet,
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    n: usize,
) -> Result<SeedSet> {
    let centre = mean_vector(&seeds.seeds, vocab, table, &seeds.theme)?;
    let mut expanded = seeds.seeds.clone();
    if n > 0 {
        for (w, _) in nearest_words(centre.as_slice(), vocab, table, n)? {
            if !expanded.contains(&w) {
                expanded.push(w);
            }
        }
    }
    Ok(SeedSet {
        theme: seeds.theme.clone(),
        seeds: seeds.seeds.clone(),
        expanded,
    })
}

/// Per-party document frequencies of one word over labeled text documents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordFrequency {
    /// Number of labeled documents containing the word.
    pub docs: usize,
    /// Fraction of each party's documents containing the word.
    pub fraction: [f64; 2],
}

impl WordFrequency {
    pub fn discrepancy(&self) -> f64 {
        (self.fraction[0] - self.fraction[1]).abs()
    }
}

pub fn word_frequencies<S: AsRef<str>>(
    corpus: &Corpus,
    candidates: &[S],
) -> Result<BTreeMap<String, WordFrequency>> {
    let wanted: BTreeSet<&str> = candidates.iter().map(AsRef::as_ref).collect();
    let mut party_docs = [0usize; 2];
    let mut counts: BTreeMap<&str, [usize; 2]> = wanted.iter().map(|w| (*w, [0, 0])).collect();
    for d in corpus.docs() {
        let (Some(label), Some(tokens)) = (d.label, d.tokens()) else {
            continue;
        };
        let p = label as usize;
        party_docs[p] += 1;
        let present: BTreeSet<String> = tokens.into_iter().collect();
        for w in &present {
            if let Some(c) = counts.get_mut(w.as_str()) {
                c[p] += 1;
            }
        }
    }
    if party_docs[0] + party_docs[1] == 0 {
        return Err(Error::Data("no labeled text documents for word frequencies".into()));
    }
    let frac = |c: usize, p: usize| {
        if party_docs[p] == 0 {
            0.0
        } else {
            c as f64 / party_docs[p] as f64
        }
    };
    Ok(counts
        .into_iter()
        .map(|(w, c)| {
            (
                w.to_string(),
                WordFrequency {
                    docs: c[0] + c[1],
                    fraction: [frac(c[0], 0), frac(c[1], 1)],
                },
            )
        })
        .collect())
}

/// Keeps words seen in more than `alpha` labeled documents, used by both
/// parties, whose per-party document fractions differ by at most `beta`.
pub fn neutral_word_filter<S: AsRef<str>>(
    corpus: &Corpus,
    candidates: &[S],
    alpha: usize,
    beta: f64,
) -> Result<BTreeSet<String>> {
    Ok(word_frequencies(corpus, candidates)?
        .into_iter()
        .filter(|(_, f)| {
            f.docs > alpha && f.fraction[0] > 0.0 && f.fraction[1] > 0.0 && f.discrepancy() <= beta
        })
        .map(|(w, _)| w)
        .collect())
}

/// Half the standard deviation of the pooled document fractions of the
/// candidate words.
pub fn default_beta<S: AsRef<str>>(corpus: &Corpus, candidates: &[S]) -> Result<f64> {
    let freqs = word_frequencies(corpus, candidates)?;
    let labeled = corpus
        .docs()
        .iter()
        .filter(|d| d.label.is_some() && d.tokens().is_some())
        .count() as f64;
    let pooled: Vec<f64> = freqs.values().map(|f| f.docs as f64 / labeled).collect();
    if pooled.is_empty() {
        return Err(Error::Empty("candidate word list"));
    }
    let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let var = pooled.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / pooled.len() as f64;
    Ok(0.5 * var.sqrt())
}

/// `m x D` theme matrix. The last row is always the `"other"` theme.
#[derive(Debug, Clone, PartialEq)]
pub struct ThemeMatrix {
    names: Vec<String>,
    rows: DMatrix<f64>,
}

impl ThemeMatrix {
    pub fn new(names: Vec<String>, rows: DMatrix<f64>) -> Result<Self> {
        if names.len() != rows.nrows() {
            return Err(Error::Dimension {
                what: "theme names",
                expected: rows.nrows(),
                found: names.len(),
            });
        }
        if names.last().map(String::as_str) != Some(OTHER) {
            return Err(Error::Data(format!("theme matrix must end with `{OTHER}`")));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("theme matrix has non-finite entries".into()));
        }
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(Error::Data("duplicate theme names".into()));
        }
        Ok(Self { names, rows })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn into_rows(self) -> DMatrix<f64> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn other_index(&self) -> usize {
        self.names.len() - 1
    }

    /// One column per theme under a header of theme names; one line per
    /// embedding coordinate.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_theme_csv(path, &self.names, &self.rows)
    }
}

pub fn write_theme_csv(path: impl AsRef<Path>, names: &[String], rows: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", names.join(",")).map_err(io)?;
    for j in 0..rows.ncols() {
        let line: Vec<String> = (0..rows.nrows()).map(|i| rows[(i, j)].to_string()).collect();
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Row `i` is the mean of theme `i`'s expanded seed vectors; the trailing
/// `"other"` row is the mean of those rows.
pub fn init_theme_matrix(
    seed_sets: &[SeedSet],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
) -> Result<ThemeMatrix> {
    if seed_sets.is_empty() {
        return Err(Error::Empty("seed set list"));
    }
    let m = seed_sets.len();
    let mut rows = DMatrix::zeros(m + 1, table.dim());
    for (i, s) in seed_sets.iter().enumerate() {
        let mut sorted = s.expanded.clone();
        sorted.sort();
        sorted.dedup();
        let v = mean_vector(&sorted, vocab, table, &s.theme)?;
        rows.row_mut(i).copy_from(&v.transpose());
    }
    let other = rows.rows(0, m).row_mean();
    rows.row_mut(m).copy_from(&other);
    let mut names: Vec<String> = seed_sets.iter().map(|s| s.theme.clone()).collect();
    names.push(OTHER.to_string());
    ThemeMatrix::new(names, rows)
}

/// Softmax of cosine similarities to the non-`"other"` rows. Documents whose
/// best similarity falls strictly below the `other_quantile` quantile of
/// all best similarities (the order statistic at index
/// `min(ceil(q N), N - 1)`) are assigned to `"other"`. Columns of the result
/// are per-document assignments.
pub fn init_assignments(
    docs: &DMatrix<f64>,
    t0: &ThemeMatrix,
    other_quantile: f64,
) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&other_quantile) {
        return Err(Error::invalid("other_quantile", "must lie in [0, 1]"));
    }
    if docs.nrows() != t0.dim() {
        return Err(Error::Dimension {
            what: "document embedding",
            expected: t0.dim(),
            found: docs.nrows(),
        });
    }
    let m = t0.len();
    let other = t0.other_index();
    let mut unit_rows = Vec::with_capacity(m - 1);
    for i in 0..other {
        let r = t0.rows().row(i).transpose();
        let n = r.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector("theme row"));
        }
        unit_rows.push(r / n);
    }
    let n_docs = docs.ncols();
    let mut theta = DMatrix::zeros(m, n_docs);
    let mut best = Vec::with_capacity(n_docs);
    for j in 0..n_docs {
        let x = docs.column(j);
        let norm = x.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector("document embedding"));
        }
        let sims: Vec<f64> = unit_rows.iter().map(|u| u.dot(&x) / norm).collect();
        let max = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = sims.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (i, e) in exps.iter().enumerate() {
            theta[(i, j)] = e / total;
        }
        best.push(max);
    }
    if n_docs > 0 && other_quantile > 0.0 {
        let mut sorted = best.clone();
        sorted.sort_by(f64::total_cmp);
        let k = ((other_quantile * n_docs as f64).ceil() as usize).min(n_docs - 1);
        let threshold = sorted[k];
        for (j, b) in best.iter().enumerate() {
            if *b < threshold {
                theta.column_mut(j).fill(0.0);
                theta[(other, j)] = 1.0;
            }
        }
    }
    Ok(theta)
}

/// One-hot assignments from document theme tags; untagged documents go to
/// `"other"`.
pub fn assignments_from_tags(corpus: &Corpus, t0: &ThemeMatrix) -> Result<DMatrix<f64>> {
    let mut theta = DMatrix::zeros(t0.len(), corpus.len());
    for (j, d) in corpus.docs().iter().enumerate() {
        let i = match &d.theme {
            None => t0.other_index(),
            Some(t) => t0
                .index(t)
                .ok_or_else(|| Error::Data(format!("document `{}` has unknown theme `{t}`", d.id)))?,
        };
        theta[(i, j)] = 1.0;
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis_lexicon(d: usize) -> (Vocabulary, EmbeddingTable) {
        let mut v = Vocabulary::new();
        for i in 0..d {
            v.insert(&format!("w{i}"));
        }
        (v, EmbeddingTable::from_columns(DMatrix::identity(d, d)).unwrap())
    }

    fn random_lexicon(n: usize, d: usize, seed: u64) -> (Vocabulary, EmbeddingTable) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = Vocabulary::new();
        for i in 0..n {
            v.insert(&format!("w{i}"));
        }
        let m = DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0));
        (v, EmbeddingTable::from_columns(m).unwrap())
    }

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn zero_expansion_is_identity() {
        let (v, t) = basis_lexicon(4);
        let s = SeedSet::new("a", words(&["w1", "w2"]));
        assert_eq!(expand_seeds(&s, &v, &t, 0).unwrap().expanded, s.seeds);
    }

    #[test]
    fn expansion_matches_exhaustive_cosine_ranking() {
        let (v, t) = random_lexicon(40, 6, 3);
        let s = SeedSet::new("a", words(&["w7"]));
        let e = expand_seeds(&s, &v, &t, 5).unwrap();
        let q = t.vector(7);
        let mut scored: Vec<(usize, f64)> = (0..40)
            .map(|i| {
                let c = t.vector(i);
                (i, c.dot(&q) / (c.norm() * q.norm()))
            })
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let mut expected = vec!["w7".to_string()];
        for (i, _) in scored.into_iter().take(5) {
            let w = format!("w{i}");
            if !expected.contains(&w) {
                expected.push(w);
            }
        }
        assert_eq!(e.expanded, expected);
        // the seed is its own nearest neighbour and appears only once
        assert_eq!(e.expanded.len(), 5);
    }

    #[test]
    fn empty_or_unknown_seeds_rejected() {
        let (v, t) = basis_lexicon(3);
        assert!(expand_seeds(&SeedSet::new("a", vec![]), &v, &t, 2).is_err());
        assert!(init_theme_matrix(&[SeedSet::new("a", words(&["nope"]))], &v, &t).is_err());
        assert!(init_theme_matrix(&[SeedSet::new("a", vec![])], &v, &t).is_err());
    }

    #[test]
    fn basis_seeds_average() {
        let (v, t) = basis_lexicon(4);
        let m = init_theme_matrix(&[SeedSet::new("a", words(&["w0", "w1"]))], &v, &t).unwrap();
        assert_eq!(m.rows().row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(m.names(), &["a".to_string(), "other".to_string()]);
        let flipped = init_theme_matrix(&[SeedSet::new("a", words(&["w1", "w0"]))], &v, &t).unwrap();
        assert_eq!(m, flipped);
    }

    #[test]
    fn five_theme_rows_match_accumulation() {
        let (v, t) = random_lexicon(30, 5, 8);
        let sets: Vec<SeedSet> = (0..5)
            .map(|k| SeedSet::new(format!("t{k}"), (0..3).map(|j| format!("w{}", k * 5 + j)).collect()))
            .collect();
        let m = init_theme_matrix(&sets, &v, &t).unwrap();
        let mut other = vec![0.0; 5];
        for k in 0..5 {
            for d in 0..5 {
                let mut s = 0.0;
                for j in 0..3 {
                    s += t.vectors()[(d, k * 5 + j)];
                }
                let expect = s / 3.0;
                assert!((m.rows()[(k, d)] - expect).abs() < 1e-14);
                other[d] += expect / 5.0;
            }
        }
        for d in 0..5 {
            assert!((m.rows()[(5, d)] - other[d]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn theme_matrix_ignores_seed_order(perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
            let (v, t) = random_lexicon(10, 4, 1);
            let base: Vec<String> = (0..6).map(|i| format!("w{i}")).collect();
            let shuffled: Vec<String> = perm.iter().map(|&i| base[i].clone()).collect();
            let a = init_theme_matrix(&[SeedSet::new("x", base)], &v, &t).unwrap();
            let b = init_theme_matrix(&[SeedSet::new("x", shuffled)], &v, &t).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    fn toy_matrix(rows: &[&[f64]]) -> ThemeMatrix {
        let d = rows[0].len();
        let mut m = DMatrix::zeros(rows.len() + 1, d);
        for (i, r) in rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(r);
        }
        let mut names: Vec<String> = (0..rows.len()).map(|i| format!("t{i}")).collect();
        names.push(OTHER.into());
        ThemeMatrix::new(names, m).unwrap()
    }

    #[test]
    fn self_similarity_wins() {
        let t = toy_matrix(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let x = DMatrix::from_column_slice(3, 1, &[0.0, 2.0, 0.0]);
        let th = init_assignments(&x, &t, 0.0).unwrap();
        assert!(th[(1, 0)] > th[(0, 0)] && th[(1, 0)] > th[(2, 0)]);
        assert_eq!(th[(3, 0)], 0.0);
    }

    #[test]
    fn equal_similarities_uniform() {
        let t = toy_matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let th = init_assignments(&x, &t, 0.0).unwrap();
        assert!((th[(0, 0)] - 0.5).abs() < 1e-15 && (th[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_document_rejected() {
        let t = toy_matrix(&[&[1.0, 0.0]]);
        let x = DMatrix::zeros(2, 1);
        assert!(init_assignments(&x, &t, 0.1).is_err());
    }

    #[test]
    fn assignments_match_recomputation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let t = toy_matrix(&refs);
        let x = DMatrix::from_fn(6, 20, |_, _| rng.random_range(-1.0..1.0));
        let th = init_assignments(&x, &t, 0.1).unwrap();

        let cos = |a: &[f64], b: &[f64]| {
            let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
            let na: f64 = a.iter().map(|p| p * p).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|p| p * p).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        let mut maxima = Vec::new();
        let mut soft = Vec::new();
        for j in 0..20 {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            let s: Vec<f64> = rows.iter().map(|r| cos(&col, r)).collect();
            let z: f64 = s.iter().map(|v| v.exp()).sum();
            soft.push(s.iter().map(|v| v.exp() / z).collect::<Vec<_>>());
            maxima.push(s.iter().cloned().fold(f64::MIN, f64::max));
        }
        let mut sorted = maxima.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // ceil(0.1 * 20) = 2
        let threshold = sorted[2];
        let mut others = 0;
        for j in 0..20 {
            if maxima[j] < threshold {
                others += 1;
                assert_eq!(th[(4, j)], 1.0);
                assert!((0..4).all(|i| th[(i, j)] == 0.0));
            } else {
                for i in 0..4 {
                    assert!((th[(i, j)] - soft[j][i]).abs() < 1e-12);
                }
                assert_eq!(th[(4, j)], 0.0);
            }
            assert!((th.column(j).sum() - 1.0).abs() < 1e-12);
        }
        assert_eq!(others, 2);
    }

    fn party_corpus() -> Corpus {
        // "common" in every doc, "left" only in party 0, "mild" in 3 of 5 vs
        // 2 of 5 documents, "rare" only once
        let docs = [
            (0, "common left mild rare"),
            (0, "common left mild"),
            (0, "common left mild"),
            (0, "common left"),
            (0, "common left"),
            (1, "common mild"),
            (1, "common mild"),
            (1, "common"),
            (1, "common"),
            (1, "common"),
        ];
        let src: String = docs
            .iter()
            .enumerate()
            .map(|(i, (l, t))| format!("{{\"id\":\"d{i}\",\"author\":\"a{i}\",\"text\":\"{t}\",\"label\":{l}}}\n"))
            .collect();
        parse_corpus(src.as_bytes()).unwrap()
    }

    #[test]
    fn one_sided_word_eliminated_and_balanced_kept() {
        let c = party_corpus();
        let kept = neutral_word_filter(&c, &["common", "left", "mild", "rare"], 1, 0.3).unwrap();
        assert!(kept.contains("common"));
        assert!(!kept.contains("left"));
        assert!(kept.contains("mild"));
        assert!(!kept.contains("rare"));
        let strict = neutral_word_filter(&c, &["common", "left", "mild", "rare"], 1, 0.1).unwrap();
        assert!(!strict.contains("mild"));
    }

    #[test]
    fn no_labels_is_an_error() {
        let c = parse_corpus(r#"{"id":"a","author":"x","text":"hi"}"#.as_bytes()).unwrap();
        assert!(neutral_word_filter(&c, &["hi"], 0, 1.0).is_err());
    }

    #[test]
    fn filter_matches_frequency_table_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vocab: Vec<String> = (0..30).map(|i| format!("v{i}")).collect();
        let mut texts = Vec::new();
        let mut src = String::new();
        for i in 0..60 {
            let label = i % 2;
            let n = rng.random_range(1..10);
            let toks: Vec<String> = (0..n)
                .map(|_| {
                    // party 1 leans toward the upper half of the vocabulary
                    let hi = if label == 1 { 30 } else { 20 };
                    vocab[rng.random_range(0..hi)].clone()
                })
                .collect();
            let text = toks.join(" ");
            src.push_str(&format!("{{\"id\":\"d{i}\",\"author\":\"a\",\"text\":\"{text}\",\"label\":{label}}}\n"));
            texts.push((label, toks));
        }
        let c = parse_corpus(src.as_bytes()).unwrap();
        for (alpha, beta) in [(0, 0.05), (3, 0.1), (5, 1.0)] {
            let got = neutral_word_filter(&c, &vocab, alpha, beta).unwrap();
            let mut expected = BTreeSet::new();
            for w in &vocab {
                let mut has = [0.0; 2];
                let mut tot = [0.0; 2];
                for (l, toks) in &texts {
                    tot[*l] += 1.0;
                    if toks.contains(w) {
                        has[*l] += 1.0;
                    }
                }
                let fr = [has[0] / tot[0], has[1] / tot[1]];
                if has[0] + has[1] > alpha as f64 && fr[0] > 0.0 && fr[1] > 0.0 && (fr[0] - fr[1]).abs() <= beta {
                    expected.insert(w.clone());
                }
            }
            assert_eq!(got, expected, "alpha={alpha} beta={beta}");
        }
        let wide = neutral_word_filter(&c, &vocab, 0, 0.2).unwrap();
        let narrow = neutral_word_filter(&c, &vocab, 0, 0.1).unwrap();
        assert!(narrow.is_subset(&wide));
        assert!(default_beta(&c, &vocab).unwrap() > 0.0);
    }

    #[test]
    fn tag_assignments_are_one_hot() {
        let c = parse_corpus(
            "{\"id\":\"a\",\"author\":\"x\",\"text\":\"t\",\"theme\":\"t1\"}\n{\"id\":\"b\",\"author\":\"x\",\"text\":\"t\"}"
                .as_bytes(),
        )
        .unwrap();
        let t = toy_matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let th = assignments_from_tags(&c, &t).unwrap();
        assert_eq!(th.column(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
        assert_eq!(th.column(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn seed_file_roundtrip_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("seeds.json");
        let mut m = BTreeMap::new();
        m.insert("b".to_string(), words(&["x", "y"]));
        m.insert("a".to_string(), words(&["z"]));
        write_seed_sets(&p, &m).unwrap();
        let sets = load_seed_sets(&p).unwrap();
        assert_eq!(sets[0].theme, "a");
        assert_eq!(sets[1].seeds, words(&["x", "y"]));

        let t = toy_matrix(&[&[1.0, 2.0]]);
        let csv = dir.path().join("t.csv");
        t.write_csv(&csv).unwrap();
        let text = std::fs::read_to_string(csv).unwrap();
        assert_eq!(text, "t0,other\n1,0\n2,0\n");
    }
}
