//! Synthetic corpora drawn from the additive generative model
//! `x = c(theta) + f(theta, z) + eps`.
//!
//! Authors carry the party (mixture mode) and an ideal point; each of their
//! documents jitters around that point. Authors beyond their party center
//! can lean on the party's favoured themes, which makes themes a spurious
//! proxy for party among exactly the authors that extremity masking keeps.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};
use serde::Serialize;

use super::{Corpus, DocContent, Document};
use crate::embeddings::{EmbeddingTable, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub n_authors: usize,
    /// `K` centers of width `M`.
    pub mode_centers: Vec<DVector<f64>>,
    pub mode_weights: Vec<f64>,
    /// Std of author ideal points around their mode center.
    pub author_spread: f64,
    /// Std of document latents around their author's ideal point.
    pub doc_spread: f64,
    /// One `D x M` loading matrix per theme.
    pub loadings: Vec<DMatrix<f64>>,
    /// `m x D` theme matrix; row `t` is the context vector of theme `t`.
    pub themes: DMatrix<f64>,
    pub theme_names: Vec<String>,
    /// Std of the isotropic idiosyncratic noise.
    pub noise: f64,
    /// Extra weight an author puts on their party's favoured themes, scaled
    /// by the squared distance (in units of the half mode gap) by which the
    /// author lies beyond their mode center. Zero gives uniform theme choice.
    pub theme_skew: f64,
    /// Mass moved from the one-hot theme vector onto a flat Dirichlet draw.
    /// Zero keeps assignments one-hot.
    pub theta_mix: f64,
}

impl SynthConfig {
    /// Two-party benchmark: a 2-d latent whose first axis carries ideology
    /// (centers at +-1) and whose second is partisan-neutral variation;
    /// random theme rows of norm about 3 and loadings with unit-scale
    /// columns.
    pub fn benchmark(n_docs: usize, dim: usize, n_themes: usize, noise: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_7E3E);
        let row_scale = 3.0 / (dim as f64).sqrt();
        let themes = DMatrix::from_fn(n_themes, dim, |_, _| {
            row_scale * rng.sample::<f64, _>(StandardNormal)
        });
        let load_scale = 1.0 / (dim as f64).sqrt();
        let loadings = (0..n_themes)
            .map(|_| DMatrix::from_fn(dim, 2, |_, _| load_scale * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Self {
            n_docs,
            n_authors: (n_docs / 20).max(2),
            mode_centers: vec![
                DVector::from_column_slice(&[-1.0, 0.0]),
                DVector::from_column_slice(&[1.0, 0.0]),
            ],
            mode_weights: vec![0.5, 0.5],
            author_spread: 0.6,
            doc_spread: 0.5,
            loadings,
            themes,
            theme_names: (0..n_themes).map(|t| format!("theme_{t}")).collect(),
            noise,
            theme_skew: 4.0,
            theta_mix: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.themes.ncols()
    }

    pub fn latent_dim(&self) -> usize {
        self.mode_centers.first().map_or(0, DVector::len)
    }

    pub fn n_themes(&self) -> usize {
        self.themes.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.mode_centers.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (d, m, k) = (self.dim(), self.latent_dim(), self.n_modes());
        if d == 0 || m == 0 || k == 0 || self.n_themes() == 0 {
            return Err(Error::Config("synthetic dimensions must be positive".into()));
        }
        if self.n_docs == 0 || self.n_authors == 0 || self.n_authors > self.n_docs {
            return Err(Error::Config(
                "need 0 < authors <= documents in a synthetic corpus".into(),
            ));
        }
        if self.mode_centers.iter().any(|c| c.len() != m) {
            return Err(Error::Dimension {
                what: "mode center",
                expected: m,
                found: self.mode_centers.iter().map(DVector::len).find(|&l| l != m).unwrap(),
            });
        }
        if self.mode_weights.len() != k
            || self.mode_weights.iter().any(|w| *w < 0.0)
            || (self.mode_weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config("mode weights must be K non-negative values summing to 1".into()));
        }
        if self.loadings.len() != self.n_themes()
            || self.loadings.iter().any(|a| a.nrows() != d || a.ncols() != m)
        {
            return Err(Error::Config(format!(
                "need {} loading matrices of shape {d}x{m}",
                self.n_themes()
            )));
        }
        if self.theme_names.len() != self.n_themes() {
            return Err(Error::Dimension {
                what: "theme names",
                expected: self.n_themes(),
                found: self.theme_names.len(),
            });
        }
        for (name, v) in [
            ("noise", self.noise),
            ("author_spread", self.author_spread),
            ("doc_spread", self.doc_spread),
            ("theme_skew", self.theme_skew),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be finite and non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.theta_mix) {
            return Err(Error::invalid("theta_mix", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Unit vector from the first to the second mode center, and their
    /// midpoint.
    fn ideology_axis(&self) -> (DVector<f64>, DVector<f64>, f64) {
        let m = self.latent_dim();
        if self.n_modes() < 2 {
            let mut u = DVector::zeros(m);
            u[0] = 1.0;
            return (u, self.mode_centers[0].clone(), 1.0);
        }
        let diff = &self.mode_centers[1] - &self.mode_centers[0];
        let half = diff.norm() / 2.0;
        let mid = (&self.mode_centers[0] + &self.mode_centers[1]) / 2.0;
        (diff / (2.0 * half), mid, half)
    }
}

/// Ground truth of one synthetic document; `x = c + f + eps` where `eps` is
/// stored as the realised residual `(x - c) - f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocTruth {
    pub id: String,
    pub theme: usize,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub c: Vec<f64>,
    pub f: Vec<f64>,
    pub eps: Vec<f64>,
    pub label: Option<u8>,
    pub extremity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub docs: Vec<DocTruth>,
    /// Signed projection of each author's mean latent onto the ideology
    /// axis, measured from the midpoint between the first two modes.
    pub author_scores: BTreeMap<String, f64>,
    /// Mode index of each author.
    pub author_modes: BTreeMap<String, usize>,
}

fn dirichlet_flat(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let g = Gamma::new(1.0, 1.0).expect("valid gamma");
    let draws: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
    let s: f64 = draws.iter().sum();
    draws.into_iter().map(|v| v / s).collect()
}

fn categorical(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Draws a labeled corpus and its ground truth. Document `i` belongs to
/// author `i mod n_authors`. Labels are the author's mode when `K = 2`.
pub fn synthesize_corpus(cfg: &SynthConfig, seed: u64) -> Result<(Corpus, SynthTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, m, n_themes, k) = (cfg.dim(), cfg.latent_dim(), cfg.n_themes(), cfg.n_modes());
    let (axis, mid, half) = cfg.ideology_axis();
    let author_normal = Normal::new(0.0, cfg.author_spread).expect("checked spread");
    let doc_normal = Normal::new(0.0, cfg.doc_spread).expect("checked spread");
    let noise = Normal::new(0.0, cfg.noise).expect("checked noise");

    struct Author {
        mode: usize,
        theme_weights: Vec<f64>,
        ideal: DVector<f64>,
    }
    let authors: Vec<Author> = (0..cfg.n_authors)
        .map(|_| {
            let mode = categorical(&cfg.mode_weights, &mut rng);
            let ideal = &cfg.mode_centers[mode]
                + DVector::from_fn(m, |_, _| author_normal.sample(&mut rng));
            // only authors beyond their party center lean on party themes
            let excess = ((&ideal - &mid).dot(&axis).abs() / half - 1.0).max(0.0);
            let theme_weights = (0..n_themes)
                .map(|t| {
                    if t % k == mode {
                        1.0 + cfg.theme_skew * excess * excess
                    } else {
                        1.0
                    }
                })
                .collect();
            Author {
                mode,
                theme_weights,
                ideal,
            }
        })
        .collect();

    let mut docs = Vec::with_capacity(cfg.n_docs);
    let mut truths = Vec::with_capacity(cfg.n_docs);
    for i in 0..cfg.n_docs {
        let a = &authors[i % cfg.n_authors];
        let theme = categorical(&a.theme_weights, &mut rng);
        let z = &a.ideal + DVector::from_fn(m, |_, _| doc_normal.sample(&mut rng));
        let mut theta = vec![0.0; n_themes];
        theta[theme] = 1.0;
        if cfg.theta_mix > 0.0 {
            let dir = dirichlet_flat(n_themes, &mut rng);
            for (t, v) in theta.iter_mut().enumerate() {
                *v = (1.0 - cfg.theta_mix) * *v + cfg.theta_mix * dir[t];
            }
        }
        let theta_v = DVector::from_column_slice(&theta);
        let c = cfg.themes.tr_mul(&theta_v);
        let f = &cfg.loadings[theme] * &z;
        let e = DVector::from_fn(d, |_, _| noise.sample(&mut rng));
        let x = &c + &f + &e;
        let eps = (&x - &c) - &f;
        let id = format!("doc{i:06}");
        docs.push(Document {
            id: id.clone(),
            author: format!("author{:04}", i % cfg.n_authors),
            content: DocContent::Embedding(x.iter().copied().collect()),
            label: (k == 2).then_some(a.mode as u8),
            extremity: None,
            group: None,
            theme: Some(cfg.theme_names[theme].clone()),
        });
        truths.push(DocTruth {
            id,
            theme,
            z: z.iter().copied().collect(),
            theta,
            c: c.iter().copied().collect(),
            f: f.iter().copied().collect(),
            eps: eps.iter().copied().collect(),
            label: (k == 2).then_some(a.mode as u8),
            extremity: 0.0,
        });
    }

    // author-level scores from realised document latents
    let mut sums: Vec<(DVector<f64>, usize)> = vec![(DVector::zeros(m), 0); cfg.n_authors];
    for (i, t) in truths.iter().enumerate() {
        let s = &mut sums[i % cfg.n_authors];
        s.0 += DVector::from_column_slice(&t.z);
        s.1 += 1;
    }
    let scores: Vec<f64> = sums
        .iter()
        .map(|(s, n)| (s / *n as f64 - &mid).dot(&axis))
        .collect();
    let groups = tercile_groups(&scores, &authors.iter().map(|a| a.mode).collect::<Vec<_>>());
    for (i, (doc, truth)) in docs.iter_mut().zip(truths.iter_mut()).enumerate() {
        let a = i % cfg.n_authors;
        doc.extremity = Some(scores[a].abs());
        doc.group = Some(groups[a].clone());
        truth.extremity = scores[a].abs();
    }

    let author_scores = (0..cfg.n_authors)
        .map(|a| (format!("author{a:04}"), scores[a]))
        .collect();
    let author_modes = authors
        .iter()
        .enumerate()
        .map(|(a, au)| (format!("author{a:04}"), au.mode))
        .collect();
    let corpus = Corpus::new(docs)?;
    Ok((
        corpus,
        SynthTruth {
            docs: truths,
            author_scores,
            author_modes,
        },
    ))
}

/// Seven-point style tag from the extremity tercile within each party.
fn tercile_groups(scores: &[f64], modes: &[usize]) -> Vec<String> {
    let mut out = vec![String::new(); scores.len()];
    let parties: Vec<usize> = {
        let mut p = modes.to_vec();
        p.sort();
        p.dedup();
        p
    };
    for party in parties {
        let mut members: Vec<usize> = (0..scores.len()).filter(|&a| modes[a] == party).collect();
        members.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));
        let side = if party == 0 { "liberal" } else { "conservative" };
        let n = members.len();
        for (rank, a) in members.into_iter().enumerate() {
            out[a] = if rank * 3 < n {
                format!("extremely {side}")
            } else if rank * 3 < 2 * n {
                side.to_string()
            } else {
                format!("slightly {side}")
            };
        }
    }
    out
}

/// Word vectors clustered around the synthetic theme rows, plus a seed list
/// per theme.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthLexicon {
    pub vocab: Vocabulary,
    pub table: EmbeddingTable,
    pub seeds: BTreeMap<String, Vec<String>>,
}

/// For each theme, `words_per_theme` words scattered around its row
/// (relative spread `spread`) of which the first five are seeds; then
/// `filler` unrelated words.
pub fn synthesize_lexicon(
    cfg: &SynthConfig,
    words_per_theme: usize,
    filler: usize,
    spread: f64,
    seed: u64,
) -> Result<SynthLexicon> {
    cfg.validate()?;
    if words_per_theme == 0 {
        return Err(Error::invalid("words_per_theme", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cfg.dim();
    let mut vocab = Vocabulary::new();
    let mut data = Vec::new();
    let mut seeds = BTreeMap::new();
    let mut mean_norm = 0.0;
    for t in 0..cfg.n_themes() {
        let row = cfg.themes.row(t).transpose();
        let sd = spread * row.norm() / (d as f64).sqrt();
        mean_norm += row.norm() / cfg.n_themes() as f64;
        let mut theme_seeds = Vec::new();
        for j in 0..words_per_theme {
            let word = format!("{}_w{j}", cfg.theme_names[t]);
            vocab.insert(&word);
            data.extend(row.iter().map(|v| v + sd * rng.sample::<f64, _>(StandardNormal)));
            if j < 5 {
                theme_seeds.push(word);
            }
        }
        seeds.insert(cfg.theme_names[t].clone(), theme_seeds);
    }
    let filler_sd = mean_norm / (d as f64).sqrt();
    for j in 0..filler {
        vocab.insert(&format!("filler{j}"));
        data.extend((0..d).map(|_| filler_sd * rng.sample::<f64, _>(StandardNormal)));
    }
    let table = EmbeddingTable::from_columns(DMatrix::from_vec(d, vocab.len(), data))?;
    Ok(SynthLexicon {
        vocab,
        table,
        seeds,
    })
}

/// One JSON object per document with the latent quantities behind it.
pub fn write_truth(path: impl AsRef<Path>, truth: &SynthTruth) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for t in &truth.docs {
        let line = serde_json::to_string(t).map_err(|e| Error::Data(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(noise: f64) -> SynthConfig {
        let mut cfg = SynthConfig::benchmark(400, 12, 3, noise, 1);
        cfg.n_authors = 40;
        cfg
    }

    #[test]
    fn exact_residual_identity() {
        let (corpus, truth) = synthesize_corpus(&small(0.3), 2).unwrap();
        for (d, t) in corpus.docs().iter().zip(&truth.docs) {
            let DocContent::Embedding(x) = &d.content else {
                panic!("synthetic documents carry embeddings")
            };
            for i in 0..x.len() {
                assert_eq!(((x[i] - t.c[i]) - t.f[i]) - t.eps[i], 0.0);
            }
        }
    }

    #[test]
    fn noiseless_center_latent_reconstructs() {
        let mut cfg = small(0.0);
        cfg.author_spread = 0.0;
        cfg.doc_spread = 0.0;
        let (corpus, truth) = synthesize_corpus(&cfg, 3).unwrap();
        for (d, t) in corpus.docs().iter().zip(&truth.docs) {
            let DocContent::Embedding(x) = &d.content else {
                unreachable!()
            };
            let center = &cfg.mode_centers[t.label.unwrap() as usize];
            assert_eq!(t.z.as_slice(), center.as_slice());
            // x = c + f exactly; only the rounding of the subtraction is left
            for i in 0..x.len() {
                assert_eq!(x[i], t.c[i] + t.f[i]);
                assert!(t.eps[i].abs() <= f64::EPSILON * (t.c[i].abs() + t.f[i].abs()));
            }
        }
    }

    #[test]
    fn symmetric_modes_give_balanced_labels() {
        let mut cfg = SynthConfig::benchmark(10_000, 4, 2, 0.1, 4);
        cfg.n_authors = 10_000;
        let (corpus, _) = synthesize_corpus(&cfg, 5).unwrap();
        let ones = corpus.docs().iter().filter(|d| d.label == Some(1)).count() as f64;
        let n = 10_000.0;
        assert!((ones - n / 2.0).abs() < 3.0 * (n * 0.25f64).sqrt());
    }

    #[test]
    fn noise_energy_tracks_sigma() {
        let cfg = SynthConfig::benchmark(4000, 20, 3, 0.3, 6);
        let (_, truth) = synthesize_corpus(&cfg, 7).unwrap();
        // mean ||eps||^2 / D estimates sigma^2; its sampling sd is
        // sigma^2 * sqrt(2 / (N D))
        let n = truth.docs.len() as f64;
        let mean: f64 = truth
            .docs
            .iter()
            .map(|t| t.eps.iter().map(|e| e * e).sum::<f64>() / 20.0)
            .sum::<f64>()
            / n;
        let sd = 0.09 * (2.0 / (n * 20.0)).sqrt();
        assert!((mean - 0.09).abs() < 3.0 * sd, "{mean}");
    }

    #[test]
    fn polarization_axis_matches_loading_times_center_gap() {
        let mut cfg = SynthConfig::benchmark(20_000, 10, 2, 0.3, 8);
        cfg.theme_skew = 0.0;
        cfg.n_authors = 2000;
        let (_, truth) = synthesize_corpus(&cfg, 9).unwrap();
        for theme in 0..2 {
            let mut sums = [DVector::<f64>::zeros(10), DVector::zeros(10)];
            let mut counts = [0usize; 2];
            for t in truth.docs.iter().filter(|t| t.theme == theme) {
                let l = t.label.unwrap() as usize;
                sums[l] += DVector::from_column_slice(&t.f);
                counts[l] += 1;
            }
            let pa = &sums[0] / counts[0] as f64 - &sums[1] / counts[1] as f64;
            let expect = &cfg.loadings[theme] * (&cfg.mode_centers[0] - &cfg.mode_centers[1]);
            // per-coordinate sd of the difference of means
            let var_z = cfg.author_spread.powi(2) + cfg.doc_spread.powi(2);
            for i in 0..10 {
                let row_sq: f64 = cfg.loadings[theme].row(i).iter().map(|v| v * v).sum();
                // authors cluster documents, so inflate by the cluster size
                let design = 1.0 + 9.0 * cfg.author_spread.powi(2) / var_z;
                let sd = (row_sq * var_z * design
                    * (1.0 / counts[0] as f64 + 1.0 / counts[1] as f64))
                    .sqrt();
                assert!((pa[i] - expect[i]).abs() < 4.0 * sd, "{} vs {}", pa[i], expect[i]);
            }
        }
    }

    #[test]
    fn groups_and_extremity_filled() {
        let (corpus, truth) = synthesize_corpus(&small(0.3), 10).unwrap();
        for d in corpus.docs() {
            assert!(d.extremity.unwrap() >= 0.0);
            let g = d.group.as_deref().unwrap();
            let side = if d.label == Some(0) { "liberal" } else { "conservative" };
            assert!(g.ends_with(side), "{g}");
        }
        assert_eq!(truth.author_scores.len(), 40);
    }

    #[test]
    fn rejects_inconsistent_config() {
        let mut cfg = small(0.3);
        cfg.loadings.pop();
        assert!(synthesize_corpus(&cfg, 1).is_err());
        let mut cfg = small(0.3);
        cfg.mode_weights = vec![0.7, 0.7];
        assert!(synthesize_corpus(&cfg, 1).is_err());
        let mut cfg = small(-1.0);
        cfg.noise = -1.0;
        assert!(synthesize_corpus(&cfg, 1).is_err());
    }

    #[test]
    fn lexicon_seeds_sit_near_theme_rows() {
        let cfg = small(0.3);
        let lex = synthesize_lexicon(&cfg, 10, 30, 0.2, 3).unwrap();
        assert_eq!(lex.vocab.len(), 3 * 10 + 30);
        for (t, name) in cfg.theme_names.iter().enumerate() {
            let seeds = &lex.seeds[name];
            assert_eq!(seeds.len(), 5);
            let row: Vec<f64> = cfg.themes.row(t).iter().copied().collect();
            for s in seeds {
                let v = lex.table.vector(lex.vocab.get(s).unwrap());
                let cos = crate::embeddings::cosine_similarity(v.as_slice(), &row).unwrap();
                assert!(cos > 0.9, "{cos}");
            }
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = synthesize_corpus(&small(0.3), 11).unwrap();
        let b = synthesize_corpus(&small(0.3), 11).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
