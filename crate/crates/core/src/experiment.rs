//! Synthetic benchmark runs shared by the binary, the examples and the
//! acceptance tests: draw a corpus with its lexicon, seed the theme matrix,
//! mask, train and score.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::corpus::{
    mask_biased_extremity, mask_unbiased, mask_weighted, synthesize_corpus, synthesize_lexicon, Corpus, MaskState,
    Protocol, SynthConfig, SynthLexicon, SynthTruth,
};
use crate::analysis::{center_separation, orthogonality_angle, pca_metrics, polarization_axis};
use crate::error::{Error, Result};
use crate::model::{
    aggregate_by_author, build_model, decompose, predict_logits, train, train_baseline, BaselineConfig, BbbgConfig,
    BbbgParams, LayerShapes, TrainData, TrainHistory, Variant,
};
use crate::themes::{assignments_from_tags, expand_seeds, init_theme_matrix, SeedSet, ThemeMatrix};

/// Size and difficulty of a synthetic benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_docs: usize,
    pub dim: usize,
    pub n_themes: usize,
    pub noise: f64,
    /// Authors; `None` keeps the benchmark default of one per 20 documents.
    pub n_authors: Option<usize>,
    pub theme_skew: f64,
    /// Std of author ideal points around their party center (centers sit at
    /// distance 1 from the midpoint).
    pub author_spread: f64,
    /// Std of document latents around their author.
    pub doc_spread: f64,
    /// Typical norm of a loading column, i.e. of the position shift per unit
    /// of latent.
    pub loading_norm: f64,
    /// Typical norm of a theme row.
    pub theme_norm: f64,
    pub words_per_theme: usize,
    pub filler_words: usize,
    /// Neighbours added to each seed list before averaging.
    pub seed_expansion: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_docs: 2000,
            dim: 50,
            n_themes: 5,
            noise: 0.3,
            n_authors: None,
            theme_skew: 100.0,
            author_spread: 0.3,
            doc_spread: 0.3,
            loading_norm: 8.0,
            theme_norm: 32.0,
            words_per_theme: 20,
            filler_words: 200,
            seed_expansion: 5,
        }
    }
}

impl SynthSpec {
    pub fn config(&self, seed: u64) -> SynthConfig {
        let mut cfg = SynthConfig::benchmark(self.n_docs, self.dim, self.n_themes, self.noise, seed);
        if let Some(a) = self.n_authors {
            cfg.n_authors = a;
        }
        cfg.theme_skew = self.theme_skew;
        cfg.author_spread = self.author_spread;
        cfg.doc_spread = self.doc_spread;
        // the benchmark draws unit loading columns and rows of norm 3
        for a in &mut cfg.loadings {
            *a *= self.loading_norm;
        }
        cfg.themes *= self.theme_norm / 3.0;
        cfg
    }
}

/// A drawn corpus with everything needed to train on it.
#[derive(Debug, Clone)]
pub struct SynthBench {
    pub config: SynthConfig,
    pub corpus: Corpus,
    pub truth: SynthTruth,
    pub lexicon: SynthLexicon,
    /// `D x N` document vectors.
    pub x: DMatrix<f64>,
    pub themes: ThemeMatrix,
    /// One-hot initial assignments from the theme tags (`m x N`).
    pub theta0: DMatrix<f64>,
}

pub fn synth_bench(spec: &SynthSpec, seed: u64) -> Result<SynthBench> {
    let config = spec.config(seed);
    let (corpus, truth) = synthesize_corpus(&config, seed)?;
    let lexicon = synthesize_lexicon(&config, spec.words_per_theme, spec.filler_words, 0.3, seed ^ 0x1E)?;
    let themes = seeded_themes(&lexicon, spec.seed_expansion)?;
    let x = corpus.embed(None, config.dim())?;
    let theta0 = assignments_from_tags(&corpus, &themes)?;
    Ok(SynthBench {
        config,
        corpus,
        truth,
        lexicon,
        x,
        themes,
        theta0,
    })
}

/// Theme matrix from the lexicon's seed lists after expansion.
pub fn seeded_themes(lexicon: &SynthLexicon, expansion: usize) -> Result<ThemeMatrix> {
    let sets = lexicon
        .seeds
        .iter()
        .map(|(t, s)| expand_seeds(&SeedSet::new(t.clone(), s.clone()), &lexicon.vocab, &lexicon.table, expansion))
        .collect::<Result<Vec<_>>>()?;
    init_theme_matrix(&sets, &lexicon.vocab, &lexicon.table)
}

/// Masks with any size-driven protocol.
pub fn mask(corpus: &Corpus, protocol: Protocol, sup: f64, seed: u64) -> Result<MaskState> {
    match protocol {
        Protocol::Unbiased => mask_unbiased(corpus, sup, seed),
        Protocol::Biased => mask_biased_extremity(corpus, sup),
        Protocol::Weighted => mask_weighted(corpus, sup, seed),
        Protocol::Theme => Err(Error::Config("theme masking takes a theme list, not a level".into())),
    }
}

/// Model settings for a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub latent_dim: usize,
    pub n_modes: usize,
    /// Multiplier on every hidden width.
    pub width_scale: f64,
    pub variant: Variant,
    pub epochs: usize,
    pub anneal_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Weight of the anchor that keeps inferred theme proportions near
    /// their initial values.
    pub theta_weight: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            latent_dim: 10,
            n_modes: 2,
            width_scale: 0.125,
            variant: Variant::Bbbg,
            epochs: 60,
            anneal_epochs: 30,
            learning_rate: 0.001,
            batch_size: 32,
            theta_weight: 1000.0,
        }
    }
}

impl ModelSpec {
    pub fn config(&self, bench: &SynthBench, seed: u64) -> BbbgConfig {
        BbbgConfig {
            input_dim: bench.x.nrows(),
            latent_dim: self.latent_dim,
            n_themes: bench.themes.len(),
            n_modes: self.n_modes,
            shapes: LayerShapes::default().scaled(self.width_scale),
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            anneal_epochs: self.anneal_epochs,
            batch_size: self.batch_size,
            theta_weight: self.theta_weight,
            variant: self.variant,
            seed,
            ..BbbgConfig::default()
        }
    }

    /// Dense baseline at the same width scale, epochs and batch size.
    pub fn baseline(&self, seed: u64) -> BaselineConfig {
        let base = BaselineConfig::default();
        BaselineConfig {
            hidden: base
                .hidden
                .iter()
                .map(|&h| ((h as f64 * self.width_scale).round() as usize).max(1))
                .collect(),
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            ..base
        }
    }
}

/// Trained model and its held-out scores.
#[derive(Debug, Clone)]
pub struct Fit {
    pub params: BbbgParams,
    pub history: TrainHistory,
    /// Logit of every document.
    pub logits: Vec<f64>,
    /// Accuracy on labeled documents that were masked.
    pub heldout_accuracy: f64,
}

pub fn fit_bbbg(bench: &SynthBench, mask: &MaskState, cfg: &BbbgConfig) -> Result<Fit> {
    let with_context = cfg.variant == Variant::Bbbg;
    let t0 = bench.themes.rows();
    let params = build_model(cfg, with_context.then_some(t0), cfg.seed)?;
    let data = TrainData {
        x: &bench.x,
        labels: mask.training_labels(&bench.corpus),
        theta0: with_context.then_some(&bench.theta0),
        t0: with_context.then_some(t0),
    };
    let (params, history) = train(params, &data, cfg, cfg.seed)?;
    let logits = predict_logits(&params, &bench.x)?;
    let heldout_accuracy = heldout_accuracy(&logits, &bench.corpus, mask)?;
    Ok(Fit {
        params,
        history,
        logits,
        heldout_accuracy,
    })
}

/// Dense baseline trained on the same supervised documents.
pub fn fit_baseline(bench: &SynthBench, mask: &MaskState, cfg: &BaselineConfig) -> Result<f64> {
    let model = train_baseline(&bench.x, &mask.training_labels(&bench.corpus), cfg)?;
    heldout_accuracy(&model.logits(&bench.x)?, &bench.corpus, mask)
}

/// Accuracy of `logit >= 0` on labeled documents outside the mask.
pub fn heldout_accuracy(logits: &[f64], corpus: &Corpus, mask: &MaskState) -> Result<f64> {
    let eval = mask.held_out(corpus);
    if eval.is_empty() {
        return Err(Error::Empty("held-out set"));
    }
    let hits = eval
        .iter()
        .filter(|&&i| Some(u8::from(logits[i] >= 0.0)) == corpus.docs()[i].label)
        .count();
    Ok(hits as f64 / eval.len() as f64)
}

/// Author slants paired with their true ideology scores, in author order.
pub fn slant_pairs(logits: &[f64], bench: &SynthBench) -> Result<(Vec<f64>, Vec<f64>)> {
    let slants = aggregate_by_author(logits, bench.corpus.authors(), 0.5)?;
    let mut pairs: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for (a, s) in &slants {
        let truth = bench
            .truth
            .author_scores
            .get(a)
            .ok_or_else(|| Error::Data(format!("no true score for author `{a}`")))?;
        pairs.insert(a, (s.slant, *truth));
    }
    Ok(pairs.values().copied().unzip())
}

/// Per-theme geometry of learned position vectors against raw document
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ThemeGeometry {
    pub theme: String,
    /// Documents per label inside the theme.
    pub counts: [usize; 2],
    /// Degrees between the learned context vector and the polarization axis;
    /// `None` without a context branch.
    pub angle: Option<f64>,
    pub pc1_x: f64,
    pub pc1_f: f64,
    /// Rank at `rank_threshold` of the raw and filtered vectors.
    pub rank_x: usize,
    pub rank_f: usize,
    pub separation_x: f64,
    pub separation_f: f64,
}

/// Geometry of every theme tag in `corpus` that has at least two labeled
/// documents from each party. `theme_names` orders the rows of the learned
/// theme matrix; the angle needs the two-branch model and a tag found there.
pub fn theme_geometry(
    corpus: &Corpus,
    x: &DMatrix<f64>,
    theme_names: &[String],
    params: &BbbgParams,
    rank_threshold: f64,
) -> Result<Vec<ThemeGeometry>> {
    let dec = decompose(params, x)?;
    let mut out = Vec::new();
    for name in corpus.theme_tags() {
        let members: Vec<usize> = corpus
            .docs()
            .iter()
            .enumerate()
            .filter(|(_, d)| d.theme.as_deref() == Some(name.as_str()) && d.label.is_some())
            .map(|(i, _)| i)
            .collect();
        let labels: Vec<u8> = members.iter().map(|&i| corpus.docs()[i].label.expect("filtered")).collect();
        let counts = [
            labels.iter().filter(|&&l| l == 0).count(),
            labels.iter().filter(|&&l| l == 1).count(),
        ];
        if counts[0] < 2 || counts[1] < 2 {
            continue;
        }
        let xs = x.select_columns(&members);
        let fs = dec.position.select_columns(&members);
        let angle = match (&params.context, theme_names.iter().position(|t| *t == name)) {
            (Some(ctx), Some(t)) => {
                let pa = polarization_axis(&fs, &labels, &vec![0; members.len()], 0)?;
                let c: Vec<f64> = ctx.themes.row(t).iter().copied().collect();
                Some(orthogonality_angle(&c, pa.axis.as_slice())?)
            }
            _ => None,
        };
        let px = pca_metrics(&xs, &[rank_threshold])?;
        let pf = pca_metrics(&fs, &[rank_threshold])?;
        out.push(ThemeGeometry {
            theme: name,
            counts,
            angle,
            pc1_x: px.pc1_ratio(),
            pc1_f: pf.pc1_ratio(),
            rank_x: px.ranks[0].1,
            rank_f: pf.ranks[0].1,
            separation_x: center_separation(&xs, &labels)?,
            separation_f: center_separation(&fs, &labels)?,
        });
    }
    Ok(out)
}
