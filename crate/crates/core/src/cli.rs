//! Config-driven batch front end behind the `bbbg` binary.
//!
//! A run is `bbbg <command> [--config FILE] [--key value | --key=value]...`.
//! The config file holds flat `key = value` lines, `#` starts a comment, and
//! flags override file values. Every run writes the resolved configuration
//! to `config.<command>.txt` in the output directory, and that file parses
//! back to the same configuration.
//!
//! Unset input paths default to the conventional file names inside
//! `out_dir`, so `synth`, `mask`, `train`, `eval`, `analyze` and
//! `neighborhood` chain with nothing but a shared `out_dir`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Display};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde_json::json;

use crate::analysis::{
    accuracy, context_neighborhood, external_correlation, pca_metrics, rank_deviation,
};
use crate::corpus::{load_corpus, mask_by_theme, write_corpus, write_truth, Corpus, MaskState, Protocol};
use crate::embeddings::{load_embeddings, write_embeddings, EmbeddingTable, Vocabulary};
use crate::error::{Error, Result};
use crate::experiment::{mask, synth_bench, theme_geometry, SynthSpec};
use crate::model::{
    aggregate_by_author, build_model, decompose, load_checkpoint, predict_logits, save_checkpoint, train,
    train_baseline, BaselineConfig, BbbgConfig, Checkpoint, LayerShapes, TrainData, Variant, CHECKPOINT_VERSION,
};
use crate::themes::{
    assignments_from_tags, default_beta, expand_seeds, init_assignments, init_theme_matrix, load_seed_sets,
    neutral_word_filter, write_seed_sets, write_theme_csv, SeedSet, ThemeMatrix,
};

// Fixed offsets from the global seed, one per consumer of randomness.
const SYNTH_OFFSET: u64 = 0;
const MASK_OFFSET: u64 = 1;
const TRAIN_OFFSET: u64 = 2;
const BASELINE_OFFSET: u64 = 3;

pub const USAGE: &str = "usage: bbbg <synth|mask|train|eval|analyze|neighborhood> [--config FILE] [--key value]...";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Mask,
    Train,
    Eval,
    Analyze,
    Neighborhood,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "synth" => Command::Synth,
            "mask" => Command::Mask,
            "train" => Command::Train,
            "eval" => Command::Eval,
            "analyze" => Command::Analyze,
            "neighborhood" => Command::Neighborhood,
            _ => return Err(Error::invalid("command", format!("unknown command `{s}`"))),
        })
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Synth => "synth",
            Command::Mask => "mask",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Analyze => "analyze",
            Command::Neighborhood => "neighborhood",
        })
    }
}

/// How training derives the initial theme proportions of each document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignments {
    /// Tags when every document carries a known theme tag, cosine otherwise.
    Auto,
    Tags,
    Cosine,
}

impl FromStr for Assignments {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Assignments::Auto),
            "tags" => Ok(Assignments::Tags),
            "cosine" => Ok(Assignments::Cosine),
            _ => Err(Error::invalid("assignments", format!("`{s}` is not auto, tags or cosine"))),
        }
    }
}

impl Display for Assignments {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assignments::Auto => "auto",
            Assignments::Tags => "tags",
            Assignments::Cosine => "cosine",
        })
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    pub seeds: PathBuf,
    pub checkpoint: PathBuf,
    pub mask: PathBuf,
    /// `author,score` CSV used by `analyze` when the file exists.
    pub author_scores: PathBuf,

    pub n_docs: usize,
    /// Width of document and word vectors.
    pub dim: usize,
    pub n_themes: usize,
    pub noise: f64,
    /// 0 picks one author per 20 documents.
    pub n_authors: usize,
    pub theme_skew: f64,
    pub author_spread: f64,
    pub doc_spread: f64,
    pub loading_norm: f64,
    pub theme_norm: f64,
    pub words_per_theme: usize,
    pub filler_words: usize,

    pub protocol: Protocol,
    pub sup: f64,
    /// Themes whose documents keep their labels under theme masking.
    pub mask_themes: Vec<String>,

    pub latent_dim: usize,
    pub n_modes: usize,
    pub width_scale: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub anneal_epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub theta_weight: f64,
    pub theme_weight: f64,
    pub pseudo_mean: f64,
    pub pseudo_std: f64,
    pub variant: Variant,

    pub seed_expansion: usize,
    pub assignments: Assignments,
    pub other_quantile: f64,
    /// Drop expansion words that fail the neutral-word test on text corpora.
    pub neutral_filter: bool,
    pub neutral_alpha: usize,
    /// `None` derives the threshold from the candidate words.
    pub neutral_beta: Option<f64>,

    pub threshold: f64,
    /// Also train and score the dense baseline in `eval`.
    pub baseline: bool,
    pub k: usize,
    pub rank_threshold: f64,
}

impl RunConfig {
    /// Defaults for `command`, with input paths resolved inside `out_dir`.
    pub fn new(command: Command) -> Self {
        let synth = SynthSpec::default();
        let model = BbbgConfig::default();
        let out_dir = PathBuf::from("out");
        let mut cfg = Self {
            command,
            seed: 0,
            corpus: PathBuf::new(),
            embeddings: PathBuf::new(),
            seeds: PathBuf::new(),
            checkpoint: PathBuf::new(),
            mask: PathBuf::new(),
            author_scores: PathBuf::new(),
            out_dir,
            n_docs: synth.n_docs,
            dim: synth.dim,
            n_themes: synth.n_themes,
            noise: synth.noise,
            n_authors: 0,
            theme_skew: synth.theme_skew,
            author_spread: synth.author_spread,
            doc_spread: synth.doc_spread,
            loading_norm: synth.loading_norm,
            theme_norm: synth.theme_norm,
            words_per_theme: synth.words_per_theme,
            filler_words: synth.filler_words,
            protocol: Protocol::Biased,
            sup: 0.05,
            mask_themes: Vec::new(),
            latent_dim: model.latent_dim,
            n_modes: model.n_modes,
            width_scale: 1.0,
            learning_rate: model.learning_rate,
            epochs: model.epochs,
            anneal_epochs: model.anneal_epochs,
            batch_size: model.batch_size,
            l2: model.l2,
            theta_weight: model.theta_weight,
            theme_weight: model.theme_weight,
            pseudo_mean: model.pseudo_mean,
            pseudo_std: model.pseudo_std,
            variant: model.variant,
            seed_expansion: synth.seed_expansion,
            assignments: Assignments::Auto,
            other_quantile: 0.1,
            neutral_filter: false,
            neutral_alpha: 0,
            neutral_beta: None,
            threshold: 0.5,
            baseline: false,
            k: 10,
            rank_threshold: 0.01,
        };
        cfg.resolve_paths();
        cfg
    }

    fn resolve_paths(&mut self) {
        let out = self.out_dir.clone();
        for (p, name) in [
            (&mut self.corpus, "corpus.jsonl"),
            (&mut self.embeddings, "embeddings.txt"),
            (&mut self.seeds, "seeds.json"),
            (&mut self.checkpoint, "checkpoint.json"),
            (&mut self.mask, "mask.json"),
            (&mut self.author_scores, "author_scores.csv"),
        ] {
            if p.as_os_str().is_empty() {
                *p = out.join(name);
            }
        }
    }

    /// Every key with its value as text, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = |p: &PathBuf| p.display().to_string();
        vec![
            ("command", self.command.to_string()),
            ("seed", self.seed.to_string()),
            ("out_dir", p(&self.out_dir)),
            ("corpus", p(&self.corpus)),
            ("embeddings", p(&self.embeddings)),
            ("seeds", p(&self.seeds)),
            ("checkpoint", p(&self.checkpoint)),
            ("mask", p(&self.mask)),
            ("author_scores", p(&self.author_scores)),
            ("n_docs", self.n_docs.to_string()),
            ("dim", self.dim.to_string()),
            ("n_themes", self.n_themes.to_string()),
            ("noise", self.noise.to_string()),
            ("n_authors", self.n_authors.to_string()),
            ("theme_skew", self.theme_skew.to_string()),
            ("author_spread", self.author_spread.to_string()),
            ("doc_spread", self.doc_spread.to_string()),
            ("loading_norm", self.loading_norm.to_string()),
            ("theme_norm", self.theme_norm.to_string()),
            ("words_per_theme", self.words_per_theme.to_string()),
            ("filler_words", self.filler_words.to_string()),
            ("protocol", self.protocol.to_string()),
            ("sup", self.sup.to_string()),
            ("mask_themes", self.mask_themes.join(",")),
            ("latent_dim", self.latent_dim.to_string()),
            ("n_modes", self.n_modes.to_string()),
            ("width_scale", self.width_scale.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("epochs", self.epochs.to_string()),
            ("anneal_epochs", self.anneal_epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("l2", self.l2.to_string()),
            ("theta_weight", self.theta_weight.to_string()),
            ("theme_weight", self.theme_weight.to_string()),
            ("pseudo_mean", self.pseudo_mean.to_string()),
            ("pseudo_std", self.pseudo_std.to_string()),
            ("variant", self.variant.to_string()),
            ("seed_expansion", self.seed_expansion.to_string()),
            ("assignments", self.assignments.to_string()),
            ("other_quantile", self.other_quantile.to_string()),
            ("neutral_filter", self.neutral_filter.to_string()),
            ("neutral_alpha", self.neutral_alpha.to_string()),
            ("neutral_beta", self.neutral_beta.map_or("auto".to_string(), |b| b.to_string())),
            ("threshold", self.threshold.to_string()),
            ("baseline", self.baseline.to_string()),
            ("k", self.k.to_string()),
            ("rank_threshold", self.rank_threshold.to_string()),
        ]
    }

    /// Resolved configuration in the file format `parse_config` reads.
    pub fn emit(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "command" => self.command = v.parse()?,
            "seed" => self.seed = num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "corpus" => self.corpus = PathBuf::from(v),
            "embeddings" => self.embeddings = PathBuf::from(v),
            "seeds" => self.seeds = PathBuf::from(v),
            "checkpoint" => self.checkpoint = PathBuf::from(v),
            "mask" => self.mask = PathBuf::from(v),
            "author_scores" => self.author_scores = PathBuf::from(v),
            "n_docs" => self.n_docs = num(key, v)?,
            "dim" => self.dim = num(key, v)?,
            "n_themes" => self.n_themes = num(key, v)?,
            "noise" => self.noise = num(key, v)?,
            "n_authors" => self.n_authors = num(key, v)?,
            "theme_skew" => self.theme_skew = num(key, v)?,
            "author_spread" => self.author_spread = num(key, v)?,
            "doc_spread" => self.doc_spread = num(key, v)?,
            "loading_norm" => self.loading_norm = num(key, v)?,
            "theme_norm" => self.theme_norm = num(key, v)?,
            "words_per_theme" => self.words_per_theme = num(key, v)?,
            "filler_words" => self.filler_words = num(key, v)?,
            "protocol" => self.protocol = v.parse()?,
            "sup" => self.sup = num(key, v)?,
            "mask_themes" => {
                self.mask_themes = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "latent_dim" => self.latent_dim = num(key, v)?,
            "n_modes" => self.n_modes = num(key, v)?,
            "width_scale" => self.width_scale = num(key, v)?,
            "learning_rate" => self.learning_rate = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "anneal_epochs" => self.anneal_epochs = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "l2" => self.l2 = num(key, v)?,
            "theta_weight" => self.theta_weight = num(key, v)?,
            "theme_weight" => self.theme_weight = num(key, v)?,
            "pseudo_mean" => self.pseudo_mean = num(key, v)?,
            "pseudo_std" => self.pseudo_std = num(key, v)?,
            "variant" => self.variant = v.parse()?,
            "seed_expansion" => self.seed_expansion = num(key, v)?,
            "assignments" => self.assignments = v.parse()?,
            "other_quantile" => self.other_quantile = num(key, v)?,
            "neutral_filter" => self.neutral_filter = num(key, v)?,
            "neutral_alpha" => self.neutral_alpha = num(key, v)?,
            "neutral_beta" => {
                self.neutral_beta = if v == "auto" { None } else { Some(num(key, v)?) }
            }
            "threshold" => self.threshold = num(key, v)?,
            "baseline" => self.baseline = num(key, v)?,
            "k" => self.k = num(key, v)?,
            "rank_threshold" => self.rank_threshold = num(key, v)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sup > 0.0 && self.sup <= 1.0) {
            return Err(Error::invalid("sup", "must lie in (0, 1]"));
        }
        for (key, v) in [
            ("n_docs", self.n_docs),
            ("dim", self.dim),
            ("n_themes", self.n_themes),
            ("k", self.k),
        ] {
            if v == 0 {
                return Err(Error::invalid(key, "must be positive"));
            }
        }
        for (key, v) in [
            ("noise", self.noise),
            ("theme_skew", self.theme_skew),
            ("author_spread", self.author_spread),
            ("doc_spread", self.doc_spread),
            ("loading_norm", self.loading_norm),
            ("theme_norm", self.theme_norm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(key, "must be finite and non-negative"));
            }
        }
        if !(self.width_scale.is_finite() && self.width_scale > 0.0) {
            return Err(Error::invalid("width_scale", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.other_quantile) {
            return Err(Error::invalid("other_quantile", "must lie in [0, 1]"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("threshold", "must lie in (0, 1)"));
        }
        if !(self.rank_threshold > 0.0 && self.rank_threshold <= 1.0) {
            return Err(Error::invalid("rank_threshold", "must lie in (0, 1]"));
        }
        if self.protocol == Protocol::Theme && self.mask_themes.is_empty() && self.command == Command::Mask {
            return Err(Error::MissingKey("mask_themes".into()));
        }
        self.model_config(self.dim, self.n_themes + 1).validate()
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            n_docs: self.n_docs,
            dim: self.dim,
            n_themes: self.n_themes,
            noise: self.noise,
            n_authors: (self.n_authors > 0).then_some(self.n_authors),
            theme_skew: self.theme_skew,
            author_spread: self.author_spread,
            doc_spread: self.doc_spread,
            loading_norm: self.loading_norm,
            theme_norm: self.theme_norm,
            words_per_theme: self.words_per_theme,
            filler_words: self.filler_words,
            seed_expansion: self.seed_expansion,
        }
    }

    /// Model settings for `input_dim`-wide documents and `n_themes` themes
    /// counting `"other"`.
    pub fn model_config(&self, input_dim: usize, n_themes: usize) -> BbbgConfig {
        BbbgConfig {
            input_dim,
            latent_dim: self.latent_dim,
            n_themes,
            n_modes: self.n_modes,
            shapes: LayerShapes::default().scaled(self.width_scale),
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            anneal_epochs: self.anneal_epochs,
            batch_size: self.batch_size,
            l2: self.l2,
            theta_weight: self.theta_weight,
            theme_weight: self.theme_weight,
            pseudo_mean: self.pseudo_mean,
            pseudo_std: self.pseudo_std,
            seed: self.seed + TRAIN_OFFSET,
            variant: self.variant,
        }
    }

    /// Dense baseline at the same width scale, rate, epochs and batch size.
    pub fn baseline_config(&self) -> BaselineConfig {
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
            seed: self.seed + BASELINE_OFFSET,
            ..base
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: Display,
{
    v.parse()
        .map_err(|e: T::Err| Error::invalid(key, format!("`{v}`: {e}")))
}

fn is_known(key: &str) -> bool {
    RunConfig::new(Command::Synth).entries().iter().any(|(k, _)| *k == key)
}

/// Parses flat `key = value` text into pairs, rejecting unknown keys.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let k = k.trim();
        if !is_known(k) {
            return Err(Error::UnknownKey(k.to_string()));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Merges the config file text (if any) with flag overrides, which win.
pub fn parse_config(file: Option<&str>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut merged: BTreeMap<String, String> = BTreeMap::new();
    if let Some(text) = file {
        merged.extend(parse_pairs(text)?);
    }
    for (k, v) in overrides {
        if !is_known(k) {
            return Err(Error::UnknownKey(k.clone()));
        }
        merged.insert(k.clone(), v.clone());
    }
    let command: Command = merged
        .remove("command")
        .ok_or_else(|| Error::MissingKey("command".into()))?
        .parse()?;
    let mut cfg = RunConfig::new(command);
    // out_dir first so that unset paths resolve inside it
    let mut paths_set = BTreeSet::new();
    if let Some(v) = merged.remove("out_dir") {
        cfg.out_dir = PathBuf::from(v);
    }
    for (k, v) in &merged {
        cfg.set(k, v)?;
        paths_set.insert(k.as_str());
    }
    for (key, p) in [
        ("corpus", &mut cfg.corpus),
        ("embeddings", &mut cfg.embeddings),
        ("seeds", &mut cfg.seeds),
        ("checkpoint", &mut cfg.checkpoint),
        ("mask", &mut cfg.mask),
        ("author_scores", &mut cfg.author_scores),
    ] {
        if !paths_set.contains(key) {
            *p = PathBuf::new();
        }
    }
    cfg.resolve_paths();
    cfg.validate()?;
    Ok(cfg)
}

/// Reads command-line arguments (without the program name).
pub fn parse_args(args: &[String]) -> Result<RunConfig> {
    let mut overrides = Vec::new();
    let mut file = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if let Some(flag) = a.strip_prefix("--") {
            let (k, v) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| Error::Config(format!("flag `--{flag}` needs a value")))?;
                    (flag.to_string(), v.clone())
                }
            };
            if k == "config" {
                file = Some(PathBuf::from(v));
            } else {
                overrides.push((k, v));
            }
        } else if overrides.iter().any(|(k, _)| k == "command") {
            return Err(Error::Config(format!("unexpected argument `{a}`\n{USAGE}")));
        } else {
            overrides.push(("command".to_string(), a.clone()));
        }
    }
    let text = match &file {
        Some(p) => Some(read_input(p)?),
        None => None,
    };
    parse_config(text.as_deref(), &overrides)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    match parse_args(args).and_then(|cfg| execute(&cfg)) {
        Ok(written) => {
            for p in written {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::MissingKey(ref k) if k == "command") {
                eprintln!("{USAGE}");
            }
            e.exit_code()
        }
    }
}

/// Runs one command and returns the paths it wrote.
pub fn execute(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut written = match cfg.command {
        Command::Synth => run_synth(cfg)?,
        Command::Mask => run_mask(cfg)?,
        Command::Train => run_train(cfg)?,
        Command::Eval => run_eval(cfg)?,
        Command::Analyze => run_analyze(cfg)?,
        Command::Neighborhood => run_neighborhood(cfg)?,
    };
    let snapshot = cfg.out_dir.join(format!("config.{}.txt", cfg.command));
    write_text(&snapshot, &cfg.emit())?;
    written.push(snapshot);
    Ok(written)
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingPath(path.to_path_buf()))
    }
}

fn read_input(path: &Path) -> Result<String> {
    require(path)?;
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let bench = synth_bench(&cfg.synth_spec(), cfg.seed + SYNTH_OFFSET)?;
    let out = &cfg.out_dir;
    let paths = [
        out.join("corpus.jsonl"),
        out.join("truth.jsonl"),
        out.join("author_scores.csv"),
        out.join("embeddings.txt"),
        out.join("seeds.json"),
    ];
    write_corpus(&paths[0], &bench.corpus)?;
    write_truth(&paths[1], &bench.truth)?;
    let mut scores = String::from("author,score\n");
    for (a, s) in &bench.truth.author_scores {
        scores.push_str(&format!("{a},{s}\n"));
    }
    write_text(&paths[2], &scores)?;
    write_embeddings(&paths[3], &bench.lexicon.vocab, &bench.lexicon.table)?;
    write_seed_sets(&paths[4], &bench.lexicon.seeds)?;
    Ok(paths.to_vec())
}

fn run_mask(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    require(&cfg.corpus)?;
    let corpus = load_corpus(&cfg.corpus)?;
    let state = match cfg.protocol {
        Protocol::Theme => mask_by_theme(&corpus, &cfg.mask_themes)?,
        p => mask(&corpus, p, cfg.sup, cfg.seed + MASK_OFFSET)?,
    };
    let path = cfg.out_dir.join("mask.json");
    state.write(&path, &corpus)?;
    Ok(vec![path])
}

fn has_text(corpus: &Corpus) -> bool {
    corpus.docs().iter().any(|d| d.tokens().is_some())
}

/// Document vectors, with the word vectors when text documents need them.
fn embed(cfg: &RunConfig, corpus: &Corpus, lexicon: Option<&(Vocabulary, EmbeddingTable)>) -> Result<DMatrix<f64>> {
    corpus.embed(lexicon.map(|(v, t)| (v, t)), cfg.dim)
}

fn load_lexicon(cfg: &RunConfig) -> Result<(Vocabulary, EmbeddingTable)> {
    require(&cfg.embeddings)?;
    load_embeddings(&cfg.embeddings, cfg.dim)
}

fn build_themes(cfg: &RunConfig, corpus: &Corpus, vocab: &Vocabulary, table: &EmbeddingTable) -> Result<ThemeMatrix> {
    require(&cfg.seeds)?;
    let mut sets = Vec::new();
    for s in load_seed_sets(&cfg.seeds)? {
        let mut e = expand_seeds(&s, vocab, table, cfg.seed_expansion)?;
        if cfg.neutral_filter && has_text(corpus) {
            e = filter_expansion(cfg, corpus, e)?;
        }
        sets.push(e);
    }
    init_theme_matrix(&sets, vocab, table)
}

/// Keeps the seeds and the expansion words that pass the neutral test.
fn filter_expansion(cfg: &RunConfig, corpus: &Corpus, set: SeedSet) -> Result<SeedSet> {
    let added: Vec<&String> = set.expanded.iter().filter(|w| !set.seeds.contains(w)).collect();
    if added.is_empty() {
        return Ok(set);
    }
    let beta = match cfg.neutral_beta {
        Some(b) => b,
        None => default_beta(corpus, &added)?,
    };
    let keep = neutral_word_filter(corpus, &added, cfg.neutral_alpha, beta)?;
    let expanded = set
        .expanded
        .iter()
        .filter(|w| set.seeds.contains(w) || keep.contains(*w))
        .cloned()
        .collect();
    Ok(SeedSet { expanded, ..set })
}

fn initial_assignments(cfg: &RunConfig, corpus: &Corpus, x: &DMatrix<f64>, t0: &ThemeMatrix) -> Result<DMatrix<f64>> {
    let tagged = corpus
        .docs()
        .iter()
        .all(|d| d.theme.as_deref().is_some_and(|t| t0.index(t).is_some()));
    match cfg.assignments {
        Assignments::Tags => assignments_from_tags(corpus, t0),
        Assignments::Auto if tagged => assignments_from_tags(corpus, t0),
        _ => init_assignments(x, t0, cfg.other_quantile),
    }
}

fn run_train(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    require(&cfg.corpus)?;
    require(&cfg.embeddings)?;
    require(&cfg.mask)?;
    let corpus = load_corpus(&cfg.corpus)?;
    let lexicon = load_lexicon(cfg)?;
    let x = embed(cfg, &corpus, Some(&lexicon))?;
    let themes = build_themes(cfg, &corpus, &lexicon.0, &lexicon.1)?;
    let state = MaskState::read(&cfg.mask, &corpus)?;
    let model_cfg = cfg.model_config(cfg.dim, themes.len());
    let with_context = cfg.variant == Variant::Bbbg;
    let theta0 = if with_context {
        Some(initial_assignments(cfg, &corpus, &x, &themes)?)
    } else {
        None
    };
    let t0 = themes.rows();
    let params = build_model(&model_cfg, with_context.then_some(t0), model_cfg.seed)?;
    let data = TrainData {
        x: &x,
        labels: state.training_labels(&corpus),
        theta0: theta0.as_ref(),
        t0: with_context.then_some(t0),
    };
    let (params, history) = train(params, &data, &model_cfg, model_cfg.seed)?;

    let out = &cfg.out_dir;
    let ckpt_path = out.join("checkpoint.json");
    let history_path = out.join("history.csv");
    let themes_path = out.join("themes.csv");
    history.write_csv(&history_path)?;
    match &params.context {
        Some(ctx) => write_theme_csv(&themes_path, themes.names(), &ctx.themes)?,
        None => themes.write_csv(&themes_path)?,
    }
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        config: model_cfg.clone(),
        theme_names: themes.names().to_vec(),
        params,
        t0: with_context.then(|| t0.clone()),
        seed: model_cfg.seed,
        epochs_completed: history.epochs.len(),
    };
    save_checkpoint(&ckpt_path, &ckpt)?;
    Ok(vec![ckpt_path, history_path, themes_path])
}

/// Corpus, document vectors and checkpoint shared by the scoring commands.
fn load_trained(cfg: &RunConfig) -> Result<(Corpus, DMatrix<f64>, Checkpoint)> {
    require(&cfg.corpus)?;
    require(&cfg.checkpoint)?;
    let corpus = load_corpus(&cfg.corpus)?;
    let lexicon = if has_text(&corpus) { Some(load_lexicon(cfg)?) } else { None };
    let x = embed(cfg, &corpus, lexicon.as_ref())?;
    let ckpt = load_checkpoint(&cfg.checkpoint)?;
    Ok((corpus, x, ckpt))
}

/// Majority document label of each author, ties to 1.
fn author_labels(corpus: &Corpus) -> BTreeMap<String, u8> {
    corpus
        .authors()
        .iter()
        .filter_map(|(a, docs)| {
            let labels: Vec<u8> = docs.iter().filter_map(|&i| corpus.docs()[i].label).collect();
            if labels.is_empty() {
                return None;
            }
            let ones = labels.iter().filter(|&&l| l == 1).count();
            Some((a.clone(), u8::from(2 * ones >= labels.len())))
        })
        .collect()
}

fn score_rows(
    model: &str,
    logits: &[f64],
    corpus: &Corpus,
    state: &MaskState,
    threshold: f64,
) -> Result<Vec<String>> {
    let cut = (threshold / (1.0 - threshold)).ln();
    let eval = state.held_out(corpus);
    if eval.is_empty() {
        return Err(Error::Empty("held-out set"));
    }
    let preds: Vec<u8> = logits.iter().map(|&l| u8::from(l >= cut)).collect();
    let truths: Vec<u8> = corpus.docs().iter().map(|d| d.label.unwrap_or(0)).collect();
    let mut rows = vec![format!(
        "{model},document,all,{},{}",
        accuracy(&preds, &truths, &eval)?,
        eval.len()
    )];

    let mut by_group: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in &eval {
        if let Some(g) = &corpus.docs()[i].group {
            by_group.entry(g.as_str()).or_default().push(i);
        }
    }
    for (g, idx) in &by_group {
        rows.push(format!(
            "{model},document,{g},{},{}",
            accuracy(&preds, &truths, idx)?,
            idx.len()
        ));
    }

    // authors none of whose documents were supervised
    let slants = aggregate_by_author(logits, corpus.authors(), threshold)?;
    let truth = author_labels(corpus);
    let held: Vec<&String> = corpus
        .authors()
        .iter()
        .filter(|(a, docs)| truth.contains_key(*a) && docs.iter().all(|&i| !state.supervised[i]))
        .map(|(a, _)| a)
        .collect();
    if !held.is_empty() {
        let hits = held.iter().filter(|a| slants[**a].label == truth[**a]).count();
        rows.push(format!(
            "{model},author,all,{},{}",
            hits as f64 / held.len() as f64,
            held.len()
        ));
    }
    Ok(rows)
}

fn run_eval(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (corpus, x, ckpt) = load_trained(cfg)?;
    require(&cfg.mask)?;
    let state = MaskState::read(&cfg.mask, &corpus)?;
    let logits = predict_logits(&ckpt.params, &x)?;

    let mut table = String::from("model,level,group,accuracy,count\n");
    for r in score_rows(&ckpt.config.variant.to_string(), &logits, &corpus, &state, cfg.threshold)? {
        table.push_str(&r);
        table.push('\n');
    }
    if cfg.baseline {
        let dnn = train_baseline(&x, &state.training_labels(&corpus), &cfg.baseline_config())?;
        for r in score_rows("dnn", &dnn.logits(&x)?, &corpus, &state, cfg.threshold)? {
            table.push_str(&r);
            table.push('\n');
        }
    }

    let mut preds = String::from("id,author,label,supervised,logit,probability\n");
    for (i, d) in corpus.docs().iter().enumerate() {
        preds.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.id,
            d.author,
            d.label.map_or(String::new(), |l| l.to_string()),
            u8::from(state.supervised[i]),
            logits[i],
            crate::nn::sigmoid(logits[i])
        ));
    }
    let eval_path = cfg.out_dir.join("eval.csv");
    let preds_path = cfg.out_dir.join("predictions.csv");
    write_text(&eval_path, &table)?;
    write_text(&preds_path, &preds)?;
    Ok(vec![eval_path, preds_path])
}

fn read_scores(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = read_input(path)?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (a, s) = line
            .rsplit_once(',')
            .ok_or_else(|| Error::Data(format!("{}: line {}: expected `author,score`", path.display(), lineno + 1)))?;
        let s: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("{}: line {}: bad score `{s}`", path.display(), lineno + 1)))?;
        out.insert(a.trim().to_string(), s);
    }
    Ok(out)
}

fn run_analyze(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (corpus, x, ckpt) = load_trained(cfg)?;
    let params = &ckpt.params;
    let geometry = theme_geometry(&corpus, &x, &ckpt.theme_names, params, cfg.rank_threshold)?;

    let mut orth = String::from("theme,docs_0,docs_1,angle\n");
    let mut pca = String::from("theme,source,pc1_ratio,rank,separation\n");
    let mut angles = Vec::new();
    for g in &geometry {
        if let Some(a) = g.angle {
            orth.push_str(&format!("{},{},{},{a}\n", g.theme, g.counts[0], g.counts[1]));
            angles.push(a);
        }
        pca.push_str(&format!("{},x,{},{},{}\n", g.theme, g.pc1_x, g.rank_x, g.separation_x));
        pca.push_str(&format!("{},f,{},{},{}\n", g.theme, g.pc1_f, g.rank_f, g.separation_f));
    }

    let logits = predict_logits(params, &x)?;
    let slants = aggregate_by_author(&logits, corpus.authors(), cfg.threshold)?;
    let names: Vec<&String> = slants.keys().collect();
    let values: Vec<f64> = slants.values().map(|s| s.slant).collect();
    let rd = rank_deviation(&values);

    // author-mean positions projected on their two leading components
    let dec = decompose(params, &x)?;
    let mut means = DMatrix::zeros(dec.position.nrows(), names.len());
    for (j, a) in names.iter().enumerate() {
        let docs = &corpus.authors()[*a];
        for &i in docs {
            let mut col = means.column_mut(j);
            col += dec.position.column(i);
        }
        let mut col = means.column_mut(j);
        col /= docs.len() as f64;
    }
    let coords = if names.len() >= 2 {
        Some(pca_metrics(&means, &[cfg.rank_threshold])?.projection)
    } else {
        None
    };
    let coord = |j: usize, c: usize| {
        coords
            .as_ref()
            .filter(|p| c < p.ncols())
            .map_or(String::new(), |p| p[(j, c)].to_string())
    };

    let scores = if cfg.author_scores.exists() {
        Some(read_scores(&cfg.author_scores)?)
    } else {
        None
    };
    let mut authors = String::from("author,docs,slant,label,rank_deviation,pc1,pc2,score\n");
    let mut paired = (Vec::new(), Vec::new());
    for (j, a) in names.iter().enumerate() {
        let s = &slants[*a];
        let score = scores.as_ref().and_then(|m| m.get(*a)).copied();
        if let Some(v) = score {
            paired.0.push(s.slant);
            paired.1.push(v);
        }
        authors.push_str(&format!(
            "{a},{},{},{},{},{},{},{}\n",
            s.docs,
            s.slant,
            s.label,
            rd.deviation[j],
            coord(j, 0),
            coord(j, 1),
            score.map_or(String::new(), |v| v.to_string())
        ));
    }

    let px = pca_metrics(&x, &[cfg.rank_threshold])?;
    let pf = pca_metrics(&dec.position, &[cfg.rank_threshold])?;
    let r2 = if paired.0.len() >= 2 {
        Some(external_correlation(&paired.0, &paired.1)?)
    } else {
        None
    };
    let mean_angle = (!angles.is_empty()).then(|| angles.iter().sum::<f64>() / angles.len() as f64);
    let summary = json!({
        "themes": geometry.len(),
        "mean_angle": mean_angle,
        "pc1_ratio_x": px.pc1_ratio(),
        "pc1_ratio_f": pf.pc1_ratio(),
        "rank_x": px.ranks[0].1,
        "rank_f": pf.ranks[0].1,
        "authors": names.len(),
        "r2": r2,
    });

    let out = &cfg.out_dir;
    let paths = [
        out.join("orthogonality.csv"),
        out.join("pca.csv"),
        out.join("authors.csv"),
        out.join("summary.json"),
    ];
    write_text(&paths[0], &orth)?;
    write_text(&paths[1], &pca)?;
    write_text(&paths[2], &authors)?;
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Data(e.to_string()))?;
    write_text(&paths[3], &(text + "\n"))?;
    Ok(paths.to_vec())
}

fn run_neighborhood(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    require(&cfg.checkpoint)?;
    let ckpt = load_checkpoint(&cfg.checkpoint)?;
    let (vocab, table) = load_lexicon(cfg)?;
    let mut out = String::from("theme,rank,word,similarity\n");
    for name in &ckpt.theme_names {
        for (r, (w, s)) in context_neighborhood(&ckpt.params, &ckpt.theme_names, name, &vocab, &table, cfg.k)?
            .into_iter()
            .enumerate()
        {
            out.push_str(&format!("{name},{},{w},{s}\n", r + 1));
        }
    }
    let path = cfg.out_dir.join("neighborhood.csv");
    write_text(&path, &out)?;
    Ok(vec![path])
}
