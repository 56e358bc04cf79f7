use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Uniformly random labels survive.
    Unbiased,
    /// Only the most extreme authors of each party keep labels.
    Biased,
    /// Weighted sampling by seven-point group, extremes favoured.
    Weighted,
    /// Labels survive only inside a chosen set of themes.
    Theme,
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbiased" => Ok(Protocol::Unbiased),
            "biased" => Ok(Protocol::Biased),
            "weighted" => Ok(Protocol::Weighted),
            "theme" => Ok(Protocol::Theme),
            other => Err(Error::invalid("protocol", format!("unknown protocol `{other}`"))),
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::Unbiased => "unbiased",
            Protocol::Biased => "biased",
            Protocol::Weighted => "weighted",
            Protocol::Theme => "theme",
        })
    }
}

/// Which documents keep their label for training.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskState {
    pub protocol: Protocol,
    pub sup: Option<f64>,
    /// Aligned with corpus order.
    pub supervised: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct MaskFile {
    protocol: Protocol,
    sup: Option<f64>,
    supervised: Vec<String>,
}

impl MaskState {
    pub fn supervised_count(&self) -> usize {
        self.supervised.iter().filter(|&&s| s).count()
    }

    /// Labeled documents that were masked: the held-out evaluation set.
    pub fn held_out(&self, corpus: &Corpus) -> Vec<usize> {
        corpus
            .docs()
            .iter()
            .enumerate()
            .filter(|(i, d)| d.label.is_some() && !self.supervised[*i])
            .map(|(i, _)| i)
            .collect()
    }

    /// Training labels: `Some(label)` for supervised documents only.
    pub fn training_labels(&self, corpus: &Corpus) -> Vec<Option<u8>> {
        corpus
            .docs()
            .iter()
            .zip(&self.supervised)
            .map(|(d, &s)| if s { d.label } else { None })
            .collect()
    }

    /// JSON with the ids of supervised documents, in corpus order.
    pub fn write(&self, path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
        let path = path.as_ref();
        let file = MaskFile {
            protocol: self.protocol,
            sup: self.sup,
            supervised: corpus
                .docs()
                .iter()
                .zip(&self.supervised)
                .filter(|(_, &s)| s)
                .map(|(d, _)| d.id.clone())
                .collect(),
        };
        let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Data(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>, corpus: &Corpus) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: MaskFile = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let pos: HashMap<&str, usize> = corpus
            .docs()
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect();
        let mut supervised = vec![false; corpus.len()];
        for id in &file.supervised {
            let &i = pos
                .get(id.as_str())
                .ok_or_else(|| Error::Data(format!("mask names unknown document `{id}`")))?;
            if corpus.docs()[i].label.is_none() {
                return Err(Error::Data(format!(
                    "mask supervises unlabeled document `{id}`"
                )));
            }
            supervised[i] = true;
        }
        Ok(Self {
            protocol: file.protocol,
            sup: file.sup,
            supervised,
        })
    }
}

/// Round-half-up of `sup * n`. The small slack absorbs binary
/// representation error, e.g. `0.35 * 10`.
pub fn quota(sup: f64, n: usize) -> usize {
    ((sup * n as f64) + 0.5 + 1e-9).floor() as usize
}

fn check_sup(sup: f64) -> Result<()> {
    if sup > 0.0 && sup <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("sup", format!("{sup} is outside (0, 1]")))
    }
}

fn labeled(corpus: &Corpus) -> Vec<usize> {
    corpus
        .docs()
        .iter()
        .enumerate()
        .filter(|(_, d)| d.label.is_some())
        .map(|(i, _)| i)
        .collect()
}

/// Keeps `quota(sup, N_labeled)` labels chosen uniformly without
/// replacement.
pub fn mask_unbiased(corpus: &Corpus, sup: f64, seed: u64) -> Result<MaskState> {
    check_sup(sup)?;
    let pool = labeled(corpus);
    let keep = quota(sup, pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut supervised = vec![false; corpus.len()];
    for k in index::sample(&mut rng, pool.len(), keep) {
        supervised[pool[k]] = true;
    }
    Ok(MaskState {
        protocol: Protocol::Unbiased,
        sup: Some(sup),
        supervised,
    })
}

/// Within each party, walks authors from most to least extreme (an
/// author's extremity is the largest score on their documents; ties go to
/// the lower author id) and keeps their labeled documents until `quota(sup,
/// N_party)` are supervised.
pub fn mask_biased_extremity(corpus: &Corpus, sup: f64) -> Result<MaskState> {
    check_sup(sup)?;
    let mut supervised = vec![false; corpus.len()];
    for party in [0u8, 1] {
        let mut by_author: BTreeMap<&str, (f64, Vec<usize>)> = BTreeMap::new();
        for (i, d) in corpus.docs().iter().enumerate() {
            if d.label != Some(party) {
                continue;
            }
            let ext = d.extremity.ok_or_else(|| {
                Error::Data(format!("labeled document `{}` has no extremity score", d.id))
            })?;
            let e = by_author
                .entry(d.author.as_str())
                .or_insert((f64::NEG_INFINITY, Vec::new()));
            e.0 = e.0.max(ext);
            e.1.push(i);
        }
        let n_party: usize = by_author.values().map(|v| v.1.len()).sum();
        let mut order: Vec<(&str, f64, Vec<usize>)> = by_author
            .into_iter()
            .map(|(a, (ext, docs))| (a, ext, docs))
            .collect();
        // BTreeMap order is ascending by id; a stable sort keeps it for ties
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut remaining = quota(sup, n_party);
        for (_, _, docs) in order {
            for i in docs {
                if remaining == 0 {
                    break;
                }
                supervised[i] = true;
                remaining -= 1;
            }
        }
    }
    Ok(MaskState {
        protocol: Protocol::Biased,
        sup: Some(sup),
        supervised,
    })
}

/// Extremity tier of a seven-point group tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupTier {
    Extreme,
    Regular,
    Slight,
}

impl GroupTier {
    /// Accepts tier names (`extreme`, `regular`, `slight`) or seven-point
    /// labels (`extremely liberal`, `conservative`, `slightly liberal`,
    /// `moderate`, ...).
    pub fn parse(tag: &str) -> Result<Self> {
        let t = tag.trim().to_ascii_lowercase();
        if t.starts_with("extreme") {
            Ok(GroupTier::Extreme)
        } else if t.starts_with("slight") || t == "moderate" {
            Ok(GroupTier::Slight)
        } else if matches!(t.as_str(), "regular" | "liberal" | "conservative") {
            Ok(GroupTier::Regular)
        } else {
            Err(Error::Data(format!("unrecognised group tag `{tag}`")))
        }
    }

    /// Relative sampling weight: extreme 10x regular, regular 20x slight.
    pub fn weight(self) -> f64 {
        match self {
            GroupTier::Extreme => 200.0,
            GroupTier::Regular => 20.0,
            GroupTier::Slight => 1.0,
        }
    }
}

/// Sequential weighted draws without replacement, each draw proportional to
/// the weights still in the pool, until `quota(sup, N_labeled)` labels are
/// kept.
pub fn mask_weighted(corpus: &Corpus, sup: f64, seed: u64) -> Result<MaskState> {
    check_sup(sup)?;
    let pool = labeled(corpus);
    let weights = pool
        .iter()
        .map(|&i| {
            let d = &corpus.docs()[i];
            let tag = d.group.as_deref().ok_or_else(|| {
                Error::Data(format!("labeled document `{}` has no group tag", d.id))
            })?;
            Ok(GroupTier::parse(tag)?.weight())
        })
        .collect::<Result<Vec<_>>>()?;
    let keep = quota(sup, pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut supervised = vec![false; corpus.len()];
    for k in weighted_sample(&weights, keep, &mut rng) {
        supervised[pool[k]] = true;
    }
    Ok(MaskState {
        protocol: Protocol::Weighted,
        sup: Some(sup),
        supervised,
    })
}

/// Draws `amount` distinct indices; each draw picks index `i` with
/// probability `w_i / sum of remaining weights`.
pub(crate) fn weighted_sample(weights: &[f64], amount: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut tree = Fenwick::new(weights);
    let amount = amount.min(weights.len());
    let mut out = Vec::with_capacity(amount);
    for _ in 0..amount {
        let total = tree.total();
        let i = if total > 0.0 {
            tree.find(rng.random::<f64>() * total)
        } else {
            // only zero weights left: fall back to the first remaining slot
            (0..weights.len()).find(|i| !out.contains(i)).unwrap()
        };
        tree.add(i, -tree.value(i));
        out.push(i);
    }
    out
}

/// Keeps labels of documents whose theme tag is in `themes`.
pub fn mask_by_theme<S: AsRef<str>>(corpus: &Corpus, themes: &[S]) -> Result<MaskState> {
    let known: HashSet<String> = corpus.theme_tags().into_iter().collect();
    let wanted: HashSet<&str> = themes.iter().map(AsRef::as_ref).collect();
    if let Some(bad) = wanted.iter().find(|t| !known.contains(**t)) {
        return Err(Error::Data(format!("unknown theme `{bad}`")));
    }
    let supervised = corpus
        .docs()
        .iter()
        .map(|d| {
            d.label.is_some()
                && d.theme
                    .as_deref()
                    .is_some_and(|t| wanted.contains(t))
        })
        .collect();
    Ok(MaskState {
        protocol: Protocol::Theme,
        sup: None,
        supervised,
    })
}

/// Binary indexed tree over non-negative weights.
struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            tree[i + 1] += w;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        Self {
            tree,
            values: weights.to_vec(),
        }
    }

    fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    fn add(&mut self, i: usize, delta: f64) {
        self.values[i] += delta;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.tree.len() - 1;
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut rem = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        // skip exhausted slots that a rounding edge might land on
        let mut i = pos.min(n - 1);
        while self.values[i] <= 0.0 {
            i = (i + 1) % n;
        }
        i
    }
}
