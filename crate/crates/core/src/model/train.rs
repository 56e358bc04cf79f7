use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{loss_and_grad, Batch, LossBreakdown};
use super::{encode, sample_noise, BbbgConfig, BbbgParams};
use crate::error::{ensure_dim, Error, Result};
use crate::nn::{sigmoid, Rmsprop};

/// Inputs for training. Columns are documents; `labels` already has the
/// masked labels removed.
#[derive(Debug, Clone)]
pub struct TrainData<'a> {
    pub x: &'a DMatrix<f64>,
    pub labels: Vec<Option<u8>>,
    /// Initial theme assignments (`m x N`).
    pub theta0: Option<&'a DMatrix<f64>>,
    /// Initial theme matrix (`m x D`).
    pub t0: Option<&'a DMatrix<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    /// Document-weighted means of each loss term, one entry per epoch.
    pub epochs: Vec<LossBreakdown>,
    /// Accuracy on the supervised documents after each epoch; `None` when
    /// nothing is supervised.
    pub supervised_accuracy: Vec<Option<f64>>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "epoch,recon,kl,kl_weight,ce,theta_reg,theme_reg,l2,total,supervised_accuracy\n",
        );
        for (e, (l, a)) in self.epochs.iter().zip(&self.supervised_accuracy).enumerate() {
            let acc = a.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                e + 1,
                l.recon,
                l.kl,
                l.kl_weight,
                l.ce,
                l.theta_reg,
                l.theme_reg,
                l.l2,
                l.total,
                acc
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn select_columns(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    m.select_columns(idx)
}

/// Minibatch RMSProp over the full loss. The KL weight ramps linearly over
/// `cfg.anneal_epochs` (capped at `cfg.epochs`). Deterministic in `seed`.
pub fn train(
    mut params: BbbgParams,
    data: &TrainData,
    cfg: &BbbgConfig,
    seed: u64,
) -> Result<(BbbgParams, TrainHistory)> {
    cfg.validate()?;
    let n = data.x.ncols();
    ensure_dim("document embedding", params.input_dim(), data.x.nrows())?;
    ensure_dim("training labels", n, data.labels.len())?;
    if let Some(t) = data.theta0 {
        ensure_dim("initial assignment columns", n, t.ncols())?;
    }
    if n == 0 {
        return Err(Error::Empty("training set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(11);
    let mut opt = Rmsprop::new(cfg.learning_rate);
    let supervised: Vec<usize> = (0..n).filter(|&j| data.labels[j].is_some()).collect();
    let batches = n.div_ceil(cfg.batch_size);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = LossBreakdown::default();
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let kl_weight = cfg.kl_weight(epoch, bi, batches);
            let batch = Batch {
                x: select_columns(data.x, idx),
                labels: idx.iter().map(|&j| data.labels[j]).collect(),
                theta0: data.theta0.map(|t| select_columns(t, idx)),
                t0: data.t0,
            };
            let noise = sample_noise(params.latent_dim(), idx.len(), &mut rng);
            let (l, g) = loss_and_grad(&params, cfg, &batch, &noise, kl_weight).map_err(|e| match e {
                Error::Divergence { term, .. } => Error::Divergence {
                    epoch,
                    batch: bi,
                    term,
                },
                other => other,
            })?;
            opt.step(&mut params, &g)?;
            let w = idx.len() as f64 / n as f64;
            sum.recon += w * l.recon;
            sum.kl += w * l.kl;
            sum.kl_weight += w * l.kl_weight;
            sum.ce += w * l.ce;
            sum.theta_reg += w * l.theta_reg;
            sum.theme_reg += w * l.theme_reg;
            sum.l2 += w * l.l2;
            sum.total += w * l.total;
        }
        history.epochs.push(sum);
        let acc = if supervised.is_empty() {
            None
        } else {
            let xs = select_columns(data.x, &supervised);
            let logits = predict_logits(&params, &xs)?;
            let hits = supervised
                .iter()
                .zip(&logits)
                .filter(|(&j, &l)| u8::from(l >= 0.0) == data.labels[j].expect("supervised"))
                .count();
            Some(hits as f64 / supervised.len() as f64)
        };
        history.supervised_accuracy.push(acc);
    }
    Ok((params, history))
}

/// Label-head logits from the posterior mean of `z`.
pub fn predict_logits(params: &BbbgParams, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (mean, _) = encode(params, x)?;
    Ok(params.predictor.infer(&mean)?.iter().copied().collect())
}

/// Probability of label 1 for each column of `x`.
pub fn predict(params: &BbbgParams, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(predict_logits(params, x)?.into_iter().map(sigmoid).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthorSlant {
    /// Mean document logit.
    pub slant: f64,
    pub label: u8,
    pub docs: usize,
}

/// Author slant is the mean pre-sigmoid logit of their documents; the label
/// is 1 when the slant reaches `logit(threshold)` (ties give 1).
pub fn aggregate_by_author(
    logits: &[f64],
    authors: &BTreeMap<String, Vec<usize>>,
    threshold: f64,
) -> Result<BTreeMap<String, AuthorSlant>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid("threshold", "must lie in (0, 1)"));
    }
    let cut = (threshold / (1.0 - threshold)).ln();
    authors
        .iter()
        .map(|(a, docs)| {
            if docs.is_empty() {
                return Err(Error::Data(format!("author `{a}` has no documents")));
            }
            let mut s = 0.0;
            for &i in docs {
                s += *logits.get(i).ok_or_else(|| {
                    Error::Data(format!("author `{a}` refers to missing document {i}"))
                })?;
            }
            let slant = s / docs.len() as f64;
            Ok((
                a.clone(),
                AuthorSlant {
                    slant,
                    label: u8::from(slant >= cut),
                    docs: docs.len(),
                },
            ))
        })
        .collect()
}
