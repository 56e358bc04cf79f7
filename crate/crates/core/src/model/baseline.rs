//! Plain feed-forward classifier trained on the supervised documents only.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::nn::{sigmoid, softplus, Activation, DenseStack, Rmsprop};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Squared-weight penalty on the last `l2_layers` layers.
    pub l2: f64,
    pub l2_layers: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            hidden: vec![800, 800, 800, 400, 250, 800, 800],
            learning_rate: 0.001,
            epochs: 10,
            batch_size: 128,
            l2: 0.01,
            l2_layers: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnBaseline {
    pub net: DenseStack,
}

impl DnnBaseline {
    pub fn new(input_dim: usize, cfg: &BaselineConfig) -> Self {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(1);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self {
            net: DenseStack::new(&sizes, Activation::Relu, Activation::Linear, &mut rng),
        }
    }

    pub fn logits(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.net.infer(x)?.iter().copied().collect())
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.logits(x)?.into_iter().map(sigmoid).collect())
    }
}

/// Fits the classifier with mean binary cross-entropy on documents whose
/// label is present.
pub fn train_baseline(x: &DMatrix<f64>, labels: &[Option<u8>], cfg: &BaselineConfig) -> Result<DnnBaseline> {
    ensure_dim("baseline labels", x.ncols(), labels.len())?;
    let supervised: Vec<usize> = (0..labels.len()).filter(|&j| labels[j].is_some()).collect();
    if supervised.is_empty() {
        return Err(Error::Empty("supervised set"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch_size", "must be positive"));
    }
    let mut model = DnnBaseline::new(x.nrows(), cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut opt = Rmsprop::new(cfg.learning_rate);
    let mut order = supervised;
    let n_layers = model.net.layers.len();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x.select_columns(idx);
            let (out, cache) = model.net.forward(&xb)?;
            let b = idx.len() as f64;
            let mut loss = 0.0;
            let mut up = DMatrix::zeros(1, idx.len());
            for (j, &i) in idx.iter().enumerate() {
                let y = f64::from(labels[i].expect("supervised"));
                let l = out[(0, j)];
                loss += (softplus(l) - y * l) / b;
                up[(0, j)] = (sigmoid(l) - y) / b;
            }
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: bi,
                    term: "cross-entropy",
                });
            }
            let (mut g, _) = model.net.backward(&cache, &up)?;
            for (gl, l) in g
                .layers
                .iter_mut()
                .zip(&model.net.layers)
                .skip(n_layers.saturating_sub(cfg.l2_layers))
            {
                gl.weight += &l.weight * (2.0 * cfg.l2);
            }
            opt.step(&mut model.net, &g)?;
        }
    }
    Ok(model)
}
