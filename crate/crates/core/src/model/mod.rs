//! The bi-branch VAE: an encoder to an ideology latent `z` with a learned
//! mixture prior, a theme branch producing context `c = T^T theta`, a
//! decoder producing the position vector `f`, and a label head on `z`.
//!
//! All batch tensors are column-major (`rows x batch`).

mod baseline;
mod checkpoint;
mod loss;
mod train;

pub use baseline::{train_baseline, BaselineConfig, DnnBaseline};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use loss::{loss, loss_and_grad, Batch, LossBreakdown};
pub use train::{
    aggregate_by_author, predict, predict_logits, train, AuthorSlant, TrainData, TrainHistory,
};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::nn::{Activation, DenseStack, GaussianPosterior, Parameters, LOGVAR_MAX, LOGVAR_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Both branches: context filtering plus ideology latent.
    Bbbg,
    /// Theme branch removed; `x` is reconstructed from `z` alone.
    Sbbg,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bbbg" => Ok(Variant::Bbbg),
            "sbbg" => Ok(Variant::Sbbg),
            _ => Err(Error::invalid("variant", format!("`{s}` is not bbbg or sbbg"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Bbbg => "bbbg",
            Variant::Sbbg => "sbbg",
        })
    }
}

/// Hidden widths of each sub-network; input and output widths come from the
/// model dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerShapes {
    /// Layers shared by the mean and log-variance heads.
    pub trunk: Vec<usize>,
    /// Remaining hidden layers of each head.
    pub head: Vec<usize>,
    pub theme: Vec<usize>,
    pub decoder: Vec<usize>,
    pub predictor: Vec<usize>,
}

impl Default for LayerShapes {
    fn default() -> Self {
        Self {
            trunk: vec![800, 800],
            head: vec![800, 400],
            theme: vec![800, 1600, 400],
            decoder: vec![800, 800],
            predictor: vec![800, 800],
        }
    }
}

impl LayerShapes {
    /// Every hidden width multiplied by `factor`, rounded, at least 1.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |v: &Vec<usize>| -> Vec<usize> {
            v.iter()
                .map(|w| ((*w as f64 * factor).round() as usize).max(1))
                .collect()
        };
        Self {
            trunk: s(&self.trunk),
            head: s(&self.head),
            theme: s(&self.theme),
            decoder: s(&self.decoder),
            predictor: s(&self.predictor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbbgConfig {
    pub input_dim: usize,
    pub latent_dim: usize,
    /// Theme count including `"other"`.
    pub n_themes: usize,
    /// Mixture prior components (pseudo-inputs).
    pub n_modes: usize,
    pub shapes: LayerShapes,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Epochs over which the KL weight ramps linearly from 0 to 1.
    pub anneal_epochs: usize,
    pub batch_size: usize,
    /// Coefficient of the squared-weight penalty on the label head.
    pub l2: f64,
    /// Anchor of inferred theme proportions to their initial values. A weak
    /// anchor lets the proportions smuggle position information past the
    /// latent bottleneck, so the default is strong.
    pub theta_weight: f64,
    pub theme_weight: f64,
    pub pseudo_mean: f64,
    pub pseudo_std: f64,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for BbbgConfig {
    fn default() -> Self {
        Self {
            input_dim: 300,
            latent_dim: 50,
            n_themes: 68,
            n_modes: 2,
            shapes: LayerShapes::default(),
            learning_rate: 0.001,
            epochs: 10,
            anneal_epochs: 15,
            batch_size: 128,
            l2: 0.01,
            theta_weight: 1000.0,
            theme_weight: 1.0,
            pseudo_mean: 0.02,
            pseudo_std: 0.3,
            seed: 0,
            variant: Variant::Bbbg,
        }
    }
}

impl BbbgConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("input_dim", self.input_dim),
            ("latent_dim", self.latent_dim),
            ("n_themes", self.n_themes),
            ("n_modes", self.n_modes),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::invalid(key, "must be positive"));
            }
        }
        let shapes = &self.shapes;
        if [&shapes.trunk, &shapes.head, &shapes.theme, &shapes.decoder, &shapes.predictor]
            .iter()
            .any(|s| s.contains(&0))
        {
            return Err(Error::invalid("shapes", "layer widths must be positive"));
        }
        if shapes.trunk.is_empty() {
            return Err(Error::invalid("shapes", "the shared trunk needs a layer"));
        }
        for (key, v) in [
            ("learning_rate", self.learning_rate),
            ("l2", self.l2),
            ("theta_weight", self.theta_weight),
            ("theme_weight", self.theme_weight),
            ("pseudo_std", self.pseudo_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(key, "must be finite and non-negative"));
            }
        }
        if !self.pseudo_mean.is_finite() {
            return Err(Error::invalid("pseudo_mean", "must be finite"));
        }
        Ok(())
    }

    /// KL weight for batch `batch` of `batches` in epoch `epoch`.
    pub fn kl_weight(&self, epoch: usize, batch: usize, batches: usize) -> f64 {
        let span = self.anneal_epochs.min(self.epochs);
        if span == 0 {
            return 1.0;
        }
        let progress = epoch as f64 + (batch + 1) as f64 / batches.max(1) as f64;
        (progress / span as f64).min(1.0)
    }
}

/// Theme network plus the trainable theme matrix (`m x D`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBranch {
    pub theme_net: DenseStack,
    pub themes: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbbgParams {
    pub trunk: DenseStack,
    pub mean_head: DenseStack,
    pub logvar_head: DenseStack,
    /// `None` for the single-branch variant.
    pub context: Option<ContextBranch>,
    pub decoder: DenseStack,
    /// Outputs one logit per document.
    pub predictor: DenseStack,
    /// `D x K`, one pseudo-input per column.
    pub pseudo_inputs: DMatrix<f64>,
}

impl Parameters for BbbgParams {
    fn slices(&self) -> Vec<&[f64]> {
        let mut out = self.trunk.slices();
        out.extend(self.mean_head.slices());
        out.extend(self.logvar_head.slices());
        if let Some(ctx) = &self.context {
            out.extend(ctx.theme_net.slices());
            out.push(ctx.themes.as_slice());
        }
        out.extend(self.decoder.slices());
        out.extend(self.predictor.slices());
        out.push(self.pseudo_inputs.as_slice());
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.trunk.slices_mut();
        out.extend(self.mean_head.slices_mut());
        out.extend(self.logvar_head.slices_mut());
        if let Some(ctx) = &mut self.context {
            out.extend(ctx.theme_net.slices_mut());
            out.push(ctx.themes.as_mut_slice());
        }
        out.extend(self.decoder.slices_mut());
        out.extend(self.predictor.slices_mut());
        out.push(self.pseudo_inputs.as_mut_slice());
        out
    }
}

impl BbbgParams {
    pub fn zeros_like(&self) -> Self {
        Self {
            trunk: self.trunk.zeros_like(),
            mean_head: self.mean_head.zeros_like(),
            logvar_head: self.logvar_head.zeros_like(),
            context: self.context.as_ref().map(|c| ContextBranch {
                theme_net: c.theme_net.zeros_like(),
                themes: DMatrix::zeros(c.themes.nrows(), c.themes.ncols()),
            }),
            decoder: self.decoder.zeros_like(),
            predictor: self.predictor.zeros_like(),
            pseudo_inputs: DMatrix::zeros(self.pseudo_inputs.nrows(), self.pseudo_inputs.ncols()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.mean_head.output_dim()
    }

    pub fn n_modes(&self) -> usize {
        self.pseudo_inputs.ncols()
    }

    pub fn variant(&self) -> Variant {
        if self.context.is_some() {
            Variant::Bbbg
        } else {
            Variant::Sbbg
        }
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        ensure_dim("document embedding", self.input_dim(), x.nrows())
    }
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Initializes all weights (Glorot uniform, zero bias), copies `t0` into the
/// trainable theme matrix and draws pseudo-inputs from
/// `N(pseudo_mean, pseudo_std^2)`. Every sub-network draws from its own
/// random stream, so the encoder is identical across variants for a seed.
pub fn build_model(cfg: &BbbgConfig, t0: Option<&DMatrix<f64>>, seed: u64) -> Result<BbbgParams> {
    cfg.validate()?;
    let (d, m, k) = (cfg.input_dim, cfg.latent_dim, cfg.n_modes);
    let sh = &cfg.shapes;
    let trunk_out = *sh.trunk.last().expect("validated");
    let trunk = DenseStack::new(
        &sizes(d, &sh.trunk[..sh.trunk.len() - 1], trunk_out),
        Activation::Relu,
        Activation::Relu,
        &mut stream(seed, 1),
    );
    let mean_head = DenseStack::new(
        &sizes(trunk_out, &sh.head, m),
        Activation::Relu,
        Activation::Linear,
        &mut stream(seed, 2),
    );
    let logvar_head = DenseStack::new(
        &sizes(trunk_out, &sh.head, m),
        Activation::Relu,
        Activation::LogvarClamp,
        &mut stream(seed, 3),
    );
    let pseudo = Normal::new(cfg.pseudo_mean, cfg.pseudo_std).expect("validated");
    let mut prng = stream(seed, 4);
    let pseudo_inputs = DMatrix::from_fn(d, k, |_, _| pseudo.sample(&mut prng));
    let predictor = DenseStack::new(
        &sizes(m, &sh.predictor, 1),
        Activation::Relu,
        Activation::Linear,
        &mut stream(seed, 5),
    );
    let (context, decoder_in) = match cfg.variant {
        Variant::Sbbg => (None, m),
        Variant::Bbbg => {
            let t0 = t0.ok_or_else(|| {
                Error::Config("the two-branch model needs an initial theme matrix".into())
            })?;
            ensure_dim("initial theme matrix rows", cfg.n_themes, t0.nrows())?;
            ensure_dim("initial theme matrix columns", d, t0.ncols())?;
            let theme_net = DenseStack::new(
                &sizes(d, &sh.theme, cfg.n_themes),
                Activation::Relu,
                Activation::Softmax,
                &mut stream(seed, 6),
            );
            (
                Some(ContextBranch {
                    theme_net,
                    themes: t0.clone(),
                }),
                m + cfg.n_themes,
            )
        }
    };
    let decoder = DenseStack::new(
        &sizes(decoder_in, &sh.decoder, d),
        Activation::Relu,
        Activation::Linear,
        &mut stream(seed, 7),
    );
    Ok(BbbgParams {
        trunk,
        mean_head,
        logvar_head,
        context,
        decoder,
        predictor,
        pseudo_inputs,
    })
}

/// Posterior mean and clamped log-variance for each column of `x`.
pub fn encode(params: &BbbgParams, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    params.check_input(x)?;
    let h = params.trunk.infer(x)?;
    let mean = params.mean_head.infer(&h)?;
    let logvar = params.logvar_head.infer(&h)?;
    if logvar.iter().any(|v| !(LOGVAR_MIN..=LOGVAR_MAX).contains(v)) {
        return Err(Error::Invariant("log-variance left its clamp interval".into()));
    }
    Ok((mean, logvar))
}

/// Posterior of a single document.
pub fn encode_one(params: &BbbgParams, x: &[f64]) -> Result<GaussianPosterior> {
    let (m, lv) = encode(params, &DMatrix::from_column_slice(x.len(), 1, x))?;
    GaussianPosterior::new(m.column(0).into_owned(), lv.column(0).into_owned())
}

/// Prior components: the encoder posteriors of the pseudo-inputs.
pub fn prior_components(params: &BbbgParams) -> Result<Vec<GaussianPosterior>> {
    let (m, lv) = encode(params, &params.pseudo_inputs)?;
    (0..m.ncols())
        .map(|k| GaussianPosterior::new(m.column(k).into_owned(), lv.column(k).into_owned()))
        .collect()
}

fn context_branch(params: &BbbgParams) -> Result<&ContextBranch> {
    params
        .context
        .as_ref()
        .ok_or_else(|| Error::Config("the single-branch model has no theme branch".into()))
}

/// Theme proportions `theta_hat` (`m x B`), each column on the simplex.
pub fn infer_theme(params: &BbbgParams, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    params.check_input(x)?;
    context_branch(params)?.theme_net.infer(x)
}

/// Context vectors `c = T^T theta` (`D x B`).
pub fn context(params: &BbbgParams, theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ctx = context_branch(params)?;
    ensure_dim("theme proportions", ctx.themes.nrows(), theta.nrows())?;
    Ok(ctx.themes.tr_mul(theta))
}

/// Position vectors `f` from latents (`M x B`) and, for the two-branch
/// model, theme proportions.
pub fn decode(params: &BbbgParams, z: &DMatrix<f64>, theta: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    ensure_dim("latent", params.latent_dim(), z.nrows())?;
    let input = decoder_input(params, z, theta)?;
    params.decoder.infer(&input)
}

pub(crate) fn decoder_input(
    params: &BbbgParams,
    z: &DMatrix<f64>,
    theta: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    match (&params.context, theta) {
        (None, None) => Ok(z.clone()),
        (Some(ctx), Some(t)) => {
            ensure_dim("theme proportions", ctx.themes.nrows(), t.nrows())?;
            ensure_dim("theme proportion columns", z.ncols(), t.ncols())?;
            let (m, k) = (z.nrows(), t.nrows());
            let mut out = DMatrix::zeros(m + k, z.ncols());
            out.rows_mut(0, m).copy_from(z);
            out.rows_mut(m, k).copy_from(t);
            Ok(out)
        }
        (None, Some(_)) => Err(Error::Config(
            "the single-branch decoder takes no theme proportions".into(),
        )),
        (Some(_), None) => Err(Error::Config(
            "the two-branch decoder needs theme proportions".into(),
        )),
    }
}

/// Deterministic split of each document using the posterior mean of `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub z: DMatrix<f64>,
    /// `None` for the single-branch model.
    pub theta: Option<DMatrix<f64>>,
    pub context: Option<DMatrix<f64>>,
    pub position: DMatrix<f64>,
}

pub fn decompose(params: &BbbgParams, x: &DMatrix<f64>) -> Result<Decomposition> {
    let (z, _) = encode(params, x)?;
    let (theta, ctx) = match params.context {
        Some(_) => {
            let t = infer_theme(params, x)?;
            let c = context(params, &t)?;
            (Some(t), Some(c))
        }
        None => (None, None),
    };
    let position = decode(params, &z, theta.as_ref())?;
    Ok(Decomposition {
        z,
        theta,
        context: ctx,
        position,
    })
}

/// Standard-normal noise for the reparameterization of a batch.
pub fn sample_noise(latent: usize, batch: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(latent, batch, |_, _| rng.sample(rand_distr::StandardNormal))
}
