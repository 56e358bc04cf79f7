use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{decoder_input, BbbgConfig, BbbgParams};
use crate::error::{ensure_dim, Error, Result};
use crate::nn::{gaussian_logpdf, log_mean_exp, sigmoid, softplus, Parameters};

/// One minibatch. Columns of `x` and `theta0` are documents.
#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub x: DMatrix<f64>,
    /// `None` marks a document whose label is hidden.
    pub labels: Vec<Option<u8>>,
    /// Initial theme assignments (`m x B`) anchoring `theta_hat`.
    pub theta0: Option<DMatrix<f64>>,
    /// Initial theme matrix anchoring the trainable one.
    pub t0: Option<&'a DMatrix<f64>>,
}

/// Loss terms averaged over the batch. `kl` is the one-sample estimate of
/// `E[ln q(z|x) - ln p(z)]`; the regularizers and `l2` already include their
/// coefficients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub recon: f64,
    pub kl: f64,
    pub kl_weight: f64,
    pub ce: f64,
    pub theta_reg: f64,
    pub theme_reg: f64,
    pub l2: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn recompose(&self) -> f64 {
        self.recon + self.kl_weight * self.kl + self.ce + self.theta_reg + self.theme_reg + self.l2
    }

    fn terms(&self) -> [(&'static str, f64); 7] {
        [
            ("reconstruction", self.recon),
            ("kl", self.kl),
            ("cross-entropy", self.ce),
            ("theta regularizer", self.theta_reg),
            ("theme regularizer", self.theme_reg),
            ("l2 penalty", self.l2),
            ("total loss", self.total),
        ]
    }

    /// Name of the first non-finite term.
    pub fn non_finite(&self) -> Option<&'static str> {
        self.terms().into_iter().find(|(_, v)| !v.is_finite()).map(|(n, _)| n)
    }
}

pub fn loss(
    params: &BbbgParams,
    cfg: &BbbgConfig,
    batch: &Batch,
    noise: &DMatrix<f64>,
    kl_weight: f64,
) -> Result<LossBreakdown> {
    evaluate(params, cfg, batch, noise, kl_weight, false).map(|(l, _)| l)
}

/// Loss and its exact gradient for a fixed reparameterization `noise`
/// (`M x B`).
pub fn loss_and_grad(
    params: &BbbgParams,
    cfg: &BbbgConfig,
    batch: &Batch,
    noise: &DMatrix<f64>,
    kl_weight: f64,
) -> Result<(LossBreakdown, BbbgParams)> {
    evaluate(params, cfg, batch, noise, kl_weight, true)
        .map(|(l, g)| (l, g.expect("gradient requested")))
}

fn evaluate(
    params: &BbbgParams,
    cfg: &BbbgConfig,
    batch: &Batch,
    noise: &DMatrix<f64>,
    kl_weight: f64,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<BbbgParams>)> {
    if !(0.0..=1.0).contains(&kl_weight) {
        return Err(Error::invalid("kl_weight", "must lie in [0, 1]"));
    }
    let x = &batch.x;
    let (d, b) = (x.nrows(), x.ncols());
    let m = params.latent_dim();
    ensure_dim("document embedding", params.input_dim(), d)?;
    ensure_dim("batch labels", b, batch.labels.len())?;
    ensure_dim("noise rows", m, noise.nrows())?;
    ensure_dim("noise columns", b, noise.ncols())?;
    if b == 0 {
        return Err(Error::Empty("batch"));
    }
    let bf = b as f64;

    // encoder and reparameterization
    let (h, trunk_cache) = params.trunk.forward(x)?;
    let (mu, mu_cache) = params.mean_head.forward(&h)?;
    let (lv, lv_cache) = params.logvar_head.forward(&h)?;
    let std = lv.map(|v| (0.5 * v).exp());
    let z = &mu + std.component_mul(noise);

    // context branch
    let ctx = match &params.context {
        Some(cb) => {
            let (theta, theta_cache) = cb.theme_net.forward(x)?;
            let c = cb.themes.tr_mul(&theta);
            Some((theta, theta_cache, c))
        }
        None => None,
    };
    let dec_in = decoder_input(params, &z, ctx.as_ref().map(|(t, _, _)| t))?;
    let (f, dec_cache) = params.decoder.forward(&dec_in)?;
    let mut resid = x - &f;
    if let Some((_, _, c)) = &ctx {
        resid -= c;
    }
    let recon = resid.norm_squared() / (d as f64 * bf);

    // mixture prior from pseudo-inputs
    let (hp, ptrunk_cache) = params.trunk.forward(&params.pseudo_inputs)?;
    let (mp, pmu_cache) = params.mean_head.forward(&hp)?;
    let (lp, plv_cache) = params.logvar_head.forward(&hp)?;
    let k = mp.ncols();

    let mut kl = 0.0;
    let mut dz = DMatrix::zeros(m, b);
    let mut dmu = DMatrix::zeros(m, b);
    let mut dlv = DMatrix::zeros(m, b);
    let mut dmp = DMatrix::zeros(m, k);
    let mut dlp = DMatrix::zeros(m, k);
    let s = kl_weight / bf;
    let mut comp = vec![0.0; k];
    for j in 0..b {
        let zj = z.column(j);
        let lq = gaussian_logpdf(zj.as_slice(), mu.column(j).as_slice(), lv.column(j).as_slice())?;
        for (kk, c) in comp.iter_mut().enumerate() {
            *c = gaussian_logpdf(zj.as_slice(), mp.column(kk).as_slice(), lp.column(kk).as_slice())?;
        }
        let lpz = log_mean_exp(&comp);
        kl += (lq - lpz) / bf;
        if !want_grad {
            continue;
        }
        for i in 0..m {
            let diff = zj[i] - mu[(i, j)];
            let inv = (-lv[(i, j)]).exp();
            dz[(i, j)] -= s * diff * inv;
            dmu[(i, j)] += s * diff * inv;
            dlv[(i, j)] += s * (-0.5 + 0.5 * diff * diff * inv);
        }
        for kk in 0..k {
            let r = (comp[kk] - lpz).exp() / k as f64;
            for i in 0..m {
                let diff = zj[i] - mp[(i, kk)];
                let inv = (-lp[(i, kk)]).exp();
                // minus d ln p / d(.)
                dz[(i, j)] += s * r * diff * inv;
                dmp[(i, kk)] -= s * r * diff * inv;
                dlp[(i, kk)] -= s * r * (-0.5 + 0.5 * diff * diff * inv);
            }
        }
    }

    // label head on the sampled latent, supervised documents only
    let (logits, pred_cache) = params.predictor.forward(&z)?;
    let n_sup = batch.labels.iter().filter(|l| l.is_some()).count();
    let mut ce = 0.0;
    let mut dlogit = DMatrix::zeros(1, b);
    if n_sup > 0 {
        let ns = n_sup as f64;
        for (j, y) in batch.labels.iter().enumerate() {
            if let Some(y) = y {
                let l = logits[(0, j)];
                let y = f64::from(*y);
                ce += (softplus(l) - y * l) / ns;
                dlogit[(0, j)] = (sigmoid(l) - y) / ns;
            }
        }
    }

    // anchors of the context branch
    let mut theta_reg = 0.0;
    let mut theme_reg = 0.0;
    if let (Some(cb), Some((theta, _, _))) = (&params.context, &ctx) {
        let mt = theta.nrows() as f64;
        if let Some(t0) = &batch.theta0 {
            ensure_dim("initial assignment rows", theta.nrows(), t0.nrows())?;
            ensure_dim("initial assignment columns", b, t0.ncols())?;
            theta_reg = cfg.theta_weight * (theta - t0).norm_squared() / (mt * bf);
        }
        if let Some(t0) = batch.t0 {
            ensure_dim("initial theme matrix rows", cb.themes.nrows(), t0.nrows())?;
            ensure_dim("initial theme matrix columns", d, t0.ncols())?;
            theme_reg = cfg.theme_weight * (&cb.themes - t0).norm_squared() / (mt * d as f64);
        }
    }
    let l2 = cfg.l2
        * params
            .predictor
            .layers
            .iter()
            .map(|l| l.weight.norm_squared())
            .sum::<f64>();

    let mut out = LossBreakdown {
        recon,
        kl,
        kl_weight,
        ce,
        theta_reg,
        theme_reg,
        l2,
        total: 0.0,
    };
    out.total = out.recompose();
    if let Some(term) = out.non_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            batch: 0,
            term,
        });
    }
    if !want_grad {
        return Ok((out, None));
    }

    // reverse pass
    let mut grads = params.zeros_like();
    let df = resid * (-2.0 / (d as f64 * bf));
    let (g_dec, d_in) = params.decoder.backward(&dec_cache, &df)?;
    grads.decoder = g_dec;
    dz += d_in.rows(0, m);
    if let (Some(cb), Some((theta, theta_cache, _))) = (&params.context, &ctx) {
        let mt = theta.nrows();
        // dc equals df: both enter the residual with the same sign
        let mut dtheta = d_in.rows(m, mt).into_owned();
        dtheta += &cb.themes * &df;
        if let Some(t0) = &batch.theta0 {
            dtheta += (theta - t0) * (2.0 * cfg.theta_weight / (mt as f64 * bf));
        }
        let mut dthemes = theta * df.transpose();
        if let Some(t0) = batch.t0 {
            dthemes += (&cb.themes - t0) * (2.0 * cfg.theme_weight / (mt as f64 * d as f64));
        }
        let (g_theme, _) = cb.theme_net.backward(theta_cache, &dtheta)?;
        let gc = grads.context.as_mut().expect("same variant");
        gc.theme_net = g_theme;
        gc.themes = dthemes;
    }
    let (mut g_pred, dz_pred) = params.predictor.backward(&pred_cache, &dlogit)?;
    for (g, l) in g_pred.layers.iter_mut().zip(&params.predictor.layers) {
        g.weight += &l.weight * (2.0 * cfg.l2);
    }
    grads.predictor = g_pred;
    dz += dz_pred;

    dmu += &dz;
    dlv += dz.component_mul(&std).component_mul(noise) * 0.5;
    let (g_mu, dh_mu) = params.mean_head.backward(&mu_cache, &dmu)?;
    let (g_lv, dh_lv) = params.logvar_head.backward(&lv_cache, &dlv)?;
    let (g_trunk, _) = params.trunk.backward(&trunk_cache, &(dh_mu + dh_lv))?;
    grads.mean_head = g_mu;
    grads.logvar_head = g_lv;
    grads.trunk = g_trunk;

    let (g_pmu, dhp_mu) = params.mean_head.backward(&pmu_cache, &dmp)?;
    let (g_plv, dhp_lv) = params.logvar_head.backward(&plv_cache, &dlp)?;
    let (g_ptrunk, dpseudo) = params.trunk.backward(&ptrunk_cache, &(dhp_mu + dhp_lv))?;
    grads.mean_head.accumulate(&g_pmu);
    grads.logvar_head.accumulate(&g_plv);
    grads.trunk.accumulate(&g_ptrunk);
    grads.pseudo_inputs = dpseudo;

    Ok((out, Some(grads)))
}
