use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

pub const LOGVAR_MIN: f64 = -6.0;
pub const LOGVAR_MAX: f64 = 3.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Diagonal Gaussian `q(z | x)` in mean / log-variance form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub logvar: DVector<f64>,
}

impl GaussianPosterior {
    pub fn new(mean: DVector<f64>, logvar: DVector<f64>) -> Result<Self> {
        ensure_dim("posterior log-variance", mean.len(), logvar.len())?;
        Ok(Self { mean, logvar })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn std(&self) -> DVector<f64> {
        self.logvar.map(|lv| (0.5 * lv).exp())
    }
}

/// `z = mean + exp(logvar / 2) * noise`.
pub fn reparameterize(post: &GaussianPosterior, noise: &[f64]) -> Result<DVector<f64>> {
    ensure_dim("reparameterization noise", post.dim(), noise.len())?;
    Ok(DVector::from_iterator(
        post.dim(),
        (0..post.dim()).map(|i| post.mean[i] + (0.5 * post.logvar[i]).exp() * noise[i]),
    ))
}

/// Log-density of a diagonal Gaussian.
pub fn gaussian_logpdf(z: &[f64], mean: &[f64], logvar: &[f64]) -> Result<f64> {
    ensure_dim("gaussian_logpdf mean", z.len(), mean.len())?;
    ensure_dim("gaussian_logpdf logvar", z.len(), logvar.len())?;
    Ok(z.iter()
        .zip(mean)
        .zip(logvar)
        .map(|((z, m), lv)| -HALF_LN_2PI - 0.5 * lv - (z - m).powi(2) / (2.0 * lv.exp()))
        .sum())
}

/// `ln((1/n) sum exp(v_i))`, shifted by the maximum.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + (s / values.len() as f64).ln()
}

/// Equal-weight mixture of diagonal Gaussians.
pub fn mixture_logpdf(z: &[f64], components: &[GaussianPosterior]) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::Empty("mixture component list"));
    }
    let logs = components
        .iter()
        .map(|c| gaussian_logpdf(z, c.mean.as_slice(), c.logvar.as_slice()))
        .collect::<Result<Vec<_>>>()?;
    Ok(log_mean_exp(&logs))
}
