//! Minimal differentiable numerics: dense stacks with cached forward passes
//! and exact reverse-mode gradients, Gaussian densities, RMSProp and a
//! finite-difference gradient checker.
//!
//! Batches are column-major: a `d x b` matrix holds `b` samples of width `d`.

mod density;
mod gradcheck;
mod optim;

pub use density::{
    gaussian_logpdf, log_mean_exp, mixture_logpdf, reparameterize, GaussianPosterior,
    LOGVAR_MAX, LOGVAR_MIN,
};
pub use gradcheck::{grad_check, GradCheckReport};
pub use optim::{rmsprop_step, OptimizerState, Rmsprop};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    /// Column-wise softmax.
    Softmax,
    /// Hard clamp into `[LOGVAR_MIN, LOGVAR_MAX]`; unit gradient inside the
    /// interval, zero outside.
    LogvarClamp,
}

impl Activation {
    fn apply(self, pre: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Activation::Linear => pre.clone(),
            // NaN must survive so that divergence is detected downstream
            Activation::Relu => pre.map(|v| if v < 0.0 { 0.0 } else { v }),
            Activation::Sigmoid => pre.map(sigmoid),
            Activation::LogvarClamp => pre.map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX)),
            Activation::Softmax => {
                let mut out = pre.clone();
                for mut col in out.column_iter_mut() {
                    let max = col.max();
                    col.apply(|v| *v = (*v - max).exp());
                    let sum = col.sum();
                    col /= sum;
                }
                out
            }
        }
    }

    /// Maps the gradient w.r.t. the activation output onto the
    /// pre-activation.
    fn backward(self, pre: &DMatrix<f64>, out: &DMatrix<f64>, grad: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Activation::Linear => grad.clone(),
            Activation::Relu => grad.zip_map(pre, |g, p| if p > 0.0 { g } else { 0.0 }),
            Activation::Sigmoid => grad.zip_map(out, |g, y| g * y * (1.0 - y)),
            Activation::LogvarClamp => grad.zip_map(pre, |g, p| {
                if (LOGVAR_MIN..=LOGVAR_MAX).contains(&p) {
                    g
                } else {
                    0.0
                }
            }),
            Activation::Softmax => {
                let mut dz = grad.clone();
                for (j, mut col) in dz.column_iter_mut().enumerate() {
                    let y = out.column(j);
                    let dot = y.dot(&grad.column(j));
                    for (i, v) in col.iter_mut().enumerate() {
                        *v = y[i] * (*v - dot);
                    }
                }
                dz
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^v)` without overflow.
pub fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out x in`
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            weight: DMatrix::from_fn(outputs, inputs, |_, _| rng.random_range(-limit..limit)),
            bias: DVector::zeros(outputs),
            activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: DMatrix::zeros(self.weight.nrows(), self.weight.ncols()),
            bias: DVector::zeros(self.bias.len()),
            activation: self.activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Activations kept from a forward pass, consumed by [`DenseStack::backward`].
#[derive(Debug, Clone)]
pub struct StackCache {
    inputs: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
    outputs: Vec<DMatrix<f64>>,
}

impl StackCache {
    pub fn output(&self) -> &DMatrix<f64> {
        self.outputs.last().expect("cache of a non-empty stack")
    }

    /// Pre-activations of every layer, first layer first.
    pub fn pre_activations(&self) -> &[DMatrix<f64>] {
        &self.pre
    }
}

/// A chain of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseStack {
    pub layers: Vec<DenseLayer>,
}

impl DenseStack {
    /// Builds `sizes[0] -> sizes[1] -> ... -> sizes[n]`, with `hidden`
    /// activation on every layer except the last, which uses `last`.
    pub fn new(sizes: &[usize], hidden: Activation, last: Activation, rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "a stack needs at least one layer");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { last } else { hidden };
                DenseLayer::init(sizes[i], sizes[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(DenseLayer::zeros_like).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(DenseLayer::outputs).unwrap_or(0)
    }

    /// Layer widths including input, e.g. `[D, 800, 800]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(DenseLayer::outputs));
        s
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, input: &DMatrix<f64>) -> Result<(DMatrix<f64>, StackCache)> {
        ensure_dim("dense stack input", self.input_dim(), input.nrows())?;
        let mut cache = StackCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
        };
        let mut cur = input.clone();
        for layer in &self.layers {
            let mut pre = &layer.weight * &cur;
            for mut col in pre.column_iter_mut() {
                col += &layer.bias;
            }
            let out = layer.activation.apply(&pre);
            cache.inputs.push(cur);
            cache.pre.push(pre);
            cur = out.clone();
            cache.outputs.push(out);
        }
        Ok((cur, cache))
    }

    /// Forward pass without keeping activations.
    pub fn infer(&self, input: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure_dim("dense stack input", self.input_dim(), input.nrows())?;
        let mut cur = input.clone();
        for layer in &self.layers {
            let mut pre = &layer.weight * &cur;
            for mut col in pre.column_iter_mut() {
                col += &layer.bias;
            }
            cur = layer.activation.apply(&pre);
        }
        Ok(cur)
    }

    /// Reverse pass. `upstream` is dLoss/dOutput; returns parameter
    /// gradients (shaped like `self`) and dLoss/dInput.
    pub fn backward(
        &self,
        cache: &StackCache,
        upstream: &DMatrix<f64>,
    ) -> Result<(DenseStack, DMatrix<f64>)> {
        if cache.pre.len() != self.layers.len() {
            return Err(Error::Invariant(format!(
                "forward cache holds {} layers, stack has {}",
                cache.pre.len(),
                self.layers.len()
            )));
        }
        ensure_dim("upstream gradient rows", self.output_dim(), upstream.nrows())?;
        ensure_dim(
            "upstream gradient columns",
            cache.output().ncols(),
            upstream.ncols(),
        )?;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let dz = layer
                .activation
                .backward(&cache.pre[i], &cache.outputs[i], &g);
            let dw = &dz * cache.inputs[i].transpose();
            let db = DVector::from_iterator(dz.nrows(), dz.row_iter().map(|r| r.sum()));
            g = layer.weight.tr_mul(&dz);
            grads.push(DenseLayer {
                weight: dw,
                bias: db,
                activation: layer.activation,
            });
        }
        grads.reverse();
        Ok((DenseStack { layers: grads }, g))
    }
}

/// Flat, ordered views over every trainable tensor of a model. Gradients use
/// the same type as the parameters, so both sides enumerate identically.
pub trait Parameters {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn parameter_len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// In-place `self += other`.
    fn accumulate(&mut self, other: &Self)
    where
        Self: Sized,
    {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
}

impl Parameters for DenseStack {
    fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_stack(n: usize) -> DenseStack {
        DenseStack {
            layers: vec![DenseLayer {
                weight: DMatrix::identity(n, n),
                bias: DVector::zeros(n),
                activation: Activation::Linear,
            }],
        }
    }

    #[test]
    fn identity_forward() {
        let s = identity_stack(3);
        let x = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        assert_eq!(s.forward(&x).unwrap().0, x);
    }

    #[test]
    fn relu_definition() {
        let mut s = identity_stack(2);
        s.layers[0].activation = Activation::Relu;
        let x = DMatrix::from_column_slice(2, 1, &[-1.0, 2.0]);
        assert_eq!(s.infer(&x).unwrap().as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = identity_stack(3);
        assert!(matches!(
            s.forward(&DMatrix::zeros(2, 1)),
            Err(Error::Dimension { .. })
        ));
    }

    /// Plain nested-loop evaluation of a stack, independent of nalgebra
    /// products.
    fn dense_oracle(stack: &DenseStack, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for l in &stack.layers {
            let mut pre = vec![0.0; l.outputs()];
            for o in 0..l.outputs() {
                let mut acc = l.bias[o];
                for i in 0..l.inputs() {
                    acc += l.weight[(o, i)] * cur[i];
                }
                pre[o] = acc;
            }
            cur = match l.activation {
                Activation::Linear => pre,
                Activation::Relu => pre.iter().map(|v| v.max(0.0)).collect(),
                Activation::Sigmoid => pre.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
                Activation::LogvarClamp => pre.iter().map(|v| v.clamp(-6.0, 3.0)).collect(),
                Activation::Softmax => {
                    let s: f64 = pre.iter().map(|v| v.exp()).sum();
                    pre.iter().map(|v| v.exp() / s).collect()
                }
            };
        }
        cur
    }

    #[test]
    fn forward_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for last in [Activation::Linear, Activation::Softmax, Activation::Sigmoid] {
            let s = DenseStack::new(&[5, 7, 6, 4], Activation::Relu, last, &mut rng);
            let x = DMatrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
            let y = s.infer(&x).unwrap();
            for j in 0..3 {
                let col: Vec<f64> = x.column(j).iter().copied().collect();
                let expect = dense_oracle(&s, &col);
                for i in 0..4 {
                    assert!((y[(i, j)] - expect[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = DenseStack::new(&[4, 9], Activation::Relu, Activation::Softmax, &mut rng);
        let x = DMatrix::from_fn(4, 20, |_, _| rng.random_range(-10.0..10.0));
        let y = s.infer(&x).unwrap();
        for col in y.column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_layer_weight_gradient_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = DenseStack::new(&[3, 2], Activation::Linear, Activation::Linear, &mut rng);
        let x = DMatrix::from_column_slice(3, 1, &[0.5, -1.0, 2.0]);
        let up = DMatrix::from_column_slice(2, 1, &[1.5, -0.25]);
        let (_, cache) = s.forward(&x).unwrap();
        let (g, _) = s.backward(&cache, &up).unwrap();
        let outer = &up * x.transpose();
        assert!((&g.layers[0].weight - outer).abs().max() < 1e-15);
        assert_eq!(g.layers[0].bias.as_slice(), up.as_slice());
    }

    #[test]
    fn zero_upstream_gives_zero_input_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = DenseStack::new(&[3, 5, 2], Activation::Relu, Activation::Linear, &mut rng);
        let x = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let (_, cache) = s.forward(&x).unwrap();
        let (_, gx) = s.backward(&cache, &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(gx.abs().max(), 0.0);
    }

    #[test]
    fn backward_rejects_foreign_cache() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DenseStack::new(&[3, 4, 2], Activation::Relu, Activation::Linear, &mut rng);
        let b = DenseStack::new(&[3, 2], Activation::Relu, Activation::Linear, &mut rng);
        let (_, cache) = b.forward(&DMatrix::zeros(3, 1)).unwrap();
        assert!(a.backward(&cache, &DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for last in [
            Activation::Linear,
            Activation::Softmax,
            Activation::Sigmoid,
            Activation::LogvarClamp,
        ] {
            let stack = DenseStack::new(&[4, 6, 5, 3], Activation::Relu, last, &mut rng);
            let x = DMatrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
            let w = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            // keep every ReLU pre-activation away from its kink
            let (_, cache) = stack.forward(&x).unwrap();
            let min_abs = cache.pre[..2]
                .iter()
                .flat_map(|m| m.iter())
                .fold(f64::INFINITY, |a, v| a.min(v.abs()));
            assert!(min_abs > 1e-4, "evaluation point too close to a kink");
            let loss = |s: &DenseStack| -> Result<f64> {
                let y = s.infer(&x)?;
                Ok(y.component_mul(&w).sum())
            };
            let (g, _) = stack.backward(&cache, &w).unwrap();
            let report = grad_check(&stack, &g, loss, 1e-5, 1e-4, None).unwrap();
            assert!(
                report.max_rel_error < 1e-4,
                "{last:?}: {}",
                report.max_rel_error
            );
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let stack = DenseStack::new(&[3, 5, 2], Activation::Sigmoid, Activation::Linear, &mut rng);
        let x = DMatrix::from_fn(3, 1, |_, _| rng.random_range(-1.0..1.0));
        let (_, cache) = stack.forward(&x).unwrap();
        let up = DMatrix::from_column_slice(2, 1, &[1.0, -2.0]);
        let (_, gx) = stack.backward(&cache, &up).unwrap();
        for i in 0..3 {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[(i, 0)] += h;
            let mut xm = x.clone();
            xm[(i, 0)] -= h;
            let f = |v: &DMatrix<f64>| stack.infer(v).unwrap().component_mul(&up).sum();
            let num = (f(&xp) - f(&xm)) / (2.0 * h);
            assert!((num - gx[(i, 0)]).abs() < 1e-8);
        }
    }

    #[test]
    fn sigmoid_and_softplus_are_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
    }
}
