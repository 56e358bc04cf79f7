use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{ensure_dim, Error, Result};

/// Per-tensor squared-gradient accumulators plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub accumulators: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            decay,
            epsilon,
            accumulators: Vec::new(),
        }
    }
}

impl Default for OptimizerState {
    fn default() -> Self {
        Self::new(0.001, 0.9, 1e-8)
    }
}

/// One RMSProp update over matching lists of parameter and gradient slices:
/// `acc = decay * acc + (1 - decay) * g^2`, `p -= lr * g / sqrt(acc + eps)`.
///
/// Accumulators are created lazily on the first call.
pub fn rmsprop_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut OptimizerState,
) -> Result<()> {
    ensure_dim("gradient tensor count", params.len(), grads.len())?;
    if state.accumulators.is_empty() {
        state.accumulators = params.iter().map(|p| vec![0.0; p.len()]).collect();
    }
    ensure_dim(
        "optimizer accumulator count",
        params.len(),
        state.accumulators.len(),
    )?;
    for ((p, g), acc) in params.iter().zip(grads).zip(&state.accumulators) {
        if p.len() != g.len() || p.len() != acc.len() {
            return Err(Error::Dimension {
                what: "rmsprop tensor",
                expected: p.len(),
                found: g.len(),
            });
        }
    }
    let (lr, rho, eps) = (state.learning_rate, state.decay, state.epsilon);
    for ((p, g), acc) in params.iter_mut().zip(grads).zip(&mut state.accumulators) {
        for ((p, g), a) in p.iter_mut().zip(g.iter()).zip(acc.iter_mut()) {
            *a = rho * *a + (1.0 - rho) * g * g;
            *p -= lr * g / (*a + eps).sqrt();
        }
    }
    Ok(())
}

/// Convenience wrapper binding an [`OptimizerState`] to a model type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rmsprop {
    pub state: OptimizerState,
}

impl Rmsprop {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            state: OptimizerState::new(learning_rate, 0.9, 1e-8),
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let mut p = params.slices_mut();
        let g = grads.slices();
        rmsprop_step(&mut p, &g, &mut self.state)
    }
}
