use super::params::{Gradients, ModelParams, TENSOR_NAMES};
use crate::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;

/// Adam moments and hyperparameters. `m` and `v` hold one buffer per
/// parameter tensor, in the fixed tensor order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. Parameters are left untouched if any
/// gradient is non-finite.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let g_tensors = grads.tensors();
    for (name, g) in TENSOR_NAMES.iter().zip(g_tensors.iter()) {
        if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                parameter: format!("{name}[{pos}]"),
            });
        }
    }
    let p_tensors = params.tensors_mut();
    if p_tensors.iter().zip(g_tensors.iter()).any(|(p, g)| p.len() != g.len())
        || state.m.len() != p_tensors.len()
        || state.m.iter().zip(g_tensors.iter()).any(|(m, g)| m.len() != g.len())
    {
        return Err(Error::Shape("gradients or optimizer state do not mirror the parameters".into()));
    }

    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((p, g), m), v) in p_tensors
        .into_iter()
        .zip(g_tensors.iter())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for k in 0..p.len() {
            let gk = g[k];
            m[k] = b1 * m[k] + (1.0 - b1) * gk;
            v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
