//! LSTM cell with sigmoid gates and SELU candidate/output activations:
//!
//! ```text
//! f = σ(W_f x + U_f h + b_f)      i = σ(W_i x + U_i h + b_i)
//! ĉ = selu(W_c x + U_c h + b_c)   o = σ(W_o x + U_o h + b_o)
//! c' = c ⊙ f + i ⊙ ĉ              h' = o ⊙ selu(c')
//! ```
//!
//! Rows of every matrix here are independent sequences (gauges).

use super::activations::{selu, selu_grad, sigmoid};
use super::params::{GateParams, LstmParams};
use crate::numerics::Matrix;
use crate::{Error, Result};

/// Intermediate values of one step, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct CellCache {
    pub x: Matrix,
    pub h_prev: Matrix,
    pub c_prev: Matrix,
    pub forget: Matrix,
    pub input: Matrix,
    pub candidate_pre: Matrix,
    pub candidate: Matrix,
    pub output: Matrix,
    pub c: Matrix,
}

fn gate_pre(g: &GateParams, x: &Matrix, h: &Matrix) -> Result<Matrix> {
    let mut pre = x.matmul_transpose(&g.input_weights)?;
    let rec = h.matmul_transpose(&g.recurrent_weights)?;
    for r in 0..pre.rows() {
        for ((p, q), b) in pre.row_mut(r).iter_mut().zip(rec.row(r)).zip(&g.bias) {
            *p += q + b;
        }
    }
    Ok(pre)
}

/// One step over a batch of rows. Returns `(h, c, cache)`.
pub fn lstm_step(x: &Matrix, h_prev: &Matrix, c_prev: &Matrix, p: &LstmParams) -> Result<(Matrix, Matrix, CellCache)> {
    let hidden = p.hidden_size();
    if x.cols() != p.input_size()
        || h_prev.shape() != (x.rows(), hidden)
        || c_prev.shape() != (x.rows(), hidden)
    {
        return Err(Error::Shape(format!(
            "LSTM step: x {:?}, h {:?}, c {:?} for input {} hidden {hidden}",
            x.shape(),
            h_prev.shape(),
            c_prev.shape(),
            p.input_size()
        )));
    }
    let forget = gate_pre(&p.forget, x, h_prev)?.map(sigmoid);
    let input = gate_pre(&p.input, x, h_prev)?.map(sigmoid);
    let candidate_pre = gate_pre(&p.candidate, x, h_prev)?;
    let candidate = candidate_pre.map(selu);
    let output = gate_pre(&p.output, x, h_prev)?.map(sigmoid);

    let n = x.rows() * hidden;
    let mut c = Matrix::zeros(x.rows(), hidden);
    let mut h = Matrix::zeros(x.rows(), hidden);
    {
        let (cv, hv) = (c.values_mut(), h.values_mut());
        for k in 0..n {
            let ck = c_prev.values()[k] * forget.values()[k] + input.values()[k] * candidate.values()[k];
            cv[k] = ck;
            hv[k] = output.values()[k] * selu(ck);
        }
    }
    let cache = CellCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        forget,
        input,
        candidate_pre,
        candidate,
        output,
        c: c.clone(),
    };
    Ok((h, c, cache))
}

/// Single-sequence form of [`lstm_step`].
pub fn lstm_cell_forward(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmParams) -> Result<(Vec<f64>, Vec<f64>, CellCache)> {
    let x = Matrix::new(1, x.len(), x.to_vec())?;
    let h = Matrix::new(1, h_prev.len(), h_prev.to_vec())?;
    let c = Matrix::new(1, c_prev.len(), c_prev.to_vec())?;
    let (h, c, cache) = lstm_step(&x, &h, &c, p)?;
    Ok((h.into_values(), c.into_values(), cache))
}

/// Gradients flowing out of one step.
pub struct StepGrads {
    pub dx: Matrix,
    pub dh_prev: Matrix,
    pub dc_prev: Matrix,
}

fn accumulate_gate(grad: &mut GateParams, gate: &GateParams, d_pre: &Matrix, cache: &CellCache, dx: &mut Matrix, dh_prev: &mut Matrix) -> Result<()> {
    grad.input_weights.add_transpose_product(d_pre, &cache.x)?;
    grad.recurrent_weights.add_transpose_product(d_pre, &cache.h_prev)?;
    for (b, s) in grad.bias.iter_mut().zip(d_pre.column_sums()) {
        *b += s;
    }
    dx.add_scaled(&d_pre.matmul(&gate.input_weights)?, 1.0)?;
    dh_prev.add_scaled(&d_pre.matmul(&gate.recurrent_weights)?, 1.0)?;
    Ok(())
}

/// Backward through one step given `dh` and `dc` arriving at its outputs;
/// parameter gradients are added into `grads`.
pub fn lstm_step_backward(cache: &CellCache, dh: &Matrix, dc_next: &Matrix, p: &LstmParams, grads: &mut LstmParams) -> Result<StepGrads> {
    let shape = cache.c.shape();
    if dh.shape() != shape || dc_next.shape() != shape {
        return Err(Error::Contract("upstream gradients do not match the cached step".into()));
    }
    let n = shape.0 * shape.1;
    let mut d_forget = Matrix::zeros(shape.0, shape.1);
    let mut d_input = Matrix::zeros(shape.0, shape.1);
    let mut d_cand = Matrix::zeros(shape.0, shape.1);
    let mut d_output = Matrix::zeros(shape.0, shape.1);
    let mut dc_prev = Matrix::zeros(shape.0, shape.1);
    for k in 0..n {
        let c = cache.c.values()[k];
        let o = cache.output.values()[k];
        let f = cache.forget.values()[k];
        let i = cache.input.values()[k];
        let g = cache.candidate.values()[k];
        let dhk = dh.values()[k];

        let do_ = dhk * selu(c);
        let dc = dc_next.values()[k] + dhk * o * selu_grad(c);
        d_forget.values_mut()[k] = dc * cache.c_prev.values()[k] * f * (1.0 - f);
        d_input.values_mut()[k] = dc * g * i * (1.0 - i);
        d_cand.values_mut()[k] = dc * i * selu_grad(cache.candidate_pre.values()[k]);
        d_output.values_mut()[k] = do_ * o * (1.0 - o);
        dc_prev.values_mut()[k] = dc * f;
    }
    let mut dx = Matrix::zeros(cache.x.rows(), cache.x.cols());
    let mut dh_prev = Matrix::zeros(shape.0, shape.1);
    accumulate_gate(&mut grads.forget, &p.forget, &d_forget, cache, &mut dx, &mut dh_prev)?;
    accumulate_gate(&mut grads.input, &p.input, &d_input, cache, &mut dx, &mut dh_prev)?;
    accumulate_gate(&mut grads.candidate, &p.candidate, &d_cand, cache, &mut dx, &mut dh_prev)?;
    accumulate_gate(&mut grads.output, &p.output, &d_output, cache, &mut dx, &mut dh_prev)?;
    Ok(StepGrads { dx, dh_prev, dc_prev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn random_params(n_in: usize, hidden: usize, rng: &mut Rng) -> LstmParams {
        let mut gate = || GateParams {
            input_weights: Matrix::from_fn(hidden, n_in, |_, _| rng.uniform_range(-0.8, 0.8)),
            recurrent_weights: Matrix::from_fn(hidden, hidden, |_, _| rng.uniform_range(-0.8, 0.8)),
            bias: (0..hidden).map(|_| rng.uniform_range(-0.5, 0.5)).collect(),
        };
        LstmParams {
            forget: gate(),
            input: gate(),
            candidate: gate(),
            output: gate(),
        }
    }

    #[test]
    fn zero_parameters() {
        let p = LstmParams::zeros(2, 3);
        let c_prev = [0.4, -1.0, 2.0];
        let (h, c, cache) = lstm_cell_forward(&[1.0, -2.0], &[0.3, 0.1, -0.2], &c_prev, &p).unwrap();
        assert!(cache.forget.values().iter().all(|v| *v == 0.5));
        assert!(cache.candidate.values().iter().all(|v| *v == 0.0));
        for k in 0..3 {
            assert_eq!(c[k], 0.5 * c_prev[k]);
            assert_eq!(h[k], 0.5 * selu(0.5 * c_prev[k]));
        }
    }

    #[test]
    fn saturated_forget_gate_preserves_memory() {
        let mut p = LstmParams::zeros(2, 3);
        p.forget.bias = vec![20.0; 3];
        let c_prev = [0.7, -0.2, 1.5];
        let (_, c, _) = lstm_cell_forward(&[0.3, 0.9], &[0.0; 3], &c_prev, &p).unwrap();
        for k in 0..3 {
            assert!((c[k] - c_prev[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn exact_memory_over_many_steps() {
        // forget saturates to exactly 1 and input to exactly 0 in f64
        let mut p = LstmParams::zeros(2, 2);
        p.forget.bias = vec![50.0; 2];
        p.input.bias = vec![-800.0; 2];
        let c0 = vec![0.123, -4.5];
        let (mut h, mut c) = (vec![0.0; 2], c0.clone());
        for t in 0..200 {
            let x = [t as f64 * 0.1, -1.0];
            let (h2, c2, _) = lstm_cell_forward(&x, &h, &c, &p).unwrap();
            h = h2;
            c = c2;
        }
        assert_eq!(c, c0);
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = Rng::new(12);
        let p = random_params(3, 4, &mut rng);
        let x: Vec<f64> = (0..3).map(|_| rng.normal(0.0, 1.0)).collect();
        let h0: Vec<f64> = (0..4).map(|_| rng.normal(0.0, 0.5)).collect();
        let c0: Vec<f64> = (0..4).map(|_| rng.normal(0.0, 0.5)).collect();
        let (h, c, _) = lstm_cell_forward(&x, &h0, &c0, &p).unwrap();

        let pre = |g: &GateParams, j: usize| {
            let mut s = g.bias[j];
            for k in 0..3 {
                s += g.input_weights[(j, k)] * x[k];
            }
            for k in 0..4 {
                s += g.recurrent_weights[(j, k)] * h0[k];
            }
            s
        };
        for j in 0..4 {
            let f = 1.0 / (1.0 + (-pre(&p.forget, j)).exp());
            let i = 1.0 / (1.0 + (-pre(&p.input, j)).exp());
            let g = selu(pre(&p.candidate, j));
            let o = 1.0 / (1.0 + (-pre(&p.output, j)).exp());
            let cj = c0[j] * f + i * g;
            assert!((c[j] - cj).abs() < 1e-12);
            assert!((h[j] - o * selu(cj)).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let p = LstmParams::zeros(2, 3);
        assert!(matches!(
            lstm_cell_forward(&[1.0], &[0.0; 3], &[0.0; 3], &p),
            Err(Error::Shape(_))
        ));
    }
}
