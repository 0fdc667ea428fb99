//! Dense encoder → LSTM → dense decoder, all with SELU activations.
//!
//! The encoder runs on every time step, the LSTM consumes the encoded
//! sequence, and the decoder reads only the final hidden state to produce
//! one horizon-1 prediction per target. In training mode inverted dropout is
//! applied to the encoder output and to the decoder input (the final hidden
//! state), so evaluation needs no rescaling. The predictions themselves are
//! never masked: under squared error a masked output is pulled toward
//! `(1 − rate)` times the target.

use super::activations::{selu, selu_grad};
use super::lstm::{lstm_step, lstm_step_backward, CellCache};
use super::params::{DenseParams, Gradients, ModelParams};
use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted-dropout masks for one forward pass. Entries are `0` or
/// `1/(1 − rate)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMasks {
    /// One `n_rows × encoder_size` mask per time step.
    pub encoder: Vec<Matrix>,
    /// `n_rows × hidden_size`, applied to the decoder input.
    pub decoder: Matrix,
}

impl DropoutMasks {
    pub fn sample(rate: f64, steps: usize, rows: usize, encoder_size: usize, hidden_size: usize, rng: &mut Rng) -> Self {
        let keep = 1.0 - rate;
        let scale = 1.0 / keep;
        let mut draw = |r: usize, c: usize| {
            Matrix::from_fn(r, c, |_, _| if rng.bernoulli(keep) { scale } else { 0.0 })
        };
        let encoder = (0..steps).map(|_| draw(rows, encoder_size)).collect();
        let decoder = draw(rows, hidden_size);
        DropoutMasks { encoder, decoder }
    }
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    encoder_pre: Vec<Matrix>,
    cells: Vec<CellCache>,
    /// Final hidden state after the decoder-input mask.
    decoder_in: Matrix,
    decoder_pre: Matrix,
    masks: Option<DropoutMasks>,
}

impl ForwardCache {
    pub fn masks(&self) -> Option<&DropoutMasks> {
        self.masks.as_ref()
    }
}

fn dense_forward(layer: &DenseParams, x: &Matrix) -> Result<Matrix> {
    let mut pre = x.matmul_transpose(&layer.weight)?;
    for r in 0..pre.rows() {
        for (v, b) in pre.row_mut(r).iter_mut().zip(&layer.bias) {
            *v += b;
        }
    }
    Ok(pre)
}

fn apply_mask(m: &mut Matrix, mask: Option<&Matrix>) {
    if let Some(mask) = mask {
        for (v, k) in m.values_mut().iter_mut().zip(mask.values()) {
            *v *= k;
        }
    }
}

/// Forward pass over a window. `inputs` holds one `n_rows × n_inputs`
/// matrix per time step; the result is `n_rows × n_targets`.
///
/// Masks are drawn from `rng` only in [`Mode::Train`] with a nonzero
/// dropout rate.
pub fn forward(inputs: &[Matrix], p: &ModelParams, mode: Mode, rng: &mut Rng) -> Result<(Matrix, ForwardCache)> {
    let masks = match mode {
        Mode::Train if p.dropout_rate > 0.0 => {
            let rows = inputs.first().map_or(0, Matrix::rows);
            let s = p.shape();
            Some(DropoutMasks::sample(p.dropout_rate, inputs.len(), rows, s.encoder_size, s.hidden_size, rng))
        }
        _ => None,
    };
    forward_with_masks(inputs, p, masks)
}

/// Forward pass with explicit dropout masks (`None` = evaluation).
pub fn forward_with_masks(inputs: &[Matrix], p: &ModelParams, masks: Option<DropoutMasks>) -> Result<(Matrix, ForwardCache)> {
    p.validate()?;
    let Some(first) = inputs.first() else {
        return Err(Error::Shape("window has no time steps".into()));
    };
    let rows = first.rows();
    let shape = p.shape();
    for x in inputs {
        if x.shape() != (rows, shape.n_inputs) {
            return Err(Error::Shape(format!(
                "window step is {}x{}, model expects {rows}x{}",
                x.rows(),
                x.cols(),
                shape.n_inputs
            )));
        }
    }
    if let Some(m) = &masks {
        if m.encoder.len() != inputs.len()
            || m.encoder.iter().any(|e| e.shape() != (rows, shape.encoder_size))
            || m.decoder.shape() != (rows, shape.hidden_size)
        {
            return Err(Error::Shape("dropout masks do not match the window".into()));
        }
    }

    let mut h = Matrix::zeros(rows, shape.hidden_size);
    let mut c = Matrix::zeros(rows, shape.hidden_size);
    let mut encoder_pre = Vec::with_capacity(inputs.len());
    let mut cells = Vec::with_capacity(inputs.len());
    for (t, x) in inputs.iter().enumerate() {
        let pre = dense_forward(&p.encoder, x)?;
        let mut encoded = pre.map(selu);
        apply_mask(&mut encoded, masks.as_ref().map(|m| &m.encoder[t]));
        let (h2, c2, cache) = lstm_step(&encoded, &h, &c, &p.lstm)?;
        encoder_pre.push(pre);
        cells.push(cache);
        h = h2;
        c = c2;
    }
    apply_mask(&mut h, masks.as_ref().map(|m| &m.decoder));
    let decoder_pre = dense_forward(&p.decoder, &h)?;
    let prediction = decoder_pre.map(selu);
    Ok((
        prediction,
        ForwardCache {
            inputs: inputs.to_vec(),
            encoder_pre,
            cells,
            decoder_in: h,
            decoder_pre,
            masks,
        },
    ))
}

fn dense_backward(layer: &DenseParams, grad: &mut DenseParams, x: &Matrix, d_pre: &Matrix) -> Result<Matrix> {
    grad.weight.add_transpose_product(d_pre, x)?;
    for (b, s) in grad.bias.iter_mut().zip(d_pre.column_sums()) {
        *b += s;
    }
    d_pre.matmul(&layer.weight)
}

/// Backpropagation through time for a cached forward pass, given
/// `∂loss/∂prediction`.
pub fn backward(cache: &ForwardCache, p: &ModelParams, d_prediction: &Matrix) -> Result<Gradients> {
    let shape = p.shape();
    if cache.decoder_pre.shape() != d_prediction.shape()
        || cache.decoder_in.cols() != shape.hidden_size
        || cache.inputs.first().is_some_and(|x| x.cols() != shape.n_inputs)
        || cache.cells.first().is_some_and(|c| c.x.cols() != shape.encoder_size)
    {
        return Err(Error::Contract("forward cache does not belong to these parameters".into()));
    }
    let mut grads = p.zero_gradients();

    let mut d_dec = d_prediction.clone();
    for (g, z) in d_dec.values_mut().iter_mut().zip(cache.decoder_pre.values()) {
        *g *= selu_grad(*z);
    }
    let mut dh = dense_backward(&p.decoder, &mut grads.decoder, &cache.decoder_in, &d_dec)?;
    apply_mask(&mut dh, cache.masks.as_ref().map(|m| &m.decoder));
    let mut dc = Matrix::zeros(dh.rows(), dh.cols());

    for t in (0..cache.cells.len()).rev() {
        let step = lstm_step_backward(&cache.cells[t], &dh, &dc, &p.lstm, &mut grads.lstm)?;
        let mut d_enc = step.dx;
        apply_mask(&mut d_enc, cache.masks.as_ref().map(|m| &m.encoder[t]));
        for (g, z) in d_enc.values_mut().iter_mut().zip(cache.encoder_pre[t].values()) {
            *g *= selu_grad(*z);
        }
        grads.encoder.weight.add_transpose_product(&d_enc, &cache.inputs[t])?;
        for (b, s) in grads.encoder.bias.iter_mut().zip(d_enc.column_sums()) {
            *b += s;
        }
        dh = step.dh_prev;
        dc = step.dc_prev;
    }
    Ok(grads)
}

/// Mean squared error over every entry and its gradient.
pub fn mse_loss(prediction: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if prediction.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            prediction.shape(),
            target.shape()
        )));
    }
    let n = prediction.values().len() as f64;
    let diff = prediction.sub(target)?;
    let loss = diff.values().iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff.scale(2.0 / n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::ModelShape;

    fn tiny() -> (ModelParams, Vec<Matrix>) {
        let mut rng = Rng::new(3);
        let shape = ModelShape {
            n_inputs: 2,
            encoder_size: 3,
            hidden_size: 3,
            n_targets: 2,
        };
        let p = ModelParams::init(shape, 0.2, &mut rng).unwrap();
        let inputs = (0..4)
            .map(|_| Matrix::from_fn(2, 2, |_, _| rng.uniform_range(-1.0, 1.0)))
            .collect();
        (p, inputs)
    }

    #[test]
    fn eval_is_deterministic() {
        let (p, x) = tiny();
        let a = forward(&x, &p, Mode::Eval, &mut Rng::new(1)).unwrap().0;
        let b = forward(&x, &p, Mode::Eval, &mut Rng::new(2)).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn zero_dropout_train_equals_eval() {
        let (mut p, x) = tiny();
        p.dropout_rate = 0.0;
        let a = forward(&x, &p, Mode::Train, &mut Rng::new(1)).unwrap().0;
        let b = forward(&x, &p, Mode::Eval, &mut Rng::new(1)).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let (p, x) = tiny();
        let (pred, cache) = forward(&x, &p, Mode::Train, &mut Rng::new(5)).unwrap();
        let g = backward(&cache, &p, &Matrix::zeros(pred.rows(), pred.cols())).unwrap();
        assert!(g.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradients_are_homogeneous() {
        let (p, x) = tiny();
        let (pred, cache) = forward(&x, &p, Mode::Train, &mut Rng::new(5)).unwrap();
        let target = Matrix::filled(pred.rows(), pred.cols(), 0.3);
        let (_, d) = mse_loss(&pred, &target).unwrap();
        let g1 = backward(&cache, &p, &d).unwrap().flatten();
        let g2 = backward(&cache, &p, &d.scale(2.0)).unwrap().flatten();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn shape_mismatch() {
        let (p, _) = tiny();
        let bad = vec![Matrix::zeros(2, 5)];
        assert!(matches!(
            forward(&bad, &p, Mode::Eval, &mut Rng::new(0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn mse_gradient() {
        let p = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let t = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let (l, d) = mse_loss(&p, &t).unwrap();
        assert_eq!(l, 2.5);
        assert_eq!(d.values(), &[1.0, 2.0]);
    }
}
