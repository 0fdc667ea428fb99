use serde::{Deserialize, Serialize};

use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

/// Layer widths of the encoder → LSTM → decoder stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub n_inputs: usize,
    pub encoder_size: usize,
    pub hidden_size: usize,
    pub n_targets: usize,
}

impl ModelShape {
    pub fn n_parameters(&self) -> usize {
        let (i, e, h, t) = (self.n_inputs, self.encoder_size, self.hidden_size, self.n_targets);
        e * i + e + 4 * (h * e + h * h + h) + t * h + t
    }
}

/// Fully connected layer, `weight` is `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        DenseParams {
            weight: Matrix::zeros(n_out, n_in),
            bias: vec![0.0; n_out],
        }
    }

    fn glorot(n_in: usize, n_out: usize, rng: &mut Rng) -> Self {
        DenseParams {
            weight: glorot(n_out, n_in, n_in, n_out, rng),
            bias: vec![0.0; n_out],
        }
    }

    pub fn n_in(&self) -> usize {
        self.weight.cols()
    }

    pub fn n_out(&self) -> usize {
        self.weight.rows()
    }
}

/// One LSTM gate: `act(W·x + U·h + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateParams {
    /// `hidden × input`
    pub input_weights: Matrix,
    /// `hidden × hidden`
    pub recurrent_weights: Matrix,
    pub bias: Vec<f64>,
}

impl GateParams {
    pub fn zeros(n_in: usize, hidden: usize) -> Self {
        GateParams {
            input_weights: Matrix::zeros(hidden, n_in),
            recurrent_weights: Matrix::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }

    fn glorot(n_in: usize, hidden: usize, rng: &mut Rng) -> Self {
        GateParams {
            input_weights: glorot(hidden, n_in, n_in, hidden, rng),
            recurrent_weights: glorot(hidden, hidden, hidden, hidden, rng),
            bias: vec![0.0; hidden],
        }
    }
}

/// Forget, input, candidate and output gates, each with its own weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub forget: GateParams,
    pub input: GateParams,
    pub candidate: GateParams,
    pub output: GateParams,
}

impl LstmParams {
    pub fn zeros(n_in: usize, hidden: usize) -> Self {
        LstmParams {
            forget: GateParams::zeros(n_in, hidden),
            input: GateParams::zeros(n_in, hidden),
            candidate: GateParams::zeros(n_in, hidden),
            output: GateParams::zeros(n_in, hidden),
        }
    }

    pub fn input_size(&self) -> usize {
        self.forget.input_weights.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.forget.input_weights.rows()
    }

    pub fn gates(&self) -> [&GateParams; 4] {
        [&self.forget, &self.input, &self.candidate, &self.output]
    }

    pub(crate) fn check(&self) -> Result<()> {
        let (h, i) = (self.hidden_size(), self.input_size());
        for g in self.gates() {
            if g.input_weights.shape() != (h, i)
                || g.recurrent_weights.shape() != (h, h)
                || g.bias.len() != h
            {
                return Err(Error::Shape("LSTM gates disagree on sizes".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub encoder: DenseParams,
    pub lstm: LstmParams,
    pub decoder: DenseParams,
    pub dropout_rate: f64,
}

pub const DEFAULT_DROPOUT: f64 = 0.2;

/// Names of the parameter tensors in their fixed serialization order.
pub const TENSOR_NAMES: [&str; 16] = [
    "encoder.weight",
    "encoder.bias",
    "lstm.forget.input_weights",
    "lstm.forget.recurrent_weights",
    "lstm.forget.bias",
    "lstm.input.input_weights",
    "lstm.input.recurrent_weights",
    "lstm.input.bias",
    "lstm.candidate.input_weights",
    "lstm.candidate.recurrent_weights",
    "lstm.candidate.bias",
    "lstm.output.input_weights",
    "lstm.output.recurrent_weights",
    "lstm.output.bias",
    "decoder.weight",
    "decoder.bias",
];

/// Gradients with the same layout as [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub encoder: DenseParams,
    pub lstm: LstmParams,
    pub decoder: DenseParams,
}

fn glorot(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform_range(-limit, limit))
}

fn tensors_of<'a>(enc: &'a DenseParams, lstm: &'a LstmParams, dec: &'a DenseParams) -> [&'a [f64]; 16] {
    [
        enc.weight.values(),
        &enc.bias,
        lstm.forget.input_weights.values(),
        lstm.forget.recurrent_weights.values(),
        &lstm.forget.bias,
        lstm.input.input_weights.values(),
        lstm.input.recurrent_weights.values(),
        &lstm.input.bias,
        lstm.candidate.input_weights.values(),
        lstm.candidate.recurrent_weights.values(),
        &lstm.candidate.bias,
        lstm.output.input_weights.values(),
        lstm.output.recurrent_weights.values(),
        &lstm.output.bias,
        dec.weight.values(),
        &dec.bias,
    ]
}

fn tensors_of_mut<'a>(
    enc: &'a mut DenseParams,
    lstm: &'a mut LstmParams,
    dec: &'a mut DenseParams,
) -> [&'a mut [f64]; 16] {
    let LstmParams {
        forget,
        input,
        candidate,
        output,
    } = lstm;
    [
        enc.weight.values_mut(),
        &mut enc.bias,
        forget.input_weights.values_mut(),
        forget.recurrent_weights.values_mut(),
        &mut forget.bias,
        input.input_weights.values_mut(),
        input.recurrent_weights.values_mut(),
        &mut input.bias,
        candidate.input_weights.values_mut(),
        candidate.recurrent_weights.values_mut(),
        &mut candidate.bias,
        output.input_weights.values_mut(),
        output.recurrent_weights.values_mut(),
        &mut output.bias,
        dec.weight.values_mut(),
        &mut dec.bias,
    ]
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(shape: ModelShape, dropout_rate: f64, rng: &mut Rng) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::Domain(format!("dropout rate must be in [0, 1), got {dropout_rate}")));
        }
        let encoder = DenseParams::glorot(shape.n_inputs, shape.encoder_size, rng);
        let lstm = LstmParams {
            forget: GateParams::glorot(shape.encoder_size, shape.hidden_size, rng),
            input: GateParams::glorot(shape.encoder_size, shape.hidden_size, rng),
            candidate: GateParams::glorot(shape.encoder_size, shape.hidden_size, rng),
            output: GateParams::glorot(shape.encoder_size, shape.hidden_size, rng),
        };
        let decoder = DenseParams::glorot(shape.hidden_size, shape.n_targets, rng);
        Ok(ModelParams {
            encoder,
            lstm,
            decoder,
            dropout_rate,
        })
    }

    pub fn zeros(shape: ModelShape) -> Self {
        ModelParams {
            encoder: DenseParams::zeros(shape.n_inputs, shape.encoder_size),
            lstm: LstmParams::zeros(shape.encoder_size, shape.hidden_size),
            decoder: DenseParams::zeros(shape.hidden_size, shape.n_targets),
            dropout_rate: 0.0,
        }
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            n_inputs: self.encoder.n_in(),
            encoder_size: self.encoder.n_out(),
            hidden_size: self.lstm.hidden_size(),
            n_targets: self.decoder.n_out(),
        }
    }

    /// Verifies that the layers chain together.
    pub fn validate(&self) -> Result<()> {
        self.lstm.check()?;
        if self.encoder.bias.len() != self.encoder.n_out() || self.decoder.bias.len() != self.decoder.n_out() {
            return Err(Error::Shape("dense bias length differs from layer width".into()));
        }
        if self.encoder.n_out() != self.lstm.input_size() {
            return Err(Error::Shape(format!(
                "encoder emits {} features, LSTM expects {}",
                self.encoder.n_out(),
                self.lstm.input_size()
            )));
        }
        if self.decoder.n_in() != self.lstm.hidden_size() {
            return Err(Error::Shape(format!(
                "decoder reads {} features, LSTM hidden size is {}",
                self.decoder.n_in(),
                self.lstm.hidden_size()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Domain(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        Ok(())
    }

    /// Parameter tensors in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 16] {
        tensors_of(&self.encoder, &self.lstm, &self.decoder)
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 16] {
        tensors_of_mut(&mut self.encoder, &mut self.lstm, &mut self.decoder)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    /// Overwrites every parameter from a flat vector in [`TENSOR_NAMES`]
    /// order.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.shape().n_parameters();
        if flat.len() != expected {
            return Err(Error::Shape(format!("expected {expected} parameters, got {}", flat.len())));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    pub fn zero_gradients(&self) -> Gradients {
        let s = self.shape();
        Gradients {
            encoder: DenseParams::zeros(s.n_inputs, s.encoder_size),
            lstm: LstmParams::zeros(s.encoder_size, s.hidden_size),
            decoder: DenseParams::zeros(s.hidden_size, s.n_targets),
        }
    }
}

impl Gradients {
    pub fn tensors(&self) -> [&[f64]; 16] {
        tensors_of(&self.encoder, &self.lstm, &self.decoder)
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 16] {
        tensors_of_mut(&mut self.encoder, &mut self.lstm, &mut self.decoder)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= k);
        }
    }
}
