//! Stacked LSTM / dropout / dense network, its forward pass and BPTT.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cell::{lstm_cell_backward, lstm_cell_forward, LstmLayerParams, LstmState, StepCache};
use super::{NetRng, NeuralError, Parameters};

/// Hidden units per LSTM layer when none are given.
pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_DROPOUT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Lstm { hidden: usize },
    Dropout { rate: f64 },
    Dense { units: usize },
}

/// Layer stack plus the width of each input row.
///
/// Every LSTM layer returns its full hidden sequence; the closing dense layer
/// reads the last time step only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_width: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkConfig {
    /// LSTM, dropout, LSTM, LSTM, dropout, dense.
    pub fn stacked(input_width: usize, hidden: usize, dropout: f64) -> Self {
        Self {
            input_width,
            layers: vec![
                LayerSpec::Lstm { hidden },
                LayerSpec::Dropout { rate: dropout },
                LayerSpec::Lstm { hidden },
                LayerSpec::Lstm { hidden },
                LayerSpec::Dropout { rate: dropout },
                LayerSpec::Dense { units: 1 },
            ],
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.input_width == 0 {
            return Err(NeuralError::Config("input width must be positive".into()));
        }
        let Some((last, body)) = self.layers.split_last() else {
            return Err(NeuralError::Config("empty layer stack".into()));
        };
        if *last != (LayerSpec::Dense { units: 1 }) {
            return Err(NeuralError::Config(
                "stack must end in a dense layer with one unit".into(),
            ));
        }
        let mut saw_lstm = false;
        for layer in body {
            match *layer {
                LayerSpec::Lstm { hidden } if hidden == 0 => {
                    return Err(NeuralError::Config("lstm layer with zero units".into()))
                }
                LayerSpec::Lstm { .. } => saw_lstm = true,
                LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                    return Err(NeuralError::Config(format!("dropout rate {rate} not in [0, 1)")))
                }
                LayerSpec::Dropout { .. } => {}
                LayerSpec::Dense { .. } => {
                    return Err(NeuralError::Config("dense layer only allowed last".into()))
                }
            }
        }
        if !saw_lstm {
            return Err(NeuralError::Config("stack needs at least one lstm layer".into()));
        }
        Ok(())
    }

    /// Width of the vector reaching the dense head.
    fn head_width(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                LayerSpec::Lstm { hidden } => Some(*hidden),
                _ => None,
            })
            .unwrap_or(self.input_width)
    }
}

/// All trainable tensors, LSTM layers in stack order then the dense head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub lstm: Vec<LstmLayerParams>,
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
}

impl NetworkParams {
    /// All-zero parameters shaped for `config`.
    pub fn zeros(config: &NetworkConfig) -> Self {
        let mut width = config.input_width;
        let mut lstm = Vec::new();
        for layer in &config.layers {
            if let LayerSpec::Lstm { hidden } = *layer {
                lstm.push(LstmLayerParams::zeros(hidden, width));
                width = hidden;
            }
        }
        Self {
            lstm,
            dense_w: vec![0.0; config.head_width()],
            dense_b: vec![0.0],
        }
    }

    /// Uniform(-k, k) weights with `k = 1/sqrt(fan_in)`, zero biases except the
    /// forget gate, which starts at 1.
    pub fn init(config: &NetworkConfig, rng: &mut NetRng) -> Self {
        let mut params = Self::zeros(config);
        for layer in &mut params.lstm {
            let k = 1.0 / (layer.concat_width() as f64).sqrt();
            for w in [&mut layer.w_i, &mut layer.w_c, &mut layer.w_f, &mut layer.w_o] {
                for v in w.iter_mut() {
                    *v = rng.random_range(-k..k);
                }
            }
            layer.b_f.iter_mut().for_each(|b| *b = 1.0);
        }
        let k = 1.0 / (params.dense_w.len() as f64).sqrt();
        for v in params.dense_w.iter_mut() {
            *v = rng.random_range(-k..k);
        }
        params
    }

    pub fn check_shapes(&self, config: &NetworkConfig) -> Result<(), NeuralError> {
        let expected = Self::zeros(config);
        if self.lstm.len() != expected.lstm.len() {
            return Err(NeuralError::Shape("lstm layer count differs from config".into()));
        }
        for (have, want) in self.lstm.iter().zip(&expected.lstm) {
            have.check_shapes()?;
            if have.hidden != want.hidden || have.input != want.input {
                return Err(NeuralError::Shape("lstm layer size differs from config".into()));
            }
        }
        if self.dense_w.len() != expected.dense_w.len() || self.dense_b.len() != 1 {
            return Err(NeuralError::Shape("dense head size differs from config".into()));
        }
        Ok(())
    }

    /// `(name, shape)` of every tensor, in [`Parameters`] order.
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (l, layer) in self.lstm.iter().enumerate() {
            for (t, name) in LstmLayerParams::TENSOR_NAMES.iter().enumerate() {
                let shape = if t < 4 {
                    vec![layer.hidden, layer.concat_width()]
                } else {
                    vec![layer.hidden]
                };
                out.push((format!("lstm.{l}.{name}"), shape));
            }
        }
        out.push(("dense.w".into(), vec![1, self.dense_w.len()]));
        out.push(("dense.b".into(), vec![1]));
        out
    }
}

impl Parameters for NetworkParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.lstm {
            out.extend(layer.tensors());
        }
        out.push(&self.dense_w);
        out.push(&self.dense_b);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.lstm {
            out.extend(layer.tensors_mut());
        }
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out
    }
}

/// Whether dropout masks are drawn.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut NetRng),
}

/// Sequence of `steps` rows of equal width, stored row-major.
#[derive(Debug, Clone, PartialEq)]
struct Seq {
    width: usize,
    data: Vec<f64>,
}

impl Seq {
    fn steps(&self) -> usize {
        self.data.len() / self.width
    }

    fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.width..(t + 1) * self.width]
    }
}

enum LayerTrace {
    Lstm { layer: usize, steps: Vec<StepCache> },
    Dropout { mask: Option<Vec<f64>> },
}

/// Everything the backward pass needs from one forward pass.
pub(crate) struct Trace {
    layers: Vec<LayerTrace>,
    head_input: Vec<f64>,
    steps: usize,
}

pub(crate) fn forward_traced(
    config: &NetworkConfig,
    params: &NetworkParams,
    window: &[f64],
    mut mode: Mode<'_>,
) -> Result<(f64, Trace), NeuralError> {
    if window.is_empty() || window.len() % config.input_width != 0 {
        return Err(NeuralError::Shape(format!(
            "window of {} values is not a whole number of {}-wide rows",
            window.len(),
            config.input_width
        )));
    }
    let mut seq = Seq {
        width: config.input_width,
        data: window.to_vec(),
    };
    let steps = seq.steps();
    let mut traces = Vec::with_capacity(config.layers.len());
    let mut lstm_idx = 0;
    for spec in &config.layers {
        match *spec {
            LayerSpec::Lstm { .. } => {
                let layer = &params.lstm[lstm_idx];
                let mut state = LstmState::zeros(layer.hidden);
                let mut caches = Vec::with_capacity(steps);
                let mut out = Vec::with_capacity(steps * layer.hidden);
                for t in 0..steps {
                    let (next, cache) = lstm_cell_forward(layer, seq.row(t), &state)?;
                    out.extend_from_slice(&next.h);
                    caches.push(cache);
                    state = next;
                }
                traces.push(LayerTrace::Lstm {
                    layer: lstm_idx,
                    steps: caches,
                });
                seq = Seq {
                    width: layer.hidden,
                    data: out,
                };
                lstm_idx += 1;
            }
            LayerSpec::Dropout { rate } => {
                let mask = match &mut mode {
                    Mode::Train(rng) if rate > 0.0 => {
                        let keep = 1.0 - rate;
                        let mask: Vec<f64> = (0..seq.data.len())
                            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect();
                        for (v, m) in seq.data.iter_mut().zip(&mask) {
                            *v *= m;
                        }
                        Some(mask)
                    }
                    _ => None,
                };
                traces.push(LayerTrace::Dropout { mask });
            }
            LayerSpec::Dense { .. } => {}
        }
    }
    let head_input = seq.row(steps - 1).to_vec();
    let out = params.dense_b[0]
        + params
            .dense_w
            .iter()
            .zip(&head_input)
            .map(|(w, h)| w * h)
            .sum::<f64>();
    if !out.is_finite() {
        return Err(NeuralError::NonFinite("network output".into()));
    }
    Ok((
        out,
        Trace {
            layers: traces,
            head_input,
            steps,
        },
    ))
}

/// Runs one window (`steps x input_width`, row-major) through the network.
pub fn network_forward(
    config: &NetworkConfig,
    params: &NetworkParams,
    window: &[f64],
    mode: Mode<'_>,
) -> Result<f64, NeuralError> {
    forward_traced(config, params, window, mode).map(|(y, _)| y)
}

/// Accumulates `d_out * d(output)/d(params)` into `grads`.
pub(crate) fn backward_traced(
    params: &NetworkParams,
    trace: &Trace,
    d_out: f64,
    grads: &mut NetworkParams,
) {
    for (g, h) in grads.dense_w.iter_mut().zip(&trace.head_input) {
        *g += d_out * h;
    }
    grads.dense_b[0] += d_out;

    let width = params.dense_w.len();
    let mut d_seq = vec![0.0; trace.steps * width];
    let last = (trace.steps - 1) * width;
    for (k, w) in params.dense_w.iter().enumerate() {
        d_seq[last + k] = d_out * w;
    }

    for layer_trace in trace.layers.iter().rev() {
        match layer_trace {
            LayerTrace::Dropout { mask } => {
                if let Some(mask) = mask {
                    for (d, m) in d_seq.iter_mut().zip(mask) {
                        *d *= m;
                    }
                }
            }
            LayerTrace::Lstm { layer, steps } => {
                let p = &params.lstm[*layer];
                let g = &mut grads.lstm[*layer];
                let n = p.hidden;
                let mut d_in = vec![0.0; trace.steps * p.input];
                let mut dh_next = vec![0.0; n];
                let mut dc_next = vec![0.0; n];
                for t in (0..trace.steps).rev() {
                    let dh: Vec<f64> = d_seq[t * n..(t + 1) * n]
                        .iter()
                        .zip(&dh_next)
                        .map(|(a, b)| a + b)
                        .collect();
                    let (dh_prev, dc_prev, dx) = lstm_cell_backward(p, &steps[t], &dh, &dc_next, g);
                    d_in[t * p.input..(t + 1) * p.input].copy_from_slice(&dx);
                    dh_next = dh_prev;
                    dc_next = dc_prev;
                }
                d_seq = d_in;
            }
        }
    }
}

/// Mean of squared differences.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64, NeuralError> {
    if predictions.len() != targets.len() {
        return Err(NeuralError::Shape(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(NeuralError::Empty);
    }
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / predictions.len() as f64)
}

/// Mean squared error of a batch and its exact gradient.
///
/// In training mode each window draws fresh dropout masks from `rng`, in
/// batch order; the same masks are used for the gradient.
pub fn loss_and_gradients(
    config: &NetworkConfig,
    params: &NetworkParams,
    windows: &[&[f64]],
    targets: &[f64],
    mut rng: Option<&mut NetRng>,
) -> Result<(f64, NetworkParams), NeuralError> {
    if windows.len() != targets.len() {
        return Err(NeuralError::Shape(format!(
            "{} windows for {} targets",
            windows.len(),
            targets.len()
        )));
    }
    if windows.is_empty() {
        return Err(NeuralError::Empty);
    }
    let n = windows.len() as f64;
    let mut grads = NetworkParams::zeros(config);
    let mut loss = 0.0;
    for (window, target) in windows.iter().zip(targets) {
        let mode = match rng.as_deref_mut() {
            Some(r) => Mode::Train(r),
            None => Mode::Eval,
        };
        let (pred, trace) = forward_traced(config, params, window, mode)?;
        let err = pred - target;
        loss += err * err;
        backward_traced(params, &trace, 2.0 * err / n, &mut grads);
    }
    Ok((loss / n, grads))
}

/// Eval-mode predictions, one per window.
pub fn predict(
    config: &NetworkConfig,
    params: &NetworkParams,
    windows: &[&[f64]],
) -> Result<Vec<f64>, NeuralError> {
    windows
        .iter()
        .map(|w| network_forward(config, params, w, Mode::Eval))
        .collect()
}
