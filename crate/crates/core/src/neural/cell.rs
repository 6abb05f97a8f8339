//! A single LSTM layer: gate equations, one-step forward and its adjoint.

use serde::{Deserialize, Serialize};

use super::NeuralError;

/// Gate weights over the concatenation `[h_{t-1}, x_t]`, each row-major with
/// shape `hidden x (hidden + input)`, plus one bias vector per gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerParams {
    pub hidden: usize,
    pub input: usize,
    pub w_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub w_f: Vec<f64>,
    pub w_o: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let w = vec![0.0; hidden * (hidden + input)];
        let b = vec![0.0; hidden];
        Self {
            hidden,
            input,
            w_i: w.clone(),
            w_c: w.clone(),
            w_f: w.clone(),
            w_o: w,
            b_i: b.clone(),
            b_c: b.clone(),
            b_f: b.clone(),
            b_o: b,
        }
    }

    /// Columns of each weight matrix.
    pub fn concat_width(&self) -> usize {
        self.hidden + self.input
    }

    pub fn tensors(&self) -> [&[f64]; 8] {
        [
            &self.w_i, &self.w_c, &self.w_f, &self.w_o, &self.b_i, &self.b_c, &self.b_f,
            &self.b_o,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.w_i,
            &mut self.w_c,
            &mut self.w_f,
            &mut self.w_o,
            &mut self.b_i,
            &mut self.b_c,
            &mut self.b_f,
            &mut self.b_o,
        ]
    }

    pub const TENSOR_NAMES: [&'static str; 8] =
        ["w_i", "w_c", "w_f", "w_o", "b_i", "b_c", "b_f", "b_o"];

    pub fn check_shapes(&self) -> Result<(), NeuralError> {
        let k = self.concat_width();
        let ok = [&self.w_i, &self.w_c, &self.w_f, &self.w_o]
            .iter()
            .all(|w| w.len() == self.hidden * k)
            && [&self.b_i, &self.b_c, &self.b_f, &self.b_o]
                .iter()
                .all(|b| b.len() == self.hidden);
        if ok {
            Ok(())
        } else {
            Err(NeuralError::Shape(format!(
                "lstm layer tensors inconsistent with hidden={} input={}",
                self.hidden, self.input
            )))
        }
    }
}

/// Hidden and cell vectors carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Activations saved by the forward step for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    /// `[h_{t-1}, x_t]`
    pub concat: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    /// Candidate cell value.
    pub c_hat: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn affine(w: &[f64], b: &[f64], v: &[f64], out: &mut [f64]) {
    let k = v.len();
    for (r, slot) in out.iter_mut().enumerate() {
        let row = &w[r * k..(r + 1) * k];
        let mut acc = b[r];
        for (a, x) in row.iter().zip(v) {
            acc += a * x;
        }
        *slot = acc;
    }
}

/// Advances one time step.
///
/// ```text
/// i_t  = sigmoid(W_i [h_{t-1}, x_t] + b_i)
/// ĉ_t  = tanh(W_c [h_{t-1}, x_t] + b_c)
/// f_t  = sigmoid(W_f [h_{t-1}, x_t] + b_f)
/// c_t  = f_t * c_{t-1} + i_t * ĉ_t
/// o_t  = sigmoid(W_o [h_{t-1}, x_t] + b_o)
/// h_t  = o_t * tanh(c_t)
/// ```
pub fn lstm_cell_forward(
    params: &LstmLayerParams,
    x: &[f64],
    state: &LstmState,
) -> Result<(LstmState, StepCache), NeuralError> {
    let n = params.hidden;
    if x.len() != params.input || state.h.len() != n || state.c.len() != n {
        return Err(NeuralError::Shape(format!(
            "cell expects input {} and state {}, got input {} and state {}/{}",
            params.input,
            n,
            x.len(),
            state.h.len(),
            state.c.len()
        )));
    }
    let mut concat = Vec::with_capacity(n + x.len());
    concat.extend_from_slice(&state.h);
    concat.extend_from_slice(x);

    let mut i = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut o = vec![0.0; n];
    let mut c_hat = vec![0.0; n];
    affine(&params.w_i, &params.b_i, &concat, &mut i);
    affine(&params.w_f, &params.b_f, &concat, &mut f);
    affine(&params.w_o, &params.b_o, &concat, &mut o);
    affine(&params.w_c, &params.b_c, &concat, &mut c_hat);
    for v in i.iter_mut().chain(f.iter_mut()).chain(o.iter_mut()) {
        *v = sigmoid(*v);
    }
    for v in c_hat.iter_mut() {
        *v = v.tanh();
    }

    let mut c = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut tanh_c = vec![0.0; n];
    for k in 0..n {
        c[k] = f[k] * state.c[k] + i[k] * c_hat[k];
        tanh_c[k] = c[k].tanh();
        h[k] = o[k] * tanh_c[k];
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(NeuralError::NonFinite("lstm cell state".into()));
    }
    debug_assert!(i.iter().chain(&f).chain(&o).all(|g| (0.0..=1.0).contains(g)));
    debug_assert!(c_hat.iter().all(|g| (-1.0..=1.0).contains(g)));

    let cache = StepCache {
        concat,
        c_prev: state.c.clone(),
        i,
        f,
        o,
        c_hat,
        tanh_c,
    };
    Ok((LstmState { h, c }, cache))
}

/// Adjoint of [`lstm_cell_forward`].
///
/// `dh` and `dc` are the loss gradients with respect to `h_t` and `c_t`.
/// Parameter gradients are accumulated into `grads`. Returns the gradients
/// with respect to `h_{t-1}`, `c_{t-1}` and `x_t`.
pub(crate) fn lstm_cell_backward(
    params: &LstmLayerParams,
    cache: &StepCache,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmLayerParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = params.hidden;
    let k = params.concat_width();
    let mut dz_i = vec![0.0; n];
    let mut dz_f = vec![0.0; n];
    let mut dz_o = vec![0.0; n];
    let mut dz_c = vec![0.0; n];
    let mut dc_prev = vec![0.0; n];
    for r in 0..n {
        let (i, f, o, g, tc) = (cache.i[r], cache.f[r], cache.o[r], cache.c_hat[r], cache.tanh_c[r]);
        let d_o = dh[r] * tc;
        let d_c = dc[r] + dh[r] * o * (1.0 - tc * tc);
        dz_f[r] = d_c * cache.c_prev[r] * f * (1.0 - f);
        dz_i[r] = d_c * g * i * (1.0 - i);
        dz_c[r] = d_c * i * (1.0 - g * g);
        dz_o[r] = d_o * o * (1.0 - o);
        dc_prev[r] = d_c * f;
    }

    let mut d_concat = vec![0.0; k];
    let gates: [(&[f64], &mut Vec<f64>, &mut Vec<f64>, &[f64]); 4] = [
        (&params.w_i, &mut grads.w_i, &mut grads.b_i, &dz_i),
        (&params.w_f, &mut grads.w_f, &mut grads.b_f, &dz_f),
        (&params.w_o, &mut grads.w_o, &mut grads.b_o, &dz_o),
        (&params.w_c, &mut grads.w_c, &mut grads.b_c, &dz_c),
    ];
    for (w, gw, gb, dz) in gates {
        for r in 0..n {
            let d = dz[r];
            if d == 0.0 {
                continue;
            }
            gb[r] += d;
            let row = r * k;
            for col in 0..k {
                gw[row + col] += d * cache.concat[col];
                d_concat[col] += w[row + col] * d;
            }
        }
    }
    let dx = d_concat.split_off(n);
    (d_concat, dc_prev, dx)
}
