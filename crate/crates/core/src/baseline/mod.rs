//! ARMA(p, q) baseline and its sentiment-augmented linear extension.
//!
//! The price model is
//!
//! ```text
//! X_t = mu + sum_{i=1..p} phi_i X_{t-i} - sum_{j=1..q} psi_j eps_{t-j} + eps_t
//! ```
//!
//! with the moving-average sum subtracted. Point forecasts set `eps_t = 0`.
//! The sentiment extension predicts `alpha * X_t^A + lambda_s * f2(S) + c`
//! where `f2` is linear in the previous `p` daily sentiment values.
//!
//! Fitting is conditional least squares with residuals seeded at zero. For
//! `q > 0` the residuals are recomputed from the current estimate and the
//! regression repeated a fixed number of times.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

/// Residual-refresh passes used when `q > 0`.
pub const DEFAULT_FIT_ITERATIONS: usize = 50;
/// Ridge strength applied when [`FitOptions::ridge`] is enabled without a value.
pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum ArmaError {
    #[error("need at least {needed} values, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("series of length {len} too short for ARMA({p}, {q})")]
    SeriesTooShort { len: usize, p: usize, q: usize },
    #[error("normal equations are singular")]
    Singular,
    #[error("residual buffer has length {got}, model expects {expected}")]
    ResidualShape { expected: usize, got: usize },
    #[error("sentiment coefficients ({got}) must match AR order ({expected})")]
    SentimentShape { expected: usize, got: usize },
    #[error("non-finite parameter or value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaParams {
    pub mu: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ArmaParams {
    pub fn new(mu: f64, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self, ArmaError> {
        let params = Self { mu, phi, psi };
        if !params.is_finite() {
            return Err(ArmaError::NonFinite);
        }
        Ok(params)
    }

    /// AR order.
    pub fn p(&self) -> usize {
        self.phi.len()
    }

    /// MA order.
    pub fn q(&self) -> usize {
        self.psi.len()
    }

    fn is_finite(&self) -> bool {
        self.mu.is_finite()
            && self.phi.iter().all(|v| v.is_finite())
            && self.psi.iter().all(|v| v.is_finite())
    }
}

/// The last `q` one-step residuals, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualState {
    eps: VecDeque<f64>,
}

impl ResidualState {
    pub fn zeros(q: usize) -> Self {
        Self {
            eps: VecDeque::from(vec![0.0; q]),
        }
    }

    /// Records a new residual, dropping the oldest.
    pub fn push(&mut self, residual: f64) {
        if self.eps.is_empty() {
            return;
        }
        self.eps.pop_back();
        self.eps.push_front(residual);
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// `eps_{t-j}` for `j = 1..=q`.
    pub fn lag(&self, j: usize) -> f64 {
        self.eps[j - 1]
    }
}

/// One-step forecast from the last `p` values of `history` (chronological).
pub fn arma_predict(
    params: &ArmaParams,
    history: &[f64],
    residuals: &ResidualState,
) -> Result<f64, ArmaError> {
    let p = params.p();
    if history.len() < p {
        return Err(ArmaError::InsufficientHistory {
            needed: p,
            got: history.len(),
        });
    }
    if residuals.len() != params.q() {
        return Err(ArmaError::ResidualShape {
            expected: params.q(),
            got: residuals.len(),
        });
    }
    let n = history.len();
    let ar: f64 = (1..=p).map(|i| params.phi[i - 1] * history[n - i]).sum();
    let ma: f64 = (1..=params.q()).map(|j| params.psi[j - 1] * residuals.lag(j)).sum();
    Ok(params.mu + ar - ma)
}

/// In-sample one-step forecasts: element `k` predicts `series[p + k]` from the
/// real values before it, with residuals tracked from zero.
pub fn one_step_predictions(params: &ArmaParams, series: &[f64]) -> Result<Vec<f64>, ArmaError> {
    let p = params.p();
    let mut residuals = ResidualState::zeros(params.q());
    let mut out = Vec::with_capacity(series.len().saturating_sub(p));
    for t in p..series.len() {
        let pred = arma_predict(params, &series[..t], &residuals)?;
        residuals.push(series[t] - pred);
        out.push(pred);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Diagonal loading for the normal equations. `None` reports singular
    /// systems as errors.
    pub ridge: Option<f64>,
    pub iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            ridge: None,
            iterations: DEFAULT_FIT_ITERATIONS,
        }
    }
}

impl FitOptions {
    pub fn with_ridge() -> Self {
        Self {
            ridge: Some(DEFAULT_RIDGE),
            ..Self::default()
        }
    }
}

fn regression_rows(series: &[f64], eps: &[f64], p: usize, q: usize) -> Vec<Vec<f64>> {
    (p..series.len())
        .map(|t| {
            let mut row = Vec::with_capacity(1 + p + q);
            row.push(1.0);
            row.extend((1..=p).map(|i| series[t - i]));
            row.extend((1..=q).map(|j| if t >= j { -eps[t - j] } else { 0.0 }));
            row
        })
        .collect()
}

fn unpack(beta: &[f64], p: usize) -> Result<ArmaParams, ArmaError> {
    ArmaParams::new(beta[0], beta[1..=p].to_vec(), beta[p + 1..].to_vec())
}

/// Conditional least-squares fit of ARMA(p, q).
pub fn arma_fit(
    series: &[f64],
    p: usize,
    q: usize,
    options: FitOptions,
) -> Result<ArmaParams, ArmaError> {
    if series.len() < p + q + 2 {
        return Err(ArmaError::SeriesTooShort {
            len: series.len(),
            p,
            q,
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(ArmaError::NonFinite);
    }
    let targets = &series[p..];
    let mut eps = vec![0.0; series.len()];
    let passes = if q == 0 { 1 } else { options.iterations.max(2) };
    let mut params = None;
    for pass in 0..passes {
        // zero-seeded residuals make the MA columns vanish on the first pass
        let ma_order = if pass == 0 { 0 } else { q };
        let rows = regression_rows(series, &eps, p, ma_order);
        let mut beta =
            linalg::least_squares(&rows, targets, options.ridge).ok_or(ArmaError::Singular)?;
        beta.resize(1 + p + q, 0.0);
        let fitted = unpack(&beta, p)?;
        if q > 0 {
            let preds = one_step_predictions(&fitted, series)?;
            for (k, pred) in preds.iter().enumerate() {
                eps[p + k] = series[p + k] - pred;
            }
            if eps.iter().any(|e| !e.is_finite()) {
                return Err(ArmaError::NonFinite);
            }
        }
        params = Some(fitted);
    }
    Ok(params.expect("at least one pass"))
}

/// Weights of the sentiment-augmented predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentArmaParams {
    #[serde(flatten)]
    pub price_arma: ArmaParams,
    pub alpha: f64,
    pub lambda_s: f64,
    pub c: f64,
    pub sent_coeffs: Vec<f64>,
}

impl SentimentArmaParams {
    /// Wraps a plain ARMA model with `alpha = 1` and no sentiment term.
    pub fn from_arma(price_arma: ArmaParams) -> Self {
        let p = price_arma.p();
        Self {
            price_arma,
            alpha: 1.0,
            lambda_s: 0.0,
            c: 0.0,
            sent_coeffs: vec![0.0; p],
        }
    }
}

/// `alpha * X_t^A + lambda_s * sum_i sent_coeffs_i * S_{t-i} + c`.
pub fn sentiment_arma_predict(
    params: &SentimentArmaParams,
    price_history: &[f64],
    sent_history: &[f64],
    residuals: &ResidualState,
) -> Result<f64, ArmaError> {
    let p = params.price_arma.p();
    if params.sent_coeffs.len() != p {
        return Err(ArmaError::SentimentShape {
            expected: p,
            got: params.sent_coeffs.len(),
        });
    }
    if sent_history.len() < p {
        return Err(ArmaError::InsufficientHistory {
            needed: p,
            got: sent_history.len(),
        });
    }
    let price_term = arma_predict(&params.price_arma, price_history, residuals)?;
    let n = sent_history.len();
    let f2: f64 = (1..=p)
        .map(|i| params.sent_coeffs[i - 1] * sent_history[n - i])
        .sum();
    Ok(params.alpha * price_term + params.lambda_s * f2 + params.c)
}

/// Fits the price ARMA first, then regresses prices on
/// `[1, X_t^A, S_{t-1}, ..., S_{t-p}]`.
///
/// The sentiment coefficients are split into a weight `lambda_s` (their
/// Euclidean norm) and a unit-norm direction `sent_coeffs`. A sentiment series
/// that is identically zero contributes nothing and yields `lambda_s = 0`.
pub fn sentiment_arma_fit(
    prices: &[f64],
    sentiment: &[f64],
    p: usize,
    q: usize,
    options: FitOptions,
) -> Result<SentimentArmaParams, ArmaError> {
    if sentiment.len() != prices.len() {
        return Err(ArmaError::InsufficientHistory {
            needed: prices.len(),
            got: sentiment.len(),
        });
    }
    let price_arma = arma_fit(prices, p, q, options)?;
    let arma_preds = one_step_predictions(&price_arma, prices)?;
    let use_sentiment = p > 0 && sentiment.iter().any(|s| *s != 0.0);
    let rows: Vec<Vec<f64>> = (p..prices.len())
        .map(|t| {
            let mut row = vec![1.0, arma_preds[t - p]];
            if use_sentiment {
                row.extend((1..=p).map(|i| sentiment[t - i]));
            }
            row
        })
        .collect();
    let beta =
        linalg::least_squares(&rows, &prices[p..], options.ridge).ok_or(ArmaError::Singular)?;
    let (c, alpha) = (beta[0], beta[1]);
    let raw = &beta[2..];
    let lambda_s = raw.iter().map(|b| b * b).sum::<f64>().sqrt();
    let sent_coeffs = if lambda_s > 0.0 {
        raw.iter().map(|b| b / lambda_s).collect()
    } else {
        vec![0.0; p]
    };
    let params = SentimentArmaParams {
        price_arma,
        alpha,
        lambda_s,
        c,
        sent_coeffs,
    };
    if !(alpha.is_finite() && c.is_finite() && lambda_s.is_finite()) {
        return Err(ArmaError::NonFinite);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ar1(n: usize, phi: f64, start: f64) -> Vec<f64> {
        let mut out = vec![start];
        for t in 1..n {
            out.push(phi * out[t - 1]);
        }
        out
    }

    #[test]
    fn degenerate_model_predicts_mu() {
        let params = ArmaParams::new(3.5, vec![], vec![]).unwrap();
        let pred = arma_predict(&params, &[], &ResidualState::zeros(0)).unwrap();
        assert_eq!(pred, 3.5);
    }

    #[test]
    fn single_ar_term() {
        let params = ArmaParams::new(0.0, vec![0.5], vec![]).unwrap();
        let pred = arma_predict(&params, &[7.0, 2.0], &ResidualState::zeros(0)).unwrap();
        assert_eq!(pred, 1.0);
    }

    #[test]
    fn arma21_matches_direct_formula() {
        let params = ArmaParams::new(0.3, vec![0.6, -0.2], vec![0.4]).unwrap();
        let mut residuals = ResidualState::zeros(1);
        residuals.push(0.25);
        let pred = arma_predict(&params, &[1.0, 2.0, 3.0], &residuals).unwrap();
        // mu + phi1 * X_{t-1} + phi2 * X_{t-2} - psi1 * eps_{t-1}
        let direct = 0.3 + 0.6 * 3.0 + -0.2 * 2.0 - 0.4 * 0.25;
        assert!((pred - direct).abs() < 1e-15);
    }

    #[test]
    fn short_history_rejected() {
        let params = ArmaParams::new(0.0, vec![0.5, 0.1], vec![]).unwrap();
        let err = arma_predict(&params, &[1.0], &ResidualState::zeros(0)).unwrap_err();
        assert_eq!(err, ArmaError::InsufficientHistory { needed: 2, got: 1 });
        let err = arma_predict(&params, &[1.0, 2.0], &ResidualState::zeros(3)).unwrap_err();
        assert!(matches!(err, ArmaError::ResidualShape { .. }));
    }

    #[test]
    fn residual_buffer_rolls() {
        let mut r = ResidualState::zeros(2);
        r.push(1.0);
        r.push(2.0);
        r.push(3.0);
        assert_eq!((r.lag(1), r.lag(2)), (3.0, 2.0));
        let mut empty = ResidualState::zeros(0);
        empty.push(1.0);
        assert!(empty.is_empty());
    }

    #[test]
    fn recovers_noiseless_ar1() {
        let series = ar1(500, 0.5, 100.0);
        let fit = arma_fit(&series, 1, 0, FitOptions::default()).unwrap();
        assert!((fit.phi[0] - 0.5).abs() < 1e-6);
        assert!(fit.mu.abs() < 1e-6);
        let preds = one_step_predictions(&fit, &series).unwrap();
        let mse: f64 = preds
            .iter()
            .zip(&series[1..])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / preds.len() as f64;
        assert!(mse < 1e-20);
    }

    #[test]
    fn constant_series_is_singular() {
        let series = vec![5.0; 40];
        assert_eq!(arma_fit(&series, 1, 0, FitOptions::default()), Err(ArmaError::Singular));
        let ridged = arma_fit(&series, 1, 0, FitOptions::with_ridge()).unwrap();
        let pred = arma_predict(&ridged, &series, &ResidualState::zeros(0)).unwrap();
        assert!((pred - 5.0).abs() < 1e-6);
    }

    #[test]
    fn white_noise_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(2.0, 1.0).unwrap();
        let series: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng)).collect();
        let fit = arma_fit(&series, 0, 0, FitOptions::default()).unwrap();
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        assert!((fit.mu - mean).abs() < 1e-12);
    }

    #[test]
    fn too_short_rejected() {
        let err = arma_fit(&[1.0, 2.0, 3.0], 1, 1, FitOptions::default()).unwrap_err();
        assert!(matches!(err, ArmaError::SeriesTooShort { .. }));
    }

    #[test]
    fn ma_component_recovered_roughly() {
        // ARMA(1,1) with the subtracted MA convention
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let (phi, psi) = (0.6, 0.4);
        let mut x = vec![0.0];
        let mut prev_e = 0.0;
        for _ in 1..4000 {
            let e = normal.sample(&mut rng);
            let next = phi * x.last().unwrap() - psi * prev_e + e;
            x.push(next);
            prev_e = e;
        }
        let fit = arma_fit(&x, 1, 1, FitOptions::default()).unwrap();
        assert!((fit.phi[0] - phi).abs() < 0.08, "phi {}", fit.phi[0]);
        assert!((fit.psi[0] - psi).abs() < 0.08, "psi {}", fit.psi[0]);
    }

    #[test]
    fn sentiment_term_vanishes() {
        let arma = ArmaParams::new(0.2, vec![0.7, 0.1], vec![0.3]).unwrap();
        let mut residuals = ResidualState::zeros(1);
        residuals.push(-0.4);
        let history = [4.0, 5.0, 6.0];
        let plain = arma_predict(&arma, &history, &residuals).unwrap();
        let params = SentimentArmaParams {
            price_arma: arma,
            alpha: 1.0,
            lambda_s: 0.0,
            c: 0.0,
            sent_coeffs: vec![0.9, -0.3],
        };
        let with = sentiment_arma_predict(&params, &history, &[0.5, -0.5], &residuals).unwrap();
        assert_eq!(with.to_bits(), plain.to_bits());
    }

    #[test]
    fn pure_sentiment_product() {
        let params = SentimentArmaParams {
            price_arma: ArmaParams::new(0.0, vec![0.0], vec![]).unwrap(),
            alpha: 0.0,
            lambda_s: 2.0,
            c: 0.0,
            sent_coeffs: vec![1.0],
        };
        let pred =
            sentiment_arma_predict(&params, &[10.0], &[0.3], &ResidualState::zeros(0)).unwrap();
        assert!((pred - 0.6).abs() < 1e-15);
    }

    #[test]
    fn full_sentiment_arma_by_hand() {
        let params = SentimentArmaParams {
            price_arma: ArmaParams::new(1.0, vec![0.5, 0.25], vec![]).unwrap(),
            alpha: 0.8,
            lambda_s: 1.5,
            c: 0.1,
            sent_coeffs: vec![0.6, 0.8],
        };
        let pred = sentiment_arma_predict(
            &params,
            &[8.0, 10.0],
            &[0.2, -0.1],
            &ResidualState::zeros(0),
        )
        .unwrap();
        let xa = 1.0 + 0.5 * 10.0 + 0.25 * 8.0;
        let f2 = 0.6 * -0.1 + 0.8 * 0.2;
        assert!((pred - (0.8 * xa + 1.5 * f2 + 0.1)).abs() < 1e-14);
    }

    #[test]
    fn sentiment_fit_finds_coupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 0.3).unwrap();
        let s: Vec<f64> = (0..400).map(|_| normal.sample(&mut rng)).collect();
        let mut x = vec![10.0];
        for t in 1..400 {
            x.push(2.0 + 0.8 * x[t - 1] + 1.5 * s[t - 1]);
        }
        let fit = sentiment_arma_fit(&x, &s, 1, 0, FitOptions::default()).unwrap();
        let coupling = fit.lambda_s * fit.sent_coeffs[0];
        assert!((coupling - 1.5).abs() < 1e-6, "coupling {coupling}");
        // zero sentiment drops the term
        let zeros = vec![0.0; x.len()];
        let noisy: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
        let fit = sentiment_arma_fit(&noisy, &zeros, 1, 0, FitOptions::default()).unwrap();
        assert_eq!(fit.lambda_s, 0.0);
    }

    proptest! {
        #[test]
        fn prediction_is_linear_without_intercept(
            phi in proptest::collection::vec(-1.0f64..1.0, 3),
            h1 in proptest::collection::vec(-10.0f64..10.0, 3),
            h2 in proptest::collection::vec(-10.0f64..10.0, 3),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let params = ArmaParams::new(0.0, phi, vec![0.0]).unwrap();
            let r = ResidualState::zeros(1);
            let mixed: Vec<f64> = h1.iter().zip(&h2).map(|(x, y)| a * x + b * y).collect();
            let lhs = arma_predict(&params, &mixed, &r).unwrap();
            let rhs = a * arma_predict(&params, &h1, &r).unwrap()
                + b * arma_predict(&params, &h2, &r).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
