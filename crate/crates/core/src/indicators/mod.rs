//! Simple, weighted and exponential moving averages, in batch and streaming
//! form, plus their weight vectors.

mod batch;
mod numeric;
mod streaming;

use thiserror::Error;

pub use batch::{ema, sma, wma};
pub use streaming::{AnyAverage, EmaState, MovingAverage, SmaState, WmaState};

use crate::model::{IndicatorKind, IndicatorSeries, IndicatorSpec, ModelError, TimeSeriesFrame};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndicatorError {
    #[error("period must be a positive integer, got {0}")]
    NonPositivePeriod(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IndicatorError {
    pub fn code(&self) -> &'static str {
        match self {
            IndicatorError::NonPositivePeriod(_) => "non-positive-period",
            IndicatorError::Model(e) => e.code(),
        }
    }
}

pub(crate) fn check_period(n: usize) -> Result<(), IndicatorError> {
    if n == 0 {
        Err(IndicatorError::NonPositivePeriod(n))
    } else {
        Ok(())
    }
}

/// EMA smoothing factor `q = 2 / (n + 1)`; exactly 1 for `n = 1`.
pub fn ema_smoothing(n: usize) -> f64 {
    2.0 / (n as f64 + 1.0)
}

/// WMA weights, oldest first: `[1, 2, ..., n] / (n(n+1)/2)`.
pub fn wma_weights(n: usize) -> Result<Vec<f64>, IndicatorError> {
    check_period(n)?;
    let denominator = (n * (n + 1) / 2) as f64;
    Ok((1..=n).map(|j| j as f64 / denominator).collect())
}

/// EMA weights truncated to `n` terms, newest first: weight `i` is
/// proportional to `(1 - q)^i` and the vector sums to one.
pub fn ema_weights(n: usize) -> Result<Vec<f64>, IndicatorError> {
    check_period(n)?;
    let decay = 1.0 - ema_smoothing(n);
    // Running product, re-anchored with powi so rounding cannot accumulate
    // past a block.
    const BLOCK: usize = 64;
    let mut weights = Vec::with_capacity(n);
    let mut total = numeric::CompensatedSum::default();
    let mut r = 1.0;
    for i in 0..n {
        if i % BLOCK == 0 {
            r = decay.powi(i as i32);
        }
        weights.push(r);
        total.add(r);
        r *= decay;
    }
    let total = total.value();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Runs the batch average selected by `kind`.
pub fn moving_average(kind: IndicatorKind, values: &[f64], n: usize) -> Result<Vec<Option<f64>>, IndicatorError> {
    match kind {
        IndicatorKind::Sma => sma(values, n),
        IndicatorKind::Wma => wma(values, n),
        IndicatorKind::Ema => ema(values, n),
    }
}

/// Computes `spec` over its source column of `frame`.
pub fn compute_indicator(frame: &TimeSeriesFrame, spec: &IndicatorSpec) -> Result<IndicatorSeries, IndicatorError> {
    let values: Vec<f64> = frame
        .column(&spec.source_column)?
        .iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    let out = moving_average(spec.kind, &values, spec.period.get())?;
    Ok(IndicatorSeries::new(spec.clone(), out))
}
