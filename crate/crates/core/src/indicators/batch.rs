//! Whole-series SMA, WMA and EMA.
//!
//! Inputs are plain `f64` slices; non-finite entries (NaN, ±inf) are treated
//! as missing. A window that contains a missing value yields `None`.

use super::numeric::{clamp_to, is_defined, linear_weighted_sum, CompensatedSum, RunningBounds, WindowExtrema};
use super::{check_period, ema_smoothing, IndicatorError};

/// Simple moving average: mean of the last `n` values.
///
/// Runs in O(len) with a compensated running sum.
pub fn sma(values: &[f64], n: usize) -> Result<Vec<Option<f64>>, IndicatorError> {
    check_period(n)?;
    let mut out = Vec::with_capacity(values.len());
    let mut sum = CompensatedSum::default();
    let mut extrema = WindowExtrema::default();
    let mut missing = 0usize;
    let divisor = n as f64;

    for (i, &x) in values.iter().enumerate() {
        if is_defined(x) {
            sum.add(x);
            extrema.push(i as u64, x);
        } else {
            missing += 1;
        }
        if i >= n {
            let leaving = values[i - n];
            if is_defined(leaving) {
                sum.sub(leaving);
            } else {
                missing -= 1;
            }
            extrema.evict_before((i + 1 - n) as u64);
        }
        let filled = (i + 1).min(n);
        if filled == missing {
            sum.reset();
        }
        out.push(if filled == n && missing == 0 {
            let (lo, hi) = extrema.bounds().expect("full window has extrema");
            Some(clamp_to(sum.value() / divisor, lo, hi))
        } else {
            None
        });
    }
    Ok(out)
}

/// Weighted moving average with linear weights `1..=n`, the newest value
/// weighted `n`.
pub fn wma(values: &[f64], n: usize) -> Result<Vec<Option<f64>>, IndicatorError> {
    check_period(n)?;
    let denominator = (n * (n + 1) / 2) as f64;
    let mut out = vec![None; values.len()];
    for end in n.saturating_sub(1)..values.len() {
        let window = &values[end + 1 - n..=end];
        out[end] = weighted_window(window.iter().copied(), denominator);
    }
    Ok(out)
}

/// Shared by the streaming WMA. `window` is oldest first.
pub(crate) fn weighted_window<I>(window: I, denominator: f64) -> Option<f64>
where
    I: Iterator<Item = f64> + Clone,
{
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in window.clone() {
        if !is_defined(x) {
            return None;
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    Some(clamp_to(linear_weighted_sum(window) / denominator, lo, hi))
}

/// Exponential moving average with smoothing `q = 2 / (n + 1)`.
///
/// The first defined output, at index `n - 1`, is the SMA of the first `n`
/// values; afterwards `ema[i] = q * x[i] + (1 - q) * ema[i - 1]`. A missing
/// input clears the state and the average is re-seeded from the next `n`
/// consecutive defined values.
pub fn ema(values: &[f64], n: usize) -> Result<Vec<Option<f64>>, IndicatorError> {
    check_period(n)?;
    let q = ema_smoothing(n);
    let keep = 1.0 - q;
    let mut out = Vec::with_capacity(values.len());
    let mut current: Option<f64> = None;
    let mut seed = CompensatedSum::default();
    let mut seeded = 0usize;
    let mut bounds = RunningBounds::default();

    for &x in values {
        if !is_defined(x) {
            current = None;
            seed.reset();
            seeded = 0;
            bounds = RunningBounds::default();
            out.push(None);
            continue;
        }
        bounds.include(x);
        current = match current {
            Some(prev) => Some(bounds.clamp(q * x + keep * prev)),
            None => {
                seed.add(x);
                seeded += 1;
                (seeded == n).then(|| bounds.clamp(seed.value() / n as f64))
            }
        };
        out.push(current);
    }
    Ok(out)
}
