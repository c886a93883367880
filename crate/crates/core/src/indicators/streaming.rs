//! Push-based moving averages.
//!
//! Each state consumes one value per [`MovingAverage::push`] and returns the
//! output the batch function would produce at that index. Outputs match the
//! batch functions bit for bit.

use std::collections::VecDeque;

use super::batch::weighted_window;
use super::numeric::{clamp_to, is_defined, CompensatedSum, RunningBounds, WindowExtrema};
use super::{check_period, ema_smoothing, IndicatorError};
use crate::model::IndicatorKind;

pub trait MovingAverage {
    fn period(&self) -> usize;

    /// Feeds one value; non-finite values count as missing.
    fn push(&mut self, value: f64) -> Option<f64>;
}

#[derive(Debug, Clone)]
pub struct SmaState {
    period: usize,
    buffer: VecDeque<f64>,
    sum: CompensatedSum,
    extrema: WindowExtrema,
    missing: usize,
    seq: u64,
}

impl SmaState {
    pub fn new(period: usize) -> Result<Self, IndicatorError> {
        check_period(period)?;
        Ok(SmaState {
            period,
            buffer: VecDeque::with_capacity(period + 1),
            sum: CompensatedSum::default(),
            extrema: WindowExtrema::default(),
            missing: 0,
            seq: 0,
        })
    }
}

impl MovingAverage for SmaState {
    fn period(&self) -> usize {
        self.period
    }

    fn push(&mut self, x: f64) -> Option<f64> {
        let seq = self.seq;
        self.seq += 1;
        if is_defined(x) {
            self.sum.add(x);
            self.extrema.push(seq, x);
        } else {
            self.missing += 1;
        }
        self.buffer.push_back(x);
        if self.buffer.len() > self.period {
            let leaving = self.buffer.pop_front().expect("non-empty");
            if is_defined(leaving) {
                self.sum.sub(leaving);
            } else {
                self.missing -= 1;
            }
            self.extrema.evict_before(seq + 1 - self.period as u64);
        }
        if self.buffer.len() == self.missing {
            self.sum.reset();
        }
        if self.buffer.len() == self.period && self.missing == 0 {
            let (lo, hi) = self.extrema.bounds().expect("full window has extrema");
            Some(clamp_to(self.sum.value() / self.period as f64, lo, hi))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct WmaState {
    period: usize,
    denominator: f64,
    buffer: VecDeque<f64>,
}

impl WmaState {
    pub fn new(period: usize) -> Result<Self, IndicatorError> {
        check_period(period)?;
        Ok(WmaState {
            period,
            denominator: (period * (period + 1) / 2) as f64,
            buffer: VecDeque::with_capacity(period + 1),
        })
    }
}

impl MovingAverage for WmaState {
    fn period(&self) -> usize {
        self.period
    }

    fn push(&mut self, x: f64) -> Option<f64> {
        self.buffer.push_back(x);
        if self.buffer.len() > self.period {
            self.buffer.pop_front();
        }
        if self.buffer.len() < self.period {
            return None;
        }
        weighted_window(self.buffer.iter().copied(), self.denominator)
    }
}

#[derive(Debug, Clone)]
pub struct EmaState {
    period: usize,
    q: f64,
    seed: CompensatedSum,
    seeded: usize,
    bounds: RunningBounds,
    current: Option<f64>,
}

impl EmaState {
    pub fn new(period: usize) -> Result<Self, IndicatorError> {
        check_period(period)?;
        Ok(EmaState {
            period,
            q: ema_smoothing(period),
            seed: CompensatedSum::default(),
            seeded: 0,
            bounds: RunningBounds::default(),
            current: None,
        })
    }

    pub fn smoothing(&self) -> f64 {
        self.q
    }

    pub fn current(&self) -> Option<f64> {
        self.current
    }
}

impl MovingAverage for EmaState {
    fn period(&self) -> usize {
        self.period
    }

    fn push(&mut self, x: f64) -> Option<f64> {
        if !is_defined(x) {
            self.current = None;
            self.seed.reset();
            self.seeded = 0;
            self.bounds = RunningBounds::default();
            return None;
        }
        self.bounds.include(x);
        self.current = match self.current {
            Some(prev) => Some(self.bounds.clamp(self.q * x + (1.0 - self.q) * prev)),
            None => {
                self.seed.add(x);
                self.seeded += 1;
                (self.seeded == self.period).then(|| self.bounds.clamp(self.seed.value() / self.period as f64))
            }
        };
        self.current
    }
}

/// Streaming state for any of the three kinds.
#[derive(Debug, Clone)]
pub enum AnyAverage {
    Sma(SmaState),
    Wma(WmaState),
    Ema(EmaState),
}

impl AnyAverage {
    pub fn new(kind: IndicatorKind, period: usize) -> Result<Self, IndicatorError> {
        Ok(match kind {
            IndicatorKind::Sma => AnyAverage::Sma(SmaState::new(period)?),
            IndicatorKind::Wma => AnyAverage::Wma(WmaState::new(period)?),
            IndicatorKind::Ema => AnyAverage::Ema(EmaState::new(period)?),
        })
    }

    pub fn kind(&self) -> IndicatorKind {
        match self {
            AnyAverage::Sma(_) => IndicatorKind::Sma,
            AnyAverage::Wma(_) => IndicatorKind::Wma,
            AnyAverage::Ema(_) => IndicatorKind::Ema,
        }
    }
}

impl MovingAverage for AnyAverage {
    fn period(&self) -> usize {
        match self {
            AnyAverage::Sma(s) => s.period(),
            AnyAverage::Wma(s) => s.period(),
            AnyAverage::Ema(s) => s.period(),
        }
    }

    fn push(&mut self, value: f64) -> Option<f64> {
        match self {
            AnyAverage::Sma(s) => s.push(value),
            AnyAverage::Wma(s) => s.push(value),
            AnyAverage::Ema(s) => s.push(value),
        }
    }
}
