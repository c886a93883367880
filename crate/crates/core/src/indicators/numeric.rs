//! Floating-point helpers shared by the batch and streaming paths.
//!
//! Batch and streaming code must call these in the same order so that their
//! outputs agree bit for bit.

use std::collections::VecDeque;

#[inline]
pub(crate) fn is_defined(x: f64) -> bool {
    x.is_finite()
}

/// Neumaier-compensated running sum supporting removal.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn sub(&mut self, x: f64) {
        self.add(-x);
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub(crate) fn reset(&mut self) {
        *self = CompensatedSum::default();
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Sum of `(j + 1) * x_j` over the window, oldest first, evaluated in roughly
/// twice working precision (Ogita-Rump-Oishi `Dot2`).
pub(crate) fn linear_weighted_sum<I: IntoIterator<Item = f64>>(window: I) -> f64 {
    let mut hi = 0.0;
    let mut lo = 0.0;
    for (j, x) in window.into_iter().enumerate() {
        let (p, pe) = two_product((j + 1) as f64, x);
        let (s, se) = two_sum(hi, p);
        hi = s;
        lo += pe + se;
    }
    hi + lo
}

/// An average always lies inside the range of the values it averages;
/// rounding must not push it an ulp outside.
#[inline]
pub(crate) fn clamp_to(value: f64, lo: f64, hi: f64) -> f64 {
    value.max(lo).min(hi)
}

/// Sliding-window minimum and maximum over monotonic deques keyed by a
/// sequence number.
#[derive(Debug, Clone, Default)]
pub(crate) struct WindowExtrema {
    mins: VecDeque<(u64, f64)>,
    maxs: VecDeque<(u64, f64)>,
}

impl WindowExtrema {
    pub(crate) fn push(&mut self, seq: u64, x: f64) {
        while self.mins.back().is_some_and(|&(_, v)| v >= x) {
            self.mins.pop_back();
        }
        self.mins.push_back((seq, x));
        while self.maxs.back().is_some_and(|&(_, v)| v <= x) {
            self.maxs.pop_back();
        }
        self.maxs.push_back((seq, x));
    }

    /// Drops every entry with a sequence number below `start`.
    pub(crate) fn evict_before(&mut self, start: u64) {
        while self.mins.front().is_some_and(|&(s, _)| s < start) {
            self.mins.pop_front();
        }
        while self.maxs.front().is_some_and(|&(s, _)| s < start) {
            self.maxs.pop_front();
        }
    }

    pub(crate) fn bounds(&self) -> Option<(f64, f64)> {
        Some((self.mins.front()?.1, self.maxs.front()?.1))
    }
}

/// Running min/max of everything seen since the last reset.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RunningBounds {
    lo: f64,
    hi: f64,
}

impl Default for RunningBounds {
    fn default() -> Self {
        RunningBounds {
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
        }
    }
}

impl RunningBounds {
    #[inline]
    pub(crate) fn include(&mut self, x: f64) {
        self.lo = self.lo.min(x);
        self.hi = self.hi.max(x);
    }

    #[inline]
    pub(crate) fn clamp(&self, x: f64) -> f64 {
        clamp_to(x, self.lo, self.hi)
    }
}
