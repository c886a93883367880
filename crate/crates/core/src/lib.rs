//! Moving-average workbench.
//!
//! Loads OHLCV series from CSV or a Stooq-style quote endpoint, computes
//! simple, weighted and exponential moving averages, and serves the results
//! over a CLI, a JSON HTTP API and static SVG charts.

pub mod cli;
pub mod config;
pub mod indicators;
pub mod ingest;
pub mod model;
pub mod plot;
pub mod remote;
pub mod service;

pub use indicators::{compute_indicator, ema, ema_weights, sma, wma, wma_weights, IndicatorError, MovingAverage};
pub use model::{
    parse_symbol, IndicatorKind, IndicatorSeries, IndicatorSpec, ModelError, Period, PlotConfig, PlotType, SymbolRef,
    TimeSeriesFrame, Viewport,
};
