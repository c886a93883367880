//! Shared data types: the date-indexed frame, indicator requests and results,
//! remote symbols and plot configuration.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical OHLC column names, in the order they are synthesized.
pub const OHLC: [&str; 4] = ["Open", "High", "Low", "Close"];
pub const VOLUME: &str = "Volume";
pub const DEFAULT_SOURCE_COLUMN: &str = "Close";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown column '{name}' (available: {})", available.join(", "))]
    UnknownColumn { name: String, available: Vec<String> },
    #[error("duplicate date {date} in frame")]
    DuplicateDate { date: NaiveDate },
    #[error("duplicate column '{0}'")]
    DuplicateColumn(String),
    #[error("column '{name}' has {len} values but the frame has {rows} dates")]
    ColumnLength { name: String, len: usize, rows: usize },
    #[error("malformed symbol '{0}': expected TICKER.COUNTRY, e.g. EBAY.US")]
    MalformedSymbol(String),
    #[error("malformed indicator spec '{spec}': {reason}")]
    MalformedSpec { spec: String, reason: String },
    #[error("unknown indicator kind '{0}' (expected sma, wma or ema)")]
    UnknownKind(String),
    #[error("period must be a positive integer, got {0}")]
    NonPositivePeriod(i64),
    #[error("unsupported plot type '{0}' (valid: line, candle, ohlc)")]
    UnsupportedPlotType(String),
    #[error("invalid viewport: {0}")]
    InvalidViewport(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::UnknownColumn { .. } => "unknown-column",
            ModelError::DuplicateDate { .. } => "duplicate-date",
            ModelError::DuplicateColumn(_) => "duplicate-column",
            ModelError::ColumnLength { .. } => "ragged-column",
            ModelError::MalformedSymbol(_) => "malformed-symbol",
            ModelError::MalformedSpec { .. } => "malformed-spec",
            ModelError::UnknownKind(_) => "unknown-kind",
            ModelError::NonPositivePeriod(_) => "non-positive-period",
            ModelError::UnsupportedPlotType(_) => "unsupported-plot-type",
            ModelError::InvalidViewport(_) => "invalid-viewport",
        }
    }
}

/// A named numeric series. `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Date-indexed table of numeric columns.
///
/// Dates are strictly increasing and every column holds exactly one slot per
/// date. Construction sorts rows by date, so the same rows in any order build
/// the same frame. Non-finite numbers are stored as missing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    dates: Vec<NaiveDate>,
    columns: Vec<Column>,
    source_label: String,
}

impl TimeSeriesFrame {
    pub fn new(
        dates: Vec<NaiveDate>,
        columns: Vec<Column>,
        source_label: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let rows = dates.len();
        for (i, c) in columns.iter().enumerate() {
            if c.values.len() != rows {
                return Err(ModelError::ColumnLength {
                    name: c.name.clone(),
                    len: c.values.len(),
                    rows,
                });
            }
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(ModelError::DuplicateColumn(c.name.clone()));
            }
        }

        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by_key(|&i| dates[i]);
        if let Some(w) = order.windows(2).find(|w| dates[w[0]] == dates[w[1]]) {
            return Err(ModelError::DuplicateDate { date: dates[w[0]] });
        }

        let sorted_dates = order.iter().map(|&i| dates[i]).collect();
        let columns = columns
            .into_iter()
            .map(|c| Column {
                values: order.iter().map(|&i| c.values[i].filter(|v| v.is_finite())).collect(),
                name: c.name,
            })
            .collect();

        Ok(TimeSeriesFrame {
            dates: sorted_dates,
            columns,
            source_label: source_label.into(),
        })
    }

    pub fn empty(column_names: &[&str], source_label: impl Into<String>) -> Self {
        TimeSeriesFrame {
            dates: Vec::new(),
            columns: column_names
                .iter()
                .map(|n| Column {
                    name: n.to_string(),
                    values: Vec::new(),
                })
                .collect(),
            source_label: source_label.into(),
        }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn with_source_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = label.into();
        self
    }

    /// Values of column `name` in date order.
    pub fn column(&self, name: &str) -> Result<&[Option<f64>], ModelError> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| ModelError::UnknownColumn {
                name: name.to_string(),
                available: self.column_names().map(str::to_string).collect(),
            })
    }

    /// Rows whose dates fall in `[from, to]`; unbounded sides are open.
    pub fn slice_dates(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> TimeSeriesFrame {
        let start = from.map_or(0, |f| self.dates.partition_point(|d| *d < f));
        let end = to.map_or(self.len(), |t| self.dates.partition_point(|d| *d <= t));
        let end = end.max(start);
        TimeSeriesFrame {
            dates: self.dates[start..end].to_vec(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: c.values[start..end].to_vec(),
                })
                .collect(),
            source_label: self.source_label.clone(),
        }
    }

    pub(crate) fn push_column(&mut self, column: Column) {
        debug_assert_eq!(column.values.len(), self.dates.len());
        self.columns.push(column);
    }

    pub(crate) fn column_mut(&mut self, name: &str) -> Option<&mut Column> {
        self.columns.iter_mut().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndicatorKind {
    Sma,
    Wma,
    Ema,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 3] = [IndicatorKind::Sma, IndicatorKind::Wma, IndicatorKind::Ema];

    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorKind::Sma => "SMA",
            IndicatorKind::Wma => "WMA",
            IndicatorKind::Ema => "EMA",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sma" => Ok(IndicatorKind::Sma),
            "wma" => Ok(IndicatorKind::Wma),
            "ema" => Ok(IndicatorKind::Ema),
            _ => Err(ModelError::UnknownKind(s.trim().to_string())),
        }
    }
}

/// Period of a moving average: a positive count of data points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "usize")]
pub struct Period(usize);

impl Period {
    pub fn new(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            Err(ModelError::NonPositivePeriod(0))
        } else {
            Ok(Period(n))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<i64> for Period {
    type Error = ModelError;

    fn try_from(n: i64) -> Result<Self, Self::Error> {
        if n < 1 {
            Err(ModelError::NonPositivePeriod(n))
        } else {
            Ok(Period(n as usize))
        }
    }
}

impl From<Period> for usize {
    fn from(p: Period) -> usize {
        p.0
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One requested moving average.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndicatorSpec {
    pub kind: IndicatorKind,
    pub period: Period,
    pub source_column: String,
}

impl IndicatorSpec {
    pub fn new(kind: IndicatorKind, period: Period) -> Self {
        IndicatorSpec {
            kind,
            period,
            source_column: DEFAULT_SOURCE_COLUMN.to_string(),
        }
    }

    pub fn on_column(mut self, column: impl Into<String>) -> Self {
        self.source_column = column.into();
        self
    }

    /// SMA, WMA and EMA sharing one period.
    pub fn default_set(period: Period) -> Vec<IndicatorSpec> {
        IndicatorKind::ALL
            .iter()
            .map(|&k| IndicatorSpec::new(k, period))
            .collect()
    }

    /// Canonical label, e.g. `SMA(3)`. Sources other than Close are named
    /// in brackets: `SMA(3)[Open]`.
    pub fn label(&self) -> String {
        if self.source_column == DEFAULT_SOURCE_COLUMN {
            format!("{}({})", self.kind, self.period)
        } else {
            format!("{}({})[{}]", self.kind, self.period, self.source_column)
        }
    }

    /// Parses `kind[:period[:column]]`. An empty or absent period falls back
    /// to `default_period`; when that is also absent the period is required.
    pub fn parse_with_default(text: &str, default_period: Option<Period>) -> Result<Self, ModelError> {
        let malformed = |reason: &str| ModelError::MalformedSpec {
            spec: text.to_string(),
            reason: reason.to_string(),
        };
        let mut parts = text.trim().splitn(3, ':');
        let kind_text = parts.next().unwrap_or_default();
        if kind_text.trim().is_empty() {
            return Err(malformed("missing indicator kind"));
        }
        let kind: IndicatorKind = kind_text.parse()?;

        let period = match parts.next().map(str::trim) {
            None | Some("") => default_period.ok_or_else(|| malformed("missing period"))?,
            Some(p) => {
                let n: i64 = p.parse().map_err(|_| malformed("period is not an integer"))?;
                Period::try_from(n)?
            }
        };

        let column = match parts.next().map(str::trim) {
            None | Some("") => DEFAULT_SOURCE_COLUMN.to_string(),
            Some(c) => c.to_string(),
        };
        Ok(IndicatorSpec {
            kind,
            period,
            source_column: column,
        })
    }

    /// Parses a comma-separated list of specs.
    pub fn parse_list(text: &str, default_period: Option<Period>) -> Result<Vec<Self>, ModelError> {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| IndicatorSpec::parse_with_default(s, default_period))
            .collect()
    }
}

impl FromStr for IndicatorSpec {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IndicatorSpec::parse_with_default(s, None)
    }
}

impl fmt::Display for IndicatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}",
            self.kind.as_str().to_ascii_lowercase(),
            self.period,
            self.source_column
        )
    }
}

/// Computed moving average aligned to a frame's dates.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub spec: IndicatorSpec,
    pub values: Vec<Option<f64>>,
    /// Number of leading undefined slots.
    pub warmup_len: usize,
}

impl IndicatorSeries {
    pub fn new(spec: IndicatorSpec, values: Vec<Option<f64>>) -> Self {
        let warmup_len = values.iter().take_while(|v| v.is_none()).count();
        IndicatorSeries {
            spec,
            values,
            warmup_len,
        }
    }

    pub fn label(&self) -> String {
        self.spec.label()
    }
}

/// Remote data identifier in `TICKER.COUNTRY` form, e.g. `EBAY.US`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolRef {
    ticker: String,
    country: String,
}

impl SymbolRef {
    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn country(&self) -> &str {
        &self.country
    }

    pub fn rendered(&self) -> String {
        self.to_string()
    }
}

/// Splits on the last dot so tickers may themselves contain dots.
pub fn parse_symbol(text: &str) -> Result<SymbolRef, ModelError> {
    let malformed = || ModelError::MalformedSymbol(text.to_string());
    let (ticker, country) = text.rsplit_once('.').ok_or_else(malformed)?;
    let ticker = ticker.trim();
    let country = country.trim();
    if ticker.is_empty() || country.is_empty() {
        return Err(malformed());
    }
    Ok(SymbolRef {
        ticker: ticker.to_uppercase(),
        country: country.to_uppercase(),
    })
}

impl FromStr for SymbolRef {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_symbol(s)
    }
}

impl fmt::Display for SymbolRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.ticker, self.country)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotType {
    #[default]
    Line,
    Candle,
    Ohlc,
}

impl PlotType {
    pub fn as_str(self) -> &'static str {
        match self {
            PlotType::Line => "line",
            PlotType::Candle => "candle",
            PlotType::Ohlc => "ohlc",
        }
    }
}

impl FromStr for PlotType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "line" => Ok(PlotType::Line),
            "candle" => Ok(PlotType::Candle),
            "ohlc" => Ok(PlotType::Ohlc),
            _ => Err(ModelError::UnsupportedPlotType(s.trim().to_string())),
        }
    }
}

impl fmt::Display for PlotType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Viewport {
    #[default]
    Auto,
    Explicit {
        x_min: NaiveDate,
        x_max: NaiveDate,
        y_min: f64,
        y_max: f64,
    },
}

impl Viewport {
    pub fn explicit(x_min: NaiveDate, x_max: NaiveDate, y_min: f64, y_max: f64) -> Result<Self, ModelError> {
        if x_min >= x_max {
            return Err(ModelError::InvalidViewport(format!(
                "x_min {x_min} must precede x_max {x_max}"
            )));
        }
        if y_min.partial_cmp(&y_max) != Some(std::cmp::Ordering::Less) {
            return Err(ModelError::InvalidViewport(format!(
                "y_min {y_min} must be below y_max {y_max}"
            )));
        }
        Ok(Viewport::Explicit {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotConfig {
    pub plot_type: PlotType,
    pub indicators: Vec<IndicatorSpec>,
    pub viewport: Viewport,
}

impl PlotConfig {
    pub fn new(plot_type: PlotType, indicators: Vec<IndicatorSpec>) -> Self {
        PlotConfig {
            plot_type,
            indicators,
            viewport: Viewport::Auto,
        }
    }

    pub fn with_default_period(period: Period) -> Self {
        PlotConfig::new(PlotType::Line, IndicatorSpec::default_set(period))
    }
}
