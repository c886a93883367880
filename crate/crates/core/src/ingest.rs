//! CSV ingestion and export.
//!
//! The first column is always the date, either `DD.MM.YYYY` or `YYYY-MM-DD`
//! (one format per file). Remaining columns are numeric with `.` as the
//! decimal separator; an empty cell is a missing value. Files whose header
//! has no comma but does have a semicolon are read as semicolon-delimited.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use thiserror::Error;

use crate::model::{Column, ModelError, TimeSeriesFrame, OHLC, VOLUME};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateFormat {
    /// `04.02.2021`
    DmyDotted,
    /// `2021-02-04`
    Iso,
}

impl DateFormat {
    fn pattern(self) -> &'static str {
        match self {
            DateFormat::DmyDotted => "%d.%m.%Y",
            DateFormat::Iso => "%Y-%m-%d",
        }
    }

    fn detect(text: &str) -> Option<Self> {
        let b = text.as_bytes();
        let digits = |r: std::ops::Range<usize>| b[r].iter().all(u8::is_ascii_digit);
        if b.len() != 10 {
            return None;
        }
        if b[2] == b'.' && b[5] == b'.' && digits(0..2) && digits(3..5) && digits(6..10) {
            Some(DateFormat::DmyDotted)
        } else if b[4] == b'-' && b[7] == b'-' && digits(0..4) && digits(5..7) && digits(8..10) {
            Some(DateFormat::Iso)
        } else {
            None
        }
    }
}

/// Layout detected while reading a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub delimiter: u8,
    /// `None` for a header-only file.
    pub date_format: Option<DateFormat>,
    pub column_names: Vec<String>,
}

/// Rows are 1-based line numbers in the source file (the header is line 1);
/// columns are 1-based positions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("input is empty: a header row is required")]
    EmptyFile,
    #[error("no data columns: at least one column besides the date is required")]
    NoDataColumns,
    #[error("duplicate column '{name}' at column {column}")]
    DuplicateColumn { name: String, column: usize },
    #[error("row {row}: unparseable date '{text}' (expected DD.MM.YYYY or YYYY-MM-DD)", row = fmt_row(*.row))]
    UnparseableDate { row: Option<usize>, text: String },
    #[error("row {row}: date '{text}' does not match the file's date format")]
    MixedDateFormats { row: usize, text: String },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {column} ('{name}'): '{text}' is not a number")]
    NonNumeric {
        row: usize,
        column: usize,
        name: String,
        text: String,
    },
    #[error("duplicate date {date} at row {row}{}", first_row.map(|r| format!(" (first seen at row {r})")).unwrap_or_default())]
    DuplicateDate {
        date: NaiveDate,
        row: usize,
        first_row: Option<usize>,
    },
    #[error("row {row}: inconsistent OHLC values on {date} (need Low <= Open, Close <= High)", row = fmt_row(*.row))]
    InconsistentOhlc { date: NaiveDate, row: Option<usize> },
    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("I/O error: {0}")]
    Io(String),
}

fn fmt_row(row: Option<usize>) -> String {
    row.map_or_else(|| "?".to_string(), |r| r.to_string())
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Encoding => "invalid-encoding",
            IngestError::EmptyFile => "empty-file",
            IngestError::NoDataColumns => "no-data-columns",
            IngestError::DuplicateColumn { .. } => "duplicate-column",
            IngestError::UnparseableDate { .. } => "unparseable-date",
            IngestError::MixedDateFormats { .. } => "mixed-date-formats",
            IngestError::RaggedRow { .. } => "ragged-row",
            IngestError::NonNumeric { .. } => "non-numeric-cell",
            IngestError::DuplicateDate { .. } => "duplicate-date",
            IngestError::InconsistentOhlc { .. } => "inconsistent-ohlc",
            IngestError::Csv { .. } => "malformed-csv",
            IngestError::Model(e) => e.code(),
            IngestError::Io(_) => "io-error",
        }
    }
}

impl From<std::io::Error> for IngestError {
    fn from(e: std::io::Error) -> Self {
        IngestError::Io(e.to_string())
    }
}

fn parse_date_as(text: &str) -> Option<(NaiveDate, DateFormat)> {
    let format = DateFormat::detect(text)?;
    NaiveDate::parse_from_str(text, format.pattern())
        .ok()
        .map(|d| (d, format))
}

/// Parses `DD.MM.YYYY` or `YYYY-MM-DD`. Impossible dates are rejected.
pub fn parse_date(text: &str) -> Result<NaiveDate, IngestError> {
    parse_date_as(text.trim())
        .map(|(d, _)| d)
        .ok_or_else(|| IngestError::UnparseableDate {
            row: None,
            text: text.to_string(),
        })
}

/// Reads a CSV stream into a normalized frame.
pub fn load_csv<R: Read>(source: R, source_label: &str) -> Result<TimeSeriesFrame, IngestError> {
    load_csv_with_schema(source, source_label).map(|(frame, _)| frame)
}

pub fn load_csv_with_schema<R: Read>(
    mut source: R,
    source_label: &str,
) -> Result<(TimeSeriesFrame, CsvSchema), IngestError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|_| IngestError::Encoding)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    if text.trim().is_empty() {
        return Err(IngestError::EmptyFile);
    }

    let header_line = text.lines().next().unwrap_or_default();
    let delimiter = if !header_line.contains(',') && header_line.contains(';') {
        b';'
    } else {
        b','
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => return Err(IngestError::EmptyFile),
    };
    let names: Vec<String> = header.iter().skip(1).map(|h| h.trim().to_string()).collect();
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(IngestError::DuplicateColumn {
                name: name.clone(),
                column: i + 2,
            });
        }
    }
    let width = header.len();

    let mut dates = Vec::new();
    let mut rows_of: HashMap<NaiveDate, usize> = HashMap::new();
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    let mut date_format = None;

    for record in records {
        let record = record.map_err(csv_error)?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(IngestError::RaggedRow {
                row,
                expected: width,
                found: record.len(),
            });
        }
        let date_text = record[0].trim();
        let (date, format) = parse_date_as(date_text).ok_or_else(|| IngestError::UnparseableDate {
            row: Some(row),
            text: date_text.to_string(),
        })?;
        match date_format {
            None => date_format = Some(format),
            Some(f) if f != format => {
                return Err(IngestError::MixedDateFormats {
                    row,
                    text: date_text.to_string(),
                })
            }
            Some(_) => {}
        }
        if let Some(&first_row) = rows_of.get(&date) {
            return Err(IngestError::DuplicateDate {
                date,
                row,
                first_row: Some(first_row),
            });
        }
        rows_of.insert(date, row);
        dates.push(date);

        for (c, cell) in record.iter().skip(1).enumerate() {
            values[c].push(parse_cell(cell, row, c + 2, &names[c])?);
        }
    }

    let columns = names
        .iter()
        .cloned()
        .zip(values)
        .map(|(name, values)| Column { name, values })
        .collect();
    let frame = TimeSeriesFrame::new(dates, columns, source_label)?;
    let frame = normalize_columns(frame).map_err(|e| match e {
        IngestError::InconsistentOhlc { date, row: None } => IngestError::InconsistentOhlc {
            date,
            row: rows_of.get(&date).copied(),
        },
        other => other,
    })?;
    let schema = CsvSchema {
        delimiter,
        date_format,
        column_names: names,
    };
    Ok((frame, schema))
}

fn csv_error(e: csv::Error) -> IngestError {
    IngestError::Csv {
        row: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    }
}

fn parse_cell(cell: &str, row: usize, column: usize, name: &str) -> Result<Option<f64>, IngestError> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    // Thousands separators are rejected, not stripped.
    if cell.contains([',', '_', ' ']) {
        return Err(non_numeric(cell, row, column, name));
    }
    cell.parse::<f64>()
        .map(|v| v.is_finite().then_some(v))
        .map_err(|_| non_numeric(cell, row, column, name))
}

fn non_numeric(cell: &str, row: usize, column: usize, name: &str) -> IngestError {
    IngestError::NonNumeric {
        row,
        column,
        name: name.to_string(),
        text: cell.to_string(),
    }
}

fn canonical_name(name: &str) -> Option<&'static str> {
    let trimmed = name.trim();
    OHLC.iter()
        .chain(std::iter::once(&VOLUME))
        .find(|c| c.eq_ignore_ascii_case(trimmed))
        .copied()
}

/// Brings a frame to the canonical OHLC layout.
///
/// OHLC and Volume names are matched case-insensitively and canonicalized.
/// When all of Open, High, Low and Close are present the frame is kept as is
/// (after checking `Low <= Open, Close <= High` on complete rows). Otherwise
/// the first data column is copied into Open, High, Low and Close, replacing
/// any of those that already exist; the first column keeps its own name.
pub fn normalize_columns(frame: TimeSeriesFrame) -> Result<TimeSeriesFrame, IngestError> {
    if frame.columns().is_empty() {
        return Err(IngestError::NoDataColumns);
    }

    let label = frame.source_label().to_string();
    let dates = frame.dates().to_vec();
    let mut columns: Vec<Column> = frame.columns().to_vec();
    for i in 0..columns.len() {
        if let Some(canonical) = canonical_name(&columns[i].name) {
            if columns[..i].iter().any(|c| c.name == canonical) || columns[i + 1..].iter().any(|c| c.name == canonical)
            {
                return Err(IngestError::DuplicateColumn {
                    name: canonical.to_string(),
                    column: i + 2,
                });
            }
            columns[i].name = canonical.to_string();
        }
    }

    let has_all = OHLC.iter().all(|n| columns.iter().any(|c| c.name == *n));
    let mut frame = TimeSeriesFrame::new(dates, columns, label)?;
    if has_all {
        check_ohlc(&frame)?;
        return Ok(frame);
    }

    let first = frame.columns()[0].values.clone();
    for name in OHLC {
        match frame.column_mut(name) {
            Some(existing) => existing.values = first.clone(),
            None => frame.push_column(Column {
                name: name.to_string(),
                values: first.clone(),
            }),
        }
    }
    Ok(frame)
}

fn check_ohlc(frame: &TimeSeriesFrame) -> Result<(), IngestError> {
    let get = |n| frame.column(n).map_err(IngestError::from);
    let (open, high, low, close) = (get("Open")?, get("High")?, get("Low")?, get("Close")?);
    for (i, date) in frame.dates().iter().enumerate() {
        if let (Some(o), Some(h), Some(l), Some(c)) = (open[i], high[i], low[i], close[i]) {
            if !(l <= o && o <= h && l <= c && c <= h) {
                return Err(IngestError::InconsistentOhlc { date: *date, row: None });
            }
        }
    }
    Ok(())
}

/// Writes a frame as CSV: ISO `Date` first, then every column in order.
/// Numbers use the shortest representation that parses back to the same
/// `f64`; missing values are empty cells.
pub fn write_csv<W: Write>(frame: &TimeSeriesFrame, out: W) -> Result<(), IngestError> {
    let columns: Vec<(&str, &[Option<f64>])> = frame
        .columns()
        .iter()
        .map(|c| (c.name.as_str(), c.values.as_slice()))
        .collect();
    write_table(frame.dates(), &columns, out)
}

/// Writes an arbitrary date-aligned table in the same format as [`write_csv`].
pub fn write_table<W: Write>(
    dates: &[NaiveDate],
    columns: &[(&str, &[Option<f64>])],
    out: W,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| IngestError::Io(e.to_string());
    let mut header = vec!["Date"];
    header.extend(columns.iter().map(|c| c.0));
    w.write_record(&header).map_err(io)?;
    for (i, date) in dates.iter().enumerate() {
        let mut record = vec![date.format("%Y-%m-%d").to_string()];
        record.extend(columns.iter().map(|c| c.1[i].map(format_number).unwrap_or_default()));
        w.write_record(&record).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-tripping decimal form.
pub fn format_number(v: f64) -> String {
    format!("{v:?}")
}
