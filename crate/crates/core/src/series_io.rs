//! Tick ingestion, previous-tick resampling onto an equally spaced grid, length
//! alignment across assets and calendar horizon slicing.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NANOS_PER_SECOND: i64 = 1_000_000_000;

/// One raw trade/quote observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord<T> {
    pub timestamp_ns: i64,
    pub price: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Price,
    Return,
    Volatility,
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesKind::Price => "price",
            SeriesKind::Return => "return",
            SeriesKind::Volatility => "volatility",
        })
    }
}

impl FromStr for SeriesKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "price" => Ok(SeriesKind::Price),
            "return" => Ok(SeriesKind::Return),
            "volatility" => Ok(SeriesKind::Volatility),
            other => Err(Error::Data(format!("unknown series kind `{other}`"))),
        }
    }
}

/// Equally spaced values; sample `i` sits at `start_time + i * delta` (ns).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries<T> {
    values: Vec<T>,
    start_time: i64,
    delta: i64,
    kind: SeriesKind,
}

impl<T: Scalar> SampledSeries<T> {
    pub fn new(values: Vec<T>, start_time: i64, delta: i64, kind: SeriesKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if delta <= 0 {
            return Err(Error::InvalidArgument(format!("sampling interval must be positive, got {delta} ns")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at sample {i}")));
        }
        Ok(Self { values, start_time, delta, kind })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, i: usize) -> i64 {
        self.start_time + i as i64 * self.delta
    }

    pub fn end_time(&self) -> i64 {
        self.time_at(self.len() - 1)
    }

    /// Series derived from this one: same `delta`, first value placed `offset`
    /// samples after this series' start.
    pub fn derive(&self, values: Vec<T>, offset: usize, kind: SeriesKind) -> Result<Self> {
        Self::new(values, self.time_at(offset), self.delta, kind)
    }

    /// Same values placed on a different time grid.
    pub fn retimed(self, start_time: i64, delta: i64) -> Result<Self> {
        Self::new(self.values, start_time, delta, self.kind)
    }

    fn subrange(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi || hi > self.len() {
            return Err(Error::TooShort { needed: hi.max(lo + 1), available: self.len() });
        }
        Ok(Self {
            values: self.values[lo..hi].to_vec(),
            start_time: self.time_at(lo),
            delta: self.delta,
            kind: self.kind,
        })
    }

    /// Ticks at the grid points, one per sample.
    pub fn to_ticks(&self) -> Vec<TickRecord<T>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &price)| TickRecord { timestamp_ns: self.time_at(i), price })
            .collect()
    }
}

/// How the `M`-th horizon is cut out of the year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HorizonMode {
    /// Months `1..=M` from the start date.
    #[default]
    Expanding,
    /// Month `M` alone.
    Disjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HorizonSpec {
    pub year_start: NaiveDate,
    pub months: u32,
    pub mode: HorizonMode,
}

impl HorizonSpec {
    pub fn new(year_start: NaiveDate, months: u32, mode: HorizonMode) -> Result<Self> {
        let spec = Self { year_start, months, mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn expanding(year_start: NaiveDate, months: u32) -> Result<Self> {
        Self::new(year_start, months, HorizonMode::Expanding)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.months) {
            return Err(Error::InvalidArgument(format!("horizon must be in 1..=12 months, got {}", self.months)));
        }
        Ok(())
    }

    /// UTC nanosecond timestamp `months` calendar months after the start date.
    fn boundary_ns(&self, months: u32) -> Result<i64> {
        let date = self
            .year_start
            .checked_add_months(Months::new(months))
            .ok_or_else(|| Error::InvalidArgument("horizon boundary out of calendar range".into()))?;
        date_to_ns(date)
    }

    /// Half-open `[begin, end)` window in UTC nanoseconds.
    pub fn window_ns(&self) -> Result<(i64, i64)> {
        self.validate()?;
        let end = self.boundary_ns(self.months)?;
        let begin = match self.mode {
            HorizonMode::Expanding => self.boundary_ns(0)?,
            HorizonMode::Disjoint => self.boundary_ns(self.months - 1)?,
        };
        Ok((begin, end))
    }
}

pub fn date_to_ns(date: NaiveDate) -> Result<i64> {
    date.and_hms_opt(0, 0, 0)
        .and_then(|dt| dt.and_utc().timestamp_nanos_opt())
        .ok_or_else(|| Error::InvalidArgument(format!("date {date} not representable in ns")))
}

/// Reads the tick CSV (`timestamp_ns,price`). Records come back sorted by
/// timestamp; the sort is stable so equal timestamps keep file order.
pub fn parse_ticks<T: Scalar, R: Read>(source: R) -> Result<Vec<TickRecord<T>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyInput);
    }
    if headers.len() != 2 || &headers[0] != "timestamp_ns" || &headers[1] != "price" {
        return Err(Error::Parse { line: 1, message: format!("expected header `timestamp_ns,price`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")) });
    }

    let mut ticks = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse { line, message: format!("expected 2 fields, got {}", record.len()) });
        }
        let timestamp_ns: i64 = record[0]
            .parse()
            .map_err(|e| Error::Parse { line, message: format!("bad timestamp `{}`: {e}", &record[0]) })?;
        let price: f64 = record[1]
            .parse()
            .map_err(|e| Error::Parse { line, message: format!("bad price `{}`: {e}", &record[1]) })?;
        if !price.is_finite() {
            return Err(Error::Parse { line, message: format!("non-finite price `{}`", &record[1]) });
        }
        if price <= 0.0 {
            return Err(Error::Data(format!("non-positive price {price} on line {line}")));
        }
        ticks.push(TickRecord { timestamp_ns, price: T::of(price) });
    }
    if ticks.is_empty() {
        return Err(Error::EmptyInput);
    }
    ticks.sort_by_key(|t| t.timestamp_ns);
    Ok(ticks)
}

/// Previous-tick resampling onto `first, first + delta, ...` up to the last
/// tick. Ticks must be sorted; among equal timestamps the last one wins.
pub fn resample<T: Scalar>(ticks: &[TickRecord<T>], delta: i64) -> Result<SampledSeries<T>> {
    let (first, last) = match (ticks.first(), ticks.last()) {
        (Some(f), Some(l)) => (f.timestamp_ns, l.timestamp_ns),
        _ => return Err(Error::EmptyInput),
    };
    if delta <= 0 {
        return Err(Error::InvalidArgument(format!("sampling interval must be positive, got {delta} ns")));
    }
    if let Some(w) = ticks.windows(2).position(|w| w[1].timestamp_ns < w[0].timestamp_ns) {
        return Err(Error::Data(format!("ticks not sorted at index {}", w + 1)));
    }

    let len = ((last - first) / delta) as usize + 1;
    let mut values = Vec::with_capacity(len);
    let mut cursor = 0;
    for k in 0..len {
        let t = first + k as i64 * delta;
        while cursor + 1 < ticks.len() && ticks[cursor + 1].timestamp_ns <= t {
            cursor += 1;
        }
        values.push(ticks[cursor].price);
    }
    SampledSeries::new(values, first, delta, SeriesKind::Price)
}

/// Truncates every series (from the end) to the shortest length.
pub fn align_lengths<T: Scalar>(series: Vec<SampledSeries<T>>) -> Result<Vec<SampledSeries<T>>> {
    let delta = series.first().ok_or(Error::EmptyInput)?.delta;
    if let Some(s) = series.iter().find(|s| s.delta != delta) {
        return Err(Error::InvalidArgument(format!("mismatched sampling intervals: {delta} ns vs {} ns", s.delta)));
    }
    let min_len = series.iter().map(SampledSeries::len).min().unwrap_or(0);
    Ok(series
        .into_iter()
        .map(|mut s| {
            s.values.truncate(min_len);
            s
        })
        .collect())
}

/// Samples whose timestamps fall inside the horizon window. The series must
/// reach into the horizon's last month.
pub fn slice_horizon<T: Scalar>(series: &SampledSeries<T>, spec: &HorizonSpec) -> Result<SampledSeries<T>> {
    let (begin, end) = spec.window_ns()?;
    let last_month_begin = spec.boundary_ns(spec.months - 1)?;
    if series.end_time() < last_month_begin {
        return Err(Error::TooShort {
            needed: spec.months as usize,
            available: months_covered(series, spec)?,
        });
    }
    let lo = index_at_or_after(series, begin);
    let hi = index_at_or_after(series, end);
    series.subrange(lo, hi)
}

fn months_covered<T: Scalar>(series: &SampledSeries<T>, spec: &HorizonSpec) -> Result<usize> {
    let mut covered = 0;
    for m in 0..12 {
        if series.end_time() >= spec.boundary_ns(m)? {
            covered = m as usize + 1;
        }
    }
    Ok(covered)
}

fn index_at_or_after<T: Scalar>(series: &SampledSeries<T>, t: i64) -> usize {
    if t <= series.start_time {
        return 0;
    }
    let offset = t - series.start_time;
    let idx = (offset + series.delta - 1) / series.delta;
    (idx as usize).min(series.len())
}

/// Writes the sampled-series cache format: a `# kind=.. delta_ns=..` line, then
/// `t_ns,value` rows.
pub fn write_series_csv<T: Scalar, W: Write>(mut out: W, series: &SampledSeries<T>) -> Result<()> {
    writeln!(out, "# kind={} delta_ns={}", series.kind, series.delta)?;
    writeln!(out, "t_ns,value")?;
    for (i, v) in series.values.iter().enumerate() {
        writeln!(out, "{},{}", series.time_at(i), v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_series_csv<T: Scalar, R: Read>(source: R) -> Result<SampledSeries<T>> {
    let mut lines = BufReader::new(source).lines();
    let meta = lines.next().ok_or(Error::EmptyInput)??;
    let (kind, delta) = parse_meta(&meta)?;
    match lines.next() {
        Some(Ok(h)) if h.trim() == "t_ns,value" => {}
        Some(Ok(h)) => return Err(Error::Parse { line: 2, message: format!("expected header `t_ns,value`, got `{h}`") }),
        Some(Err(e)) => return Err(e.into()),
        None => return Err(Error::EmptyInput),
    }

    let mut start = None;
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i as u64 + 3;
        if line.trim().is_empty() {
            continue;
        }
        let (t, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse { line: lineno, message: "expected `t_ns,value`".into() })?;
        let t: i64 = t.trim().parse().map_err(|e| Error::Parse { line: lineno, message: format!("bad t_ns: {e}") })?;
        let v: f64 = v.trim().parse().map_err(|e| Error::Parse { line: lineno, message: format!("bad value: {e}") })?;
        let start = *start.get_or_insert(t);
        if t != start + values.len() as i64 * delta {
            return Err(Error::Data(format!("sample on line {lineno} is off the {delta} ns grid")));
        }
        values.push(T::of(v));
    }
    SampledSeries::new(values, start.ok_or(Error::EmptyInput)?, delta, kind)
}

fn parse_meta(line: &str) -> Result<(SeriesKind, i64)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse { line: 1, message: "missing `# kind=.. delta_ns=..` header".into() })?;
    let mut kind = None;
    let mut delta = None;
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("kind", k)) => kind = Some(k.parse()?),
            Some(("delta_ns", d)) => {
                delta = Some(d.parse::<i64>().map_err(|e| Error::Parse { line: 1, message: format!("bad delta_ns: {e}") })?)
            }
            _ => {}
        }
    }
    match (kind, delta) {
        (Some(k), Some(d)) => Ok((k, d)),
        _ => Err(Error::Parse { line: 1, message: "header needs both kind= and delta_ns=".into() }),
    }
}
