//! Parsing and validation of raw sale records.
//!
//! Input rows (CSV or JSON) are mapped onto the canonical fields
//! `seller`, `buyer`, `creator`, `price_eth`, `price_usd`, `timestamp` and
//! `artwork_id`. Rows that violate an event invariant are rejected with a
//! row number and reason; the rest become a timestamp-sorted [`EventLog`].
//! Events priced only in ETH are flagged as needing conversion and get their
//! USD price from a [`RateTable`] in [`convert_currency`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use rust_decimal::Decimal;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to decode CSV input: {0}")]
    Csv(String),
    #[error("failed to decode JSON input: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid field mapping `{0}` (expected src=dst with dst one of seller, buyer, creator, price_eth, price_usd, timestamp, artwork_id)")]
    FieldMap(String),
    #[error("rate table line {line}: {message}")]
    RateTable { line: usize, message: String },
    #[error("missing ETH-USD rate for {}", format_dates(.0))]
    MissingRates(Vec<NaiveDate>),
}

fn format_dates(dates: &[NaiveDate]) -> String {
    dates
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Json,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "json" | "jsonl" | "ndjson" => Ok(InputFormat::Json),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

/// Canonical event fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Seller,
    Buyer,
    Creator,
    PriceEth,
    PriceUsd,
    Timestamp,
    ArtworkId,
}

impl Field {
    pub const ALL: [Field; 7] = [
        Field::Seller,
        Field::Buyer,
        Field::Creator,
        Field::PriceEth,
        Field::PriceUsd,
        Field::Timestamp,
        Field::ArtworkId,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Seller => "seller",
            Field::Buyer => "buyer",
            Field::Creator => "creator",
            Field::PriceEth => "price_eth",
            Field::PriceUsd => "price_usd",
            Field::Timestamp => "timestamp",
            Field::ArtworkId => "artwork_id",
        }
    }

    fn from_name(name: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Maps source column names onto canonical fields.
///
/// The default map accepts the canonical names and the `*_id` aliases
/// (`seller_id`, `buyer_id`, `creator_id`). Overrides take precedence.
#[derive(Debug, Clone)]
pub struct FieldMap {
    map: HashMap<String, Field>,
}

impl Default for FieldMap {
    fn default() -> Self {
        let mut map: HashMap<String, Field> = Field::ALL
            .into_iter()
            .map(|f| (f.name().to_string(), f))
            .collect();
        map.insert("seller_id".into(), Field::Seller);
        map.insert("buyer_id".into(), Field::Buyer);
        map.insert("creator_id".into(), Field::Creator);
        FieldMap { map }
    }
}

impl FieldMap {
    /// Adds an override of the form `src=dst`.
    pub fn with_override(mut self, spec: &str) -> Result<Self, IngestError> {
        let (src, dst) = spec
            .split_once('=')
            .ok_or_else(|| IngestError::FieldMap(spec.to_string()))?;
        let field =
            Field::from_name(dst.trim()).ok_or_else(|| IngestError::FieldMap(spec.to_string()))?;
        let src = src.trim();
        if src.is_empty() {
            return Err(IngestError::FieldMap(spec.to_string()));
        }
        // A source column bound to a field shadows the canonical column.
        self.map.retain(|_, f| *f != field);
        self.map.insert(src.to_string(), field);
        Ok(self)
    }

    pub fn from_overrides<S: AsRef<str>>(specs: &[S]) -> Result<Self, IngestError> {
        specs
            .iter()
            .try_fold(FieldMap::default(), |m, s| m.with_override(s.as_ref()))
    }

    pub fn resolve(&self, column: &str) -> Option<Field> {
        self.map.get(column.trim()).copied()
    }
}

/// One input row or object, all values as text.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEventRecord {
    pub row: usize,
    pub values: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Market {
    Primary,
    Secondary,
}

/// A validated sale.
#[derive(Debug, Clone, PartialEq)]
pub struct SaleEvent {
    pub seller_id: String,
    pub buyer_id: String,
    pub creator_id: String,
    pub price_eth: Option<Decimal>,
    pub price_usd: Option<Decimal>,
    pub timestamp: DateTime<Utc>,
    pub artwork_id: Option<String>,
    pub market: Market,
}

impl SaleEvent {
    pub fn needs_conversion(&self) -> bool {
        self.price_usd.is_none()
    }

    pub fn is_zero_price(&self) -> bool {
        self.price_usd.is_none_or(|p| p.is_zero()) && self.price_eth.is_none_or(|p| p.is_zero())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceMeta {
    pub source: String,
    pub total_records: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub zero_price: usize,
    pub needs_conversion: usize,
}

/// Timestamp-sorted, validated events plus provenance counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub events: Vec<SaleEvent>,
    pub meta: SourceMeta,
}

impl EventLog {
    /// Builds a log from already-validated events; sorts by timestamp.
    pub fn from_events(source: &str, mut events: Vec<SaleEvent>) -> Self {
        events.sort_by_key(|e| e.timestamp);
        let meta = SourceMeta {
            source: source.to_string(),
            total_records: events.len(),
            accepted: events.len(),
            rejected: 0,
            zero_price: events.iter().filter(|e| e.is_zero_price()).count(),
            needs_conversion: events.iter().filter(|e| e.needs_conversion()).count(),
        };
        EventLog { events, meta }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    MissingField(Field),
    MissingPrice,
    InvalidPrice(Field),
    NegativePrice(Field),
    InvalidTimestamp,
    SelfSale,
    Malformed(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::MissingField(field) => write!(f, "missing field `{}`", field.name()),
            RejectReason::MissingPrice => {
                f.write_str("missing price (need price_eth or price_usd)")
            }
            RejectReason::InvalidPrice(field) => write!(f, "invalid price in `{}`", field.name()),
            RejectReason::NegativePrice(field) => {
                write!(f, "negative price in `{}`", field.name())
            }
            RejectReason::InvalidTimestamp => f.write_str("invalid timestamp"),
            RejectReason::SelfSale => f.write_str("self-sale"),
            RejectReason::Malformed(msg) => write!(f, "malformed record: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectReport {
    pub row: usize,
    pub reason: RejectReason,
}

impl Serialize for RejectReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RejectReport", 2)?;
        st.serialize_field("row", &self.row)?;
        st.serialize_field("reason", &self.reason.to_string())?;
        st.end()
    }
}

/// Per-run ingest summary, written next to the canonical event file.
#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    #[serde(flatten)]
    pub meta: SourceMeta,
    pub rejects: Vec<RejectReport>,
}

/// Reads events in `format`, validating every record.
///
/// Undecodable input is fatal; invalid records are collected as
/// [`RejectReport`]s and skipped.
pub fn parse_events<R: Read>(
    input: R,
    format: InputFormat,
    field_map: &FieldMap,
    source: &str,
) -> Result<(EventLog, Vec<RejectReport>), IngestError> {
    let records = match format {
        InputFormat::Csv => read_csv_records(input)?,
        InputFormat::Json => read_json_records(input)?,
    };
    let total = records.len();
    let mut events = Vec::with_capacity(total);
    let mut rejects = Vec::new();
    for record in records {
        match record.and_then(|r| validate(&r, field_map).map_err(|e| (r.row, e))) {
            Ok(ev) => events.push(ev),
            Err((row, reason)) => rejects.push(RejectReport { row, reason }),
        }
    }
    let mut log = EventLog::from_events(source, events);
    log.meta.total_records = total;
    log.meta.rejected = rejects.len();
    Ok((log, rejects))
}

type RecordResult = Result<RawEventRecord, (usize, RejectReason)>;

fn read_csv_records<R: Read>(input: R) -> Result<Vec<RecordResult>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::Csv(e.to_string()))?;
        if rec.len() != headers.len() {
            out.push(Err((
                row,
                RejectReason::Malformed(format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    rec.len()
                )),
            )));
            continue;
        }
        let values = headers
            .iter()
            .cloned()
            .zip(rec.iter().map(str::to_string))
            .collect();
        out.push(Ok(RawEventRecord { row, values }));
    }
    Ok(out)
}

fn read_json_records<R: Read>(mut input: R) -> Result<Vec<RecordResult>, IngestError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let first = buf.iter().find(|b| !b.is_ascii_whitespace()).copied();
    let values: Vec<serde_json::Value> = match first {
        None => Vec::new(),
        Some(b'[') => serde_json::from_slice(&buf)?,
        Some(_) => serde_json::Deserializer::from_slice(&buf)
            .into_iter::<serde_json::Value>()
            .collect::<Result<_, _>>()?,
    };
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let row = i + 1;
            match v {
                serde_json::Value::Object(obj) => {
                    let values = obj
                        .into_iter()
                        .filter_map(|(k, v)| json_text(v).map(|t| (k, t)))
                        .collect();
                    Ok(RawEventRecord { row, values })
                }
                _ => Err((row, RejectReason::Malformed("not a JSON object".into()))),
            }
        })
        .collect())
}

fn json_text(v: serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) => Some(s),
        other => Some(other.to_string()),
    }
}

fn validate(raw: &RawEventRecord, field_map: &FieldMap) -> Result<SaleEvent, RejectReason> {
    let mut fields: BTreeMap<Field, &str> = BTreeMap::new();
    for (k, v) in &raw.values {
        if let Some(f) = field_map.resolve(k) {
            let v = v.trim();
            if !v.is_empty() {
                fields.insert(f, v);
            }
        }
    }
    let required = |f: Field| {
        fields
            .get(&f)
            .map(|s| s.to_string())
            .ok_or(RejectReason::MissingField(f))
    };
    let seller_id = required(Field::Seller)?;
    let buyer_id = required(Field::Buyer)?;
    let creator_id = required(Field::Creator)?;
    let ts_text = fields
        .get(&Field::Timestamp)
        .ok_or(RejectReason::MissingField(Field::Timestamp))?;

    let price = |f: Field| -> Result<Option<Decimal>, RejectReason> {
        match fields.get(&f) {
            None => Ok(None),
            Some(text) => {
                let d = parse_decimal(text).ok_or(RejectReason::InvalidPrice(f))?;
                if d.is_sign_negative() && !d.is_zero() {
                    Err(RejectReason::NegativePrice(f))
                } else {
                    Ok(Some(d))
                }
            }
        }
    };
    let price_eth = price(Field::PriceEth)?;
    let price_usd = price(Field::PriceUsd)?;
    if price_eth.is_none() && price_usd.is_none() {
        return Err(RejectReason::MissingPrice);
    }
    let timestamp = parse_timestamp(ts_text).ok_or(RejectReason::InvalidTimestamp)?;
    if buyer_id == seller_id {
        return Err(RejectReason::SelfSale);
    }
    let market = if seller_id == creator_id {
        Market::Primary
    } else {
        Market::Secondary
    };
    Ok(SaleEvent {
        seller_id,
        buyer_id,
        creator_id,
        price_eth,
        price_usd,
        timestamp,
        artwork_id: fields.get(&Field::ArtworkId).map(|s| s.to_string()),
        market,
    })
}

fn parse_decimal(text: &str) -> Option<Decimal> {
    Decimal::from_str_exact(text)
        .ok()
        .or_else(|| Decimal::from_scientific(text).ok())
}

/// Accepts integer Unix seconds, RFC 3339, `YYYY-MM-DD[ T]HH:MM:SS` (UTC)
/// and bare dates. Sub-second precision is truncated.
pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    let text = text.trim();
    let parsed = if let Ok(secs) = text.parse::<i64>() {
        Utc.timestamp_opt(secs, 0).single()
    } else if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        Some(dt.with_timezone(&Utc))
    } else if let Some(dt) = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
    {
        Some(dt.and_utc())
    } else {
        NaiveDate::parse_from_str(text, "%Y-%m-%d")
            .ok()
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(|dt| dt.and_utc())
    };
    parsed.and_then(|dt| Utc.timestamp_opt(dt.timestamp(), 0).single())
}

/// Daily ETH→USD rates keyed by UTC date.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateTable {
    rates: BTreeMap<NaiveDate, Decimal>,
}

impl RateTable {
    pub fn from_pairs<I>(pairs: I) -> Result<Self, IngestError>
    where
        I: IntoIterator<Item = (NaiveDate, Decimal)>,
    {
        let mut rates = BTreeMap::new();
        for (i, (date, rate)) in pairs.into_iter().enumerate() {
            insert_rate(&mut rates, i + 1, date, rate)?;
        }
        Ok(RateTable { rates })
    }

    /// Reads a two-column `date,usd_per_eth` CSV with a header row.
    pub fn from_csv<R: Read>(input: R) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let mut rates = BTreeMap::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| IngestError::RateTable {
                line,
                message: e.to_string(),
            })?;
            let bad = |message: String| IngestError::RateTable { line, message };
            let date_text = rec.get(0).unwrap_or("").trim();
            let rate_text = rec.get(1).unwrap_or("").trim();
            let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
                .map_err(|_| bad(format!("invalid date `{date_text}`")))?;
            let rate = parse_decimal(rate_text)
                .ok_or_else(|| bad(format!("invalid rate `{rate_text}`")))?;
            insert_rate(&mut rates, line, date, rate)?;
        }
        Ok(RateTable { rates })
    }

    pub fn rate(&self, date: NaiveDate) -> Option<Decimal> {
        self.rates.get(&date).copied()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

fn insert_rate(
    rates: &mut BTreeMap<NaiveDate, Decimal>,
    line: usize,
    date: NaiveDate,
    rate: Decimal,
) -> Result<(), IngestError> {
    if rate <= Decimal::ZERO {
        return Err(IngestError::RateTable {
            line,
            message: format!("rate for {date} must be positive"),
        });
    }
    if rates.insert(date, rate).is_some() {
        return Err(IngestError::RateTable {
            line,
            message: format!("duplicate date {date}"),
        });
    }
    Ok(())
}

/// Fills `price_usd = price_eth × rate(UTC date)` for every event that lacks
/// a USD price. Fails listing every date with no rate.
pub fn convert_currency(log: &EventLog, rates: &RateTable) -> Result<EventLog, IngestError> {
    let missing: BTreeSet<NaiveDate> = log
        .events
        .iter()
        .filter(|e| e.needs_conversion())
        .map(|e| e.timestamp.date_naive())
        .filter(|d| rates.rate(*d).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingRates(missing.into_iter().collect()));
    }
    let mut out = log.clone();
    for ev in out.events.iter_mut().filter(|e| e.needs_conversion()) {
        // needs_conversion implies price_eth is present
        let eth = ev.price_eth.unwrap_or_default();
        let rate = rates.rate(ev.timestamp.date_naive()).unwrap_or_default();
        ev.price_usd = Some((eth * rate).normalize());
    }
    out.meta.needs_conversion = 0;
    Ok(out)
}

pub const EVENT_COLUMNS: [&str; 7] = [
    "seller",
    "buyer",
    "creator",
    "price_eth",
    "price_usd",
    "timestamp",
    "artwork_id",
];

/// Writes the canonical event CSV, loadable again with [`parse_events`].
pub fn write_events_csv<W: Write>(log: &EventLog, out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| IngestError::Csv(e.to_string());
    w.write_record(EVENT_COLUMNS).map_err(csv_err)?;
    for ev in &log.events {
        let eth = ev.price_eth.map(|d| d.to_string()).unwrap_or_default();
        let usd = ev.price_usd.map(|d| d.to_string()).unwrap_or_default();
        let ts = ev.timestamp.format("%Y-%m-%dT%H:%M:%SZ").to_string();
        w.write_record([
            ev.seller_id.as_str(),
            ev.buyer_id.as_str(),
            ev.creator_id.as_str(),
            eth.as_str(),
            usd.as_str(),
            ts.as_str(),
            ev.artwork_id.as_deref().unwrap_or(""),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
