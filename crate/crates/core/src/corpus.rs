//! Message corpora: loading, validation and monthly binning.
//!
//! JSONL is the canonical on-disk form (one message object per line). CSV
//! with the same column names is accepted as well. Malformed records are
//! rejected one at a time and reported with their line number; a bad row
//! never aborts the whole file.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Datelike, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Posting account group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountRole {
    PublicHealth,
    StateFedEm,
    LocalEm,
    Governor,
    Mayor,
}

impl AccountRole {
    pub const ALL: [AccountRole; 5] = [
        AccountRole::PublicHealth,
        AccountRole::StateFedEm,
        AccountRole::LocalEm,
        AccountRole::Governor,
        AccountRole::Mayor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AccountRole::PublicHealth => "public_health",
            AccountRole::StateFedEm => "state_fed_em",
            AccountRole::LocalEm => "local_em",
            AccountRole::Governor => "governor",
            AccountRole::Mayor => "mayor",
        }
    }

    /// Coarse three-way grouping: health agencies, emergency management,
    /// and elected officials.
    pub fn group(self) -> RoleGroup {
        match self {
            AccountRole::PublicHealth => RoleGroup::Health,
            AccountRole::StateFedEm | AccountRole::LocalEm => RoleGroup::EmergencyManagement,
            AccountRole::Governor | AccountRole::Mayor => RoleGroup::Elected,
        }
    }
}

impl fmt::Display for AccountRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AccountRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AccountRole::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown account role {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleGroup {
    Health,
    EmergencyManagement,
    Elected,
}

impl RoleGroup {
    pub const ALL: [RoleGroup; 3] = [
        RoleGroup::Health,
        RoleGroup::EmergencyManagement,
        RoleGroup::Elected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleGroup::Health => "health",
            RoleGroup::EmergencyManagement => "emergency_management",
            RoleGroup::Elected => "elected",
        }
    }
}

impl fmt::Display for RoleGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub text: String,
    #[serde(serialize_with = "ser_timestamp", deserialize_with = "de_timestamp")]
    pub timestamp: DateTime<Utc>,
    pub account_id: String,
    pub account_role: AccountRole,
    pub follower_count: u64,
    pub retransmission_count: u64,
    pub is_retransmission: bool,
}

fn ser_timestamp<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_timestamp(ts))
}

fn de_timestamp<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
    let raw = String::deserialize(d)?;
    parse_timestamp(&raw).map_err(serde::de::Error::custom)
}

/// Canonical timestamp rendering: RFC 3339, UTC, `Z` suffix.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Parses an ISO 8601 / RFC 3339 instant. An explicit offset is required.
pub fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(raw.trim())
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|e| format!("{raw:?} is not an RFC 3339 timestamp with offset ({e})"))
}

/// An immutable, ordered collection of messages with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageSet {
    messages: Vec<Message>,
}

impl MessageSet {
    /// Builds a set, rejecting duplicate or empty ids.
    pub fn new(messages: Vec<Message>) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &messages {
            if m.id.is_empty() {
                return Err(Error::Invalid("empty message id".into()));
            }
            if !seen.insert(m.id.as_str()) {
                return Err(Error::Invalid(format!("duplicate id {:?}", m.id)));
            }
        }
        Ok(MessageSet { messages })
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.messages.iter()
    }

    pub fn as_slice(&self) -> &[Message] {
        &self.messages
    }

    pub fn get(&self, id: &str) -> Option<&Message> {
        self.messages.iter().find(|m| m.id == id)
    }

    /// Groups messages by month. Pre-epoch messages are returned separately.
    pub fn partition_by_month(
        &self,
        epoch: Epoch,
    ) -> (BTreeMap<MonthIndex, Vec<&Message>>, Vec<&Message>) {
        let mut bins: BTreeMap<MonthIndex, Vec<&Message>> = BTreeMap::new();
        let mut early = Vec::new();
        for m in &self.messages {
            match month_bin(&m.timestamp, epoch) {
                Ok(idx) => bins.entry(idx).or_default().push(m),
                Err(_) => early.push(m),
            }
        }
        (bins, early)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for m in &self.messages {
            serde_json::to_writer(&mut out, m)?;
            out.write_all(b"\n").map_err(|e| Error::io("<jsonl output>", e))?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for m in &self.messages {
            w.serialize(m)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

impl<'a> IntoIterator for &'a MessageSet {
    type Item = &'a Message;
    type IntoIter = std::slice::Iter<'a, Message>;

    fn into_iter(self) -> Self::IntoIter {
        self.messages.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

/// A record that failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub messages: MessageSet,
    pub rejections: Vec<Rejection>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<LoadedCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        CorpusFormat::Jsonl => read_jsonl(reader).map_err(|e| relabel_io(e, path)),
        CorpusFormat::Csv => read_csv(reader).map_err(|e| relabel_io(e, path)),
    }
}

fn relabel_io(err: Error, path: &Path) -> Error {
    match err {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<LoadedCorpus> {
    let mut builder = Builder::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<jsonl input>", e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(obj)) => builder.push(lineno, &obj),
            Ok(_) => builder.reject(lineno, None, "record is not a JSON object".into()),
            Err(e) => builder.reject(lineno, None, format!("malformed JSON: {e}")),
        }
    }
    Ok(builder.finish())
}

pub fn read_csv<R: Read>(reader: R) -> Result<LoadedCorpus> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut builder = Builder::default();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                builder.reject(line, None, format!("malformed CSV row: {e}"));
                continue;
            }
        };
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut obj = Map::new();
        for (name, raw) in headers.iter().zip(rec.iter()) {
            obj.insert(name.to_string(), csv_cell(name, raw));
        }
        builder.push(line, &obj);
    }
    Ok(builder.finish())
}

// CSV cells are untyped; coerce the typed columns so both formats share one
// validation path.
fn csv_cell(name: &str, raw: &str) -> Value {
    match name {
        "follower_count" | "retransmission_count" => raw
            .trim()
            .parse::<u64>()
            .map(Value::from)
            .unwrap_or_else(|_| Value::String(raw.to_string())),
        "is_retransmission" => match raw.trim().to_ascii_lowercase().as_str() {
            "true" | "1" => Value::Bool(true),
            "false" | "0" => Value::Bool(false),
            _ => Value::String(raw.to_string()),
        },
        _ => Value::String(raw.to_string()),
    }
}

#[derive(Default)]
struct Builder {
    seen: HashSet<String>,
    messages: Vec<Message>,
    rejections: Vec<Rejection>,
}

impl Builder {
    fn push(&mut self, line: usize, obj: &Map<String, Value>) {
        let id = obj.get("id").and_then(Value::as_str).map(str::to_string);
        match validate(obj) {
            Ok(m) => {
                if self.seen.contains(&m.id) {
                    self.reject(line, Some(m.id), "duplicate id".into());
                } else {
                    self.seen.insert(m.id.clone());
                    self.messages.push(m);
                }
            }
            Err(reason) => self.reject(line, id, reason),
        }
    }

    fn reject(&mut self, line: usize, id: Option<String>, reason: String) {
        self.rejections.push(Rejection { line, id, reason });
    }

    fn finish(self) -> LoadedCorpus {
        LoadedCorpus {
            messages: MessageSet {
                messages: self.messages,
            },
            rejections: self.rejections,
        }
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value, String> {
    match obj.get(name) {
        None | Some(Value::Null) => Err(format!("missing field {name}")),
        Some(v) => Ok(v),
    }
}

fn str_field(obj: &Map<String, Value>, name: &str) -> Result<String, String> {
    field(obj, name)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| format!("invalid field {name}: expected a string"))
}

fn count_field(obj: &Map<String, Value>, name: &str) -> Result<u64, String> {
    field(obj, name)?
        .as_u64()
        .ok_or_else(|| format!("invalid field {name}: expected a nonnegative integer"))
}

fn validate(obj: &Map<String, Value>) -> Result<Message, String> {
    let id = str_field(obj, "id")?;
    if id.trim().is_empty() {
        return Err("invalid field id: empty".into());
    }
    let text = str_field(obj, "text")?;
    let timestamp = parse_timestamp(&str_field(obj, "timestamp")?)
        .map_err(|e| format!("invalid field timestamp: {e}"))?;
    let account_id = str_field(obj, "account_id")?;
    let account_role = str_field(obj, "account_role")?
        .parse::<AccountRole>()
        .map_err(|e| format!("invalid field account_role: {e}"))?;
    let follower_count = count_field(obj, "follower_count")?;
    let retransmission_count = count_field(obj, "retransmission_count")?;
    let is_retransmission = field(obj, "is_retransmission")?
        .as_bool()
        .ok_or_else(|| "invalid field is_retransmission: expected a boolean".to_string())?;
    Ok(Message {
        id,
        text,
        timestamp,
        account_id,
        account_role,
        follower_count,
        retransmission_count,
        is_retransmission,
    })
}

/// Keeps original (non-retransmitted) messages in their original order.
pub fn filter_originals(set: &MessageSet) -> MessageSet {
    MessageSet {
        messages: set
            .iter()
            .filter(|m| !m.is_retransmission)
            .cloned()
            .collect(),
    }
}

/// First month of the observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Epoch {
    year: i32,
    month: u32,
}

impl Epoch {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidEpoch(format!("{year}-{month}")));
        }
        Ok(Epoch { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    pub fn start(&self) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(self.year, self.month, 1, 0, 0, 0)
            .single()
            .expect("first of month is unambiguous in UTC")
    }
}

impl Default for Epoch {
    fn default() -> Self {
        Epoch {
            year: 2020,
            month: 1,
        }
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Epoch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (y, m) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::InvalidEpoch(s.to_string()))?;
        let year = y.parse().map_err(|_| Error::InvalidEpoch(s.to_string()))?;
        let month = m.parse().map_err(|_| Error::InvalidEpoch(s.to_string()))?;
        Epoch::new(year, month)
    }
}

impl Serialize for Epoch {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Epoch {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// 1-based month offset from the epoch (epoch month = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MonthIndex(u32);

impl MonthIndex {
    pub fn new(value: u32) -> Option<Self> {
        (value >= 1).then_some(MonthIndex(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    /// Calendar label (`YYYY-MM`) of this month relative to `epoch`.
    pub fn label(self, epoch: Epoch) -> String {
        let zero_based = epoch.year as i64 * 12 + (epoch.month as i64 - 1) + (self.0 as i64 - 1);
        format!("{:04}-{:02}", zero_based.div_euclid(12), zero_based.rem_euclid(12) + 1)
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn month_bin(timestamp: &DateTime<Utc>, epoch: Epoch) -> Result<MonthIndex> {
    let offset = (timestamp.year() as i64 - epoch.year as i64) * 12 + timestamp.month() as i64
        - epoch.month as i64;
    if offset < 0 {
        return Err(Error::PreEpoch {
            timestamp: format_timestamp(timestamp),
            epoch: epoch.to_string(),
        });
    }
    Ok(MonthIndex(offset as u32 + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(raw: &str) -> DateTime<Utc> {
        parse_timestamp(raw).unwrap()
    }

    fn line(id: &str, retweet: bool) -> String {
        format!(
            r#"{{"id":"{id}","text":"t","timestamp":"2020-03-01T12:00:00Z","account_id":"a","account_role":"mayor","follower_count":10,"retransmission_count":2,"is_retransmission":{retweet}}}"#
        )
    }

    #[test]
    fn month_bins_match_observation_window() {
        let e = Epoch::default();
        assert_eq!(month_bin(&ts("2020-01-15T00:00:00Z"), e).unwrap().value(), 1);
        assert_eq!(month_bin(&ts("2021-03-31T23:59:59Z"), e).unwrap().value(), 15);
        assert_eq!(month_bin(&ts("2020-02-01T00:00:00Z"), e).unwrap().value(), 2);
    }

    #[test]
    fn pre_epoch_is_an_error() {
        let err = month_bin(&ts("2019-12-31T23:59:59Z"), Epoch::default()).unwrap_err();
        assert!(err.to_string().contains("pre-epoch message"));
    }

    #[test]
    fn offsets_normalize_to_utc() {
        // 2020-01-31 20:00 at -05:00 is already February in UTC.
        let t = ts("2020-01-31T20:00:00-05:00");
        assert_eq!(format_timestamp(&t), "2020-02-01T01:00:00Z");
        assert_eq!(month_bin(&t, Epoch::default()).unwrap().value(), 2);
    }

    #[test]
    fn timestamp_without_offset_is_rejected() {
        assert!(parse_timestamp("2020-01-15T00:00:00").is_err());
    }

    #[test]
    fn month_labels() {
        let e = Epoch::default();
        assert_eq!(MonthIndex::new(1).unwrap().label(e), "2020-01");
        assert_eq!(MonthIndex::new(15).unwrap().label(e), "2021-03");
        assert_eq!(MonthIndex::new(12).unwrap().label(e), "2020-12");
        assert!(MonthIndex::new(0).is_none());
    }

    #[test]
    fn loads_valid_jsonl() {
        let text = [line("1", false), line("2", true), line("3", false)].join("\n");
        let c = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(c.messages.len(), 3);
        assert!(c.rejections.is_empty());
    }

    #[test]
    fn missing_timestamp_is_rejected() {
        let bad = line("9", false).replace(r#""timestamp":"2020-03-01T12:00:00Z","#, "");
        let text = [line("1", false), bad].join("\n");
        let c = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(c.messages.len(), 1);
        assert_eq!(c.rejections.len(), 1);
        assert_eq!(c.rejections[0].line, 2);
        assert_eq!(c.rejections[0].reason, "missing field timestamp");
    }

    #[test]
    fn duplicate_id_rejects_second_occurrence() {
        let text = [
            line("a", false),
            line("b", false),
            line("c", false),
            line("d", false),
            line("b", false),
        ]
        .join("\n");
        let c = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(c.messages.len(), 4);
        assert_eq!(c.rejections[0].line, 5);
        assert_eq!(c.rejections[0].reason, "duplicate id");
    }

    #[test]
    fn negative_counts_and_bad_roles_are_rejected() {
        let neg = line("x", false).replace(r#""follower_count":10"#, r#""follower_count":-3"#);
        let role = line("y", false).replace("mayor", "sheriff");
        let c = read_jsonl([neg, role].join("\n").as_bytes()).unwrap();
        assert_eq!(c.messages.len(), 0);
        assert!(c.rejections[0].reason.starts_with("invalid field follower_count"));
        assert!(c.rejections[1].reason.starts_with("invalid field account_role"));
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let extra = line("1", false).replace("{", r#"{"lang":"en","#);
        let c = read_jsonl(extra.as_bytes()).unwrap();
        assert_eq!(c.messages.len(), 1);
    }

    #[test]
    fn csv_with_quoting() {
        let csv = "id,text,timestamp,account_id,account_role,follower_count,retransmission_count,is_retransmission\n\
                   1,\"Closed, due to \"\"snow\"\"\",2020-02-01T00:00:00Z,acc,local_em,5,0,false\n\
                   2,x,2020-02-01T00:00:00Z,acc,local_em,many,0,false\n";
        let c = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(c.messages.len(), 1);
        assert_eq!(c.messages.as_slice()[0].text, "Closed, due to \"snow\"");
        assert_eq!(c.rejections.len(), 1);
        assert_eq!(c.rejections[0].line, 3);
    }

    #[test]
    fn filter_originals_keeps_order() {
        let text = [line("1", false), line("2", true), line("3", false)].join("\n");
        let c = read_jsonl(text.as_bytes()).unwrap();
        let kept: Vec<_> = filter_originals(&c.messages)
            .iter()
            .map(|m| m.id.clone())
            .collect();
        assert_eq!(kept, ["1", "3"]);

        let all_rt = read_jsonl([line("1", true), line("2", true)].join("\n").as_bytes()).unwrap();
        assert!(filter_originals(&all_rt.messages).is_empty());
        assert!(filter_originals(&MessageSet::default()).is_empty());
    }

    #[test]
    fn epoch_parsing() {
        assert_eq!("2020-01".parse::<Epoch>().unwrap(), Epoch::default());
        assert!("2020-13".parse::<Epoch>().is_err());
        assert!("2020".parse::<Epoch>().is_err());
    }
}
