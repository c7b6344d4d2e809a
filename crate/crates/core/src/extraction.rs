//! Causal connective templates and cause/effect splitting.
//!
//! A message is split at its first eligible connective: the text before
//! the connective is the effect subpart, the text after it is the cause
//! subpart. Connectives opening a sentence are ineligible because the
//! "Due to B, A" form cannot be split without a parser.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Message, MessageSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Connective {
    DueTo,
    BecauseOf,
    CausedBy,
}

impl Connective {
    pub const ALL: [Connective; 3] = [Connective::DueTo, Connective::BecauseOf, Connective::CausedBy];

    pub fn phrase(self) -> &'static str {
        match self {
            Connective::DueTo => "due to",
            Connective::BecauseOf => "because of",
            Connective::CausedBy => "caused by",
        }
    }

    fn from_match(s: &str) -> Connective {
        let lower = s.to_lowercase();
        if lower.starts_with("due") {
            Connective::DueTo
        } else if lower.starts_with("because") {
            Connective::BecauseOf
        } else {
            Connective::CausedBy
        }
    }
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.phrase())
    }
}

/// Half-open character range `[start, end)` into the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectiveMatch {
    pub connective: Connective,
    /// Character span.
    pub span: Span,
    byte_start: usize,
    byte_end: usize,
}

fn connective_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // `\b` is Unicode-aware in the regex crate.
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:due\s+to|because\s+of|caused\s+by)\b").unwrap())
}

/// All whole-word, case-insensitive connective occurrences, left to right.
pub fn find_connectives(text: &str) -> Vec<ConnectiveMatch> {
    let mut out = Vec::new();
    let mut chars_before = 0;
    let mut last_byte = 0;
    for m in connective_regex().find_iter(text) {
        chars_before += text[last_byte..m.start()].chars().count();
        let start = chars_before;
        let len = m.as_str().chars().count();
        chars_before += len;
        last_byte = m.end();
        out.push(ConnectiveMatch {
            connective: Connective::from_match(m.as_str()),
            span: Span {
                start,
                end: start + len,
            },
            byte_start: m.start(),
            byte_end: m.end(),
        });
    }
    out
}

/// True when the text before `byte_pos` is empty or ends a sentence, once
/// trailing whitespace and closing quotes/brackets are skipped.
pub fn is_sentence_start(text: &str, byte_pos: usize) -> bool {
    let prev = text[..byte_pos]
        .chars()
        .rev()
        .find(|c| !(c.is_whitespace() || is_closer(*c)));
    matches!(prev, None | Some('.' | '!' | '?'))
}

fn is_closer(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | ')' | ']' | '}' | '\u{201D}' | '\u{2019}' | '\u{00BB}'
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitFlag {
    MultiConnective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalUnit {
    pub message_id: String,
    pub connective: Connective,
    pub cause_text: String,
    pub effect_text: String,
    /// Character offset of the connective within the message text.
    pub connective_offset: usize,
    #[serde(default)]
    pub flags: Vec<UnitFlag>,
}

impl CausalUnit {
    pub fn is_multi_connective(&self) -> bool {
        self.flags.contains(&UnitFlag::MultiConnective)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SkipReason {
    NoConnective,
    SentenceInitial,
    /// The eligible connective had only whitespace or punctuation on one
    /// side of it.
    EmptySubpart,
}

impl SkipReason {
    pub const ALL: [SkipReason; 3] = [
        SkipReason::NoConnective,
        SkipReason::SentenceInitial,
        SkipReason::EmptySubpart,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extraction {
    Unit(CausalUnit),
    Skipped(SkipReason),
}

impl Extraction {
    pub fn unit(self) -> Option<CausalUnit> {
        match self {
            Extraction::Unit(u) => Some(u),
            Extraction::Skipped(_) => None,
        }
    }
}

pub fn extract_unit(message: &Message) -> Extraction {
    extract_from_text(&message.id, &message.text)
}

/// Nothing but whitespace and ASCII punctuation.
fn is_blank(s: &str) -> bool {
    s.chars().all(|c| c.is_whitespace() || c.is_ascii_punctuation())
}

/// Splits `text` at its first connective that does not open a sentence.
pub fn extract_from_text(message_id: &str, text: &str) -> Extraction {
    let matches = find_connectives(text);
    if matches.is_empty() {
        return Extraction::Skipped(SkipReason::NoConnective);
    }
    let Some(chosen) = matches
        .iter()
        .find(|m| !is_sentence_start(text, m.byte_start))
    else {
        return Extraction::Skipped(SkipReason::SentenceInitial);
    };
    let effect = text[..chosen.byte_start].trim();
    let cause = text[chosen.byte_end..].trim();
    if is_blank(effect) || is_blank(cause) {
        return Extraction::Skipped(SkipReason::EmptySubpart);
    }
    let flags = if matches.len() > 1 {
        vec![UnitFlag::MultiConnective]
    } else {
        Vec::new()
    };
    Extraction::Unit(CausalUnit {
        message_id: message_id.to_string(),
        connective: chosen.connective,
        cause_text: cause.to_string(),
        effect_text: effect.to_string(),
        connective_offset: chosen.span.start,
        flags,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub messages: usize,
    pub units: usize,
    pub by_connective: BTreeMap<Connective, usize>,
    pub skipped: BTreeMap<SkipReason, usize>,
    pub multi_connective: usize,
}

impl ExtractionReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }
}

/// One entry in the skip log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub message_id: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default)]
pub struct ExtractionOutput {
    pub units: Vec<CausalUnit>,
    pub skips: Vec<Skip>,
    pub report: ExtractionReport,
}

/// Runs extraction over a message set in file order.
pub fn extract_all(set: &MessageSet) -> ExtractionOutput {
    let mut out = ExtractionOutput {
        report: empty_report(),
        ..Default::default()
    };
    for m in set {
        out.report.messages += 1;
        match extract_unit(m) {
            Extraction::Unit(u) => {
                out.report.units += 1;
                *out.report.by_connective.entry(u.connective).or_default() += 1;
                if u.is_multi_connective() {
                    out.report.multi_connective += 1;
                }
                out.units.push(u);
            }
            Extraction::Skipped(reason) => {
                *out.report.skipped.entry(reason).or_default() += 1;
                out.skips.push(Skip {
                    message_id: m.id.clone(),
                    reason,
                });
            }
        }
    }
    out
}

pub fn extraction_report(set: &MessageSet) -> ExtractionReport {
    extract_all(set).report
}

fn empty_report() -> ExtractionReport {
    ExtractionReport {
        by_connective: Connective::ALL.iter().map(|c| (*c, 0)).collect(),
        skipped: SkipReason::ALL.iter().map(|r| (*r, 0)).collect(),
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(text: &str) -> Extraction {
        extract_from_text("m", text)
    }

    #[test]
    fn single_match() {
        let m = find_connectives("Site closed due to weather");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].connective, Connective::DueTo);
        assert_eq!(m[0].span, Span { start: 12, end: 18 });
    }

    #[test]
    fn word_boundaries_block_partial_matches() {
        assert!(find_connectives("Overdue topics").is_empty());
        assert!(find_connectives("becauseof the rain").is_empty());
    }

    #[test]
    fn multiple_matches_left_to_right() {
        let m = find_connectives("closed because of snow caused by the storm");
        let kinds: Vec<_> = m.iter().map(|x| x.connective).collect();
        assert_eq!(kinds, [Connective::BecauseOf, Connective::CausedBy]);
        assert!(m[0].span.start < m[1].span.start);
    }

    #[test]
    fn spans_are_character_offsets() {
        let text = "Café fermé due to grève";
        let m = find_connectives(text);
        let s: String = text
            .chars()
            .skip(m[0].span.start)
            .take(m[0].span.end - m[0].span.start)
            .collect();
        assert_eq!(s, "due to");
        assert_eq!(m[0].span.start, 11);
    }

    #[test]
    fn case_insensitive() {
        assert_eq!(find_connectives("Closed DUE TO storms")[0].connective, Connective::DueTo);
        assert_eq!(find_connectives("Delays Caused By ice")[0].connective, Connective::CausedBy);
    }

    #[test]
    fn shelter_example() {
        let Extraction::Unit(u) =
            split("Square Toe County shelters are closed until further notice due to COVID-19")
        else {
            panic!("expected a unit");
        };
        assert_eq!(u.effect_text, "Square Toe County shelters are closed until further notice");
        assert_eq!(u.cause_text, "COVID-19");
        assert!(u.flags.is_empty());
    }

    #[test]
    fn sentence_initial_is_skipped() {
        assert_eq!(
            split("Due to COVID-19, shelters are closed"),
            Extraction::Skipped(SkipReason::SentenceInitial)
        );
        assert_eq!(
            split("Stay home. Because of the storm, roads are closed."),
            Extraction::Skipped(SkipReason::SentenceInitial)
        );
        assert_eq!(
            split("\"Stay home!\" (Due to ice) roads closed"),
            Extraction::Unit(CausalUnit {
                message_id: "m".into(),
                connective: Connective::DueTo,
                cause_text: "ice) roads closed".into(),
                effect_text: "\"Stay home!\" (".into(),
                connective_offset: 14,
                flags: vec![],
            })
        );
    }

    #[test]
    fn closing_quote_before_connective_counts_as_sentence_end() {
        assert_eq!(
            split("He said \"stay in.\" Due to ice, roads closed"),
            Extraction::Skipped(SkipReason::SentenceInitial)
        );
    }

    #[test]
    fn no_connective() {
        assert_eq!(split("Stay safe this weekend!"), Extraction::Skipped(SkipReason::NoConnective));
    }

    #[test]
    fn first_eligible_connective_wins_and_is_flagged() {
        let Extraction::Unit(u) = split("Due to rain, events are cancelled because of flooding")
        else {
            panic!()
        };
        assert_eq!(u.connective, Connective::BecauseOf);
        assert_eq!(u.effect_text, "Due to rain, events are cancelled");
        assert_eq!(u.cause_text, "flooding");
        assert!(u.is_multi_connective());
    }

    #[test]
    fn empty_side_is_skipped() {
        assert_eq!(split("Closed due to"), Extraction::Skipped(SkipReason::EmptySubpart));
    }

    #[test]
    fn report_counts() {
        use crate::corpus::read_jsonl;
        let mk = |id: &str, text: &str| {
            format!(
                r#"{{"id":"{id}","text":"{text}","timestamp":"2020-03-01T12:00:00Z","account_id":"a","account_role":"mayor","follower_count":1,"retransmission_count":0,"is_retransmission":false}}"#
            )
        };
        let lines = [
            mk("1", "Closed due to snow"),
            mk("2", "Hello"),
            mk("3", "Good morning"),
        ]
        .join("\n");
        let set = read_jsonl(lines.as_bytes()).unwrap().messages;
        let r = extraction_report(&set);
        assert_eq!(r.units, 1);
        assert_eq!(r.skipped[&SkipReason::NoConnective], 2);
        assert_eq!(r.units + r.skipped_total(), r.messages);

        let empty = extraction_report(&MessageSet::default());
        assert_eq!(empty.units, 0);
        assert_eq!(empty.messages, 0);
        assert!(empty.skipped.values().all(|v| *v == 0));
    }
}
