//! Rule lexicon: ordered regex rules mapping subpart text to concepts, and
//! a concept → theme map.
//!
//! Lexicon files are TOML:
//!
//! ```toml
//! theme_list = ["Primary Threat", "Transitions and Shifts"]
//!
//! [reference_themes]
//! cause = "Primary Threat"
//! effect = "Transitions and Shifts"
//!
//! [[themes]]
//! concept = "Primary Threat"
//! theme = "Primary Threat"
//!
//! [[themes]]
//! concept = "Disruptions"
//! theme = "Transitions and Shifts"
//!
//! [[rules]]
//! pattern = "covid|coronavirus"
//! concept = "Primary Threat"
//! side = "cause"        # cause | effect | both (default both)
//! priority = 0          # optional; defaults to the rule's position
//! ```
//!
//! The order of `[[themes]]` entries fixes the concept (node) order used by
//! every network built from the lexicon.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::CausalUnit;

pub const DEFAULT_CAUSE_REFERENCE: &str = "Secondary Threats";
pub const DEFAULT_EFFECT_REFERENCE: &str = "Disruptions";

const DEMO_LEXICON: &str = include_str!("../data/demo_lexicon.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Cause,
    Effect,
    #[default]
    Both,
}

impl Side {
    fn admits(self, side: Side) -> bool {
        self == Side::Both || self == side
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Cause => "cause",
            Side::Effect => "effect",
            Side::Both => "both",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LexiconRule {
    pub pattern: String,
    pub concept: String,
    pub side: Side,
    pub priority: i64,
    regex: Regex,
}

impl LexiconRule {
    pub fn new(pattern: &str, concept: &str, side: Side, priority: i64) -> Result<Self> {
        let regex = compile(pattern).map_err(|source| Error::InvalidPattern {
            rule: 0,
            pattern: pattern.to_string(),
            source,
        })?;
        Ok(LexiconRule {
            pattern: pattern.to_string(),
            concept: concept.to_string(),
            side,
            priority,
            regex,
        })
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.regex.is_match(text)
    }
}

fn compile(pattern: &str) -> std::result::Result<Regex, regex::Error> {
    RegexBuilder::new(pattern).case_insensitive(true).build()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceThemes {
    pub cause: String,
    pub effect: String,
}

impl Default for ReferenceThemes {
    fn default() -> Self {
        ReferenceThemes {
            cause: DEFAULT_CAUSE_REFERENCE.to_string(),
            effect: DEFAULT_EFFECT_REFERENCE.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    /// Rules in precedence order (lowest priority value first).
    rules: Vec<LexiconRule>,
    concepts: Vec<String>,
    theme_map: HashMap<String, String>,
    themes: Vec<String>,
    reference_themes: ReferenceThemes,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    #[serde(default)]
    theme_list: Option<Vec<String>>,
    #[serde(default)]
    reference_themes: Option<ReferenceThemes>,
    #[serde(default)]
    themes: Vec<ThemeEntry>,
    #[serde(default)]
    rules: Vec<RuleEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThemeEntry {
    concept: String,
    theme: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    pattern: String,
    concept: String,
    #[serde(default)]
    side: Side,
    priority: Option<i64>,
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::from_toml(&text)
}

impl Lexicon {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: LexiconFile = toml::from_str(text)?;

        let mut theme_map = HashMap::new();
        let mut concepts = Vec::new();
        for entry in &file.themes {
            if entry.concept.trim().is_empty() {
                return Err(Error::Lexicon("empty concept name in themes".into()));
            }
            if theme_map
                .insert(entry.concept.clone(), entry.theme.clone())
                .is_some()
            {
                return Err(Error::Lexicon(format!(
                    "concept {} mapped more than once",
                    entry.concept
                )));
            }
            concepts.push(entry.concept.clone());
        }

        let themes = match file.theme_list {
            Some(list) => {
                for entry in &file.themes {
                    if !list.contains(&entry.theme) {
                        return Err(Error::Lexicon(format!(
                            "theme {} of concept {} is not in theme_list",
                            entry.theme, entry.concept
                        )));
                    }
                }
                list
            }
            None => {
                let mut list: Vec<String> = Vec::new();
                for entry in &file.themes {
                    if !list.contains(&entry.theme) {
                        list.push(entry.theme.clone());
                    }
                }
                list
            }
        };

        let reference_themes = match file.reference_themes {
            Some(r) => {
                for t in [&r.cause, &r.effect] {
                    if !themes.contains(t) {
                        return Err(Error::Lexicon(format!(
                            "reference theme {t} is not a declared theme"
                        )));
                    }
                }
                r
            }
            None => ReferenceThemes::default(),
        };

        let mut rules = Vec::with_capacity(file.rules.len());
        let mut keys = HashSet::new();
        for (i, r) in file.rules.iter().enumerate() {
            if r.concept.trim().is_empty() {
                return Err(Error::Lexicon(format!("rule {i} has an empty concept")));
            }
            let regex = compile(&r.pattern).map_err(|source| Error::InvalidPattern {
                rule: i,
                pattern: r.pattern.clone(),
                source,
            })?;
            if !theme_map.contains_key(&r.concept) {
                return Err(Error::UnmappedConcept(r.concept.clone()));
            }
            if !keys.insert((r.pattern.clone(), r.side)) {
                return Err(Error::Lexicon(format!(
                    "duplicate rule {i}: pattern {:?} with side {}",
                    r.pattern, r.side
                )));
            }
            rules.push(LexiconRule {
                pattern: r.pattern.clone(),
                concept: r.concept.clone(),
                side: r.side,
                priority: r.priority.unwrap_or(i as i64),
                regex,
            });
        }
        // Stable: equal priorities keep file order.
        rules.sort_by_key(|r| r.priority);

        Ok(Lexicon {
            rules,
            concepts,
            theme_map,
            themes,
            reference_themes,
        })
    }

    /// The bundled demonstration lexicon (39 concepts in 13 themes).
    pub fn demo() -> Lexicon {
        Lexicon::from_toml(DEMO_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn demo_source() -> &'static str {
        DEMO_LEXICON
    }

    pub fn rules(&self) -> &[LexiconRule] {
        &self.rules
    }

    /// Concepts in declaration order; this is the node order of every network.
    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn themes(&self) -> &[String] {
        &self.themes
    }

    pub fn theme_of(&self, concept: &str) -> Option<&str> {
        self.theme_map.get(concept).map(String::as_str)
    }

    pub fn reference_themes(&self) -> &ReferenceThemes {
        &self.reference_themes
    }

    pub fn with_reference_themes(mut self, reference: ReferenceThemes) -> Result<Self> {
        for t in [&reference.cause, &reference.effect] {
            if !self.themes.contains(t) {
                return Err(Error::Lexicon(format!(
                    "reference theme {t} is not a declared theme"
                )));
            }
        }
        self.reference_themes = reference;
        Ok(self)
    }

    /// Returns a copy with `rule` placed ahead of every existing rule.
    pub fn with_rule_prepended(&self, mut rule: LexiconRule) -> Result<Self> {
        if !self.theme_map.contains_key(&rule.concept) {
            return Err(Error::UnmappedConcept(rule.concept));
        }
        let mut out = self.clone();
        rule.priority = out.rules.first().map_or(0, |r| r.priority) - 1;
        out.rules.insert(0, rule);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncodedSides {
    pub cause: bool,
    pub effect: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedUnit {
    #[serde(flatten)]
    pub unit: CausalUnit,
    pub cause_concept: String,
    pub effect_concept: String,
    pub cause_theme: String,
    pub effect_theme: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Coding {
    Coded(CodedUnit),
    Uncoded(UncodedSides),
}

/// First rule (in precedence order) admitting `side` whose pattern matches.
pub fn code_subpart<'l>(text: &str, lexicon: &'l Lexicon, side: Side) -> Option<&'l str> {
    lexicon
        .rules
        .iter()
        .find(|r| r.side.admits(side) && r.is_match(text))
        .map(|r| r.concept.as_str())
}

pub fn code_unit(unit: &CausalUnit, lexicon: &Lexicon) -> Coding {
    let cause = code_subpart(&unit.cause_text, lexicon, Side::Cause);
    let effect = code_subpart(&unit.effect_text, lexicon, Side::Effect);
    match (cause, effect) {
        (Some(c), Some(e)) => Coding::Coded(CodedUnit {
            unit: unit.clone(),
            cause_concept: c.to_string(),
            effect_concept: e.to_string(),
            cause_theme: lexicon.theme_map[c].clone(),
            effect_theme: lexicon.theme_map[e].clone(),
        }),
        (c, e) => Coding::Uncoded(UncodedSides {
            cause: c.is_none(),
            effect: e.is_none(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncodedUnit {
    pub message_id: String,
    pub uncoded: UncodedSides,
}

#[derive(Debug, Clone, Default)]
pub struct CodingOutput {
    pub coded: Vec<CodedUnit>,
    pub uncoded: Vec<UncodedUnit>,
}

pub fn code_all(units: &[CausalUnit], lexicon: &Lexicon) -> CodingOutput {
    let mut out = CodingOutput::default();
    for u in units {
        match code_unit(u, lexicon) {
            Coding::Coded(c) => out.coded.push(c),
            Coding::Uncoded(sides) => out.uncoded.push(UncodedUnit {
                message_id: u.message_id.clone(),
                uncoded: sides,
            }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncodedSubpart {
    pub message_id: String,
    pub side: Side,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncodedSample {
    pub items: Vec<UncodedSubpart>,
    pub requested: usize,
    pub pool_size: usize,
    /// Set when `requested` exceeded the pool and the whole pool was returned.
    pub truncated: bool,
}

/// Uniform sample without replacement of subparts the lexicon fails to code,
/// for manual keyword review.
pub fn sample_uncoded(
    units: &[CausalUnit],
    lexicon: &Lexicon,
    n: usize,
    seed: u64,
) -> UncodedSample {
    let mut pool = Vec::new();
    for u in units {
        if code_subpart(&u.cause_text, lexicon, Side::Cause).is_none() {
            pool.push(UncodedSubpart {
                message_id: u.message_id.clone(),
                side: Side::Cause,
                text: u.cause_text.clone(),
            });
        }
        if code_subpart(&u.effect_text, lexicon, Side::Effect).is_none() {
            pool.push(UncodedSubpart {
                message_id: u.message_id.clone(),
                side: Side::Effect,
                text: u.effect_text.clone(),
            });
        }
    }
    let pool_size = pool.len();
    let truncated = n > pool_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (picked, _) = pool.partial_shuffle(&mut rng, n.min(pool_size));
    UncodedSample {
        items: picked.to_vec(),
        requested: n,
        pool_size,
        truncated,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptFrequency {
    pub concept: String,
    pub theme: String,
    pub as_cause: usize,
    pub as_effect: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingReport {
    pub units: usize,
    pub coded: usize,
    /// `None` when there are no units.
    pub coverage: Option<f64>,
    pub concepts: Vec<ConceptFrequency>,
}

pub fn coding_report(units: &[CausalUnit], lexicon: &Lexicon) -> CodingReport {
    let coded = code_all(units, lexicon).coded;
    coding_report_from(units.len(), &coded, lexicon)
}

pub fn coding_report_from(total_units: usize, coded: &[CodedUnit], lexicon: &Lexicon) -> CodingReport {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for c in coded {
        counts.entry(&c.cause_concept).or_default().0 += 1;
        counts.entry(&c.effect_concept).or_default().1 += 1;
    }
    let concepts = lexicon
        .concepts()
        .iter()
        .filter_map(|concept| {
            counts.get(concept.as_str()).map(|&(as_cause, as_effect)| ConceptFrequency {
                concept: concept.clone(),
                theme: lexicon.theme_map[concept].clone(),
                as_cause,
                as_effect,
            })
        })
        .collect();
    CodingReport {
        units: total_units,
        coded: coded.len(),
        coverage: (total_units > 0).then(|| coded.len() as f64 / total_units as f64),
        concepts,
    }
}
