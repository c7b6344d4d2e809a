//! Seeded synthetic corpus for tests and demos.
//!
//! Messages are assembled from a phrase bank that the bundled demo lexicon
//! codes unambiguously, so the concept of every subpart is known by
//! construction. A fixed set of narratives is planted with known weights on
//! top of a sparse background, and retransmission counts follow an NB2
//! process whose coefficients are listed in [`PlantedModel`].

use chrono::{Datelike, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{AccountRole, Epoch, Message, MessageSet, RoleGroup};
use crate::regression::nb::sample_nb;

/// Phrases per concept, valid on either side of a connective.
pub const PHRASES: &[(&str, &[&str])] = &[
    ("Primary Threat", &["COVID-19", "the coronavirus pandemic", "the virus"]),
    ("Susceptibility", &["underlying health conditions"]),
    ("Severity/Impact", &["rising hospitalizations", "a surge in cases"]),
    ("Testing", &["testing demand"]),
    ("Deaths", &["three deaths in the county"]),
    ("Losses", &["job losses"]),
    ("Actions/Efficacy", &["social distancing"]),
    ("Vaccination", &["vaccine supply"]),
    ("Travel", &["air travel"]),
    ("Restrictions", &["new capacity limits"]),
    ("Isolate", &["quarantine rules"]),
    ("Spread", &["community spread"]),
    ("Economic Impacts", &["the economic downturn"]),
    ("Financial Struggle", &["financial hardship"]),
    ("Need Assistance", &["families in need"]),
    ("Provide Assistance", &["relief funds"]),
    ("Data", &["a reporting backlog"]),
    ("Disruptions", &["services are suspended", "the office is closed", "the meeting is postponed"]),
    ("Change of Mode", &["services move online", "meetings are held virtually"]),
    ("Official Response", &["the emergency declaration"]),
    ("Mental", &["stress and anxiety"]),
    ("Food", &["food insecurity"]),
    ("Blood", &["a blood shortage"]),
    ("Weather", &["severe storms", "extreme heat"]),
    ("Infrastructure", &["power outages"]),
    ("Preparedness", &["emergency preparedness"]),
    ("Traffic", &["a crash on the highway"]),
    ("Illness/Injury", &["flu season"]),
    ("Non-COVID Deaths", &["non-COVID deaths"]),
    ("Drugs", &["opioid overdoses"]),
    ("Other Secondary Threats", &["a gas leak"]),
    ("Gratitude", &["community generosity"]),
    ("Resilience", &["our resilience"]),
    ("Challenges", &["these difficult times"]),
    ("Demographics", &["older adults"]),
    ("You", &["you"]),
    ("Other Actors", &["our staff"]),
    ("Events", &["the holiday parade"]),
    ("Off-Topic", &["early voting"]),
];

/// Planted (cause, effect, weight) narratives.
pub const PLANTED_NARRATIVES: &[(&str, &str, u32)] = &[
    ("Primary Threat", "Disruptions", 30),
    ("Primary Threat", "Change of Mode", 18),
    ("Weather", "Disruptions", 12),
    ("Primary Threat", "Economic Impacts", 8),
    ("Spread", "Restrictions", 7),
    ("Primary Threat", "Deaths", 6),
    ("Restrictions", "Disruptions", 6),
    ("Infrastructure", "Disruptions", 5),
    ("Economic Impacts", "Financial Struggle", 4),
    ("Weather", "Infrastructure", 4),
];

/// Fallback texts that yield no coded unit.
const NO_CONNECTIVE: &[&str] = &[
    "Stay safe and check on your neighbors this weekend.",
    "Our office hours are 8 to 5 on weekdays.",
    "Sign up for local alerts on our website.",
];
const SENTENCE_INITIAL: &[&str] = &[
    "Due to severe storms, the office is closed.",
    "Because of COVID-19, services move online.",
];
const UNCODABLE: &[&str] = &[
    "The schedule shifted due to unforeseen circumstances.",
    "Plans changed because of a scheduling conflict.",
];

const CONNECTIVES: [&str; 3] = ["due to", "because of", "caused by"];

/// Coefficients of the planted retransmission process
/// `log μ = intercept + follower·log(1+followers) + primary·[cause is Primary Threat]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub intercept: f64,
    pub follower: f64,
    pub primary_cause: f64,
    pub theta: f64,
}

impl Default for PlantedModel {
    fn default() -> Self {
        PlantedModel {
            intercept: -3.0,
            follower: 0.45,
            primary_cause: 0.4,
            theta: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub messages: usize,
    pub start: Epoch,
    pub months: u32,
    pub accounts_per_role: usize,
    /// Share of messages drawn from [`PLANTED_NARRATIVES`]; the rest of the
    /// coded messages draw from a sparse background graph.
    pub planted_share: f64,
    /// Share of messages that carry no usable causal unit.
    pub noise_share: f64,
    /// Share of messages that are retransmissions of earlier ones.
    pub retransmission_share: f64,
    pub model: PlantedModel,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            messages: 3000,
            start: Epoch::default(),
            months: 15,
            accounts_per_role: 6,
            planted_share: 0.6,
            noise_share: 0.15,
            retransmission_share: 0.08,
            model: PlantedModel::default(),
        }
    }
}

struct Account {
    id: String,
    role: AccountRole,
    followers: u64,
}

fn phrases_of(concept: &str) -> &'static [&'static str] {
    PHRASES
        .iter()
        .find(|(c, _)| *c == concept)
        .map(|(_, p)| *p)
        .unwrap_or(&[])
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Generates the corpus. Identical configs give identical message sets.
pub fn generate(config: &SynthConfig) -> MessageSet {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let followers = LogNormal::new(7.5, 1.6).expect("valid lognormal");
    let mut accounts = Vec::new();
    for role in AccountRole::ALL {
        for k in 0..config.accounts_per_role {
            accounts.push(Account {
                id: format!("{}_{:02}", role.as_str(), k + 1),
                role,
                followers: Distribution::<f64>::sample(&followers, &mut rng).round() as u64,
            });
        }
    }
    let codable: Vec<&str> = PHRASES
        .iter()
        .filter(|(_, p)| !p.is_empty())
        .map(|(c, _)| *c)
        .collect();
    let planted_total: u32 = PLANTED_NARRATIVES.iter().map(|n| n.2).sum();
    let start = config.start.start();
    let mut messages: Vec<Message> = Vec::with_capacity(config.messages);

    for i in 0..config.messages {
        // Spread messages evenly across months so every month is populated.
        let month = (i as u32) % config.months;
        let month_start = add_months(start, month);
        let month_end = add_months(start, month + 1);
        let span = (month_end - month_start).num_seconds();
        let timestamp = month_start + Duration::seconds(rng.gen_range(0..span));
        let account = &accounts[rng.gen_range(0..accounts.len())];
        let id = format!("m{:05}", i + 1);

        if !messages.is_empty() && rng.gen_bool(config.retransmission_share) {
            let source = messages[rng.gen_range(0..messages.len())].clone();
            messages.push(Message {
                id,
                text: source.text,
                timestamp: timestamp.max(source.timestamp),
                account_id: account.id.clone(),
                account_role: account.role,
                follower_count: account.followers,
                retransmission_count: 0,
                is_retransmission: true,
            });
            continue;
        }

        let (text, cause) = if rng.gen_bool(config.noise_share) {
            let bank = match rng.gen_range(0..3) {
                0 => NO_CONNECTIVE,
                1 => SENTENCE_INITIAL,
                _ => UNCODABLE,
            };
            (bank.choose(&mut rng).expect("non-empty").to_string(), None)
        } else {
            let (cause, effect) = if rng.gen_bool(config.planted_share) {
                pick_planted(&mut rng, planted_total, account.role.group())
            } else {
                background_pair(&mut rng, &codable)
            };
            let effect_text = phrases_of(effect).choose(&mut rng).expect("phrase");
            let cause_text = phrases_of(cause).choose(&mut rng).expect("phrase");
            let connective = CONNECTIVES.choose(&mut rng).expect("non-empty");
            (
                format!("{} {connective} {cause_text}.", capitalize(effect_text)),
                Some(cause),
            )
        };
        let m = &config.model;
        let eta = m.intercept
            + m.follower * (account.followers as f64).ln_1p()
            + if cause == Some("Primary Threat") { m.primary_cause } else { 0.0 };
        let retransmission_count = sample_nb(eta.exp(), m.theta, &mut rng);
        messages.push(Message {
            id,
            text,
            timestamp,
            account_id: account.id.clone(),
            account_role: account.role,
            follower_count: account.followers,
            retransmission_count,
            is_retransmission: false,
        });
    }
    MessageSet::new(messages).expect("generated ids are unique")
}

/// Background narrative: each cause links to at most three fixed effects,
/// which keeps the combined network sparse.
fn background_pair<R: Rng>(rng: &mut R, codable: &[&'static str]) -> (&'static str, &'static str) {
    let n = codable.len();
    let c = rng.gen_range(0..n);
    let e = (7 * c + 1 + 5 * rng.gen_range(0..3)) % n;
    (codable[c], codable[e])
}

/// Emergency-management accounts lean toward weather and infrastructure
/// narratives; everyone else draws from the full planted list.
fn pick_planted<R: Rng>(rng: &mut R, total: u32, group: RoleGroup) -> (&'static str, &'static str) {
    if group == RoleGroup::EmergencyManagement && rng.gen_bool(0.3) {
        let secondary: Vec<_> = PLANTED_NARRATIVES
            .iter()
            .filter(|(c, _, _)| matches!(*c, "Weather" | "Infrastructure"))
            .collect();
        let n = secondary.choose(rng).expect("non-empty");
        return (n.0, n.1);
    }
    let mut ticket = rng.gen_range(0..total);
    for (c, e, w) in PLANTED_NARRATIVES {
        if ticket < *w {
            return (c, e);
        }
        ticket -= w;
    }
    unreachable!("ticket below total weight")
}

fn add_months(start: chrono::DateTime<Utc>, months: u32) -> chrono::DateTime<Utc> {
    let total = start.month0() + months;
    let year = start.year() + (total / 12) as i32;
    Utc.with_ymd_and_hms(year, total % 12 + 1, 1, 0, 0, 0)
        .single()
        .expect("first of month exists")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{extract_unit, Extraction};
    use crate::lexicon::{code_subpart, code_unit, Coding, Lexicon, Side};

    #[test]
    fn every_phrase_codes_to_its_concept() {
        let lex = Lexicon::demo();
        for (concept, phrases) in PHRASES {
            for p in *phrases {
                for side in [Side::Cause, Side::Effect] {
                    assert_eq!(code_subpart(p, &lex, side), Some(*concept), "{p:?} on {side:?}");
                }
                assert_eq!(code_subpart(&capitalize(p), &lex, Side::Effect), Some(*concept));
            }
        }
    }

    #[test]
    fn uncodable_texts_stay_uncoded() {
        let lex = Lexicon::demo();
        for text in UNCODABLE {
            let m = Message {
                id: "x".into(),
                text: text.to_string(),
                timestamp: Utc.with_ymd_and_hms(2020, 5, 1, 0, 0, 0).unwrap(),
                account_id: "a".into(),
                account_role: AccountRole::Mayor,
                follower_count: 1,
                retransmission_count: 0,
                is_retransmission: false,
            };
            let Extraction::Unit(u) = extract_unit(&m) else { panic!("{text}") };
            assert!(matches!(code_unit(&u, &lex), Coding::Uncoded(_)), "{text}");
        }
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = SynthConfig {
            messages: 200,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&cfg), generate(&cfg));
        let other = generate(&SynthConfig { seed: 7, ..cfg.clone() });
        assert_ne!(generate(&cfg), other);
    }

    #[test]
    fn covers_every_month_and_role() {
        let set = generate(&SynthConfig::default());
        let epoch = Epoch::default();
        let months: std::collections::BTreeSet<u32> = set
            .iter()
            .map(|m| crate::corpus::month_bin(&m.timestamp, epoch).unwrap().value())
            .collect();
        assert_eq!(months, (1..=15).collect());
        for role in AccountRole::ALL {
            assert!(set.iter().any(|m| m.account_role == role));
        }
    }
}
