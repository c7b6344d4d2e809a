//! Message-level feature table for the retransmission model.

use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, Timelike};
use serde::{Deserialize, Serialize};

use crate::corpus::{month_bin, Epoch, MessageSet, MonthIndex};
use crate::error::{Error, Result};
use crate::lexicon::{CodedUnit, Lexicon, ReferenceThemes};
use crate::network::{ConceptNet, Stratum};
use crate::stats::Digraph;

use super::Design;

/// Which months count toward a message's cumulative concept usage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CumulativeWindow {
    /// Months strictly before the message's month.
    #[default]
    Before,
    /// Months up to and including the message's month.
    Through,
}

impl std::str::FromStr for CumulativeWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "before" => Ok(CumulativeWindow::Before),
            "through" => Ok(CumulativeWindow::Through),
            other => Err(Error::Config(format!("unknown cumulative window {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureOptions {
    pub epoch: Epoch,
    pub window: CumulativeWindow,
    /// Drop retransmitted messages before building rows.
    pub originals_only: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            epoch: Epoch::default(),
            window: CumulativeWindow::Before,
            originals_only: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub message_id: String,
    pub y: u64,
    pub cause_concept: String,
    pub effect_concept: String,
    /// In-degree of the cause concept in the dichotomous total network.
    pub cause_in_degree: u32,
    /// Out-degree of the effect concept in the dichotomous total network.
    pub effect_out_degree: u32,
    /// 1 when some third concept `k` has `cause → k → effect`.
    pub transitive_closure: u8,
    pub log_cum_cause_usage: f64,
    pub log_cum_effect_usage: f64,
    pub cause_theme: String,
    pub effect_theme: String,
    pub log_follower_count: f64,
    /// 0 = Sunday … 6 = Saturday.
    pub day_of_week: u8,
    pub hour_utc: u8,
    pub months_elapsed: u32,
}

/// Row counts at each exclusion step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funnel {
    pub messages: usize,
    pub dropped_retransmissions: usize,
    pub dropped_without_coded_unit: usize,
    pub dropped_pre_epoch: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    pub funnel: Funnel,
    /// Declared themes in lexicon order.
    pub themes: Vec<String>,
    pub reference_themes: ReferenceThemes,
}

/// Builds one row per message that carries a coded unit.
///
/// `total` is read as a dichotomous, loopless digraph (any positive
/// off-diagonal cell is an arc). `monthly` must be the valued month strata
/// covering every month in which a retained message was posted.
pub fn build_features(
    coded: &[CodedUnit],
    messages: &MessageSet,
    total: &ConceptNet,
    monthly: &[ConceptNet],
    lexicon: &Lexicon,
    options: &FeatureOptions,
) -> Result<FeatureTable> {
    let reference = lexicon.reference_themes().clone();
    for t in [&reference.cause, &reference.effect] {
        if !lexicon.themes().contains(t) {
            return Err(Error::Lexicon(format!(
                "reference theme {t} is not a declared theme"
            )));
        }
    }
    let graph = Digraph::from_net(total);
    let n = graph.n();
    let in_deg: Vec<u32> = (0..n).map(|v| graph.in_degree(v) as u32).collect();
    let out_deg: Vec<u32> = (0..n).map(|v| graph.out_degree(v) as u32).collect();

    let mut month_nets: BTreeMap<MonthIndex, &ConceptNet> = BTreeMap::new();
    for net in monthly {
        let Stratum::Month(m) = net.stratum else {
            return Err(Error::Invalid(format!("{} is not a month stratum", net.stratum)));
        };
        if !net.same_nodes(total) {
            return Err(Error::MismatchedNodes {
                stratum: net.stratum.to_string(),
            });
        }
        month_nets.insert(m, net);
    }
    // cum[m][c] = usage of concept c over months ≤ m, for every month present.
    let mut cum_cause: BTreeMap<MonthIndex, Vec<u64>> = BTreeMap::new();
    let mut cum_effect: BTreeMap<MonthIndex, Vec<u64>> = BTreeMap::new();
    let mut run_c = vec![0u64; n];
    let mut run_e = vec![0u64; n];
    for (m, net) in &month_nets {
        for c in 0..n {
            run_c[c] += net.out_strength(c);
            run_e[c] += net.in_strength(c);
        }
        cum_cause.insert(*m, run_c.clone());
        cum_effect.insert(*m, run_e.clone());
    }
    let first = month_nets.keys().next().map_or(0, |m| m.value());
    let last = month_nets.keys().next_back().map_or(0, |m| m.value());
    let zeros = vec![0u64; n];
    let usage_at = |table: &BTreeMap<MonthIndex, Vec<u64>>, m: MonthIndex| -> Vec<u64> {
        let upto = match options.window {
            CumulativeWindow::Before => m.value().checked_sub(1).and_then(MonthIndex::new),
            CumulativeWindow::Through => Some(m),
        };
        upto.and_then(|u| table.range(..=u).next_back().map(|(_, v)| v.clone()))
            .unwrap_or_else(|| zeros.clone())
    };

    let by_message: HashMap<&str, &CodedUnit> = coded
        .iter()
        .map(|c| (c.unit.message_id.as_str(), c))
        .collect();
    let index: HashMap<&str, usize> = total
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut funnel = Funnel::default();
    let mut rows = Vec::new();
    for msg in messages {
        funnel.messages += 1;
        if options.originals_only && msg.is_retransmission {
            funnel.dropped_retransmissions += 1;
            continue;
        }
        let Some(unit) = by_message.get(msg.id.as_str()) else {
            funnel.dropped_without_coded_unit += 1;
            continue;
        };
        let Ok(month) = month_bin(&msg.timestamp, options.epoch) else {
            funnel.dropped_pre_epoch += 1;
            continue;
        };
        if month_nets.is_empty() || month.value() < first || month.value() > last {
            return Err(Error::MonthOutOfRange {
                message_id: msg.id.clone(),
                month: month.value(),
                first,
                last,
            });
        }
        let ci = *index
            .get(unit.cause_concept.as_str())
            .ok_or_else(|| Error::UnmappedConcept(unit.cause_concept.clone()))?;
        let ej = *index
            .get(unit.effect_concept.as_str())
            .ok_or_else(|| Error::UnmappedConcept(unit.effect_concept.clone()))?;
        let closure = (0..n).any(|k| k != ci && k != ej && graph.has_arc(ci, k) && graph.has_arc(k, ej));
        let cause_usage = usage_at(&cum_cause, month)[ci];
        let effect_usage = usage_at(&cum_effect, month)[ej];
        rows.push(FeatureRow {
            message_id: msg.id.clone(),
            y: msg.retransmission_count,
            cause_concept: unit.cause_concept.clone(),
            effect_concept: unit.effect_concept.clone(),
            cause_in_degree: in_deg[ci],
            effect_out_degree: out_deg[ej],
            transitive_closure: u8::from(closure),
            log_cum_cause_usage: (cause_usage as f64).ln_1p(),
            log_cum_effect_usage: (effect_usage as f64).ln_1p(),
            cause_theme: unit.cause_theme.clone(),
            effect_theme: unit.effect_theme.clone(),
            log_follower_count: (msg.follower_count as f64).ln_1p(),
            day_of_week: msg.timestamp.weekday().num_days_from_sunday() as u8,
            hour_utc: msg.timestamp.hour() as u8,
            months_elapsed: month.value(),
        });
    }
    funnel.rows = rows.len();
    Ok(FeatureTable {
        rows,
        funnel,
        themes: lexicon.themes().to_vec(),
        reference_themes: reference,
    })
}

/// A predictor group of the retransmission model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    CauseInDegree,
    EffectOutDegree,
    LogFollowerCount,
    TransitiveClosure,
    LogCumCauseUsage,
    LogCumEffectUsage,
    CauseTheme,
    EffectTheme,
    DayOfWeek,
    HourUtc,
    MonthsElapsed,
}

impl Term {
    /// Period and trend controls, reported in a separate block.
    pub fn is_control(self) -> bool {
        matches!(self, Term::DayOfWeek | Term::HourUtc | Term::MonthsElapsed)
    }
}

impl std::str::FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = match s.trim() {
            "cause_in_degree" => Term::CauseInDegree,
            "effect_out_degree" => Term::EffectOutDegree,
            "log_follower_count" => Term::LogFollowerCount,
            "transitive_closure" => Term::TransitiveClosure,
            "log_cum_cause_usage" => Term::LogCumCauseUsage,
            "log_cum_effect_usage" => Term::LogCumEffectUsage,
            "cause_theme" => Term::CauseTheme,
            "effect_theme" => Term::EffectTheme,
            "day_of_week" => Term::DayOfWeek,
            "hour_utc" => Term::HourUtc,
            "months_elapsed" => Term::MonthsElapsed,
            other => return Err(Error::Config(format!("unknown model term {other:?}"))),
        };
        Ok(t)
    }
}

/// Predictor selection. An intercept is always included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub terms: Vec<Term>,
}

impl Formula {
    pub fn intercept_only() -> Self {
        Formula { terms: Vec::new() }
    }
}

impl Default for Formula {
    fn default() -> Self {
        Formula {
            terms: vec![
                Term::CauseInDegree,
                Term::EffectOutDegree,
                Term::LogFollowerCount,
                Term::TransitiveClosure,
                Term::LogCumCauseUsage,
                Term::LogCumEffectUsage,
                Term::CauseTheme,
                Term::EffectTheme,
                Term::DayOfWeek,
                Term::HourUtc,
                Term::MonthsElapsed,
            ],
        }
    }
}

pub const WEEKDAYS: [&str; 7] = [
    "Sunday",
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
];

pub fn hour_label(h: u8) -> String {
    match h {
        0 => "12 AM UTC".to_string(),
        1..=11 => format!("{h} AM UTC"),
        12 => "12 PM UTC".to_string(),
        _ => format!("{} PM UTC", h - 12),
    }
}

/// Expands the table into a design matrix. Dummy columns that are zero in
/// every row, and columns that are linear combinations of earlier columns,
/// are dropped and listed in [`Design::dropped`].
pub fn design_matrix(table: &FeatureTable, formula: &Formula) -> Design {
    let mut builder = DesignBuilder::new(&table.rows);
    builder.column("(Intercept)", false, |_| 1.0);
    for term in &formula.terms {
        let control = term.is_control();
        match term {
            Term::CauseInDegree => builder.column("Cause In-Degree", control, |r| r.cause_in_degree as f64),
            Term::EffectOutDegree => builder.column("Effect Out-Degree", control, |r| r.effect_out_degree as f64),
            Term::LogFollowerCount => builder.column("Log Follower Count", control, |r| r.log_follower_count),
            Term::TransitiveClosure => builder.column("Transitive Closure", control, |r| r.transitive_closure as f64),
            Term::LogCumCauseUsage => {
                builder.column("Log of Cumulative Cause Usage", control, |r| r.log_cum_cause_usage)
            }
            Term::LogCumEffectUsage => {
                builder.column("Log of Cumulative Effect Usage", control, |r| r.log_cum_effect_usage)
            }
            Term::CauseTheme => {
                for theme in table.themes.iter().filter(|t| **t != table.reference_themes.cause) {
                    builder.dummy(&format!("Cause Theme: {theme}"), control, |r| r.cause_theme == *theme);
                }
            }
            Term::EffectTheme => {
                for theme in table.themes.iter().filter(|t| **t != table.reference_themes.effect) {
                    builder.dummy(&format!("Effect Theme: {theme}"), control, |r| r.effect_theme == *theme);
                }
            }
            Term::DayOfWeek => {
                for (d, name) in WEEKDAYS.iter().enumerate().skip(1) {
                    builder.dummy(name, control, |r| r.day_of_week as usize == d);
                }
            }
            Term::HourUtc => {
                for h in 1..24u8 {
                    builder.dummy(&hour_label(h), control, |r| r.hour_utc == h);
                }
            }
            Term::MonthsElapsed => builder.column("Num. of Months", control, |r| r.months_elapsed as f64),
        }
    }
    builder.finish()
}

struct DesignBuilder<'a> {
    rows: &'a [FeatureRow],
    names: Vec<String>,
    controls: Vec<bool>,
    columns: Vec<Vec<f64>>,
    dropped: Vec<String>,
}

impl<'a> DesignBuilder<'a> {
    fn new(rows: &'a [FeatureRow]) -> Self {
        DesignBuilder {
            rows,
            names: Vec::new(),
            controls: Vec::new(),
            columns: Vec::new(),
            dropped: Vec::new(),
        }
    }

    fn column(&mut self, name: &str, control: bool, f: impl Fn(&FeatureRow) -> f64) {
        self.names.push(name.to_string());
        self.controls.push(control);
        self.columns.push(self.rows.iter().map(f).collect());
    }

    fn dummy(&mut self, name: &str, control: bool, f: impl Fn(&FeatureRow) -> bool) {
        if self.rows.iter().any(&f) {
            self.column(name, control, |r| f64::from(u8::from(f(r))));
        } else {
            self.dropped.push(name.to_string());
        }
    }

    /// Drops columns whose residual after projecting out the kept earlier
    /// columns is negligible, so the design keeps full column rank.
    fn drop_aliased(&mut self) {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut keep = vec![true; self.columns.len()];
        for (j, col) in self.columns.iter().enumerate() {
            let norm2: f64 = col.iter().map(|v| v * v).sum();
            let mut r = col.clone();
            for q in &basis {
                let d: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
            let res2: f64 = r.iter().map(|v| v * v).sum();
            if norm2 == 0.0 || res2 <= 1e-10 * norm2 {
                keep[j] = false;
                continue;
            }
            let n = res2.sqrt();
            basis.push(r.into_iter().map(|v| v / n).collect());
        }
        let mut k = keep.iter();
        let names = std::mem::take(&mut self.names);
        for (name, kept) in names.into_iter().zip(keep.iter()) {
            if *kept {
                self.names.push(name);
            } else {
                self.dropped.push(name);
            }
        }
        self.controls.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.columns.retain(|_| *k.next().unwrap());
    }

    fn finish(mut self) -> Design {
        self.drop_aliased();
        let n_rows = self.rows.len();
        let n_cols = self.columns.len();
        let mut x = vec![0.0; n_rows * n_cols];
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                x[i * n_cols + j] = *v;
            }
        }
        Design {
            names: self.names,
            controls: self.controls,
            n_rows,
            n_cols,
            x,
            dropped: self.dropped,
        }
    }
}

/// Response vector aligned with [`design_matrix`] rows.
pub fn response(table: &FeatureTable) -> Vec<f64> {
    table.rows.iter().map(|r| r.y as f64).collect()
}
