//! Valued concept digraphs built from coded causal units.
//!
//! Cell `(a, b)` of a [`ConceptNet`] counts assertions "a causes b". Every
//! network built from one lexicon shares the lexicon's concept order, so
//! networks from different strata are cell-aligned.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{month_bin, AccountRole, Epoch, Message, MessageSet, MonthIndex, RoleGroup};
use crate::error::{Error, Result};
use crate::lexicon::CodedUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Stratum {
    Total,
    Month(MonthIndex),
    Role(AccountRole),
    RoleGroup(RoleGroup),
}

impl Stratum {
    /// Stable textual label used in exports.
    pub fn label(&self, epoch: Epoch) -> String {
        match self {
            Stratum::Total => "total".to_string(),
            Stratum::Month(m) => m.label(epoch),
            Stratum::Role(r) => r.as_str().to_string(),
            Stratum::RoleGroup(g) => g.as_str().to_string(),
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stratum::Total => f.write_str("total"),
            Stratum::Month(m) => write!(f, "month {m}"),
            Stratum::Role(r) => write!(f, "role {r}"),
            Stratum::RoleGroup(g) => write!(f, "role group {g}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratifier {
    Total,
    Month,
    /// Five account roles.
    Role,
    /// Three coarse groups: health, emergency management, elected.
    RoleGroup,
}

impl std::str::FromStr for Stratifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total" => Ok(Stratifier::Total),
            "month" => Ok(Stratifier::Month),
            "role" => Ok(Stratifier::Role),
            "role_group" | "role-group" => Ok(Stratifier::RoleGroup),
            other => Err(Error::Config(format!("unknown stratifier {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptNet {
    pub stratum: Stratum,
    nodes: Vec<String>,
    /// Row-major `n × n`.
    weights: Vec<u64>,
}

impl ConceptNet {
    pub fn empty(nodes: Vec<String>, stratum: Stratum) -> Self {
        let n = nodes.len();
        ConceptNet {
            stratum,
            nodes,
            weights: vec![0; n * n],
        }
    }

    /// Builds a network from a row-major weight matrix.
    pub fn from_matrix(nodes: Vec<String>, stratum: Stratum, weights: Vec<u64>) -> Result<Self> {
        if weights.len() != nodes.len() * nodes.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} nodes",
                weights.len(),
                nodes.len()
            )));
        }
        Ok(ConceptNet {
            stratum,
            nodes,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn index_of(&self, concept: &str) -> Option<usize> {
        self.nodes.iter().position(|c| c == concept)
    }

    pub fn weight(&self, from: usize, to: usize) -> u64 {
        self.weights[from * self.n() + to]
    }

    pub fn add(&mut self, from: usize, to: usize, w: u64) {
        let n = self.n();
        self.weights[from * n + to] += w;
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Row sum: how often the concept is asserted as a cause.
    pub fn out_strength(&self, i: usize) -> u64 {
        let n = self.n();
        self.weights[i * n..(i + 1) * n].iter().sum()
    }

    /// Column sum: how often the concept is asserted as an effect.
    pub fn in_strength(&self, j: usize) -> u64 {
        (0..self.n()).map(|i| self.weight(i, j)).sum()
    }

    pub fn nonzero_cells(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0).count()
    }

    pub fn is_dichotomous(&self) -> bool {
        self.weights.iter().all(|w| *w <= 1)
    }

    /// Cell is 1 iff the original weight is at least `threshold`.
    ///
    /// # Panics
    /// If `threshold` is zero.
    pub fn dichotomize(&self, threshold: u64) -> ConceptNet {
        assert!(threshold >= 1, "dichotomization threshold must be positive");
        ConceptNet {
            stratum: self.stratum,
            nodes: self.nodes.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| u64::from(*w >= threshold))
                .collect(),
        }
    }

    /// Nonzero cells in row-major order as `(from, to, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        let n = self.n();
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0)
            .map(move |(k, w)| (k / n, k % n, *w))
    }

    pub fn same_nodes(&self, other: &ConceptNet) -> bool {
        self.nodes == other.nodes
    }
}

/// Aggregates coded units into one network per stratum.
///
/// Month strata cover every month from the earliest to the latest in-window
/// message of `messages`, including months with no coded units. Role strata
/// are the roles present in `messages`, in declaration order.
pub fn build_networks(
    units: &[CodedUnit],
    messages: &MessageSet,
    nodes: &[String],
    stratifier: Stratifier,
    epoch: Epoch,
) -> Result<Vec<ConceptNet>> {
    let by_id: HashMap<&str, &Message> = messages.iter().map(|m| (m.id.as_str(), m)).collect();
    let index: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let strata: Vec<Stratum> = match stratifier {
        Stratifier::Total => vec![Stratum::Total],
        Stratifier::Month => {
            let months: BTreeSet<MonthIndex> = messages
                .iter()
                .filter_map(|m| month_bin(&m.timestamp, epoch).ok())
                .collect();
            match (months.first(), months.last()) {
                (Some(lo), Some(hi)) => (lo.value()..=hi.value())
                    .filter_map(MonthIndex::new)
                    .map(Stratum::Month)
                    .collect(),
                _ => Vec::new(),
            }
        }
        Stratifier::Role => {
            let present: BTreeSet<AccountRole> = messages.iter().map(|m| m.account_role).collect();
            present.into_iter().map(Stratum::Role).collect()
        }
        Stratifier::RoleGroup => {
            let present: BTreeSet<RoleGroup> =
                messages.iter().map(|m| m.account_role.group()).collect();
            present.into_iter().map(Stratum::RoleGroup).collect()
        }
    };
    let slot: HashMap<Stratum, usize> = strata.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut nets: Vec<ConceptNet> = strata
        .iter()
        .map(|s| ConceptNet::empty(nodes.to_vec(), *s))
        .collect();

    for u in units {
        let msg = by_id
            .get(u.unit.message_id.as_str())
            .ok_or_else(|| Error::UnknownMessage(u.unit.message_id.clone()))?;
        let from = *index
            .get(u.cause_concept.as_str())
            .ok_or_else(|| Error::UnmappedConcept(u.cause_concept.clone()))?;
        let to = *index
            .get(u.effect_concept.as_str())
            .ok_or_else(|| Error::UnmappedConcept(u.effect_concept.clone()))?;
        let stratum = match stratifier {
            Stratifier::Total => Stratum::Total,
            Stratifier::Month => Stratum::Month(month_bin(&msg.timestamp, epoch)?),
            Stratifier::Role => Stratum::Role(msg.account_role),
            Stratifier::RoleGroup => Stratum::RoleGroup(msg.account_role.group()),
        };
        nets[slot[&stratum]].add(from, to, 1);
    }
    Ok(nets)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub concept: String,
    pub out_degree: u64,
    pub in_degree: u64,
    pub net_degree: i64,
}

/// Valued out/in/net degree per concept, sorted by |net degree| descending
/// (ties keep node order).
pub fn degree_table(net: &ConceptNet) -> Vec<DegreeRow> {
    let mut rows: Vec<DegreeRow> = (0..net.n())
        .map(|i| {
            let out_degree = net.out_strength(i);
            let in_degree = net.in_strength(i);
            DegreeRow {
                concept: net.nodes[i].clone(),
                out_degree,
                in_degree,
                net_degree: out_degree as i64 - in_degree as i64,
            }
        })
        .collect();
    rows.sort_by_key(|r| std::cmp::Reverse(r.net_degree.unsigned_abs()));
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeDirection {
    /// Keep each node's strongest outgoing edges (its strongest effects).
    StrongestOutPerNode,
    /// Keep each node's strongest incoming edges (its strongest causes).
    StrongestInPerNode,
}

/// Subgraph keeping, per node, its `k` heaviest outgoing or incoming
/// edges. Ties go to the earlier neighbour in node order.
pub fn top_k_edges(net: &ConceptNet, k: usize, direction: EdgeDirection) -> ConceptNet {
    assert!(k >= 1, "k must be positive");
    let n = net.n();
    let mut out = ConceptNet::empty(net.nodes.clone(), net.stratum);
    for v in 0..n {
        let mut candidates: Vec<(usize, u64)> = (0..n)
            .map(|u| match direction {
                EdgeDirection::StrongestOutPerNode => (u, net.weight(v, u)),
                EdgeDirection::StrongestInPerNode => (u, net.weight(u, v)),
            })
            .filter(|(_, w)| *w > 0)
            .collect();
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (u, w) in candidates.into_iter().take(k) {
            let (from, to) = match direction {
                EdgeDirection::StrongestOutPerNode => (v, u),
                EdgeDirection::StrongestInPerNode => (u, v),
            };
            out.weights[from * n + to] = w;
        }
    }
    out
}

/// Writes `stratum,cause,effect,weight` rows for every nonzero cell.
pub fn write_edge_list<'a, W: Write>(
    nets: impl IntoIterator<Item = &'a ConceptNet>,
    epoch: Epoch,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stratum", "cause", "effect", "weight"])?;
    for net in nets {
        let label = net.stratum.label(epoch);
        for (i, j, weight) in net.edges() {
            w.write_record([
                label.as_str(),
                net.nodes[i].as_str(),
                net.nodes[j].as_str(),
                &weight.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<edge list>", e))?;
    Ok(())
}

/// Graphviz rendering; edge pen width scales linearly with weight in [1, 8].
pub fn to_dot(net: &ConceptNet, name: &str) -> String {
    let max = net.weights.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", dot_id(name));
    for node in &net.nodes {
        let _ = writeln!(s, "  {};", dot_id(node));
    }
    for (i, j, w) in net.edges() {
        let width = 1.0 + 7.0 * w as f64 / max;
        let _ = writeln!(
            s,
            "  {} -> {} [weight={w}, penwidth={width:.3}];",
            dot_id(&net.nodes[i]),
            dot_id(&net.nodes[j])
        );
    }
    s.push_str("}\n");
    s
}

pub fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}
