//! Descriptive statistics on dichotomous, loopless digraphs.
//!
//! Self-loops never enter these statistics: [`Digraph`] drops the diagonal
//! on construction.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ConceptNet;

/// A loopless directed graph with a dense adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    n: usize,
    adj: Vec<bool>,
}

impl Digraph {
    pub fn empty(n: usize) -> Self {
        Digraph {
            n,
            adj: vec![false; n * n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Digraph::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.set(i, j, true);
                }
            }
        }
        g
    }

    /// Arcs `(from, to)`; loops are ignored.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Self {
        let mut g = Digraph::empty(n);
        for &(i, j) in arcs {
            g.set(i, j, true);
        }
        g
    }

    /// Every nonzero off-diagonal cell becomes an arc.
    pub fn from_net(net: &ConceptNet) -> Self {
        let n = net.n();
        let mut g = Digraph::empty(n);
        for (i, j, _) in net.edges() {
            g.set(i, j, true);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, present: bool) {
        if i != j {
            self.adj[i * self.n + j] = present;
        }
    }

    pub fn arc_count(&self) -> usize {
        self.adj.iter().filter(|a| **a).count()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_arc(i, j)).count()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        (0..self.n).filter(|&i| self.has_arc(i, j)).count()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_arc(i, j))
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Digraph {
        let mut g = Digraph::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.has_arc(i, j) {
                    g.set(perm[i], perm[j], true);
                }
            }
        }
        g
    }

    pub fn dyad_census(&self) -> DyadCensus {
        let mut c = DyadCensus::default();
        for i in 0..self.n {
            for j in i + 1..self.n {
                match (self.has_arc(i, j), self.has_arc(j, i)) {
                    (true, true) => c.mutual += 1,
                    (false, false) => c.null += 1,
                    _ => c.asymmetric += 1,
                }
            }
        }
        c
    }
}

/// Counts of mutual, asymmetric and null unordered pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadCensus {
    pub mutual: usize,
    pub asymmetric: usize,
    pub null: usize,
}

impl DyadCensus {
    pub fn arcs(&self) -> usize {
        2 * self.mutual + self.asymmetric
    }
}

/// Arcs over ordered pairs: `m / (n (n - 1))`.
pub fn density(g: &Digraph) -> Result<f64> {
    if g.n < 2 {
        return Err(Error::DegenerateGraph { n: g.n, min: 2 });
    }
    Ok(g.arc_count() as f64 / (g.n * (g.n - 1)) as f64)
}

/// Fraction of arcs whose reverse arc is also present.
pub fn edgewise_reciprocity(g: &Digraph) -> Result<f64> {
    let m = g.arc_count();
    if m == 0 {
        return Err(Error::Undefined("edgewise reciprocity of a graph without arcs"));
    }
    Ok(2.0 * g.dyad_census().mutual as f64 / m as f64)
}

/// `Pr(a→b | b→a) / Pr(a→b)`: how much more likely an arc is when its
/// reverse is present.
pub fn reciprocity_lift(g: &Digraph) -> Result<f64> {
    if g.arc_count() == 0 {
        return Err(Error::Undefined("reciprocity lift without any reversed-arc pairs"));
    }
    Ok(edgewise_reciprocity(g)? / density(g)?)
}

/// Share of two-paths `i→j→k` (distinct nodes) closed by `i→k`.
pub fn transitivity(g: &Digraph) -> Result<f64> {
    let n = g.n;
    let mut paths = 0u64;
    let mut closed = 0u64;
    for j in 0..n {
        for i in (0..n).filter(|&i| g.has_arc(i, j)) {
            for k in g.successors(j) {
                if k != i {
                    paths += 1;
                    if g.has_arc(i, k) {
                        closed += 1;
                    }
                }
            }
        }
    }
    if paths == 0 {
        return Err(Error::Undefined("transitivity of a graph without two-paths"));
    }
    Ok(closed as f64 / paths as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeMode {
    In,
    Out,
}

/// Freeman degree centralization, normalized by `(n - 1)^2`, the value
/// attained by a star.
pub fn degree_centralization(g: &Digraph, mode: DegreeMode) -> Result<f64> {
    let n = g.n;
    if n < 3 {
        return Err(Error::DegenerateGraph { n, min: 3 });
    }
    let degrees: Vec<usize> = (0..n)
        .map(|v| match mode {
            DegreeMode::In => g.in_degree(v),
            DegreeMode::Out => g.out_degree(v),
        })
        .collect();
    let max = *degrees.iter().max().unwrap_or(&0);
    let spread: usize = degrees.iter().map(|d| max - d).sum();
    Ok(spread as f64 / ((n - 1) * (n - 1)) as f64)
}

/// Shortest-path betweenness on the directed graph (Brandes), counting each
/// ordered pair once. Unreachable pairs contribute nothing.
pub fn betweenness_scores(g: &Digraph) -> Vec<f64> {
    let n = g.n;
    let mut score = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        stack.clear();
        for v in 0..n {
            preds[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for w in g.successors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    score
}

/// Largest attainable `Σ (c_max - c_i)` for directed betweenness on `n`
/// nodes: the star with mutual spokes, `(n-1)^2 (n-2)`.
pub fn betweenness_centralization_bound(n: usize) -> f64 {
    if n < 3 {
        return 0.0;
    }
    ((n - 1) * (n - 1) * (n - 2)) as f64
}

pub fn betweenness_centralization(g: &Digraph) -> Result<f64> {
    let n = g.n;
    if n < 3 {
        return Err(Error::DegenerateGraph { n, min: 3 });
    }
    Ok(freeman_spread(&betweenness_scores(g)) / betweenness_centralization_bound(n))
}

fn freeman_spread(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores.iter().map(|c| max - c).sum()
}

/// A named graph-level statistic usable in CUG tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Density,
    EdgewiseReciprocity,
    ReciprocityLift,
    Transitivity,
    InDegreeCentralization,
    OutDegreeCentralization,
    BetweennessCentralization,
    MutualDyads,
}

impl Statistic {
    pub const ALL: [Statistic; 8] = [
        Statistic::Density,
        Statistic::EdgewiseReciprocity,
        Statistic::ReciprocityLift,
        Statistic::Transitivity,
        Statistic::InDegreeCentralization,
        Statistic::OutDegreeCentralization,
        Statistic::BetweennessCentralization,
        Statistic::MutualDyads,
    ];

    pub fn evaluate(self, g: &Digraph) -> Result<f64> {
        match self {
            Statistic::Density => density(g),
            Statistic::EdgewiseReciprocity => edgewise_reciprocity(g),
            Statistic::ReciprocityLift => reciprocity_lift(g),
            Statistic::Transitivity => transitivity(g),
            Statistic::InDegreeCentralization => degree_centralization(g, DegreeMode::In),
            Statistic::OutDegreeCentralization => degree_centralization(g, DegreeMode::Out),
            Statistic::BetweennessCentralization => betweenness_centralization(g),
            Statistic::MutualDyads => Ok(g.dyad_census().mutual as f64),
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Statistic::Density => "Density",
            Statistic::EdgewiseReciprocity => "Edgewise Reciprocity",
            Statistic::ReciprocityLift => "Reciprocity Lift",
            Statistic::Transitivity => "Transitivity",
            Statistic::InDegreeCentralization => "In-Degree Centralization",
            Statistic::OutDegreeCentralization => "Out-Degree Centralization",
            Statistic::BetweennessCentralization => "Betweenness Centralization",
            Statistic::MutualDyads => "Mutual Dyads",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Statistic::Density => "density",
            Statistic::EdgewiseReciprocity => "edgewise_reciprocity",
            Statistic::ReciprocityLift => "reciprocity_lift",
            Statistic::Transitivity => "transitivity",
            Statistic::InDegreeCentralization => "in_degree_centralization",
            Statistic::OutDegreeCentralization => "out_degree_centralization",
            Statistic::BetweennessCentralization => "betweenness_centralization",
            Statistic::MutualDyads => "mutual_dyads",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Statistic::ALL
            .into_iter()
            .find(|st| st.key() == key)
            .ok_or_else(|| Error::Config(format!("unknown statistic {s:?}")))
    }
}

/// Whole-graph descriptives for the dichotomized discourse network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub nodes: usize,
    pub arcs: usize,
    pub density: Option<f64>,
    pub mean_degree: f64,
    pub edgewise_reciprocity: Option<f64>,
    pub reciprocity_lift: Option<f64>,
    pub transitivity: Option<f64>,
    pub in_degree_centralization: Option<f64>,
    pub out_degree_centralization: Option<f64>,
    pub betweenness_centralization: Option<f64>,
    pub dyad_census: DyadCensus,
}

pub fn descriptives(g: &Digraph) -> Descriptives {
    let arcs = g.arc_count();
    Descriptives {
        nodes: g.n,
        arcs,
        density: density(g).ok(),
        mean_degree: if g.n == 0 { 0.0 } else { arcs as f64 / g.n as f64 },
        edgewise_reciprocity: edgewise_reciprocity(g).ok(),
        reciprocity_lift: reciprocity_lift(g).ok(),
        transitivity: transitivity(g).ok(),
        in_degree_centralization: degree_centralization(g, DegreeMode::In).ok(),
        out_degree_centralization: degree_centralization(g, DegreeMode::Out).ok(),
        betweenness_centralization: betweenness_centralization(g).ok(),
        dyad_census: g.dyad_census(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn density_cases() {
        assert_eq!(density(&Digraph::complete(3)).unwrap(), 1.0);
        assert_eq!(density(&Digraph::empty(5)).unwrap(), 0.0);
        assert!(density(&Digraph::empty(1)).is_err());

        // 39 nodes, 396 arcs: fill ordered pairs row by row.
        let mut g = Digraph::empty(39);
        let mut placed = 0;
        'fill: for i in 0..39 {
            for j in 0..39 {
                if i != j {
                    g.set(i, j, true);
                    placed += 1;
                    if placed == 396 {
                        break 'fill;
                    }
                }
            }
        }
        let d = density(&g).unwrap();
        assert!(close(d, 396.0 / 1482.0));
        assert!((d - 0.267).abs() < 5e-4);
        assert!((g.arc_count() as f64 / 39.0 - 10.15).abs() < 0.01);
    }

    #[test]
    fn reciprocity_cases() {
        assert_eq!(edgewise_reciprocity(&Digraph::from_arcs(2, &[(A, B), (B, A)])).unwrap(), 1.0);
        assert_eq!(
            edgewise_reciprocity(&Digraph::from_arcs(3, &[(A, B), (B, C), (C, A)])).unwrap(),
            0.0
        );
        let g = Digraph::from_arcs(3, &[(A, B), (B, A), (A, C)]);
        assert!(close(edgewise_reciprocity(&g).unwrap(), 2.0 / 3.0));
        assert!(edgewise_reciprocity(&Digraph::empty(3)).is_err());
    }

    #[test]
    fn reciprocity_lift_cases() {
        assert!(close(reciprocity_lift(&Digraph::complete(4)).unwrap(), 1.0));
        let g = Digraph::from_arcs(3, &[(A, B), (B, A)]);
        assert!(close(reciprocity_lift(&g).unwrap(), 3.0));
        let g = Digraph::from_arcs(3, &[(A, B), (B, C)]);
        assert_eq!(reciprocity_lift(&g).unwrap(), 0.0);
        assert!(reciprocity_lift(&Digraph::empty(3)).is_err());
    }

    #[test]
    fn transitivity_cases() {
        assert_eq!(transitivity(&Digraph::from_arcs(3, &[(A, B), (B, C), (A, C)])).unwrap(), 1.0);
        assert_eq!(transitivity(&Digraph::from_arcs(3, &[(A, B), (B, C), (C, A)])).unwrap(), 0.0);
        assert_eq!(transitivity(&Digraph::complete(4)).unwrap(), 1.0);
        assert!(transitivity(&Digraph::from_arcs(3, &[(A, B)])).is_err());
    }

    #[test]
    fn centralization_cases() {
        let in_star = Digraph::from_arcs(4, &[(B, A), (C, A), (D, A)]);
        assert_eq!(degree_centralization(&in_star, DegreeMode::In).unwrap(), 1.0);
        assert_eq!(degree_centralization(&Digraph::empty(4), DegreeMode::In).unwrap(), 0.0);
        assert_eq!(degree_centralization(&Digraph::complete(4), DegreeMode::Out).unwrap(), 0.0);
        assert!(degree_centralization(&Digraph::empty(2), DegreeMode::Out).is_err());
    }

    #[test]
    fn betweenness_cases() {
        assert_eq!(
            betweenness_scores(&Digraph::from_arcs(3, &[(A, B), (B, C)])),
            vec![0.0, 1.0, 0.0]
        );
        assert!(betweenness_scores(&Digraph::complete(4)).iter().all(|b| *b == 0.0));
        let diamond = Digraph::from_arcs(4, &[(A, B), (B, D), (A, C), (C, D)]);
        assert_eq!(betweenness_scores(&diamond), vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn betweenness_centralization_cases() {
        assert_eq!(betweenness_centralization(&Digraph::empty(4)).unwrap(), 0.0);
        assert_eq!(betweenness_centralization(&Digraph::complete(4)).unwrap(), 0.0);
        let star = Digraph::from_arcs(4, &[(A, B), (B, A), (A, C), (C, A), (A, D), (D, A)]);
        assert_eq!(betweenness_centralization(&star).unwrap(), 1.0);
        assert!(betweenness_centralization(&Digraph::empty(2)).is_err());
    }

    #[test]
    fn census_counts() {
        let g = Digraph::from_arcs(4, &[(A, B), (B, A), (A, C)]);
        let c = g.dyad_census();
        assert_eq!((c.mutual, c.asymmetric, c.null), (1, 1, 4));
        assert_eq!(c.arcs(), g.arc_count());
    }

    #[test]
    fn loops_are_dropped() {
        let g = Digraph::from_arcs(3, &[(A, A), (A, B)]);
        assert_eq!(g.arc_count(), 1);
    }

    #[test]
    fn statistic_names_parse() {
        for s in Statistic::ALL {
            assert_eq!(s.key().parse::<Statistic>().unwrap(), s);
        }
        assert_eq!("Edgewise Reciprocity".parse::<Statistic>().unwrap(), Statistic::EdgewiseReciprocity);
        assert!("bogus".parse::<Statistic>().is_err());
    }
}
