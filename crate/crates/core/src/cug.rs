//! Conditional uniform graph (CUG) tests.
//!
//! Each replicate draws a graph uniformly from the loopless digraphs that
//! share the observed graph's order and either its arc count or its dyad
//! census, and evaluates the statistic on it. Replicate `r` draws from its
//! own ChaCha stream (`seed`, stream `r`), so results do not depend on how
//! replicates are scheduled across threads.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{Digraph, DyadCensus, Statistic};

pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    Edges,
    DyadCensus,
}

impl Conditioning {
    pub const ALL: [Conditioning; 2] = [Conditioning::Edges, Conditioning::DyadCensus];

    pub fn display_name(self) -> &'static str {
        match self {
            Conditioning::Edges => "Edges",
            Conditioning::DyadCensus => "Dyad Census",
        }
    }
}

impl std::str::FromStr for Conditioning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "edges" => Ok(Conditioning::Edges),
            "dyad_census" | "dyadcensus" => Ok(Conditioning::DyadCensus),
            other => Err(Error::Config(format!("unknown conditioning {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CugResult {
    pub statistic_name: String,
    pub statistic: Statistic,
    pub observed: f64,
    pub conditioning: Conditioning,
    /// Number of usable null draws (equals `null_draws.len()`).
    pub replicates: usize,
    /// Draws on which the statistic was undefined; excluded from p-values.
    pub missing: usize,
    pub p_ge: f64,
    pub p_le: f64,
    pub null_draws: Vec<f64>,
    pub seed: u64,
}

impl CugResult {
    pub fn null_mean(&self) -> Option<f64> {
        (!self.null_draws.is_empty())
            .then(|| self.null_draws.iter().sum::<f64>() / self.null_draws.len() as f64)
    }

    /// Empirical quantile of the null draws (nearest rank on the sorted draws).
    pub fn null_quantile(&self, q: f64) -> Option<f64> {
        if self.null_draws.is_empty() {
            return None;
        }
        let mut sorted = self.null_draws.clone();
        sorted.sort_by(f64::total_cmp);
        let idx = ((sorted.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
        Some(sorted[idx])
    }
}

/// Deterministic per-replicate generator.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Uniform loopless digraph on `n` nodes with exactly `m` arcs.
pub fn draw_edges<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Digraph {
    let pairs = n * n.saturating_sub(1);
    assert!(m <= pairs, "{m} arcs do not fit in a loopless digraph of order {n}");
    let mut g = Digraph::empty(n);
    for k in index::sample(rng, pairs, m) {
        // Ordered pair k indexes the off-diagonal cells row by row.
        let i = k / (n - 1);
        let r = k % (n - 1);
        let j = if r >= i { r + 1 } else { r };
        g.set(i, j, true);
    }
    g
}

/// Uniform digraph with the given dyad census: the multiset of dyad states
/// is shuffled over the unordered pairs and each asymmetric dyad is
/// oriented by a fair coin.
pub fn draw_dyad_census<R: Rng + ?Sized>(n: usize, census: DyadCensus, rng: &mut R) -> Digraph {
    let pairs = n * n.saturating_sub(1) / 2;
    assert_eq!(
        census.mutual + census.asymmetric + census.null,
        pairs,
        "dyad census does not cover every pair"
    );
    #[derive(Clone, Copy)]
    enum State {
        Mutual,
        Asym,
        Null,
    }
    let mut states: Vec<State> = std::iter::repeat(State::Mutual)
        .take(census.mutual)
        .chain(std::iter::repeat(State::Asym).take(census.asymmetric))
        .chain(std::iter::repeat(State::Null).take(census.null))
        .collect();
    states.shuffle(rng);
    let mut g = Digraph::empty(n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            match states[k] {
                State::Mutual => {
                    g.set(i, j, true);
                    g.set(j, i, true);
                }
                State::Asym => {
                    if rng.gen_bool(0.5) {
                        g.set(i, j, true);
                    } else {
                        g.set(j, i, true);
                    }
                }
                State::Null => {}
            }
            k += 1;
        }
    }
    g
}

/// One null draw for replicate `replicate`.
pub fn null_draw(g: &Digraph, conditioning: Conditioning, seed: u64, replicate: u64) -> Digraph {
    let mut rng = replicate_rng(seed, replicate);
    match conditioning {
        Conditioning::Edges => draw_edges(g.n(), g.arc_count(), &mut rng),
        Conditioning::DyadCensus => draw_dyad_census(g.n(), g.dyad_census(), &mut rng),
    }
}

pub fn cug_test(
    g: &Digraph,
    statistic: Statistic,
    conditioning: Conditioning,
    replicates: usize,
    seed: u64,
) -> Result<CugResult> {
    if replicates == 0 {
        return Err(Error::Config("CUG replicates must be at least 1".into()));
    }
    let observed = statistic.evaluate(g)?;
    let draws: Vec<Option<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| statistic.evaluate(&null_draw(g, conditioning, seed, r)).ok())
        .collect();
    let missing = draws.iter().filter(|d| d.is_none()).count();
    let null_draws: Vec<f64> = draws.into_iter().flatten().collect();
    let (p_ge, p_le) = monte_carlo_p(observed, &null_draws);
    Ok(CugResult {
        statistic_name: statistic.display_name().to_string(),
        statistic,
        observed,
        conditioning,
        replicates: null_draws.len(),
        missing,
        p_ge,
        p_le,
        null_draws,
        seed,
    })
}

/// `+1`-corrected upper and lower tail probabilities.
pub fn monte_carlo_p(observed: f64, draws: &[f64]) -> (f64, f64) {
    let ge = draws.iter().filter(|d| **d >= observed).count();
    let le = draws.iter().filter(|d| **d <= observed).count();
    let denom = (draws.len() + 1) as f64;
    ((1 + ge) as f64 / denom, (1 + le) as f64 / denom)
}
