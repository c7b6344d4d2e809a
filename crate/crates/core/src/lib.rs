//! Causal-narrative discourse networks.
//!
//! Messages are scanned for causal connectives, the cause and effect
//! subparts are coded to concepts with a regex lexicon, and coded units are
//! aggregated into valued concept digraphs. On top of those sit graph
//! statistics with conditional uniform graph tests, a principal component
//! analysis of a set of networks, and a negative binomial model of
//! retransmission counts.

pub mod corpus;
pub mod cug;
pub mod error;
pub mod extraction;
pub mod lexicon;
pub mod linalg;
pub mod pipeline;
pub mod network;
pub mod pca;
pub mod regression;
pub mod stats;
pub mod synth;

pub use corpus::{
    load_corpus, month_bin, AccountRole, CorpusFormat, Epoch, LoadedCorpus, Message, MessageSet,
    MonthIndex, RoleGroup,
};
pub use cug::{cug_test, Conditioning, CugResult};
pub use error::{Error, Result};
pub use extraction::{extract_all, extract_unit, CausalUnit, Connective, Extraction, SkipReason};
pub use lexicon::{code_all, code_unit, load_lexicon, CodedUnit, Coding, Lexicon, Side};
pub use network::{build_networks, ConceptNet, Stratifier, Stratum};
pub use pca::{network_pca, PcaOptions, PcaResult};
pub use pipeline::{run, PipelineConfig, Stage};
pub use regression::{
    build_features, fit_nb, nb_loglik, regression_report, FeatureTable, Formula, NbFit,
};
pub use stats::{descriptives, Digraph, Statistic};
