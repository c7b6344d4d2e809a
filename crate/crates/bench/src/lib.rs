//! Shared fixtures for the benchmarks: the synthetic corpus carried
//! through extraction, coding, and network construction.

use discourse_core::regression::FeatureOptions;
use discourse_core::synth::{generate, SynthConfig};
use discourse_core::{
    build_features, build_networks, code_all, extract_all, CodedUnit, ConceptNet, Epoch,
    FeatureTable, Lexicon, MessageSet, Stratifier,
};

pub struct Fixture {
    pub messages: MessageSet,
    pub lexicon: Lexicon,
    pub coded: Vec<CodedUnit>,
    pub total: ConceptNet,
    pub months: Vec<ConceptNet>,
    pub roles: Vec<ConceptNet>,
    pub features: FeatureTable,
}

impl Fixture {
    pub fn new(messages: usize) -> Self {
        let messages = generate(&SynthConfig {
            messages,
            ..SynthConfig::default()
        });
        let lexicon = Lexicon::demo();
        let epoch = Epoch::default();
        let units = extract_all(&messages).units;
        let coded = code_all(&units, &lexicon).coded;
        let nodes = lexicon.concepts().to_vec();
        let nets = |s| build_networks(&coded, &messages, &nodes, s, epoch).expect("networks");
        let total = nets(Stratifier::Total).remove(0);
        let months = nets(Stratifier::Month);
        let roles = nets(Stratifier::Role);
        let features = build_features(
            &coded,
            &messages,
            &total,
            &months,
            &lexicon,
            &FeatureOptions::default(),
        )
        .expect("features");
        Fixture {
            messages,
            lexicon,
            coded,
            total,
            months,
            roles,
            features,
        }
    }
}
