use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, CorpusFormat, Epoch, MessageSet, Rejection};
use crate::cug::{cug_test, Conditioning, CugResult};
use crate::error::{Error, Result};
use crate::extraction::{extract_all, CausalUnit};
use crate::lexicon::{
    code_all, coding_report_from, load_lexicon, sample_uncoded, CodedUnit, Lexicon, ReferenceThemes,
};
use crate::network::{
    build_networks, degree_table, to_dot, top_k_edges, write_edge_list, ConceptNet, EdgeDirection,
    Stratifier, Stratum,
};
use crate::pca::{network_pca, PcaOptions, PcaResult, ScoreGraph};
use crate::regression::nb::{fit_design, NbOptions};
use crate::regression::{
    build_features, design_matrix, regression_report, response, FeatureOptions, FeatureRow,
};
use crate::stats::{descriptives, Descriptives, Digraph, Statistic};

use super::io::{self, num};
use super::{PipelineConfig, Stage};

/// Rows of uncoded subparts sampled for manual lexicon review.
const UNCODED_SAMPLE: usize = 50;

/// Statistic and conditioning pairs of the combined-network CUG table.
pub const TABLE2: [(Statistic, Conditioning); 5] = [
    (Statistic::EdgewiseReciprocity, Conditioning::Edges),
    (Statistic::Transitivity, Conditioning::DyadCensus),
    (Statistic::InDegreeCentralization, Conditioning::DyadCensus),
    (Statistic::OutDegreeCentralization, Conditioning::DyadCensus),
    (Statistic::BetweennessCentralization, Conditioning::DyadCensus),
];

pub(crate) struct Context<'a> {
    pub cfg: &'a PipelineConfig,
    pub lexicon: Lexicon,
    lexicon_digest: String,
    corpus: Option<(MessageSet, Vec<Rejection>, String)>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a PipelineConfig) -> Result<Self> {
        let (lexicon, lexicon_digest) = match &cfg.lexicon {
            Some(p) => (load_lexicon(p)?, io::file_digest(p)?),
            None => (Lexicon::demo(), io::sha256_hex(Lexicon::demo_source().as_bytes())),
        };
        let current = lexicon.reference_themes().clone();
        let reference = ReferenceThemes {
            cause: cfg.regression.cause_reference.clone().unwrap_or(current.cause),
            effect: cfg.regression.effect_reference.clone().unwrap_or(current.effect),
        };
        let lexicon = lexicon.with_reference_themes(reference)?;
        Ok(Context {
            cfg,
            lexicon,
            lexicon_digest,
            corpus: None,
        })
    }

    fn load_corpus(&mut self) -> Result<()> {
        if self.corpus.is_none() {
            let path = self
                .cfg
                .corpus
                .as_ref()
                .ok_or_else(|| Error::Config("a corpus path is required".into()))?;
            let loaded = load_corpus(path, CorpusFormat::from_path(path))?;
            self.corpus = Some((loaded.messages, loaded.rejections, io::file_digest(path)?));
        }
        Ok(())
    }

    fn messages(&mut self) -> Result<&MessageSet> {
        self.load_corpus()?;
        Ok(&self.corpus.as_ref().expect("loaded").0)
    }

    fn corpus_digest(&mut self) -> Result<String> {
        self.load_corpus()?;
        Ok(self.corpus.as_ref().expect("loaded").2.clone())
    }

    pub fn dir(&self, stage: Stage) -> PathBuf {
        self.cfg.out_dir.join(stage.as_str())
    }

    pub fn epoch(&self) -> Epoch {
        self.cfg.epoch
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    stage: String,
    version: String,
    settings: String,
    inputs: BTreeMap<String, String>,
    artifacts: BTreeMap<String, String>,
}

/// Collects the artifacts and inputs of one stage and writes its manifest.
pub(crate) struct StageOutput {
    stage: Stage,
    dir: PathBuf,
    written: Vec<PathBuf>,
    inputs: BTreeMap<String, String>,
}

impl StageOutput {
    pub fn new(ctx: &Context, stage: Stage) -> Result<Self> {
        let dir = ctx.dir(stage);
        io::ensure_dir(&dir)?;
        // Remove artifacts from an earlier run so none go stale.
        let manifest = dir.join("manifest.json");
        if manifest.is_file() {
            if let Ok(old) = io::read_json::<Manifest>(&manifest) {
                for name in old.artifacts.keys() {
                    let p = dir.join(name);
                    if p.is_file() {
                        std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
                    }
                }
            }
        }
        Ok(StageOutput {
            stage,
            dir,
            written: Vec::new(),
            inputs: BTreeMap::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn input(&mut self, label: &str, digest: String) {
        self.inputs.insert(label.to_string(), digest);
    }

    pub fn input_file(&mut self, label: &str, path: &Path) -> Result<()> {
        let d = io::file_digest(path)?;
        self.input(label, d);
        Ok(())
    }

    pub fn finish(mut self, ctx: &Context) -> Result<Vec<PathBuf>> {
        let mut artifacts = BTreeMap::new();
        for p in &self.written {
            let name = p
                .strip_prefix(&self.dir)
                .expect("artifact inside stage dir")
                .to_string_lossy()
                .into_owned();
            artifacts.insert(name, io::file_digest(p)?);
        }
        let manifest = Manifest {
            stage: self.stage.as_str().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            settings: ctx.cfg.settings_digest(),
            inputs: std::mem::take(&mut self.inputs),
            artifacts,
        };
        let path = self.path("manifest.json");
        io::write_json(&path, &manifest)?;
        Ok(self.written)
    }
}

fn enum_str<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

pub(crate) fn extract(ctx: &mut Context) -> Result<Vec<PathBuf>> {
    let mut out = StageOutput::new(ctx, Stage::Extract)?;
    out.input("corpus", ctx.corpus_digest()?);
    let result = extract_all(ctx.messages()?);
    let rejections = ctx.corpus.as_ref().expect("loaded").1.clone();
    io::write_jsonl(&out.path("units.jsonl"), &result.units)?;
    io::write_csv(
        &out.path("skips.csv"),
        &["message_id", "reason"],
        result.skips.iter().map(|s| vec![s.message_id.clone(), enum_str(&s.reason)]),
    )?;
    io::write_csv(
        &out.path("rejections.csv"),
        &["line", "id", "reason"],
        rejections
            .iter()
            .map(|r| vec![r.line.to_string(), r.id.clone().unwrap_or_default(), r.reason.clone()]),
    )?;
    io::write_json(&out.path("extraction_report.json"), &result.report)?;
    out.finish(ctx)
}

fn units_path(ctx: &Context) -> Result<PathBuf> {
    io::require(ctx.dir(Stage::Extract).join("units.jsonl"), "extract")
}

fn coded_path(ctx: &Context) -> Result<PathBuf> {
    io::require(ctx.dir(Stage::Code).join("coded_units.jsonl"), "code")
}

fn networks_path(ctx: &Context) -> Result<PathBuf> {
    io::require(ctx.dir(Stage::Network).join("networks.json"), "network")
}

pub(crate) fn code(ctx: &mut Context) -> Result<Vec<PathBuf>> {
    let units_file = units_path(ctx)?;
    let mut out = StageOutput::new(ctx, Stage::Code)?;
    out.input_file("extract/units.jsonl", &units_file)?;
    out.input("lexicon", ctx.lexicon_digest.clone());
    let units: Vec<CausalUnit> = io::read_jsonl(&units_file)?;
    let coding = code_all(&units, &ctx.lexicon);
    io::write_jsonl(&out.path("coded_units.jsonl"), &coding.coded)?;
    io::write_csv(
        &out.path("uncoded.csv"),
        &["message_id", "cause_uncoded", "effect_uncoded"],
        coding.uncoded.iter().map(|u| {
            vec![
                u.message_id.clone(),
                u.uncoded.cause.to_string(),
                u.uncoded.effect.to_string(),
            ]
        }),
    )?;
    let report = coding_report_from(units.len(), &coding.coded, &ctx.lexicon);
    io::write_json(&out.path("coding_report.json"), &report)?;
    io::write_csv(
        &out.path("concept_frequencies.csv"),
        &["concept", "theme", "as_cause", "as_effect"],
        report.concepts.iter().map(|c| {
            vec![
                c.concept.clone(),
                c.theme.clone(),
                c.as_cause.to_string(),
                c.as_effect.to_string(),
            ]
        }),
    )?;
    if let Some(seed) = ctx.cfg.seed {
        let sample = sample_uncoded(&units, &ctx.lexicon, UNCODED_SAMPLE, seed);
        io::write_csv(
            &out.path("uncoded_sample.csv"),
            &["message_id", "side", "text"],
            sample
                .items
                .iter()
                .map(|s| vec![s.message_id.clone(), enum_str(&s.side), s.text.clone()]),
        )?;
    }
    out.finish(ctx)
}

/// Every network built by the `network` stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBundle {
    pub epoch: Epoch,
    pub networks: Vec<ConceptNet>,
}

impl NetworkBundle {
    pub fn read(path: &Path) -> Result<Self> {
        let raw: NetworkBundle = io::read_json(path)?;
        // Re-validate matrix shapes after deserialization.
        let networks = raw
            .networks
            .into_iter()
            .map(|n| ConceptNet::from_matrix(n.nodes().to_vec(), n.stratum, n.weights().to_vec()))
            .collect::<Result<_>>()?;
        Ok(NetworkBundle {
            epoch: raw.epoch,
            networks,
        })
    }

    pub fn total(&self) -> Result<&ConceptNet> {
        self.networks
            .iter()
            .find(|n| n.stratum == Stratum::Total)
            .ok_or_else(|| Error::Config("no total network; add the total stratifier".into()))
    }

    pub fn strata(&self, stratifier: Stratifier) -> Vec<ConceptNet> {
        self.networks
            .iter()
            .filter(|n| stratifier_of(n.stratum) == stratifier)
            .cloned()
            .collect()
    }
}

pub fn stratifier_of(s: Stratum) -> Stratifier {
    match s {
        Stratum::Total => Stratifier::Total,
        Stratum::Month(_) => Stratifier::Month,
        Stratum::Role(_) => Stratifier::Role,
        Stratum::RoleGroup(_) => Stratifier::RoleGroup,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub stratum: String,
    pub kind: Stratifier,
    pub units: u64,
    pub nonzero_cells: usize,
    pub loopless_arcs: usize,
}

/// The heaviest cells of the total network (loops included), ties broken
/// by node order.
pub(crate) fn top_cells(net: &ConceptNet, k: usize) -> Vec<(usize, usize, u64)> {
    let mut cells: Vec<(usize, usize, u64)> = net.edges().collect();
    cells.sort_by(|a, b| b.2.cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    cells.truncate(k);
    cells
}

pub(crate) fn network(ctx: &mut Context) -> Result<Vec<PathBuf>> {
    let coded_file = coded_path(ctx)?;
    let mut out = StageOutput::new(ctx, Stage::Network)?;
    out.input_file("code/coded_units.jsonl", &coded_file)?;
    out.input("corpus", ctx.corpus_digest()?);
    out.input("lexicon", ctx.lexicon_digest.clone());
    let coded: Vec<CodedUnit> = io::read_jsonl(&coded_file)?;
    let epoch = ctx.epoch();
    let nodes = ctx.lexicon.concepts().to_vec();
    let stratifiers = ctx.cfg.stratifiers.clone();
    let messages = ctx.messages()?;
    let mut networks = Vec::new();
    for s in stratifiers {
        networks.extend(build_networks(&coded, messages, &nodes, s, epoch)?);
    }
    let bundle = NetworkBundle { epoch, networks };
    io::write_json(&out.path("networks.json"), &bundle)?;

    let mut edges = Vec::new();
    write_edge_list(&bundle.networks, epoch, &mut edges)?;
    io::write_text(&out.path("edges.csv"), &String::from_utf8(edges).expect("utf-8"))?;

    let summaries: Vec<StratumSummary> = bundle
        .networks
        .iter()
        .map(|n| StratumSummary {
            stratum: n.stratum.label(epoch),
            kind: stratifier_of(n.stratum),
            units: n.total_weight(),
            nonzero_cells: n.nonzero_cells(),
            loopless_arcs: Digraph::from_net(n).arc_count(),
        })
        .collect();
    io::write_json(&out.path("strata.json"), &summaries)?;

    let total = bundle.total()?;
    io::write_text(&out.path("total.dot"), &to_dot(total, "total"))?;
    let top = top_k_edges(total, 1, EdgeDirection::StrongestOutPerNode);
    io::write_text(&out.path("total_top_effects.dot"), &to_dot(&top, "total_top_effects"))?;
    io::write_csv(
        &out.path("degree_table.csv"),
        &["concept", "out_degree", "in_degree", "net_degree"],
        degree_table(total).into_iter().map(|r| {
            vec![
                r.concept,
                r.out_degree.to_string(),
                r.in_degree.to_string(),
                r.net_degree.to_string(),
            ]
        }),
    )?;

    let top = top_cells(total, ctx.cfg.top_narratives);
    let grand = total.total_weight().max(1) as f64;
    io::write_csv(
        &out.path("top_narratives.csv"),
        &["rank", "cause", "effect", "count", "percent"],
        top.iter().enumerate().map(|(r, (i, j, w))| {
            vec![
                (r + 1).to_string(),
                total.nodes()[*i].clone(),
                total.nodes()[*j].clone(),
                w.to_string(),
                num(100.0 * *w as f64 / grand),
            ]
        }),
    )?;
    let months = bundle.strata(Stratifier::Month);
    if !months.is_empty() {
        let mut rows = Vec::new();
        for m in &months {
            for (i, j, _) in &top {
                rows.push(vec![
                    m.stratum.label(epoch),
                    total.nodes()[*i].clone(),
                    total.nodes()[*j].clone(),
                    m.weight(*i, *j).to_string(),
                ]);
            }
        }
        io::write_csv(&out.path("monthly_narratives.csv"), &["month", "cause", "effect", "count"], rows)?;
    }
    out.finish(ctx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub statistic: String,
    pub conditioning: String,
    pub observed: f64,
    pub p_ge: f64,
    pub p_le: f64,
    pub replicates: usize,
    pub missing: usize,
    pub seed: u64,
}

impl From<&CugResult> for Table2Row {
    fn from(r: &CugResult) -> Self {
        Table2Row {
            statistic: r.statistic_name.clone(),
            conditioning: r.conditioning.display_name().to_string(),
            observed: r.observed,
            p_ge: r.p_ge,
            p_le: r.p_le,
            replicates: r.replicates,
            missing: r.missing,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumDescriptives {
    pub stratum: String,
    pub descriptives: Descriptives,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub descriptives: Descriptives,
    pub table: Vec<Table2Row>,
    pub strata: Vec<StratumDescriptives>,
}

fn table2_csv(rows: &[Table2Row]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.statistic.clone(),
                r.conditioning.clone(),
                num(r.observed),
                num(r.p_ge),
                num(r.p_le),
                r.replicates.to_string(),
                r.missing.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect()
}

const TABLE2_HEADER: [&str; 8] = [
    "statistic",
    "conditioning",
    "observed",
    "p_ge",
    "p_le",
    "replicates",
    "missing",
    "seed",
];

fn seed(ctx: &Context) -> Result<u64> {
    ctx.cfg
        .seed
        .ok_or_else(|| Error::Config("a seed is required for CUG tests".into()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), num)
}

pub(crate) fn stats(ctx: &mut Context) -> Result<Vec<PathBuf>> {
    let nets_file = networks_path(ctx)?;
    let mut out = StageOutput::new(ctx, Stage::Stats)?;
    out.input_file("network/networks.json", &nets_file)?;
    let bundle = NetworkBundle::read(&nets_file)?;
    let g = Digraph::from_net(bundle.total()?);
    let seed = seed(ctx)?;
    let table = TABLE2
        .iter()
        .map(|(st, cond)| cug_test(&g, *st, *cond, ctx.cfg.cug.replicates, seed).map(|r| Table2Row::from(&r)))
        .collect::<Result<Vec<_>>>()?;
    let strata = bundle
        .networks
        .iter()
        .map(|n| StratumDescriptives {
            stratum: n.stratum.label(bundle.epoch),
            descriptives: descriptives(&Digraph::from_net(n)),
        })
        .collect::<Vec<_>>();
    let report = StatsReport {
        descriptives: descriptives(&g),
        table,
        strata,
    };
    io::write_json(&out.path("stats.json"), &report)?;
    io::write_csv(&out.path("stats.csv"), &TABLE2_HEADER, table2_csv(&report.table))?;
    io::write_csv(
        &out.path("strata_stats.csv"),
        &[
            "stratum",
            "arcs",
            "density",
            "edgewise_reciprocity",
            "transitivity",
            "in_degree_centralization",
            "out_degree_centralization",
            "betweenness_centralization",
        ],
        report.strata.iter().map(|s| {
            let d = &s.descriptives;
            vec![
                s.stratum.clone(),
                d.arcs.to_string(),
                opt(d.density),
                opt(d.edgewise_reciprocity),
                opt(d.transitivity),
                opt(d.in_degree_centralization),
                opt(d.out_degree_centralization),
                opt(d.betweenness_centralization),
            ]
        }),
    )?;
    out.finish(ctx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CugEntry {
    #[serde(flatten)]
    result: CugResult,
    null_mean: Option<f64>,
    null_q025: Option<f64>,
    null_q975: Option<f64>,
}

pub(crate) fn cug(ctx: &mut Context) -> Result<Vec<PathBuf>> {
    let nets_file = networks_path(ctx)?;
    let mut out = StageOutput::new(ctx, Stage::Cug)?;
    out.input_file("network/networks.json", &nets_file)?;
    let bundle = NetworkBundle::read(&nets_file)?;
    let g = Digraph::from_net(bundle.total()?);
    let seed = seed(ctx)?;
    let mut entries = Vec::new();
    for st in &ctx.cfg.cug.statistics {
        for cond in &ctx.cfg.cug.conditionings {
            let result = cug_test(&g, *st, *cond, ctx.cfg.cug.replicates, seed)?;
            entries.push(CugEntry {
                null_mean: result.null_mean(),
                null_q025: result.null_quantile(0.025),
                null_q975: result.null_quantile(0.975),
                result,
            });
        }
    }
    io::write_json(&out.path("cug.json"), &entries)?;
    io::write_csv(
        &out.path("cug.csv"),
        &[
            "statistic",
            "conditioning",
            "observed",
            "p_ge",
            "p_le",
            "replicates",
            "missing",
            "seed",
            "null_mean",
            "null_q025",
            "null_q975",
        ],
        entries.iter().map(|e| {
            let mut row = table2_csv(&[Table2Row::from(&e.result)]).remove(0);
            row.extend([opt(e.null_mean), opt(e.null_q025), opt(e.null_q975)]);
            row
        }),
    )?;
    out.finish(ctx)
}

/// Cells with |weight| below this share of the largest |weight| are left
/// out of score-graph DOT files.
const SCORE_DOT_CUTOFF: f64 = 0.1;

fn score_dot(g: &ScoreGraph, name: &str) -> String {
    use std::fmt::Write;
    let n = g.nodes.len();
    let max = g.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", crate::network::dot_id(name));
    for node in &g.nodes {
        let _ = writeln!(s, "  {};", crate::network::dot_id(node));
    }
    if max > 0.0 {
        for i in 0..n {
            for j in 0..n {
                let w = g.weight(i, j);
                if i == j || w.abs() < SCORE_DOT_CUTOFF * max {
                    continue;
                }
                let color = if w >= 0.0 { "black" } else { "red" };
                let _ = writeln!(
                    s,
                    "  {} -> {} [weight={}, penwidth={:.3}, color={color}];",
                    crate::network::dot_id(&g.nodes[i]),
                    crate::network::dot_id(&g.nodes[j]),
                    num(w),
                    1.0 + 7.0 * w.abs() / max
                );
            }
        }
    }
    s.push_str("}\n");
    s
}

pub(crate) fn pca(ctx: &mut Context) -> Result<Vec<PathBuf>> {
    let nets_file = networks_path(ctx)?;
    let mut out = StageOutput::new(ctx, Stage::Pca)?;
    out.input_file("network/networks.json", &nets_file)?;
    let bundle = NetworkBundle::read(&nets_file)?;
    let nets = bundle.strata(ctx.cfg.pca.stratifier);
    let options = PcaOptions {
        components: ctx.cfg.pca.components,
        centered_scores: ctx.cfg.pca.centered_scores,
        scale_loadings: ctx.cfg.pca.scale_loadings,
    };
    let result: PcaResult = network_pca(&nets, bundle.epoch, options)?;
    io::write_json(&out.path("pca.json"), &result)?;
    let p = result.p();
    let labels = &result.graph_labels;
    let mut header = vec!["graph".to_string()];
    header.extend(labels.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    io::write_csv(
        &out.path("covariance.csv"),
        &header_refs,
        (0..p).map(|i| {
            std::iter::once(labels[i].clone())
                .chain((0..p).map(|j| num(result.covariance[i * p + j])))
                .collect()
        }),
    )?;
    let trace: f64 = result.eigenvalues.iter().sum();
    io::write_csv(
        &out.path("eigenvalues.csv"),
        &["component", "eigenvalue", "share"],
        result.eigenvalues.iter().enumerate().map(|(k, l)| {
            let share = if trace > 0.0 { l / trace } else { f64::NAN };
            vec![(k + 1).to_string(), num(*l), num(share)]
        }),
    )?;
    let loadings = result.reported_loadings();
    let mut lheader = vec!["graph".to_string()];
    lheader.extend((1..=p).map(|k| format!("pc{k}")));
    let lrefs: Vec<&str> = lheader.iter().map(String::as_str).collect();
    io::write_csv(
        &out.path("loadings.csv"),
        &lrefs,
        (0..p).map(|i| {
            std::iter::once(labels[i].clone())
                .chain((0..p).map(|k| num(loadings[i * p + k])))
                .collect()
        }),
    )?;
    for g in &result.score_graphs {
        let k = g.component;
        let n = g.nodes.len();
        let mut rows = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = g.weight(i, j);
                if i != j && w != 0.0 {
                    rows.push(vec![g.nodes[i].clone(), g.nodes[j].clone(), num(w)]);
                }
            }
        }
        io::write_csv(&out.path(&format!("score_pc{k}.csv")), &["cause", "effect", "weight"], rows)?;
        io::write_text(&out.path(&format!("score_pc{k}.dot")), &score_dot(g, &format!("score_pc{k}")))?;
    }
    out.finish(ctx)
}

fn feature_csv_row(r: &FeatureRow) -> Vec<String> {
    vec![
        r.message_id.clone(),
        r.y.to_string(),
        r.cause_concept.clone(),
        r.effect_concept.clone(),
        r.cause_in_degree.to_string(),
        r.effect_out_degree.to_string(),
        r.transitive_closure.to_string(),
        num(r.log_cum_cause_usage),
        num(r.log_cum_effect_usage),
        r.cause_theme.clone(),
        r.effect_theme.clone(),
        num(r.log_follower_count),
        r.day_of_week.to_string(),
        r.hour_utc.to_string(),
        r.months_elapsed.to_string(),
    ]
}

pub const FEATURE_HEADER: [&str; 15] = [
    "message_id",
    "y",
    "cause_concept",
    "effect_concept",
    "cause_in_degree",
    "effect_out_degree",
    "transitive_closure",
    "log_cum_cause_usage",
    "log_cum_effect_usage",
    "cause_theme",
    "effect_theme",
    "log_follower_count",
    "day_of_week",
    "hour_utc",
    "months_elapsed",
];

pub(crate) fn regress(ctx: &mut Context) -> Result<(Vec<PathBuf>, bool)> {
    let coded_file = coded_path(ctx)?;
    let nets_file = networks_path(ctx)?;
    let mut out = StageOutput::new(ctx, Stage::Regress)?;
    out.input_file("code/coded_units.jsonl", &coded_file)?;
    out.input_file("network/networks.json", &nets_file)?;
    out.input("corpus", ctx.corpus_digest()?);
    out.input("lexicon", ctx.lexicon_digest.clone());
    let coded: Vec<CodedUnit> = io::read_jsonl(&coded_file)?;
    let bundle = NetworkBundle::read(&nets_file)?;
    let monthly = bundle.strata(Stratifier::Month);
    if monthly.is_empty() {
        return Err(Error::Config("regression needs month networks; add the month stratifier".into()));
    }
    let options = FeatureOptions {
        epoch: bundle.epoch,
        window: ctx.cfg.regression.cum_window,
        originals_only: ctx.cfg.regression.originals_only,
    };
    let formula = ctx.cfg.regression.formula();
    let lexicon = ctx.lexicon.clone();
    let total = bundle.total()?.clone();
    let table = build_features(&coded, ctx.messages()?, &total, &monthly, &lexicon, &options)?;
    io::write_csv(&out.path("features.csv"), &FEATURE_HEADER, table.rows.iter().map(feature_csv_row))?;
    io::write_json(&out.path("funnel.json"), &table.funnel)?;
    let design = design_matrix(&table, &formula);
    let fit = fit_design(&design, &response(&table), &NbOptions::default())?;
    io::write_json(&out.path("fit.json"), &fit)?;
    let report = regression_report(&fit, &table);
    io::write_text(&out.path("table.md"), &report.markdown)?;
    io::write_text(&out.path("table.csv"), &report.csv)?;
    io::write_json(&out.path("regression_report.json"), &report)?;
    let converged = fit.converged;
    Ok((out.finish(ctx)?, converged))
}

/// An upstream artifact, or an error naming the stage that writes it.
pub(crate) fn stage_file(ctx: &Context, stage: Stage, name: &str) -> Result<PathBuf> {
    io::require(ctx.dir(stage).join(name), stage.as_str())
}
