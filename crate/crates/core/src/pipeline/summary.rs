//! The `report` stage: one JSON and one markdown document bundling the
//! statistics, degree table, narrative tables, PCA, and regression.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::extraction::ExtractionReport;
use crate::lexicon::CodingReport;
use crate::network::{degree_table, DegreeRow, Stratifier};
use crate::pca::PcaResult;
use crate::regression::report::{RegressionReport, ReportRow};
use crate::regression::nb::NbFit;
use crate::regression::Funnel;
use crate::stats::Descriptives;

use super::io::{self, num, round_sig};
use super::stages::{stage_file, stratifier_of, top_cells, Context, NetworkBundle, StageOutput, StatsReport, Table2Row};
use super::Stage;

/// Scree entries shown in the report.
const SCREE: usize = 5;
/// Heaviest cells listed per score graph.
const SCORE_CELLS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeRow {
    pub rank: usize,
    pub cause: String,
    pub effect: String,
    pub count: u64,
    /// Share of all coded units.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyNarrative {
    pub month: String,
    pub cause: String,
    pub effect: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub messages: usize,
    pub units: usize,
    pub coded_units: usize,
    pub coverage: Option<f64>,
    pub multi_connective: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCell {
    pub cause: String,
    pub effect: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSummary {
    pub graph_labels: Vec<String>,
    pub scree: Vec<f64>,
    /// `loadings[k][i]`: graph `i` on retained component `k`.
    pub loadings: Vec<Vec<f64>>,
    /// Heaviest positive cells of each retained score graph.
    pub score_cells: Vec<Vec<ScoreCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSummary {
    pub converged: bool,
    pub n_obs: usize,
    pub theta: f64,
    pub alpha: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub caption: String,
    pub rows: Vec<ReportRow>,
    pub diagnostics: Vec<String>,
    pub funnel: Funnel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub corpus: CorpusSummary,
    /// Number of networks per stratifier.
    pub network_counts: BTreeMap<String, usize>,
    pub descriptives: Descriptives,
    pub statistics: Vec<Table2Row>,
    pub degree_table: Vec<DegreeRow>,
    pub top_narratives: Vec<NarrativeRow>,
    pub monthly_narratives: Vec<MonthlyNarrative>,
    pub pca: PcaSummary,
    pub regression: RegressionSummary,
}

fn stratifier_key(s: Stratifier) -> &'static str {
    match s {
        Stratifier::Total => "total",
        Stratifier::Month => "month",
        Stratifier::Role => "role",
        Stratifier::RoleGroup => "role_group",
    }
}

pub(crate) fn report(ctx: &mut Context) -> Result<Vec<PathBuf>> {
    let extraction_file = stage_file(ctx, Stage::Extract, "extraction_report.json")?;
    let coding_file = stage_file(ctx, Stage::Code, "coding_report.json")?;
    let nets_file = stage_file(ctx, Stage::Network, "networks.json")?;
    let stats_file = stage_file(ctx, Stage::Stats, "stats.json")?;
    let pca_file = stage_file(ctx, Stage::Pca, "pca.json")?;
    let fit_file = stage_file(ctx, Stage::Regress, "fit.json")?;
    let reg_file = stage_file(ctx, Stage::Regress, "regression_report.json")?;
    let funnel_file = stage_file(ctx, Stage::Regress, "funnel.json")?;

    let mut out = StageOutput::new(ctx, Stage::Report)?;
    for (label, path) in [
        ("extract/extraction_report.json", &extraction_file),
        ("code/coding_report.json", &coding_file),
        ("network/networks.json", &nets_file),
        ("stats/stats.json", &stats_file),
        ("pca/pca.json", &pca_file),
        ("regress/fit.json", &fit_file),
        ("regress/regression_report.json", &reg_file),
        ("regress/funnel.json", &funnel_file),
    ] {
        out.input_file(label, path)?;
    }
    let extraction: ExtractionReport = io::read_json(&extraction_file)?;
    let coding: CodingReport = io::read_json(&coding_file)?;
    let bundle = NetworkBundle::read(&nets_file)?;
    let stats: StatsReport = io::read_json(&stats_file)?;
    let pca: PcaResult = io::read_json(&pca_file)?;
    let fit: NbFit = io::read_json(&fit_file)?;
    let reg: RegressionReport = io::read_json(&reg_file)?;
    let funnel: Funnel = io::read_json(&funnel_file)?;

    let epoch = bundle.epoch;
    let total = bundle.total()?;
    let grand = total.total_weight().max(1) as f64;
    let cells = top_cells(total, ctx.cfg.top_narratives);
    let top_narratives: Vec<NarrativeRow> = cells
        .iter()
        .enumerate()
        .map(|(r, (i, j, w))| NarrativeRow {
            rank: r + 1,
            cause: total.nodes()[*i].clone(),
            effect: total.nodes()[*j].clone(),
            count: *w,
            percent: round_sig(100.0 * *w as f64 / grand),
        })
        .collect();
    let monthly_narratives = bundle
        .strata(Stratifier::Month)
        .iter()
        .flat_map(|m| {
            cells.iter().map(move |(i, j, _)| MonthlyNarrative {
                month: m.stratum.label(epoch),
                cause: total.nodes()[*i].clone(),
                effect: total.nodes()[*j].clone(),
                count: m.weight(*i, *j),
            })
        })
        .collect();
    let mut network_counts = BTreeMap::new();
    for n in &bundle.networks {
        *network_counts
            .entry(stratifier_key(stratifier_of(n.stratum)).to_string())
            .or_insert(0) += 1;
    }

    let p = pca.p();
    let retained = pca.score_graphs.len();
    let reported = pca.reported_loadings();
    let pca_summary = PcaSummary {
        graph_labels: pca.graph_labels.clone(),
        scree: pca.eigenvalues.iter().take(SCREE).copied().collect(),
        loadings: (0..retained)
            .map(|k| (0..p).map(|i| reported[i * p + k]).collect())
            .collect(),
        score_cells: pca
            .score_graphs
            .iter()
            .map(|g| {
                let n = g.nodes.len();
                let mut cells: Vec<(usize, usize, f64)> = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .filter(|(i, j)| i != j)
                    .map(|(i, j)| (i, j, g.weight(i, j)))
                    .filter(|c| c.2 > 0.0)
                    .collect();
                cells.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
                cells
                    .into_iter()
                    .take(SCORE_CELLS)
                    .map(|(i, j, w)| ScoreCell {
                        cause: g.nodes[i].clone(),
                        effect: g.nodes[j].clone(),
                        weight: w,
                    })
                    .collect()
            })
            .collect(),
    };

    let report = Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        corpus: CorpusSummary {
            messages: extraction.messages,
            units: extraction.units,
            coded_units: coding.coded,
            coverage: coding.coverage,
            multi_connective: extraction.multi_connective,
            skipped: extraction.skipped_total(),
        },
        network_counts,
        descriptives: stats.descriptives.clone(),
        statistics: stats.table.clone(),
        degree_table: degree_table(total),
        top_narratives,
        monthly_narratives,
        pca: pca_summary,
        regression: RegressionSummary {
            converged: fit.converged,
            n_obs: fit.n_obs,
            theta: fit.theta,
            alpha: fit.alpha,
            log_likelihood: fit.log_likelihood,
            aic: fit.aic,
            caption: reg.caption.clone(),
            rows: reg.rows.clone(),
            diagnostics: reg.diagnostics.clone(),
            funnel,
        },
    };
    io::write_json(&out.path("report.json"), &report)?;
    io::write_text(&out.path("report.md"), &markdown(&report, &reg))?;
    io::write_csv(
        &out.path("top_narratives.csv"),
        &["rank", "cause", "effect", "count", "percent"],
        report.top_narratives.iter().map(|r| {
            vec![
                r.rank.to_string(),
                r.cause.clone(),
                r.effect.clone(),
                r.count.to_string(),
                num(r.percent),
            ]
        }),
    )?;
    out.finish(ctx)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"))
}

fn p_cell(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else if p > 0.999 {
        ">0.999".to_string()
    } else {
        format!("{p:.3}")
    }
}

fn markdown(r: &Report, reg: &RegressionReport) -> String {
    let mut s = String::from("# Causal narrative report\n\n");
    let c = &r.corpus;
    let _ = writeln!(
        s,
        "{} messages, {} causal units ({} with several connectives), {} skipped, {} coded (coverage {}).\n",
        c.messages,
        c.units,
        c.multi_connective,
        c.skipped,
        c.coded_units,
        opt(c.coverage)
    );
    let counts: Vec<String> = r
        .network_counts
        .iter()
        .map(|(k, v)| format!("{v} {k}"))
        .collect();
    let _ = writeln!(s, "Networks: {}.\n", counts.join(", "));

    s.push_str("## Conditional uniform graph tests (combined dichotomized network)\n\n");
    s.push_str("| Statistic | Conditioned On | Obs. Value | Pr(X≥Obs) | Pr(X≤Obs) |\n|---|---|---:|---:|---:|\n");
    for row in &r.statistics {
        let _ = writeln!(
            s,
            "| {} | {} | {:.3} | {} | {} |",
            row.statistic,
            row.conditioning,
            row.observed,
            p_cell(row.p_ge),
            p_cell(row.p_le)
        );
    }
    let d = &r.descriptives;
    let _ = writeln!(
        s,
        "\nDensity {}, mean degree {:.3}, {} arcs over {} concepts.\n",
        opt(d.density),
        d.mean_degree,
        d.arcs,
        d.nodes
    );

    s.push_str("## Concept degrees (valued total network)\n\n| Concept | Out-Degree | In-Degree | Net Degree (Out-In) |\n|---|---:|---:|---:|\n");
    for row in &r.degree_table {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} |",
            row.concept, row.out_degree, row.in_degree, row.net_degree
        );
    }

    let _ = writeln!(
        s,
        "\n## Most used causal units\n\n| Rank | Cause | Effect | Count | Percent |\n|---:|---|---|---:|---:|"
    );
    for row in &r.top_narratives {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {:.2} |",
            row.rank, row.cause, row.effect, row.count, row.percent
        );
    }
    if !r.monthly_narratives.is_empty() {
        s.push_str("\nMonthly counts of these narratives are in `network/monthly_narratives.csv`.\n");
    }

    s.push_str("\n## Network principal components\n\n");
    let scree: Vec<String> = r.pca.scree.iter().map(|v| format!("{v:.4}")).collect();
    let _ = writeln!(s, "Leading eigenvalues: {}.\n", scree.join(", "));
    let mut header = String::from("| Graph |");
    let mut rule = String::from("|---|");
    for k in 0..r.pca.loadings.len() {
        let _ = write!(header, " PC{} |", k + 1);
        rule.push_str("---:|");
    }
    let _ = writeln!(s, "{header}\n{rule}");
    for (i, label) in r.pca.graph_labels.iter().enumerate() {
        let _ = write!(s, "| {label} |");
        for comp in &r.pca.loadings {
            let _ = write!(s, " {:.3} |", comp[i]);
        }
        s.push('\n');
    }
    for (k, cells) in r.pca.score_cells.iter().enumerate() {
        let list: Vec<String> = cells
            .iter()
            .map(|c| format!("{} → {} ({:.2})", c.cause, c.effect, c.weight))
            .collect();
        let _ = writeln!(s, "\nScore graph {} strongest cells: {}.", k + 1, list.join("; "));
    }

    s.push_str("\n## Retransmission model\n\n");
    // Drop the regression table's own title line.
    let body = reg.markdown.split_once('\n').map_or("", |(_, rest)| rest);
    for line in body.trim_start().lines() {
        if line.starts_with("## ") {
            s.push('#');
        }
        s.push_str(line);
        s.push('\n');
    }
    s
}
