//! Coefficient table rendering. Markdown and CSV share one set of
//! formatted cells.

use serde::{Deserialize, Serialize};

use super::{FeatureTable, NbFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub term: String,
    pub block: String,
    pub estimate: String,
    pub std_error: String,
    pub p_value: String,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub converged: bool,
    pub rows: Vec<ReportRow>,
    pub caption: String,
    pub diagnostics: Vec<String>,
    pub markdown: String,
    pub csv: String,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"))
}

fn p_cell(v: Option<f64>) -> String {
    match v {
        None => "NA".to_string(),
        Some(p) if p < 0.001 => "<0.001".to_string(),
        Some(p) => format!("{p:.3}"),
    }
}

pub fn regression_report(fit: &NbFit, table: &FeatureTable) -> RegressionReport {
    let rows: Vec<ReportRow> = if fit.converged {
        fit.coefficients
            .iter()
            .map(|c| ReportRow {
                term: c.name.clone(),
                block: if c.control { "controls" } else { "main" }.to_string(),
                estimate: format!("{:.3}", c.estimate),
                std_error: cell(c.std_error),
                p_value: p_cell(c.p),
                stars: c.p.map_or("", stars).to_string(),
            })
            .collect()
    } else {
        Vec::new()
    };
    let theta_se = fit
        .theta_std_error
        .map_or_else(String::new, |se| format!(" (SE {se:.3})"));
    let caption = format!(
        "Observations: {}; Akaike Information Criterion: {:.1}; log-likelihood: {:.1}; \
         dispersion parameter θ: {:.3}{} (α = 1/θ: {:.3}). \
         Reference levels: cause theme {}, effect theme {}, day Sunday, hour 12 AM UTC. \
         Significance: * p < 0.05, ** p < 0.01, *** p < 0.001.",
        fit.n_obs,
        fit.aic,
        fit.log_likelihood,
        fit.theta,
        theta_se,
        fit.alpha,
        table.reference_themes.cause,
        table.reference_themes.effect,
    );

    let mut md = String::from("# Negative binomial regression of retransmission counts\n\n");
    if fit.converged {
        for (title, block) in [("Predictors", "main"), ("Controls", "controls")] {
            let block_rows: Vec<&ReportRow> = rows.iter().filter(|r| r.block == block).collect();
            if block_rows.is_empty() {
                continue;
            }
            md.push_str(&format!("## {title}\n\n| Term | Estimate | Std. Error | Pr(>|z|) | |\n|---|---:|---:|---:|---|\n"));
            for r in block_rows {
                md.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    r.term, r.estimate, r.std_error, r.p_value, r.stars
                ));
            }
            md.push('\n');
        }
        md.push_str(&caption);
        md.push('\n');
    } else {
        md.push_str("The model did not converge; the coefficient table is suppressed.\n");
    }
    if !fit.diagnostics.is_empty() {
        md.push_str("\nDiagnostics:\n\n");
        for d in &fit.diagnostics {
            md.push_str(&format!("- {d}\n"));
        }
    }
    if !fit.dropped_columns.is_empty() {
        md.push_str(&format!(
            "\nLevels with no observations (dropped): {}\n",
            fit.dropped_columns.join(", ")
        ));
    }
    let f = &table.funnel;
    md.push_str(&format!(
        "\nRows: {} messages, {} retransmissions dropped, {} without a coded unit, {} before the epoch, {} modelled.\n",
        f.messages, f.dropped_retransmissions, f.dropped_without_coded_unit, f.dropped_pre_epoch, f.rows
    ));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["term", "block", "estimate", "std_error", "p_value", "stars"])
        .expect("in-memory write");
    for r in &rows {
        w.serialize((&r.term, &r.block, &r.estimate, &r.std_error, &r.p_value, &r.stars))
            .expect("in-memory write");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");

    RegressionReport {
        converged: fit.converged,
        rows,
        caption,
        diagnostics: fit.diagnostics.clone(),
        markdown: md,
        csv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0005), "***");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.04), "*");
        assert_eq!(stars(0.05), "");
    }
}
