//! Negative binomial (NB2) regression of retransmission counts.

pub mod features;
pub mod nb;
pub mod report;
pub mod special;

use serde::{Deserialize, Serialize};

pub use features::{
    build_features, design_matrix, response, CumulativeWindow, FeatureOptions, FeatureRow,
    FeatureTable, Formula, Funnel, Term,
};
pub use nb::{fit_nb, nb_loglik, nb_score, wald_tests, NbFit, NbOptions, WaldTest};
pub use report::{regression_report, RegressionReport};

/// Row-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub names: Vec<String>,
    /// Whether each column belongs to the period/trend control block.
    pub controls: Vec<bool>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub x: Vec<f64>,
    /// Columns removed because no row takes the level or they are
    /// aliased with earlier columns.
    pub dropped: Vec<String>,
}

impl Design {
    /// Builds a design from row-major values with every column outside the
    /// control block.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Self {
        let n_cols = names.len();
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged design rows");
        Design {
            controls: vec![false; n_cols],
            names,
            n_rows: rows.len(),
            n_cols,
            x: rows.iter().flatten().copied().collect(),
            dropped: Vec::new(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Linear predictor `Xβ`.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).iter().zip(beta).map(|(x, b)| x * b).sum())
            .collect()
    }
}
