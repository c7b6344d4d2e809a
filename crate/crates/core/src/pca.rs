//! Network principal component analysis over cell-aligned valued graphs.
//!
//! Each graph is vectorized over its off-diagonal cells; the `p × p` graph
//! covariance matrix `C` is eigendecomposed as `C = W Λ Wᵀ`. Column `k` of
//! `W` holds the loadings of the graphs on component `k`, and the score
//! graph of component `k` is `Σᵢ W[i][k] · Gᵢ`.

use serde::{Deserialize, Serialize};

use crate::corpus::Epoch;
use crate::error::{Error, Result};
use crate::network::ConceptNet;

/// Symmetry tolerance for [`eigen_sym`] inputs, relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Jacobi stops once every off-diagonal entry is below this, relative to
/// the Frobenius norm of the input.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Vectorized off-diagonal cells, row-major.
fn off_diagonal(net: &ConceptNet) -> Vec<f64> {
    let n = net.n();
    let mut v = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                v.push(net.weight(i, j) as f64);
            }
        }
    }
    v
}

fn check_aligned(nets: &[ConceptNet]) -> Result<()> {
    if nets.len() < 2 {
        return Err(Error::Invalid(format!(
            "network PCA needs at least 2 graphs, got {}",
            nets.len()
        )));
    }
    for net in &nets[1..] {
        if !net.same_nodes(&nets[0]) {
            return Err(Error::MismatchedNodes {
                stratum: net.stratum.to_string(),
            });
        }
    }
    if nets[0].n() < 2 {
        return Err(Error::DegenerateGraph { n: nets[0].n(), min: 2 });
    }
    Ok(())
}

/// `p × p` covariance of the graphs' off-diagonal cells (divisor `N - 1`),
/// row-major.
pub fn graph_covariance(nets: &[ConceptNet]) -> Result<Vec<f64>> {
    check_aligned(nets)?;
    let vectors: Vec<Vec<f64>> = nets.iter().map(off_diagonal).collect();
    let cells = vectors[0].len();
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mean = v.iter().sum::<f64>() / cells as f64;
            v.iter().map(|x| x - mean).collect()
        })
        .collect();
    let p = nets.len();
    let mut c = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
            let cov = s / (cells - 1) as f64;
            c[i * p + j] = cov;
            c[j * p + i] = cov;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Row-major `n × n`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.values.len();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi
/// rotations. Eigenvalues are returned in descending order; each
/// eigenvector is signed so its largest-magnitude entry is positive.
pub fn eigen_sym(a: &[f64], n: usize) -> Result<SymEigen> {
    if a.len() != n * n {
        return Err(Error::Dimension(format!("{} entries for a {n}×{n} matrix", a.len())));
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((a[i * n + j] - a[j * n + i]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { deviation: worst });
    }

    let mut m = a.to_vec();
    // Symmetrize exactly so rotations see one value per pair.
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let tol = OFF_DIAGONAL_TOL * norm.max(1.0);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let off = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .fold(0.0f64, |acc, (i, j)| acc.max(m[i * n + j].abs()));
        if off < tol {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = m[r * n + p];
                        let arq = m[r * n + q];
                        let new_rp = c * arp - s * arq;
                        let new_rq = s * arp + c * arq;
                        m[r * n + p] = new_rp;
                        m[p * n + r] = new_rp;
                        m[r * n + q] = new_rq;
                        m[q * n + r] = new_rq;
                    }
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y * n + y].total_cmp(&m[x * n + x]).then(x.cmp(&y)));
    let values: Vec<f64> = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        let col: Vec<f64> = (0..n).map(|i| v[i * n + old_col]).collect();
        let sign = sign_convention(&col);
        for i in 0..n {
            vectors[i * n + new_col] = sign * col[i];
        }
    }
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

/// `+1` if the first entry of (near-)maximal magnitude is positive, else `-1`.
fn sign_convention(col: &[f64]) -> f64 {
    let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lead = col
        .iter()
        .find(|x| x.abs() >= max - 1e-12)
        .copied()
        .unwrap_or(0.0);
    if lead < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcaOptions {
    /// Number of score graphs to build.
    pub components: usize,
    /// Build score graphs from mean-centered graphs instead of raw ones.
    pub centered_scores: bool,
    /// Report loadings multiplied by `sqrt(λ)`.
    pub scale_loadings: bool,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            components: 2,
            centered_scores: false,
            scale_loadings: false,
        }
    }
}

/// Real-valued graph over the shared node set; the diagonal is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreGraph {
    /// 1-based component number.
    pub component: usize,
    pub nodes: Vec<String>,
    /// Row-major `n × n`.
    pub weights: Vec<f64>,
}

impl ScoreGraph {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }

    /// Off-diagonal cell with the largest value.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let n = self.nodes.len();
        let mut best: Option<((usize, usize), f64)> = None;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = self.weight(i, j);
                if best.map_or(true, |(_, b)| w > b) {
                    best = Some(((i, j), w));
                }
            }
        }
        best.map(|(cell, _)| cell)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub graph_labels: Vec<String>,
    /// Row-major `p × p`.
    pub covariance: Vec<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Row-major `p × p`; column `k` holds the loadings on component `k`.
    pub loadings: Vec<f64>,
    pub score_graphs: Vec<ScoreGraph>,
    pub options: PcaOptions,
}

impl PcaResult {
    pub fn p(&self) -> usize {
        self.graph_labels.len()
    }

    pub fn loading(&self, graph: usize, component: usize) -> f64 {
        self.loadings[graph * self.p() + component]
    }

    /// Loadings as reported: scaled by `sqrt(max(λ, 0))` when requested.
    pub fn reported_loadings(&self) -> Vec<f64> {
        let p = self.p();
        let mut out = self.loadings.clone();
        if self.options.scale_loadings {
            for k in 0..p {
                let s = self.eigenvalues[k].max(0.0).sqrt();
                for i in 0..p {
                    out[i * p + k] *= s;
                }
            }
        }
        out
    }
}

pub fn network_pca(nets: &[ConceptNet], epoch: Epoch, options: PcaOptions) -> Result<PcaResult> {
    let covariance = graph_covariance(nets)?;
    let p = nets.len();
    if options.components > p {
        return Err(Error::Config(format!(
            "{} components requested from {p} graphs",
            options.components
        )));
    }
    let eig = eigen_sym(&covariance, p)?;

    let n = nets[0].n();
    let offsets: Vec<f64> = nets
        .iter()
        .map(|net| {
            if options.centered_scores {
                off_diagonal(net).iter().sum::<f64>() / (n * (n - 1)) as f64
            } else {
                0.0
            }
        })
        .collect();
    let score_graphs = (0..options.components)
        .map(|k| {
            let mut weights = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    weights[a * n + b] = nets
                        .iter()
                        .enumerate()
                        .map(|(i, net)| eig.vectors[i * p + k] * (net.weight(a, b) as f64 - offsets[i]))
                        .sum();
                }
            }
            ScoreGraph {
                component: k + 1,
                nodes: nets[0].nodes().to_vec(),
                weights,
            }
        })
        .collect();

    Ok(PcaResult {
        graph_labels: nets.iter().map(|n| n.stratum.label(epoch)).collect(),
        covariance,
        eigenvalues: eig.values,
        loadings: eig.vectors,
        score_graphs,
        options,
    })
}

/// The `k` largest eigenvalues.
pub fn scree(result: &PcaResult, k: usize) -> Result<&[f64]> {
    let p = result.eigenvalues.len();
    if k > p {
        return Err(Error::ScreeOutOfRange { k, p });
    }
    Ok(&result.eigenvalues[..k])
}
