//! NB2 likelihood and maximum-likelihood fit.
//!
//! Mean `μ = exp(Xβ)`, variance `μ + μ²/θ`. The fit alternates Fisher
//! scoring for β at fixed θ with a safeguarded Newton search on `ln θ`;
//! both steps backtrack until the log-likelihood does not decrease.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, spd_inverse};

use super::special::{digamma_diff, ln_gamma_ratio_scaled, trigamma_diff};
use super::{design_matrix, response, Design, FeatureTable, Formula};

/// Largest linear predictor accepted before `exp` is treated as overflow.
const MAX_ETA: f64 = 700.0;
/// Bounds on `ln θ` during the search.
const MIN_LOG_THETA: f64 = -20.0;
pub const MAX_LOG_THETA: f64 = 25.0;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub max_inner: usize,
}

impl Default for NbOptions {
    fn default() -> Self {
        NbOptions {
            max_iter: 100,
            tol: 1e-8,
            max_inner: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    /// Belongs to the period/trend control block.
    pub control: bool,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub z: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbFit {
    pub coefficients: Vec<Coefficient>,
    pub theta: f64,
    /// `1/θ`, the alternative dispersion convention.
    pub alpha: f64,
    pub theta_std_error: Option<f64>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood at the start and after every outer iteration.
    pub loglik_trace: Vec<f64>,
    pub diagnostics: Vec<String>,
    /// Design columns removed as empty or aliased.
    pub dropped_columns: Vec<String>,
}

impl NbFit {
    pub fn beta(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Fitted means `exp(Xβ)` on `design`.
    pub fn fitted_means(&self, design: &Design) -> Vec<f64> {
        design
            .linear_predictor(&self.beta())
            .into_iter()
            .map(f64::exp)
            .collect()
    }
}

fn check_dims(beta: &[f64], theta: f64, design: &Design, y: &[f64]) -> Result<()> {
    if beta.len() != design.n_cols || y.len() != design.n_rows {
        return Err(Error::Dimension(format!(
            "β has {} entries, X is {}×{}, y has {}",
            beta.len(),
            design.n_rows,
            design.n_cols,
            y.len()
        )));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Invalid(format!("θ must be positive, got {theta}")));
    }
    if let Some(bad) = y.iter().find(|v| **v < 0.0 || v.fract() != 0.0 || !v.is_finite()) {
        return Err(Error::Invalid(format!("counts must be non-negative integers, got {bad}")));
    }
    Ok(())
}

fn means(design: &Design, beta: &[f64]) -> Result<Vec<f64>> {
    design
        .linear_predictor(beta)
        .into_iter()
        .map(|eta| {
            if eta > MAX_ETA || !eta.is_finite() {
                Err(Error::Overflow)
            } else {
                Ok(eta.exp())
            }
        })
        .collect()
}

fn obs_loglik(y: f64, mu: f64, theta: f64, ln_fact: f64) -> f64 {
    let l1p = (mu / theta).ln_1p();
    ln_gamma_ratio_scaled(y as u64, theta) - ln_fact - theta * l1p + y * (mu.ln() - l1p)
}

fn ln_factorials(y: &[f64]) -> Vec<f64> {
    y.iter().map(|v| ln_gamma(v + 1.0)).collect()
}

fn loglik_at(mu: &[f64], y: &[f64], theta: f64, ln_fact: &[f64]) -> f64 {
    mu.iter()
        .zip(y)
        .zip(ln_fact)
        .map(|((m, v), f)| obs_loglik(*v, *m, theta, *f))
        .sum()
}

/// NB2 log-likelihood of counts `y` under `μ = exp(Xβ)`.
pub fn nb_loglik(beta: &[f64], theta: f64, design: &Design, y: &[f64]) -> Result<f64> {
    check_dims(beta, theta, design, y)?;
    let mu = means(design, beta)?;
    Ok(loglik_at(&mu, y, theta, &ln_factorials(y)))
}

/// Gradient of [`nb_loglik`] with respect to β.
pub fn nb_score(beta: &[f64], theta: f64, design: &Design, y: &[f64]) -> Result<Vec<f64>> {
    check_dims(beta, theta, design, y)?;
    let mu = means(design, beta)?;
    let mut g = vec![0.0; design.n_cols];
    for i in 0..design.n_rows {
        let r = theta * (y[i] - mu[i]) / (theta + mu[i]);
        for (gj, xj) in g.iter_mut().zip(design.row(i)) {
            *gj += r * xj;
        }
    }
    Ok(g)
}

/// First and second derivatives of the log-likelihood in `φ = ln θ`.
fn log_theta_derivatives(mu: &[f64], y: &[f64], theta: f64) -> (f64, f64) {
    let (mut g, mut h) = (0.0, 0.0);
    for (m, v) in mu.iter().zip(y) {
        let yi = *v as u64;
        let tm = theta + m;
        let l_t = digamma_diff(yi, theta) - (m / theta).ln_1p() + (m - v) / tm;
        let l_tt = trigamma_diff(yi, theta) + m / (theta * tm) + (v - m) / (tm * tm);
        g += theta * l_t;
        h += theta * theta * l_tt + theta * l_t;
    }
    (g, h)
}

/// Weighted least squares `(XᵀWX)⁻¹XᵀWz`, or `None` when `XᵀWX` is singular.
fn weighted_ls(design: &Design, w: &[f64], z: &[f64]) -> Option<Vec<f64>> {
    let p = design.n_cols;
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    for i in 0..design.n_rows {
        let x = design.row(i);
        for j in 0..p {
            let wx = w[i] * x[j];
            if wx == 0.0 {
                continue;
            }
            b[j] += wx * z[i];
            for k in 0..=j {
                a[j * p + k] += wx * x[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[k * p + j] = a[j * p + k];
        }
    }
    let l = cholesky(&a, p)?;
    Some(cholesky_solve(&l, p, &b))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct State<'a> {
    design: &'a Design,
    y: &'a [f64],
    ln_fact: Vec<f64>,
}

impl State<'_> {
    fn loglik(&self, beta: &[f64], theta: f64) -> Option<f64> {
        let mu = means(self.design, beta).ok()?;
        let ll = loglik_at(&mu, self.y, theta, &self.ln_fact);
        ll.is_finite().then_some(ll)
    }

    /// Poisson IRLS starting from `μ = y + 0.1`.
    fn poisson_start(&self) -> Option<Vec<f64>> {
        let mut eta: Vec<f64> = self.y.iter().map(|v| (v + 0.1).ln()).collect();
        let mut beta: Option<Vec<f64>> = None;
        for _ in 0..50 {
            let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
            let z: Vec<f64> = eta.iter().zip(&mu).zip(self.y).map(|((e, m), v)| e + (v - m) / m).collect();
            let next = weighted_ls(self.design, &mu, &z)?;
            eta = self.design.linear_predictor(&next);
            if eta.iter().any(|e| *e > MAX_ETA || !e.is_finite()) {
                return None;
            }
            let done = beta.as_ref().is_some_and(|b| max_abs_diff(b, &next) < 1e-10);
            beta = Some(next);
            if done {
                break;
            }
        }
        beta
    }

    /// Fisher scoring for β at fixed θ with step halving.
    fn update_beta(&self, beta: &[f64], theta: f64, ll: f64, opts: &NbOptions) -> Option<(Vec<f64>, f64)> {
        let mut beta = beta.to_vec();
        let mut ll = ll;
        for _ in 0..opts.max_inner {
            let eta = self.design.linear_predictor(&beta);
            let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
            let w: Vec<f64> = mu.iter().map(|m| m * theta / (theta + m)).collect();
            let z: Vec<f64> = eta.iter().zip(&mu).zip(self.y).map(|((e, m), v)| e + (v - m) / m).collect();
            let target = weighted_ls(self.design, &w, &z)?;
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<f64> = beta.iter().zip(&target).map(|(b, t)| b + step * (t - b)).collect();
                if let Some(lt) = self.loglik(&trial, theta) {
                    if lt >= ll {
                        accepted = Some((trial, lt));
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some((next, lt)) = accepted else { break };
            let delta = max_abs_diff(&beta, &next);
            beta = next;
            ll = lt;
            if delta < opts.tol * 1e-2 {
                break;
            }
        }
        Some((beta, ll))
    }

    /// Safeguarded Newton search on `ln θ` at fixed β.
    fn update_log_theta(&self, beta: &[f64], log_theta: f64, ll: f64) -> (f64, f64) {
        let mu = match means(self.design, beta) {
            Ok(mu) => mu,
            Err(_) => return (log_theta, ll),
        };
        let (mut phi, mut ll) = (log_theta, ll);
        for _ in 0..50 {
            let theta = phi.exp();
            let (g, h) = log_theta_derivatives(&mu, self.y, theta);
            let mut step = if h < 0.0 { -g / h } else { g.signum() };
            step = step.clamp(-2.0, 2.0);
            let mut moved = false;
            for _ in 0..MAX_HALVINGS {
                let trial = (phi + step).clamp(MIN_LOG_THETA, MAX_LOG_THETA);
                if trial == phi {
                    break;
                }
                let lt = loglik_at(&mu, self.y, trial.exp(), &self.ln_fact);
                if lt.is_finite() && lt >= ll {
                    moved = (trial - phi).abs() > 1e-14;
                    phi = trial;
                    ll = lt;
                    break;
                }
                step *= 0.5;
            }
            if !moved || step.abs() < 1e-12 {
                break;
            }
        }
        (phi, ll)
    }

    /// Observed information for `(β, ln θ)`.
    fn information(&self, beta: &[f64], theta: f64) -> Vec<f64> {
        let p = self.design.n_cols;
        let q = p + 1;
        let mu = means(self.design, beta).unwrap_or_default();
        let mut info = vec![0.0; q * q];
        for (i, (&m, &v)) in mu.iter().zip(self.y).enumerate() {
            let tm = theta + m;
            let w = theta * m * (theta + v) / (tm * tm);
            let cross = theta * m * (v - m) / (tm * tm);
            let x = self.design.row(i);
            for j in 0..p {
                for k in 0..=j {
                    info[j * q + k] += w * x[j] * x[k];
                }
                info[p * q + j] -= cross * x[j];
            }
        }
        let (_, h) = log_theta_derivatives(&mu, self.y, theta);
        info[p * q + p] = -h;
        for j in 0..q {
            for k in 0..j {
                info[k * q + j] = info[j * q + k];
            }
        }
        info
    }
}

/// Fits NB2 to a design matrix and count vector.
pub fn fit_design(design: &Design, y: &[f64], opts: &NbOptions) -> Result<NbFit> {
    let p = design.n_cols;
    if design.n_rows <= p {
        return Err(Error::Invalid(format!(
            "{} observations for {} coefficients",
            design.n_rows, p
        )));
    }
    check_dims(&vec![0.0; p], 1.0, design, y)?;
    let state = State {
        design,
        y,
        ln_fact: ln_factorials(y),
    };
    let mut diagnostics = Vec::new();
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let s2 = y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>() / (n - 1.0);
    let theta0 = if s2 > ybar {
        (ybar * ybar / (s2 - ybar)).max(0.1)
    } else {
        diagnostics.push("sample variance does not exceed the mean; θ initialized to 1e6".to_string());
        1e6
    };
    let unconverged = |beta: Vec<f64>, theta: f64, ll: f64, trace: Vec<f64>, iterations, diagnostics| NbFit {
        coefficients: design
            .names
            .iter()
            .zip(&design.controls)
            .zip(beta)
            .map(|((name, control), estimate)| Coefficient {
                name: name.clone(),
                control: *control,
                estimate,
                std_error: None,
                z: None,
                p: None,
            })
            .collect(),
        theta,
        alpha: 1.0 / theta,
        theta_std_error: None,
        log_likelihood: ll,
        aic: 2.0 * (p as f64 + 1.0) - 2.0 * ll,
        n_obs: y.len(),
        converged: false,
        iterations,
        loglik_trace: trace,
        diagnostics,
        dropped_columns: design.dropped.clone(),
    };

    let Some(mut beta) = state.poisson_start() else {
        diagnostics.push("design matrix is rank deficient or the Poisson start diverged".to_string());
        return Ok(unconverged(vec![0.0; p], theta0, f64::NAN, Vec::new(), 0, diagnostics));
    };
    let mut phi = theta0.ln();
    let Some(mut ll) = state.loglik(&beta, theta0) else {
        diagnostics.push("log-likelihood is not finite at the Poisson start".to_string());
        return Ok(unconverged(beta, theta0, f64::NAN, Vec::new(), 0, diagnostics));
    };
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let Some((next_beta, ll_beta)) = state.update_beta(&beta, phi.exp(), ll, opts) else {
            diagnostics.push("weighted information matrix became singular".to_string());
            return Ok(unconverged(beta, phi.exp(), ll, trace, iterations, diagnostics));
        };
        let (next_phi, ll_theta) = state.update_log_theta(&next_beta, phi, ll_beta);
        let db = max_abs_diff(&beta, &next_beta);
        let dphi = (next_phi - phi).abs();
        beta = next_beta;
        phi = next_phi;
        ll = ll_theta;
        trace.push(ll);
        if db < opts.tol && dphi < opts.tol {
            converged = true;
            break;
        }
    }
    let theta = phi.exp();
    if !converged {
        diagnostics.push(format!("no convergence after {} outer iterations", opts.max_iter));
        return Ok(unconverged(beta, theta, ll, trace, iterations, diagnostics));
    }

    // At the upper bound θ is not identified; report β errors at fixed θ.
    let at_bound = phi >= MAX_LOG_THETA - 1e-9;
    let q = p + 1;
    let info = state.information(&beta, theta);
    let (cov, dim) = if at_bound {
        diagnostics.push("θ reached its upper bound; data show no overdispersion".to_string());
        let block: Vec<f64> = (0..p).flat_map(|j| (0..p).map(move |k| (j, k))).map(|(j, k)| info[j * q + k]).collect();
        (spd_inverse(&block, p), p)
    } else {
        (spd_inverse(&info, q), q)
    };
    let Some(cov) = cov else {
        diagnostics.push("observed information is not positive definite".to_string());
        return Ok(unconverged(beta, theta, ll, trace, iterations, diagnostics));
    };
    let coefficients = design
        .names
        .iter()
        .zip(&design.controls)
        .enumerate()
        .map(|(j, (name, control))| {
            let se = cov[j * dim + j].sqrt();
            let (z, pv) = wald(beta[j], se);
            Coefficient {
                name: name.clone(),
                control: *control,
                estimate: beta[j],
                std_error: Some(se),
                z: Some(z),
                p: Some(pv),
            }
        })
        .collect();
    let theta_std_error = (!at_bound).then(|| theta * cov[p * q + p].sqrt());
    Ok(NbFit {
        coefficients,
        theta,
        alpha: 1.0 / theta,
        theta_std_error,
        log_likelihood: ll,
        aic: 2.0 * (p as f64 + 1.0) - 2.0 * ll,
        n_obs: y.len(),
        converged: true,
        iterations,
        loglik_trace: trace,
        diagnostics,
        dropped_columns: design.dropped.clone(),
    })
}

/// Fits the model selected by `formula` to a feature table.
pub fn fit_nb(table: &FeatureTable, formula: &Formula) -> Result<NbFit> {
    let design = design_matrix(table, formula);
    fit_design(&design, &response(table), &NbOptions::default())
}

fn wald(estimate: f64, se: f64) -> (f64, f64) {
    let z = estimate / se;
    (z, erfc(z.abs() / std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldTest {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p: f64,
}

/// Two-sided Wald tests of each coefficient against zero.
pub fn wald_tests(fit: &NbFit) -> Result<Vec<WaldTest>> {
    if !fit.converged {
        return Err(Error::Invalid("Wald tests need a converged fit".into()));
    }
    fit.coefficients
        .iter()
        .map(|c| {
            let se = c.std_error.unwrap_or(0.0);
            if se.is_nan() || se <= 0.0 {
                return Err(Error::ZeroStandardError(c.name.clone()));
            }
            let (z, p) = wald(c.estimate, se);
            Ok(WaldTest {
                name: c.name.clone(),
                estimate: c.estimate,
                std_error: se,
                z,
                p,
            })
        })
        .collect()
}

/// One NB2 draw with mean `mu` and dispersion `theta`, as a gamma–Poisson
/// mixture.
pub fn sample_nb<R: rand::Rng + ?Sized>(mu: f64, theta: f64, rng: &mut R) -> u64 {
    use rand_distr::{Distribution, Gamma, Poisson};
    let lambda = Gamma::new(theta, mu / theta).expect("valid gamma").sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("valid poisson").sample(rng) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_design(n: usize) -> Design {
        Design::from_rows(vec!["(Intercept)".into()], &vec![vec![1.0]; n])
    }

    #[test]
    fn hand_value_y0_mu1_theta1() {
        let d = intercept_design(3);
        let ll = nb_loglik(&[0.0], 1.0, &d, &[0.0, 0.0, 0.0]).unwrap();
        assert!((ll - 3.0 * 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn overflow_reported() {
        let d = intercept_design(2);
        let err = nb_loglik(&[1000.0], 1.0, &d, &[0.0, 1.0]).unwrap_err();
        assert_eq!(err.to_string(), "linear predictor overflow");
    }

    #[test]
    fn wald_rejects_zero_se() {
        let mut fit = fit_design(&intercept_design(6), &[0.0, 1.0, 3.0, 0.0, 7.0, 2.0], &NbOptions::default()).unwrap();
        assert!(fit.converged);
        fit.coefficients[0].std_error = Some(0.0);
        assert!(matches!(wald_tests(&fit), Err(Error::ZeroStandardError(_))));
    }

    #[test]
    fn wald_values() {
        assert_eq!(wald(0.0, 1.0).1, 1.0);
        assert!((wald(1.96, 1.0).1 - 0.05).abs() < 1e-3);
        assert!(wald(-2.0, 1.0).0 < 0.0);
    }
}
