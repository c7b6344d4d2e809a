use discourse_core::regression::nb::{fit_design, sample_nb, NbOptions};
use discourse_core::regression::{nb_loglik, nb_score, Design};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// Intercept plus one standard-normal covariate and one binary covariate.
fn simulate(n: usize, beta: &[f64; 3], theta: Option<f64>, seed: u64) -> (Design, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x1: f64 = StandardNormal.sample(&mut rng);
        let x2 = f64::from(u8::from(rng.gen_bool(0.3)));
        let mu = (beta[0] + beta[1] * x1 + beta[2] * x2).exp();
        let count = match theta {
            Some(t) => sample_nb(mu, t, &mut rng),
            None => Poisson::new(mu).unwrap().sample(&mut rng) as u64,
        };
        rows.push(vec![1.0, x1, x2]);
        y.push(count as f64);
    }
    let names = ["(Intercept)", "x1", "x2"].map(String::from).to_vec();
    (Design::from_rows(names, &rows), y)
}

#[test]
fn score_matches_central_differences() {
    for seed in 0..5 {
        let (d, y) = simulate(300, &[0.3, -0.7, 0.4], Some(1.3), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let beta: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let theta = rng.gen_range(0.3..3.0);
        let g = nb_score(&beta, theta, &d, &y).unwrap();
        let h = 1e-5;
        for j in 0..3 {
            let (mut up, mut dn) = (beta.clone(), beta.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (nb_loglik(&up, theta, &d, &y).unwrap() - nb_loglik(&dn, theta, &d, &y).unwrap()) / (2.0 * h);
            let rel = (g[j] - fd).abs() / g[j].abs().max(1e-8);
            assert!(rel < 1e-4, "seed {seed} coef {j}: analytic {} fd {fd}", g[j]);
        }
    }
}

#[test]
fn poisson_limit_of_loglik() {
    let (d, y) = simulate(20, &[0.5, 0.3, -0.2], None, 9);
    let beta = [0.4, 0.2, -0.1];
    let eta = d.linear_predictor(&beta);
    let poisson: f64 = eta
        .iter()
        .zip(&y)
        .map(|(e, v)| v * e - e.exp() - statrs::function::gamma::ln_gamma(v + 1.0))
        .sum();
    let nb = nb_loglik(&beta, 1e8, &d, &y).unwrap();
    assert!((nb - poisson).abs() < 1e-4, "nb {nb} poisson {poisson}");
}

#[test]
fn duplicated_observation_doubles_its_contribution() {
    let d1 = Design::from_rows(vec!["a".into(), "b".into()], &[vec![1.0, 0.4]]);
    let d2 = Design::from_rows(vec!["a".into(), "b".into()], &[vec![1.0, 0.4], vec![1.0, 0.4]]);
    let one = nb_loglik(&[0.2, 1.1], 0.8, &d1, &[3.0]).unwrap();
    let two = nb_loglik(&[0.2, 1.1], 0.8, &d2, &[3.0, 3.0]).unwrap();
    assert!((two - 2.0 * one).abs() < 1e-12);
}

#[test]
fn intercept_only_fits_sample_mean() {
    for seed in 0..5 {
        let (full, y) = simulate(2000, &[0.8, 0.5, 0.0], Some(0.6), seed);
        let rows: Vec<Vec<f64>> = (0..full.n_rows).map(|_| vec![1.0]).collect();
        let d = Design::from_rows(vec!["(Intercept)".into()], &rows);
        let fit = fit_design(&d, &y, &NbOptions::default()).unwrap();
        assert!(fit.converged);
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        let mean = fit.coefficients[0].estimate.exp();
        assert!((mean - ybar).abs() < 1e-10 * ybar.max(1.0), "{mean} vs {ybar}");
    }
}

#[test]
fn outer_iterations_never_decrease_loglik() {
    let (d, y) = simulate(3000, &[0.5, -1.0, 0.3], Some(0.6), 4);
    let fit = fit_design(&d, &y, &NbOptions::default()).unwrap();
    assert!(fit.converged);
    for w in fit.loglik_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-10, "{} then {}", w[0], w[1]);
    }
    assert!((fit.aic - (2.0 * 4.0 - 2.0 * fit.log_likelihood)).abs() < 1e-9);
    assert!(fit.coefficients.iter().all(|c| c.std_error.unwrap() > 0.0));
}

#[test]
fn poisson_data_give_large_theta() {
    for seed in 0..3 {
        let (d, y) = simulate(5000, &[0.5, -0.5, 0.2], None, 50 + seed);
        let fit = fit_design(&d, &y, &NbOptions::default()).unwrap();
        assert!(fit.converged, "{:?}", fit.diagnostics);
        assert!(fit.theta >= 100.0, "θ̂ = {}", fit.theta);
    }
}

#[test]
fn shifting_a_predictor_keeps_fitted_means() {
    let (d, y) = simulate(2000, &[0.5, -1.0, 0.3], Some(0.8), 12);
    let fit = fit_design(&d, &y, &NbOptions::default()).unwrap();
    let mut shifted = d.clone();
    for i in 0..shifted.n_rows {
        shifted.x[i * 3 + 1] += 7.5;
    }
    let fit2 = fit_design(&shifted, &y, &NbOptions::default()).unwrap();
    for (a, b) in fit.fitted_means(&d).iter().zip(fit2.fitted_means(&shifted)) {
        assert!((a - b).abs() < 1e-8 * a.max(1.0), "{a} vs {b}");
    }
    assert!((fit.coefficients[1].estimate - fit2.coefficients[1].estimate).abs() < 1e-8);
}

#[test]
fn fits_are_deterministic() {
    let (d, y) = simulate(1500, &[0.5, -1.0, 0.3], Some(0.6), 21);
    let a = fit_design(&d, &y, &NbOptions::default()).unwrap();
    let b = fit_design(&d, &y, &NbOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn wald_interval_coverage_over_twenty_seeds() {
    let truth = [0.5, -1.0, 0.4];
    let mut covered = [0usize; 3];
    for seed in 0..20 {
        let (d, y) = simulate(20_000, &truth, Some(0.6), 1000 + seed);
        let fit = fit_design(&d, &y, &NbOptions::default()).unwrap();
        assert!(fit.converged);
        for j in 0..3 {
            let c = &fit.coefficients[j];
            if (c.estimate - truth[j]).abs() <= 1.959_963_984_540_054 * c.std_error.unwrap() {
                covered[j] += 1;
            }
        }
    }
    for (j, c) in covered.iter().enumerate() {
        let rate = *c as f64 / 20.0;
        assert!((0.85..=1.0).contains(&rate), "coefficient {j}: coverage {rate}");
    }
}
