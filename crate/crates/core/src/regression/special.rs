//! Digamma and trigamma for positive real arguments.

/// ψ(x) for x > 0, by upward recurrence to x ≥ 10 and the asymptotic series.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// ψ′(x) for x > 0.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))))
}

/// ln Γ(y + θ) − ln Γ(θ) for a non-negative integer count `y`.
pub fn ln_gamma_ratio(y: u64, theta: f64) -> f64 {
    if y < 64 {
        (0..y).map(|k| (theta + k as f64).ln()).sum()
    } else {
        statrs::function::gamma::ln_gamma(y as f64 + theta) - statrs::function::gamma::ln_gamma(theta)
    }
}

/// ln Γ(y + θ) − ln Γ(θ) − y·ln θ, which stays accurate as θ grows.
pub fn ln_gamma_ratio_scaled(y: u64, theta: f64) -> f64 {
    if y < 64 {
        (0..y).map(|k| (k as f64 / theta).ln_1p()).sum()
    } else {
        ln_gamma_ratio(y, theta) - y as f64 * theta.ln()
    }
}

/// ψ(y + θ) − ψ(θ).
pub fn digamma_diff(y: u64, theta: f64) -> f64 {
    if y < 64 {
        (0..y).map(|k| 1.0 / (theta + k as f64)).sum()
    } else {
        digamma(y as f64 + theta) - digamma(theta)
    }
}

/// ψ′(y + θ) − ψ′(θ).
pub fn trigamma_diff(y: u64, theta: f64) -> f64 {
    if y < 64 {
        -(0..y).map(|k| (theta + k as f64).powi(-2)).sum::<f64>()
    } else {
        trigamma(y as f64 + theta) - trigamma(theta)
    }
}
