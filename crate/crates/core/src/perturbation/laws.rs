use serde::Serialize;
use statrs::function::erf::erfc;

/// Coefficients of `φ(x) = α₁x^{1/8} + α₂x^{1/4} + α₃x^{7/8}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiCoefficients {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl PhiCoefficients {
    /// `α₁ = C·4T/κ²`, `α₂ = C·32T^{5/2}/κ³`, `α₃ = C·4Ta/κ²`.
    pub fn new(ctg: f64, horizon: f64, kappa: f64, a: f64) -> Self {
        let k2 = kappa * kappa;
        Self {
            alpha1: ctg * 4.0 * horizon / k2,
            alpha2: ctg * 32.0 * horizon.powf(2.5) / (k2 * kappa),
            alpha3: ctg * 4.0 * horizon * a / k2,
        }
    }
}

pub fn phi(x: f64, alphas: &PhiCoefficients) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    alphas.alpha1 * x.powf(0.125) + alphas.alpha2 * x.powf(0.25) + alphas.alpha3 * x.powf(0.875)
}

/// `2·x^{3/4}·e^{−1/(2T x^{3/2})}`, the reflection bound on `P(sup|W| > x^{−3/4})`.
fn sup_term(x: f64, horizon: f64) -> f64 {
    2.0 * x.powf(0.75) * (-1.0 / (2.0 * horizon * x.powf(1.5))).exp()
}

/// `ζ(x) = 2x^{ν/8}/a^{2ν} + 2x^{3/4}e^{−1/(2T x^{3/2})}`; `ζ(0) = 0`.
pub fn zeta(x: f64, nu: f64, a: f64, horizon: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    2.0 * x.powf(nu / 8.0) / a.powf(2.0 * nu) + sup_term(x, horizon)
}

/// `P(E₁ᶜ) + P(E₂ᶜ) + 2√(2/π)x^{3/4}e^{−1/(2T x^{3/2})}` with the indices `ν`
/// and `ν*` of both gaps.
pub fn zeta_two_term(x: f64, nu: f64, nu_star: f64, a: f64, horizon: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let miss = |n: f64| x.powf(n / 8.0) / a.powf(2.0 * n);
    miss(nu) + miss(nu_star) + (2.0 / std::f64::consts::PI).sqrt() * sup_term(x, horizon)
}

/// `P(M_∞ < y) = (y/a)^{2ν}` on `[0, a]`.
pub fn infimum_law_cdf(y: f64, a: f64, nu: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if y >= a {
        1.0
    } else {
        (y / a).powf(2.0 * nu)
    }
}

/// `P(M_∞ ≥ x^{1/16}) = 1 − x^{ν/8}/a^{2ν}`.
pub fn event_probability(x: f64, nu: f64, a: f64) -> f64 {
    1.0 - infimum_law_cdf(x.powf(1.0 / 16.0), a, nu)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(sup_{s ≤ t} W_s ≤ x) = 2Φ(x/√t) − 1` for `x ≥ 0`.
pub fn sup_bm_cdf(x: f64, t: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (2.0 * normal_cdf(x / t.sqrt()) - 1.0).clamp(0.0, 1.0)
}

/// `2√(2/π)(√t/x)e^{−x²/2t}`, an upper bound on `P(sup_{s ≤ t}|W_s| > x)`.
pub fn sup_abs_tail_envelope(x: f64, t: f64) -> f64 {
    2.0 * (2.0 / std::f64::consts::PI).sqrt() * (t.sqrt() / x) * (-x * x / (2.0 * t)).exp()
}
