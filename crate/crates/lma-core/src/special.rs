//! Scalar special functions used by the hazard and its Jacobian.

use statrs::function::gamma::ln_gamma;

/// Digamma function ψ(x) = d/dx ln Γ(x) for x > 0.
///
/// Small arguments are shifted up with ψ(x) = ψ(x+1) − 1/x until x ≥ 10,
/// then the asymptotic expansion is applied. Accurate to ~1e−13 on the
/// domain reached from hazard Jacobians (arguments ≥ 1).
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma requires x > 0, got {x}");
    let mut shift = 0.0;
    let mut x = x;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    // Asymptotic series: ln x − 1/(2x) − Σ B_{2n} / (2n x^{2n}).
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    shift + x.ln() - 0.5 * inv - series
}

/// Generalised binomial coefficient C(y, k) for real y ≥ 0 and integer k ≥ 0.
///
/// Evaluates to 0 whenever y < k (the hazard vanishes there) and to 1 for
/// k = 0. Integer y with k ≤ 8 uses the exact product; everything else goes
/// through exp(lnΓ) so counts up to ~1e6 cannot overflow intermediate terms.
pub fn binomial(y: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if y < k as f64 {
        return 0.0;
    }
    if y.fract() == 0.0 && k <= 8 {
        let mut num = 1.0;
        for i in 0..k {
            num *= y - i as f64;
        }
        num / factorial(k)
    } else {
        (ln_gamma(y + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma(y - k as f64 + 1.0)).exp()
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Derivative of C(y, k) with respect to y: C(y, k)·(ψ(y+1) − ψ(y−k+1)).
///
/// Defined as 0 when y < k: the binomial is identically zero on that region,
/// so the one-sided derivative vanishes and the digamma pole is never hit.
/// Also 0 for k = 0 since the digamma difference cancels.
pub fn binomial_derivative(y: f64, k: u32) -> f64 {
    if k == 0 || y < k as f64 {
        return 0.0;
    }
    binomial(y, k) * (digamma(y + 1.0) - digamma(y - k as f64 + 1.0))
}
