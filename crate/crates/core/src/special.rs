//! Modified Bessel function of the second kind for real order.
//!
//! Temme's series for `x < 2`, Steed's continued fraction otherwise, both
//! evaluated at an order `μ ∈ [−1/2, 1/2)` and carried to `ν = μ + n` by
//! forward recurrence, which is stable for `K`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
const SERIES_LIMIT: f64 = 2.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `K_ν(x)` for `ν >= 0` and `x > 0`. Returns `NaN` outside that domain.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    if !(nu >= 0.0 && x > 0.0) || !nu.is_finite() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let steps = (nu + 0.5).floor() as usize;
    let mu = nu - steps as f64;
    let (mut k_mu, mut k_mu1) = if x < SERIES_LIMIT {
        temme_series(mu, x)
    } else {
        steed_fraction(mu, x)
    };
    let two_over_x = 2.0 / x;
    for i in 1..=steps {
        let next = (mu + i as f64) * two_over_x * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    k_mu
}

/// `(Γ1(μ), Γ2(μ), 1/Γ(1+μ), 1/Γ(1−μ))` with
/// `Γ1 = (1/Γ(1−μ) − 1/Γ(1+μ)) / 2μ` and `Γ2 = (1/Γ(1−μ) + 1/Γ(1+μ)) / 2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let plus = 1.0 / gamma(1.0 + mu);
    let minus = 1.0 / gamma(1.0 - mu);
    if mu.abs() < 1e-4 {
        // Taylor coefficients of 1/Γ(1+x) = 1 + γx + c2 x² + c3 x³ + c4 x⁴ + ...
        const C2: f64 = -0.655_878_071_520_253_8;
        const C3: f64 = -0.042_002_635_034_095_2;
        const C4: f64 = 0.166_538_611_382_291_5;
        let m2 = mu * mu;
        (
            -(EULER_GAMMA + C3 * m2),
            1.0 + C2 * m2 + C4 * m2 * m2,
            plus,
            minus,
        )
    } else {
        ((minus - plus) / (2.0 * mu), 0.5 * (minus + plus), plus, minus)
    }
}

/// `(K_μ(x), K_{μ+1}(x))` for `|μ| <= 1/2`, `x < 2`.
fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    let half_x = 0.5 * x;
    let pi_mu = PI * mu;
    let fact = if pi_mu.abs() < EPS {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let d = -half_x.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let e = e.exp();
    let mut p = 0.5 * e / gampl;
    let mut q = 0.5 / (e * gammi);
    let mut c = 1.0;
    let d = half_x * half_x;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= d / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

/// `(K_μ(x), K_{μ+1}(x))` for `|μ| <= 1/2`, `x >= 2`.
fn steed_fraction(mu: f64, x: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let h = a1 * h;
    let k_mu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    (k_mu, k_mu1)
}
