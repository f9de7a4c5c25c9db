//! Special functions backing the analytic outage expressions: J0, ln-gamma,
//! the regularized incomplete gamma function and the integer-order Marcum Q.
//!
//! Everything here is pure and allocation-free; all routines target relative
//! accuracy well below the tolerances used by the analysis layers.

use crate::error::{Error, Result};

/// Truncation control for series evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Accuracy {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for Accuracy {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_terms: 10_000 }
    }
}

impl Accuracy {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || max_terms < 1 {
            return Err(Error::Domain("rel_tol must be > 0 and max_terms >= 1".into()));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

/// Zero-order Bessel function of the first kind.
///
/// Power series below the cancellation limit, Hankel asymptotic expansion
/// beyond it. Absolute error stays below 1e-10 for |x| <= 1e3.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j0: non-finite argument {x}")));
    }
    let ax = x.abs();
    if ax < 12.0 {
        Ok(j0_power_series(ax))
    } else {
        Ok(j0_asymptotic(ax))
    }
}

fn j0_power_series(x: f64) -> f64 {
    // J0(x) = sum_k (-x^2/4)^k / (k!)^2
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0f64;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) || k > 200.0 {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // Hankel expansion: J0(x) ~ sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)],
    // chi = x - pi/4, with coefficient magnitudes c_j = prod (2i-1)^2 / (j! 8^j).
    let chi = x - std::f64::consts::FRAC_PI_4;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut c = 1.0; // c_j
    let mut prev = f64::INFINITY;
    let mut xp = 1.0; // x^j
    for j in 1usize..40 {
        c *= ((2 * j - 1) as f64).powi(2) / (8.0 * j as f64);
        xp *= x;
        let t = c / xp;
        if t > prev {
            break; // asymptotic series started diverging
        }
        prev = t;
        if j % 2 == 1 {
            // odd j feeds Q with leading minus: -c1/x + c3/x^3 - ...
            let sign = if (j / 2) % 2 == 0 { -1.0 } else { 1.0 };
            q += sign * t;
        } else {
            // even j feeds P: 1 - c2/x^2 + c4/x^4 - ...
            let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            p += sign * t;
        }
        if t < 1e-18 {
            break;
        }
    }
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the Gamma function for x > 0 (Lanczos approximation).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma: argument must be finite and > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

const INCGAMMA_MAX_ITER: usize = 1_000;

/// Regularized lower incomplete gamma function P(a, x) = gamma(a, x) / Gamma(a).
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(reg_gamma_pair(a, x)?.0)
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(reg_gamma_pair(a, x)?.1)
}

/// Both P(a, x) and Q(a, x), each relatively accurate on its small side.
///
/// Series expansion for x < a + 1, Lentz continued fraction otherwise.
pub fn reg_gamma_pair(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !a.is_finite() || !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("reg_gamma_pair: need a > 0, x >= 0, got a={a}, x={x}")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    let ln_prefactor = -x + a * x.ln() - ln_gamma_unchecked(a);
    let prefactor = ln_prefactor.exp();
    if x < a + 1.0 {
        let p = lower_series(a, x, prefactor)?;
        Ok((p, 1.0 - p))
    } else {
        let q = upper_cf(a, x, prefactor)?;
        Ok((1.0 - q, q))
    }
}

// P(a, x) = prefactor * sum_{n>=0} x^n / (a (a+1) ... (a+n))
fn lower_series(a: f64, x: f64, prefactor: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..INCGAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(prefactor * sum);
        }
    }
    Err(Error::Convergence("lower incomplete gamma series"))
}

// Q(a, x) via the modified Lentz continued fraction.
fn upper_cf(a: f64, x: f64, prefactor: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let b0 = x + 1.0 - a;
    let mut f = if b0.abs() < TINY { TINY } else { b0 };
    let mut c = f;
    let mut d = 0.0f64;
    for n in 1..=INCGAMMA_MAX_ITER {
        let nf = n as f64;
        let an = nf * (a - nf);
        let bn = x + 2.0 * nf + 1.0 - a;
        d = bn + an * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = bn + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(prefactor / f);
        }
    }
    Err(Error::Convergence("upper incomplete gamma continued fraction"))
}

/// Integer-order Marcum Q-function Q_m(a, b).
pub fn marcum_q(order: u32, a: f64, b: f64) -> Result<f64> {
    Ok(marcum_q_pair(order, a, b, &Accuracy::default())?.0)
}

/// Complement 1 - Q_m(a, b), relatively accurate even when Q_m is near 1.
pub fn marcum_q_complement(order: u32, a: f64, b: f64) -> Result<f64> {
    Ok(marcum_q_pair(order, a, b, &Accuracy::default())?.1)
}

/// Both Q_m(a, b) and its complement, as a Poisson mixture of incomplete
/// gamma pairs:
///
///   Q_m(a, b) = sum_{k>=0} e^{-a^2/2} (a^2/2)^k / k! * Q(m + k, b^2 / 2)
///
/// summed outward from the Poisson mode so every retained weight is
/// significant. Truncation keeps the discarded tail below `acc.rel_tol`
/// on both sides of the pair.
pub fn marcum_q_pair(order: u32, a: f64, b: f64, acc: &Accuracy) -> Result<(f64, f64)> {
    if order < 1 {
        return Err(Error::Domain("marcum_q: order must be >= 1".into()));
    }
    if !(a >= 0.0) || !a.is_finite() || !(b >= 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!("marcum_q: need a, b >= 0 and finite, got a={a}, b={b}")));
    }
    let m = order as f64;
    if b == 0.0 {
        return Ok((1.0, 0.0));
    }
    let lambda = 0.5 * a * a;
    let y = 0.5 * b * b;
    if lambda == 0.0 {
        let (p, q) = reg_gamma_pair(m, y)?;
        return Ok((q, p));
    }

    let k0 = lambda.floor();
    let w0 = (-lambda + k0 * lambda.ln() - ln_gamma_unchecked(k0 + 1.0)).exp();

    let mut acc_q = 0.0;
    let mut acc_p = 0.0;
    let mut terms = 0usize;

    // downward from the mode: weights are nonincreasing (k/lambda <= 1)
    let mut w = w0;
    let mut k = k0;
    loop {
        let (p, q) = reg_gamma_pair(m + k, y)?;
        acc_q += w * q;
        acc_p += w * p;
        terms += 1;
        if k == 0.0 || terms > acc.max_terms {
            break;
        }
        // everything strictly below k: at most k terms, each weight <= w*k/lambda;
        // Q(m+j, y) <= q for j < k, P is only bounded by 1
        let tail = w * (k / lambda) * k;
        if tail < 1e-18
            && tail * q <= acc.rel_tol * acc_q.max(f64::MIN_POSITIVE)
            && tail <= acc.rel_tol * acc_p.max(f64::MIN_POSITIVE)
        {
            break;
        }
        w *= k / lambda;
        k -= 1.0;
    }
    if terms > acc.max_terms {
        return Err(Error::Convergence("marcum_q poisson mixture (lower tail)"));
    }

    // upward from just above the mode
    let mut w = w0 * lambda / (k0 + 1.0);
    let mut k = k0 + 1.0;
    let mut prev_term_q = f64::INFINITY;
    while terms <= acc.max_terms {
        let (p, q) = reg_gamma_pair(m + k, y)?;
        let term_q = w * q;
        acc_q += term_q;
        acc_p += w * p;
        terms += 1;
        // stop only once the q-side terms are past their peak (q grows with k,
        // so the weight alone is not a safe proxy) and both sides are converged
        if w < 1e-18
            && term_q < prev_term_q
            && term_q <= acc.rel_tol * acc_q.max(f64::MIN_POSITIVE)
            && w * p <= acc.rel_tol * acc_p.max(f64::MIN_POSITIVE)
        {
            break;
        }
        prev_term_q = term_q;
        w *= lambda / (k + 1.0);
        k += 1.0;
    }
    if terms > acc.max_terms {
        return Err(Error::Convergence("marcum_q poisson mixture (upper tail)"));
    }

    Ok((acc_q.min(1.0), acc_p.min(1.0)))
}
