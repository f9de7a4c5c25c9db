//! Numerically exact outage probability of the non-diversity FAS by adaptive
//! quadrature, plus the uncorrelated-MRC closed-form baseline.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::channel::{BranchSpec, LinkBudget, MU_SQ_GUARD};
use crate::error::{Error, Result};
use crate::specfun::{ln_gamma, marcum_q_pair, reg_lower_gamma, Accuracy};

/// Adaptive quadrature controls.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-9, max_subdivisions: 200 }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1 {
            return Err(Error::Domain("quadrature: tolerances must be > 0".into()));
        }
        Ok(Self { abs_tol, rel_tol, max_subdivisions })
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_6,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug)]
struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive quadrature of `f` on [a, b]: the interval with the
/// largest error estimate is bisected until the accumulated error meets
/// the tolerance or the subdivision budget runs out.
pub fn adaptive_quadrature<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Domain(format!("quadrature: bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value, error });
    let mut total_value = value;
    let mut total_error = error;
    for _ in 0..spec.max_subdivisions {
        if total_error <= spec.abs_tol.max(spec.rel_tol * total_value.abs()) {
            return Ok(total_value);
        }
        let worst = heap.pop().expect("heap cannot be empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(&mut f, worst.a, mid);
        let (rv, re) = gk15(&mut f, mid, worst.b);
        total_value += lv + rv - worst.value;
        total_error += le + re - worst.error;
        heap.push(Interval { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Interval { a: mid, b: worst.b, value: rv, error: re });
    }
    if total_error <= spec.abs_tol.max(spec.rel_tol * total_value.abs()) {
        Ok(total_value)
    } else {
        Err(Error::Quadrature { estimate: total_value, error_bound: total_error })
    }
}

/// CDF of the best-port gain of one FAS tube, F(x) = Pr{max_k |h_k|^2 < x}.
///
/// Single-integral form over the reference-port envelope. After the
/// substitution t = r^2 the integrand is
///
///   (m/w1)^m / Gamma(m) * t^{m-1} e^{-m t / w1}
///     * prod_{i>=2} [1 - Q_m( sqrt(2 m mu^2 t / (w1 (1-mu^2))),
///                             sqrt(2 m x / (w_i (1-mu^2))) )]
///
/// with w_k = omega_k^2. The prefactor and power are the ones that integrate
/// to the Nakagami power law (some published forms print 2^m m and r^{2m},
/// which does not normalize to a distribution).
pub fn fas_gain_cdf(
    ports: u32,
    m: u32,
    omega_sq: &[f64],
    mu: f64,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if ports < 1 || m < 1 {
        return Err(Error::Domain("fas_gain_cdf: ports and m must be >= 1".into()));
    }
    if omega_sq.len() != ports as usize {
        return Err(Error::Domain(format!(
            "fas_gain_cdf: got {} channel powers for {ports} ports",
            omega_sq.len()
        )));
    }
    if omega_sq.iter().any(|&o| !(o > 0.0)) {
        return Err(Error::Domain("fas_gain_cdf: channel powers must be > 0".into()));
    }
    let mu_sq = mu * mu;
    if !(0.0..1.0).contains(&mu) || 1.0 - mu_sq < MU_SQ_GUARD {
        return Err(Error::Domain(format!("fas_gain_cdf: mu must be in [0, 1), got {mu}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("fas_gain_cdf: threshold must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mf = m as f64;
    let w1 = omega_sq[0];
    if ports == 1 {
        return reg_lower_gamma(mf, mf * x / w1);
    }
    if mu == 0.0 {
        // Marcum factors collapse to independent per-port CDFs
        let mut prod = 1.0;
        for &w in omega_sq {
            prod *= reg_lower_gamma(mf, mf * x / w)?;
        }
        return Ok(prod);
    }

    // distinct channel powers among ports 2..L, with multiplicities,
    // so equal-power tubes cost one Marcum evaluation per node
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for &w in &omega_sq[1..] {
        match groups.iter_mut().find(|(wg, _)| *wg == w) {
            Some((_, count)) => *count += 1.0,
            None => groups.push((w, 1.0)),
        }
    }
    let b_vals: Vec<(f64, f64)> = groups
        .iter()
        .map(|&(w, count)| ((2.0 * mf * x / (w * (1.0 - mu_sq))).sqrt(), count))
        .collect();

    let ln_pref = mf * (mf / w1).ln() - ln_gamma(mf)?;
    let a_scale = 2.0 * mf * mu_sq / (w1 * (1.0 - mu_sq));
    let acc = Accuracy::default();
    let failure: RefCell<Option<Error>> = RefCell::new(None);

    let integrand = |t: f64| -> f64 {
        let mut ln_f = ln_pref - mf * t / w1;
        if m > 1 {
            if t <= 0.0 {
                return 0.0;
            }
            ln_f += (mf - 1.0) * t.ln();
        }
        let a = if t > 0.0 { (a_scale * t).sqrt() } else { 0.0 };
        for &(b, count) in &b_vals {
            match marcum_q_pair(m, a, b, &acc) {
                Ok((_, complement)) => {
                    if complement <= 0.0 {
                        return 0.0;
                    }
                    ln_f += count * complement.ln();
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return 0.0;
                }
            }
        }
        ln_f.exp()
    };

    let value = adaptive_quadrature(integrand, 0.0, x, quad)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Outage probability of the non-diversity FAS: Pr{snr_bar * g_FAS < gamma_th}.
pub fn op_fas_exact(
    ports: u32,
    m: u32,
    omega_sq: &[f64],
    mu: f64,
    link: &LinkBudget,
    quad: &QuadratureSpec,
) -> Result<f64> {
    fas_gain_cdf(ports, m, omega_sq, mu, link.threshold_ratio(), quad)
}

/// CDF of the equivalent channel gain of one sub-FAS branch.
pub fn branch_cdf(x: f64, branch: &BranchSpec, quad: &QuadratureSpec) -> Result<f64> {
    fas_gain_cdf(branch.ports, branch.m, &branch.omega_sq, branch.mu, x, quad)
}

/// Closed-form outage probability for maximum-ratio combining over N
/// uncorrelated Nakagami-m antennas: the combined gain is Gamma(N m, w/m).
pub fn op_mrc(antennas: u32, m: u32, omega_sq: f64, link: &LinkBudget) -> Result<f64> {
    if antennas < 1 || m < 1 {
        return Err(Error::Domain("op_mrc: antennas and m must be >= 1".into()));
    }
    if !(omega_sq > 0.0) {
        return Err(Error::Domain("op_mrc: channel power must be > 0".into()));
    }
    let mf = m as f64;
    reg_lower_gamma((antennas * m) as f64, mf * link.threshold_ratio() / omega_sq)
}
