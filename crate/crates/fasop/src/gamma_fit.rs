//! Gamma approximation of branch and combined FAS gain distributions by
//! asymptotic matching: the fitted Gamma CDF reproduces the exact small-x
//! power-law asymptote of each branch, and branch fits combine into a single
//! Gamma shape for the branch-sum gain. Yields closed-form outage, its
//! high-SNR power law, diversity order and array gain.

use crate::channel::{branch_view, BranchSpec, FadingProfile, FasGeometry, LinkBudget};
use crate::error::{Error, Result};
use crate::specfun::{ln_gamma, reg_lower_gamma};

/// Small-x power law F(x) ~ linear * x^angular of a branch gain CDF.
///
/// The linear coefficient is kept in log space: for tens of ports per branch
/// it overflows f64 in plain arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteCoeff {
    pub ln_linear: f64,
    pub angular: f64,
}

impl AsymptoteCoeff {
    pub fn linear(&self) -> f64 {
        self.ln_linear.exp()
    }
}

/// Shape/scale pair of a fitted Gamma distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaShape {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaShape {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() || !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("gamma shape: need alpha, beta > 0, got {alpha}, {beta}")));
        }
        Ok(Self { alpha, beta })
    }
}

/// High-SNR law OP ~ array_coeff * snr^{-diversity_order}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteSummary {
    pub diversity_order: f64,
    pub ln_array_coeff: f64,
}

impl AsymptoteSummary {
    pub fn array_coeff(&self) -> f64 {
        self.ln_array_coeff.exp()
    }
}

/// Small-x asymptote of the branch gain CDF:
///
///   linear = m^{m-1} / (Gamma(m) w1^m (m!)^{P-1}) * prod_{k=2}^{P} (m / (w_k (1-mu^2)))^m
///   angular = m * P
///
/// for a branch of P ports with channel powers w_k = omega_k^2.
pub fn branch_asymptote(branch: &BranchSpec) -> Result<AsymptoteCoeff> {
    let m = branch.m as f64;
    let mu_sq = branch.mu * branch.mu;
    let mut ln_linear =
        (m - 1.0) * m.ln() - ln_gamma(m)? - m * branch.omega_sq[0].ln()
            - (branch.ports as f64 - 1.0) * ln_gamma(m + 1.0)?;
    for &w in &branch.omega_sq[1..] {
        ln_linear += m * (m.ln() - (w * (1.0 - mu_sq)).ln());
    }
    Ok(AsymptoteCoeff { ln_linear, angular: m * branch.ports as f64 })
}

/// Gamma shape whose own small-x asymptote matches the given coefficients:
/// alpha = angular, beta = (1 / (Gamma(alpha) * linear * alpha))^{1/alpha}.
pub fn branch_shape(coeff: &AsymptoteCoeff) -> Result<GammaShape> {
    let alpha = coeff.angular;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("branch_shape: angular coefficient must be > 0, got {alpha}")));
    }
    let ln_beta = -(ln_gamma(alpha)? + coeff.ln_linear + alpha.ln()) / alpha;
    GammaShape::new(alpha, ln_beta.exp())
}

/// Shape of the branch-sum gain: shapes add, scales combine as the
/// alpha-weighted geometric mean. This is what matching the small-x
/// asymptote of the convolved branch densities yields.
pub fn mgc_shape(branches: &[GammaShape]) -> Result<GammaShape> {
    if branches.is_empty() {
        return Err(Error::Domain("mgc_shape: need at least one branch".into()));
    }
    let alpha: f64 = branches.iter().map(|s| s.alpha).sum();
    let ln_beta: f64 = branches.iter().map(|s| s.alpha * s.beta.ln()).sum::<f64>() / alpha;
    GammaShape::new(alpha, ln_beta.exp())
}

/// Closed-form outage of the combined scheme: P(alpha, gamma_th / (beta * snr_bar)).
pub fn op_mgc_approx(shape: &GammaShape, link: &LinkBudget) -> Result<f64> {
    reg_lower_gamma(shape.alpha, link.threshold_ratio() / shape.beta)
}

/// High-SNR power law of the outage:
/// (gamma_th / (beta * snr_bar))^alpha / (alpha * Gamma(alpha)).
pub fn op_mgc_asymptotic(shape: &GammaShape, link: &LinkBudget) -> Result<f64> {
    let ln_op = shape.alpha * (link.threshold_ratio() / shape.beta).ln()
        - shape.alpha.ln()
        - ln_gamma(shape.alpha)?;
    Ok(ln_op.exp())
}

/// Diversity order and array gain of the high-SNR law
/// OP ~ G_c * snr_bar^{-G_d}.
pub fn asymptote_summary(shape: &GammaShape, gamma_th: f64) -> Result<AsymptoteSummary> {
    if !(gamma_th > 0.0) || !gamma_th.is_finite() {
        return Err(Error::Domain(format!("asymptote_summary: gamma_th must be > 0, got {gamma_th}")));
    }
    let ln_array_coeff =
        shape.alpha * (gamma_th / shape.beta).ln() - shape.alpha.ln() - ln_gamma(shape.alpha)?;
    Ok(AsymptoteSummary { diversity_order: shape.alpha, ln_array_coeff })
}

/// Full fitting pipeline: geometry -> branch asymptotes -> branch shapes ->
/// combined shape.
pub fn pipeline_shape(geom: &FasGeometry, fading: &FadingProfile) -> Result<GammaShape> {
    let shapes = branch_view(geom, fading)?
        .iter()
        .map(|b| branch_shape(&branch_asymptote(b)?))
        .collect::<Result<Vec<_>>>()?;
    mgc_shape(&shapes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::port_correlation;
    use crate::exact::{adaptive_quadrature, branch_cdf, QuadratureSpec};
    use proptest::prelude::*;

    fn branch(ports: u32, size: f64, m: u32, omega_sq: f64) -> BranchSpec {
        let mu = if ports == 1 { 0.0 } else { port_correlation(ports, size).unwrap().sqrt() };
        BranchSpec::new(ports, size, m, vec![omega_sq; ports as usize], mu).unwrap()
    }

    #[test]
    fn single_port_coefficients() {
        for &(m, w) in &[(1u32, 1.0f64), (2, 1.7), (3, 0.6)] {
            let c = branch_asymptote(&branch(1, 1.0, m, w)).unwrap();
            let mf = m as f64;
            let want = mf.powf(mf - 1.0) / ((ln_gamma(mf).unwrap()).exp() * w.powf(mf));
            assert!((c.linear() - want).abs() < 1e-12 * want, "m={m} w={w}");
            assert_eq!(c.angular, mf);
        }
    }

    #[test]
    fn two_port_rayleigh_coefficients() {
        let b = branch(2, 0.5, 1, 1.0);
        let c = branch_asymptote(&b).unwrap();
        let want = 1.0 / (1.0 - b.mu * b.mu);
        assert!((c.linear() - want).abs() < 1e-12 * want);
        assert_eq!(c.angular, 2.0);
    }

    #[test]
    fn asymptote_matches_cdf_limit() {
        // quadrature-based limit oracle: a0 = lim_{x->0} F(x) / x^{b0}
        let quad = QuadratureSpec::new(1e-26, 1e-10, 400).unwrap();
        for b in [branch(2, 0.5, 1, 1.0), branch(3, 1.0, 1, 1.0)] {
            let c = branch_asymptote(&b).unwrap();
            let r4 = branch_cdf(1e-4, &b, &quad).unwrap() / 1e-4f64.powf(c.angular);
            let r5 = branch_cdf(1e-5, &b, &quad).unwrap() / 1e-5f64.powf(c.angular);
            let a0 = c.linear();
            // the finer point must be at least as consistent as the coarse one
            assert!((r5 - a0).abs() <= (r4 - a0).abs() + 1e-9 * a0, "ports={}", b.ports);
            assert!((r5 - a0).abs() < 1e-3 * a0, "ports={} r5={r5} a0={a0}", b.ports);
        }
    }

    #[test]
    fn single_port_shape_recovery() {
        // one-port branch: the fit coincides with the true Gamma(m, w/m) law
        for &(m, w) in &[(1u32, 1.0f64), (2, 1.3), (4, 0.8)] {
            let shape = branch_shape(&branch_asymptote(&branch(1, 1.0, m, w)).unwrap()).unwrap();
            assert!((shape.alpha - m as f64).abs() < 1e-12);
            let want = w / m as f64;
            assert!((shape.beta - want).abs() < 1e-12 * want, "m={m} w={w}");
        }
    }

    #[test]
    fn shape_scaling_law() {
        let c = branch_asymptote(&branch(4, 1.0, 2, 1.0)).unwrap();
        let s1 = branch_shape(&c).unwrap();
        let doubled = AsymptoteCoeff { ln_linear: c.ln_linear + 2f64.ln(), angular: c.angular };
        let s2 = branch_shape(&doubled).unwrap();
        let want = s1.beta * 2f64.powf(-1.0 / c.angular);
        assert!((s2.beta - want).abs() < 1e-12 * want);
    }

    #[test]
    fn shape_round_trip() {
        // the fitted Gamma's own small-x asymptote returns (a0, b0)
        for b in [branch(3, 1.0, 1, 1.0), branch(5, 2.0, 2, 1.4)] {
            let c = branch_asymptote(&b).unwrap();
            let s = branch_shape(&c).unwrap();
            let ln_back = -(ln_gamma(s.alpha).unwrap() + s.alpha * s.beta.ln() + s.alpha.ln());
            assert!((ln_back - c.ln_linear).abs() < 1e-9, "ports={}", b.ports);
        }
    }

    #[test]
    fn mgc_shape_identities() {
        let s = GammaShape::new(3.0, 0.7).unwrap();
        let single = mgc_shape(&[s]).unwrap();
        assert_eq!(single, s);

        let four = mgc_shape(&[s; 4]).unwrap();
        assert!((four.alpha - 12.0).abs() < 1e-12);
        assert!((four.beta - 0.7).abs() < 1e-12);

        assert!(mgc_shape(&[]).is_err());
    }

    #[test]
    fn mgc_shape_matches_convolution_asymptote() {
        // direct numerical convolution of two Gamma densities at small x
        let s1 = GammaShape::new(2.0, 0.5).unwrap();
        let s2 = GammaShape::new(3.0, 1.2).unwrap();
        let sum = mgc_shape(&[s1, s2]).unwrap();
        let x = 1e-4;
        let density = |s: &GammaShape, t: f64| {
            ((s.alpha - 1.0) * t.ln() - t / s.beta - ln_gamma(s.alpha).unwrap()
                - s.alpha * s.beta.ln())
            .exp()
        };
        let quad = QuadratureSpec::new(1e-40, 1e-10, 400).unwrap();
        let conv =
            adaptive_quadrature(|t| density(&s1, t) * density(&s2, x - t), 0.0, x, &quad).unwrap();
        let fitted = density(&sum, x);
        assert!((conv - fitted).abs() < 0.01 * fitted, "conv={conv} fitted={fitted}");
    }

    #[test]
    fn approx_op_limits() {
        let shape = GammaShape::new(4.0, 0.9).unwrap();
        let tiny = op_mgc_approx(&shape, &LinkBudget::new(10.0, 1e-12).unwrap()).unwrap();
        assert!(tiny < 1e-40);
        let mut prev = 1.0;
        for &snr in &[0.1, 1.0, 10.0, 100.0, 1e4] {
            let op = op_mgc_approx(&shape, &LinkBudget::new(snr, 1.0).unwrap()).unwrap();
            assert!(op <= prev);
            prev = op;
        }
    }

    #[test]
    fn asymptotic_examples() {
        let shape = GammaShape::new(2.0, 1.0).unwrap();
        let link = LinkBudget::new(10.0, 1.0).unwrap();
        let got = op_mgc_asymptotic(&shape, &link).unwrap();
        assert!((got - 0.005).abs() < 1e-15);

        // ratio asymptotic/approx -> 1 at high SNR
        for &snr in &[1e3, 1e5] {
            let l = LinkBudget::new(snr, 1.0).unwrap();
            let ratio = op_mgc_asymptotic(&shape, &l).unwrap() / op_mgc_approx(&shape, &l).unwrap();
            assert!(ratio >= 1.0 && ratio - 1.0 < 10.0 / snr, "snr={snr} ratio={ratio}");
        }

        // exact log-log slope of the power law
        let h = 1e-4;
        let f = |s: f64| op_mgc_asymptotic(&shape, &LinkBudget::new(s, 1.0).unwrap()).unwrap().ln();
        let slope = (f(10.0 * (1.0 + h)) - f(10.0 * (1.0 - h))) / ((1.0f64 + h).ln() - (1.0 - h).ln());
        assert!((slope + shape.alpha).abs() < 1e-9);
    }

    #[test]
    fn summary_reproduces_power_law() {
        let geom = FasGeometry::new(10, 2.0, 2).unwrap();
        let fading = FadingProfile::uniform(1, 1.0).unwrap();
        let shape = pipeline_shape(&geom, &fading).unwrap();
        let summary = asymptote_summary(&shape, 2.0).unwrap();
        assert!((summary.diversity_order - 10.0).abs() < 1e-12);

        for &snr in &[5.0, 50.0] {
            let link = LinkBudget::new(snr, 2.0).unwrap();
            let direct = op_mgc_asymptotic(&shape, &link).unwrap();
            let from_summary =
                (summary.ln_array_coeff - summary.diversity_order * snr.ln()).exp();
            assert!((direct - from_summary).abs() < 1e-12 * direct.max(1e-300));
        }
    }

    #[test]
    fn heterogeneous_branch_fading() {
        let geom = FasGeometry::new(8, 2.0, 2).unwrap();
        let fading = FadingProfile::new(vec![1, 2], vec![1.0]).unwrap();
        let shape = pipeline_shape(&geom, &fading).unwrap();
        // alpha = (L/M) * sum m_j = 4 * 3
        assert!((shape.alpha - 12.0).abs() < 1e-12);
    }

    #[test]
    fn shape_pipeline_stays_finite_at_scale() {
        for &(l, m) in &[(200u32, 1u32), (200, 4), (100, 2)] {
            let geom = FasGeometry::new(l, 2.0, 2).unwrap();
            let fading = FadingProfile::uniform(m, 1.0).unwrap();
            let shape = pipeline_shape(&geom, &fading).unwrap();
            assert!(shape.alpha.is_finite() && shape.beta.is_finite() && shape.beta > 0.0);
            assert!((shape.alpha - (l * m) as f64).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn asymptotic_dominates_approx(
            alpha in 0.5f64..50.0,
            beta in 0.05f64..5.0,
            snr in 0.1f64..1000.0,
            th in 0.05f64..10.0,
        ) {
            let shape = GammaShape::new(alpha, beta).unwrap();
            let link = LinkBudget::new(snr, th).unwrap();
            let approx = op_mgc_approx(&shape, &link).unwrap();
            let asym = op_mgc_asymptotic(&shape, &link).unwrap();
            prop_assert!(asym >= approx - 1e-12 * approx.max(1e-300));
        }
    }
}
