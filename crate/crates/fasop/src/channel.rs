//! Geometry, fading and spatial-correlation data model, plus generation of
//! correlated Nakagami-m port gains for the Monte Carlo engine.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::specfun::bessel_j0;

/// Singularity guard for the correlation coefficient: formulas divide by
/// 1 - mu^2, so values this close to 1 are rejected instead of extrapolated.
pub const MU_SQ_GUARD: f64 = 1e-12;

/// Antenna layout: L ports on a line of W wavelengths, split into M branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FasGeometry {
    /// Total number of ports L.
    pub ports: u32,
    /// Antenna length W in carrier wavelengths.
    pub size: f64,
    /// Number of sub-branches M (1 = non-diversity).
    pub branches: u32,
}

impl FasGeometry {
    pub fn new(ports: u32, size: f64, branches: u32) -> Result<Self> {
        if ports < 1 || branches < 1 {
            return Err(Error::Domain("geometry: ports and branches must be >= 1".into()));
        }
        if !ports.is_multiple_of(branches) {
            return Err(Error::Domain(format!(
                "geometry: branch count {branches} must divide port count {ports}"
            )));
        }
        if !(size > 0.0) || !size.is_finite() {
            return Err(Error::Domain(format!("geometry: antenna size must be > 0, got {size}")));
        }
        Ok(Self { ports, size, branches })
    }

    pub fn ports_per_branch(&self) -> u32 {
        self.ports / self.branches
    }
}

/// Nakagami fading parameters: one integer m per branch, one channel power
/// per port position within a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingProfile {
    /// Fading parameter m_j per branch (length M, or 1 to broadcast).
    pub m: Vec<u32>,
    /// Average channel power per port (length L/M, or 1 to broadcast).
    pub omega_sq: Vec<f64>,
}

impl FadingProfile {
    pub fn new(m: Vec<u32>, omega_sq: Vec<f64>) -> Result<Self> {
        if m.is_empty() || m.iter().any(|&mj| mj < 1) {
            return Err(Error::Domain("fading: every m must be an integer >= 1".into()));
        }
        if omega_sq.is_empty() || omega_sq.iter().any(|&o| !(o > 0.0) || !o.is_finite()) {
            return Err(Error::Domain("fading: every channel power must be > 0".into()));
        }
        Ok(Self { m, omega_sq })
    }

    /// Uniform profile: same m everywhere, unit (or given) power on all ports.
    pub fn uniform(m: u32, omega_sq: f64) -> Result<Self> {
        Self::new(vec![m], vec![omega_sq])
    }
}

/// Linear average transmit SNR and linear SNR threshold. dB conversion
/// happens only at the CLI boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub snr_bar: f64,
    pub gamma_th: f64,
}

impl LinkBudget {
    pub fn new(snr_bar: f64, gamma_th: f64) -> Result<Self> {
        if !(snr_bar > 0.0) || !snr_bar.is_finite() || !(gamma_th > 0.0) || !gamma_th.is_finite() {
            return Err(Error::Domain(format!(
                "link budget: snr_bar and gamma_th must be > 0, got {snr_bar}, {gamma_th}"
            )));
        }
        Ok(Self { snr_bar, gamma_th })
    }

    pub fn from_db(snr_db: f64, gamma_th_db: f64) -> Result<Self> {
        Self::new(10f64.powf(snr_db / 10.0), 10f64.powf(gamma_th_db / 10.0))
    }

    /// Outage threshold on the channel gain: gamma_th / snr_bar.
    pub fn threshold_ratio(&self) -> f64 {
        self.gamma_th / self.snr_bar
    }
}

/// Common cross-port correlation coefficient mu within one FAS tube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationProfile {
    pub mu: f64,
}

impl CorrelationProfile {
    pub fn new(mu: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mu) || 1.0 - mu * mu < MU_SQ_GUARD {
            return Err(Error::Domain(format!(
                "correlation: mu must lie in [0, 1) with 1 - mu^2 >= {MU_SQ_GUARD}, got {mu}"
            )));
        }
        Ok(Self { mu })
    }
}

/// One sub-FAS branch: a tube of `ports` correlated ports.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub ports: u32,
    pub size: f64,
    pub m: u32,
    /// Average channel power per port, length == ports.
    pub omega_sq: Vec<f64>,
    pub mu: f64,
}

impl BranchSpec {
    pub fn new(ports: u32, size: f64, m: u32, omega_sq: Vec<f64>, mu: f64) -> Result<Self> {
        if ports < 1 || m < 1 {
            return Err(Error::Domain("branch: ports and m must be >= 1".into()));
        }
        if omega_sq.len() != ports as usize {
            return Err(Error::Domain(format!(
                "branch: got {} channel powers for {} ports",
                omega_sq.len(),
                ports
            )));
        }
        if omega_sq.iter().any(|&o| !(o > 0.0) || !o.is_finite()) {
            return Err(Error::Domain("branch: every channel power must be > 0".into()));
        }
        CorrelationProfile::new(mu)?;
        Ok(Self { ports, size, m, omega_sq, mu })
    }
}

/// Squared spatial correlation coefficient mu^2 of L equally spaced ports on
/// a line of W wavelengths:
///
///   mu^2 = | 2 / (L (L-1)) * sum_{i=1}^{L-1} (L - i) J0(2 pi i W / (L - 1)) |
pub fn port_correlation(ports: u32, size: f64) -> Result<f64> {
    if ports < 2 {
        return Err(Error::Domain("port_correlation: need at least 2 ports".into()));
    }
    if !(size > 0.0) || !size.is_finite() {
        return Err(Error::Domain(format!("port_correlation: size must be > 0, got {size}")));
    }
    let l = ports as f64;
    let mut sum = 0.0;
    for i in 1..ports {
        let arg = 2.0 * std::f64::consts::PI * i as f64 * size / (l - 1.0);
        sum += (l - i as f64) * bessel_j0(arg)?;
    }
    Ok((2.0 / (l * (l - 1.0)) * sum).abs().min(1.0))
}

/// Split the FAS into its M branch descriptors: L/M ports over W/M
/// wavelengths each, with the branch correlation derived from that
/// sub-geometry. A one-port branch has no pairwise correlation (mu = 0).
pub fn branch_view(geom: &FasGeometry, fading: &FadingProfile) -> Result<Vec<BranchSpec>> {
    let ports = geom.ports_per_branch();
    let size = geom.size / geom.branches as f64;
    let m_len = fading.m.len();
    if m_len != 1 && m_len != geom.branches as usize {
        return Err(Error::Domain(format!(
            "fading: {m_len} fading parameters for {} branches",
            geom.branches
        )));
    }
    let omega: Vec<f64> = match fading.omega_sq.len() {
        1 => vec![fading.omega_sq[0]; ports as usize],
        n if n == ports as usize => fading.omega_sq.clone(),
        n => {
            return Err(Error::Domain(format!("fading: {n} channel powers for {ports} ports per branch")))
        }
    };
    let mu = if ports == 1 { 0.0 } else { port_correlation(ports, size)?.sqrt() };
    (0..geom.branches)
        .map(|j| {
            let m = fading.m[if m_len == 1 { 0 } else { j as usize }];
            BranchSpec::new(ports, size, m, omega.clone(), mu)
        })
        .collect()
}

/// Draws correlated Nakagami-m port power gains for one branch.
///
/// Construction: 2m reference standard normals g_{0,l} define port 1; for
/// k >= 2 each component is mu * g_{0,l} + sqrt(1 - mu^2) * e_{k,l} with
/// fresh independent normals. Each marginal |h_k|^2 is Gamma(m, omega^2/m),
/// and conditioned on the reference envelope the remaining ports are scaled
/// noncentral chi-square with 2m degrees of freedom, which is exactly the
/// Marcum-Q kernel of the analytic outage integral.
#[derive(Debug, Clone)]
pub struct PortGainSampler {
    mu: f64,
    ortho: f64,
    /// omega_k^2 / (2m) per port.
    scale: Vec<f64>,
    refs: Vec<f64>,
}

impl PortGainSampler {
    pub fn new(branch: &BranchSpec) -> Self {
        let two_m = 2 * branch.m as usize;
        Self {
            mu: branch.mu,
            ortho: (1.0 - branch.mu * branch.mu).sqrt(),
            scale: branch.omega_sq.iter().map(|o| o / two_m as f64).collect(),
            refs: vec![0.0; two_m],
        }
    }

    /// One draw of the full port power-gain vector.
    pub fn sample_into<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.scale.len());
        let mut ref_sq = 0.0;
        for g in self.refs.iter_mut() {
            *g = rng.sample(StandardNormal);
            ref_sq += *g * *g;
        }
        out[0] = self.scale[0] * ref_sq;
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let mut acc = 0.0;
            for &g0 in &self.refs {
                let e: f64 = rng.sample(StandardNormal);
                let v = self.mu * g0 + self.ortho * e;
                acc += v * v;
            }
            *slot = self.scale[k] * acc;
        }
    }

    /// One draw of the best-port gain max_k |h_k|^2.
    pub fn sample_max<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let mut ref_sq = 0.0;
        for g in self.refs.iter_mut() {
            *g = rng.sample(StandardNormal);
            ref_sq += *g * *g;
        }
        let mut best = self.scale[0] * ref_sq;
        for &s in self.scale.iter().skip(1) {
            let mut acc = 0.0;
            for &g0 in &self.refs {
                let e: f64 = rng.sample(StandardNormal);
                let v = self.mu * g0 + self.ortho * e;
                acc += v * v;
            }
            best = best.max(s * acc);
        }
        best
    }
}

/// Batch sampling of port power-gain vectors (test and inspection helper).
pub fn sample_port_gains<R: Rng + ?Sized>(
    branch: &BranchSpec,
    rng: &mut R,
    n: usize,
) -> Vec<Vec<f64>> {
    let mut sampler = PortGainSampler::new(branch);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v = vec![0.0; branch.ports as usize];
        sampler.sample_into(rng, &mut v);
        out.push(v);
    }
    out
}
