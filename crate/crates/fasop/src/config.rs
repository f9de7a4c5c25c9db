//! Experiment configuration: flat key=value files, flag overrides, sweep
//! grids and scheme selection.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The x-axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    SnrDb,
    Ports,
    ThresholdDb,
    AntennaSize,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SnrDb => "snr_db",
            Self::Ports => "ports",
            Self::ThresholdDb => "threshold_db",
            Self::AntennaSize => "antenna_size",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr_db" => Ok(Self::SnrDb),
            "ports" => Ok(Self::Ports),
            "threshold_db" => Ok(Self::ThresholdDb),
            "antenna_size" => Ok(Self::AntennaSize),
            other => Err(Error::Config(format!(
                "unknown sweep variable `{other}` (expected snr_db, ports, threshold_db or antenna_size)"
            ))),
        }
    }
}

/// An OP evaluation route that can appear as a CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Monte Carlo, non-diversity tube (whole aperture, best port).
    Fas,
    /// Monte Carlo, branch-sum over the configured M branches.
    Mgc,
    /// Closed-form MRC baseline over `mrc_antennas` independent antennas.
    Mrc,
    /// Closed-form Gamma-matched approximation for the configured scheme.
    Approx,
    /// High-SNR power law of the approximation.
    Asymptotic,
    /// Numerically exact non-diversity OP (quadrature).
    Exact,
    /// Monte Carlo of the configured scheme (alias of `mgc`; equals `fas`
    /// when M = 1).
    Mc,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Fas,
        Scheme::Mgc,
        Scheme::Mrc,
        Scheme::Approx,
        Scheme::Asymptotic,
        Scheme::Exact,
        Scheme::Mc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fas => "fas",
            Self::Mgc => "mgc",
            Self::Mrc => "mrc",
            Self::Approx => "approx",
            Self::Asymptotic => "asymptotic",
            Self::Exact => "exact",
            Self::Mc => "mc",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .iter()
            .find(|scheme| scheme.name() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    if s.trim() == "all" {
        return Ok(Scheme::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let scheme: Scheme = part.trim().parse()?;
        if !out.contains(&scheme) {
            out.push(scheme);
        }
    }
    Ok(out)
}

/// Sweep grid: inclusive [from, to] with the given step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.from + i as f64 * self.step).collect()
    }
}

/// Full experiment configuration. dB quantities stay in dB here; the
/// conversion to linear happens exactly once, when a link budget is built.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Total number of ports L.
    pub ports: u32,
    /// Number of sub-FAS branches M (1 = non-diversity).
    pub branches: u32,
    /// Antenna size W in wavelengths.
    pub size: f64,
    /// Nakagami fading parameter m (integer).
    pub m: u32,
    /// Average channel power per port.
    pub omega_sq: f64,
    pub snr_db: f64,
    pub gamma_th_db: f64,
    /// Antenna count of the MRC baseline.
    pub mrc_antennas: u32,
    pub trials: u64,
    pub seed: u64,
    pub sweep: SweepSpec,
    pub schemes: Vec<Scheme>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            ports: 10,
            branches: 2,
            size: 2.0,
            m: 1,
            omega_sq: 1.0,
            snr_db: 10.0,
            gamma_th_db: 5.0,
            mrc_antennas: 9,
            trials: 10_000_000,
            seed: 1234,
            sweep: SweepSpec { variable: SweepVariable::SnrDb, from: -5.0, to: 30.0, step: 1.0 },
            schemes: Scheme::ALL.to_vec(),
        }
    }
}

impl Config {
    /// Parse a flat key=value file (`#` starts a comment) on top of the
    /// defaults. Errors carry the file name and line number.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key=value, got `{line}`", path.display(), idx + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        }
        Ok(cfg)
    }

    /// Apply one key=value assignment (file line or flag override).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            value
                .parse()
                .map_err(|e| Error::Config(format!("bad value `{value}` for `{key}`: {e}")))
        }
        match key {
            "L" => self.ports = num(key, value)?,
            "M" => self.branches = num(key, value)?,
            "W" => self.size = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "omega_sq" => self.omega_sq = num(key, value)?,
            "snr_db" => self.snr_db = num(key, value)?,
            "gamma_th_db" => self.gamma_th_db = num(key, value)?,
            "mrc_antennas" => self.mrc_antennas = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "sweep" => self.sweep.variable = value.parse()?,
            "from" => self.sweep.from = num(key, value)?,
            "to" => self.sweep.to = num(key, value)?,
            "step" => self.sweep.step = num(key, value)?,
            "schemes" => self.schemes = parse_schemes(value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Cross-field validation; call after all overrides are applied.
    pub fn validate(&self) -> Result<()> {
        if self.ports < 1 || self.branches < 1 {
            return Err(Error::Config("L and M must be >= 1".into()));
        }
        if !self.ports.is_multiple_of(self.branches) {
            return Err(Error::Config(format!(
                "M={} must divide L={}",
                self.branches, self.ports
            )));
        }
        if !(self.size > 0.0) {
            return Err(Error::Config("W must be > 0".into()));
        }
        if self.m < 1 {
            return Err(Error::Config("m must be >= 1".into()));
        }
        if !(self.omega_sq > 0.0) {
            return Err(Error::Config("omega_sq must be > 0".into()));
        }
        if self.mrc_antennas < 1 {
            return Err(Error::Config("mrc_antennas must be >= 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("scheme set must not be empty".into()));
        }
        if !(self.sweep.step > 0.0) {
            return Err(Error::Config("sweep step must be > 0".into()));
        }
        if self.sweep.from > self.sweep.to {
            return Err(Error::Config("sweep from must be <= to".into()));
        }
        if self.sweep.variable == SweepVariable::Ports {
            let from = self.sweep.from;
            if from < 1.0 || (from.fract() != 0.0) || self.sweep.step.fract() != 0.0 {
                return Err(Error::Config(
                    "ports sweeps need integer from/step with from >= 1".into(),
                ));
            }
        }
        Ok(())
    }
}
