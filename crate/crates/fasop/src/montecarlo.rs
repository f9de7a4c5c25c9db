//! Monte Carlo oracle for every scheme: non-diversity FAS, branch-sum
//! (MGC) FAS and the MRC baseline.
//!
//! Trials are split into fixed-size chunks, each driven by its own
//! counter-derived RNG stream, and the per-chunk outage counts are summed.
//! Results are therefore bit-identical for a given (seed, trials,
//! configuration) no matter how many worker threads run the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{BranchSpec, LinkBudget, PortGainSampler};
use crate::error::{Error, Result};

/// Trials per RNG stream. Fixed so the trial-to-stream mapping never
/// depends on the worker count.
const CHUNK: u64 = 1 << 15;

/// Outage estimate with a 95% normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpEstimate {
    pub op: f64,
    pub ci_half_width: f64,
    pub trials: u64,
    pub seed: u64,
}

impl OpEstimate {
    fn from_count(count: u64, trials: u64, seed: u64) -> Self {
        let op = count as f64 / trials as f64;
        let ci_half_width = 1.96 * (op * (1.0 - op) / trials as f64).sqrt();
        Self { op, ci_half_width, trials, seed }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(chunk.wrapping_add(1))))
}

/// Count outages of the branch-sum gain against several gain thresholds in
/// one pass over a common sample set.
fn count_outages(branches: &[BranchSpec], ratios: &[f64], trials: u64, seed: u64) -> Vec<u64> {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let mut samplers: Vec<PortGainSampler> =
                branches.iter().map(PortGainSampler::new).collect();
            let n = CHUNK.min(trials - c * CHUNK);
            let mut counts = vec![0u64; ratios.len()];
            for _ in 0..n {
                let mut gain = 0.0;
                for s in samplers.iter_mut() {
                    gain += s.sample_max(&mut rng);
                }
                for (slot, &r) in counts.iter_mut().zip(ratios) {
                    if gain < r {
                        *slot += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; ratios.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

fn validate_trials(trials: u64) -> Result<()> {
    if trials < 1 {
        return Err(Error::Domain("monte carlo: need at least one trial".into()));
    }
    Ok(())
}

/// Branch-sum (MGC) outage estimates for several gain thresholds
/// gamma_th / snr_bar, evaluated on one common sample set.
pub fn estimate_op_mgc_multi(
    branches: &[BranchSpec],
    ratios: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<OpEstimate>> {
    validate_trials(trials)?;
    if branches.is_empty() {
        return Err(Error::Domain("monte carlo: need at least one branch".into()));
    }
    if ratios.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Domain("monte carlo: thresholds must be >= 0".into()));
    }
    let counts = count_outages(branches, ratios, trials, seed);
    Ok(counts.into_iter().map(|c| OpEstimate::from_count(c, trials, seed)).collect())
}

/// Branch-sum (MGC) outage estimate: fraction of trials with
/// snr_bar * sum_j max_k |h_{j,k}|^2 < gamma_th.
pub fn estimate_op_mgc(
    branches: &[BranchSpec],
    link: &LinkBudget,
    trials: u64,
    seed: u64,
) -> Result<OpEstimate> {
    Ok(estimate_op_mgc_multi(branches, &[link.threshold_ratio()], trials, seed)?[0])
}

/// Non-diversity FAS outage estimate: a single tube of correlated ports.
/// Shares the sampling path with the branch-sum estimator, so an M = 1
/// branch-sum run with the same seed produces identical counts.
pub fn estimate_op_fas(
    ports: u32,
    m: u32,
    omega_sq: &[f64],
    mu: f64,
    link: &LinkBudget,
    trials: u64,
    seed: u64,
) -> Result<OpEstimate> {
    let branch = BranchSpec::new(ports, 1.0, m, omega_sq.to_vec(), mu)?;
    estimate_op_mgc(std::slice::from_ref(&branch), link, trials, seed)
}

/// Multi-threshold variant of [`estimate_op_fas`].
pub fn estimate_op_fas_multi(
    ports: u32,
    m: u32,
    omega_sq: &[f64],
    mu: f64,
    ratios: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<OpEstimate>> {
    let branch = BranchSpec::new(ports, 1.0, m, omega_sq.to_vec(), mu)?;
    estimate_op_mgc_multi(std::slice::from_ref(&branch), ratios, trials, seed)
}

/// MRC outage estimate over N i.i.d. Nakagami-m antennas, realized as the
/// sum of N independent one-port branches.
pub fn estimate_op_mrc(
    antennas: u32,
    m: u32,
    omega_sq: f64,
    link: &LinkBudget,
    trials: u64,
    seed: u64,
) -> Result<OpEstimate> {
    Ok(estimate_op_mrc_multi(antennas, m, omega_sq, &[link.threshold_ratio()], trials, seed)?[0])
}

/// Multi-threshold variant of [`estimate_op_mrc`].
pub fn estimate_op_mrc_multi(
    antennas: u32,
    m: u32,
    omega_sq: f64,
    ratios: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<OpEstimate>> {
    if antennas < 1 {
        return Err(Error::Domain("monte carlo: need at least one antenna".into()));
    }
    let antenna = BranchSpec::new(1, 1.0, m, vec![omega_sq], 0.0)?;
    let branches = vec![antenna; antennas as usize];
    estimate_op_mgc_multi(&branches, ratios, trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::port_correlation;
    use crate::exact::op_mrc;

    fn link(snr: f64, th: f64) -> LinkBudget {
        LinkBudget::new(snr, th).unwrap()
    }

    #[test]
    fn zero_threshold_never_outages() {
        let b = BranchSpec::new(2, 1.0, 1, vec![1.0, 1.0], 0.3).unwrap();
        let est = estimate_op_mgc_multi(&[b], &[0.0], 10_000, 1).unwrap();
        assert_eq!(est[0].op, 0.0);
    }

    #[test]
    fn single_rayleigh_port_is_exponential() {
        let est = estimate_op_fas(1, 1, &[1.0], 0.0, &link(1.0, 1.0), 1_000_000, 7).unwrap();
        let want = 1.0 - (-1.0f64).exp();
        assert!((est.op - want).abs() <= 3.0 * est.ci_half_width, "op={} want={want}", est.op);
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mu = port_correlation(3, 1.0).unwrap().sqrt();
        let b = BranchSpec::new(3, 1.0, 2, vec![1.0; 3], mu).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| estimate_op_mgc(&[b.clone(), b.clone()], &link(5.0, 2.0), 200_000, 99).unwrap())
        };
        let a = run(1);
        let c = run(4);
        assert_eq!(a.op, c.op);
        assert_eq!(a, run(2));
    }

    #[test]
    fn single_branch_equals_fas_path() {
        let mu = port_correlation(4, 1.0).unwrap().sqrt();
        let b = BranchSpec::new(4, 1.0, 1, vec![1.0; 4], mu).unwrap();
        let as_mgc = estimate_op_mgc(std::slice::from_ref(&b), &link(4.0, 1.0), 100_000, 5).unwrap();
        let as_fas = estimate_op_fas(4, 1, &b.omega_sq, mu, &link(4.0, 1.0), 100_000, 5).unwrap();
        assert_eq!(as_mgc.op, as_fas.op);
    }

    #[test]
    fn all_single_port_branches_reduce_to_mrc() {
        // M = L with mu = 0 is MRC over L i.i.d. channels
        let one_port = BranchSpec::new(1, 1.0, 1, vec![1.0], 0.0).unwrap();
        let branches = vec![one_port; 4];
        let lk = link(2.0, 1.5);
        let est = estimate_op_mgc(&branches, &lk, 1_000_000, 13).unwrap();
        let want = op_mrc(4, 1, 1.0, &lk).unwrap();
        assert!((est.op - want).abs() <= 3.0 * est.ci_half_width, "op={} want={want}", est.op);
    }

    #[test]
    fn mrc_estimator_matches_closed_form() {
        let lk = link(3.0, 2.0);
        for &(n, m) in &[(2u32, 1u32), (3, 2)] {
            let est = estimate_op_mrc(n, m, 1.0, &lk, 400_000, 17).unwrap();
            let want = op_mrc(n, m, 1.0, &lk).unwrap();
            assert!((est.op - want).abs() <= 3.0 * est.ci_half_width, "n={n} m={m}");
        }
    }

    #[test]
    fn nested_thresholds_are_monotone() {
        let mu = port_correlation(3, 0.5).unwrap().sqrt();
        let b = BranchSpec::new(3, 0.5, 1, vec![1.0; 3], mu).unwrap();
        let ratios = [0.1, 0.3, 0.7, 1.5, 3.0];
        let est = estimate_op_mgc_multi(&[b], &ratios, 100_000, 3).unwrap();
        for pair in est.windows(2) {
            assert!(pair[0].op <= pair[1].op);
        }
    }

    #[test]
    fn ci_coverage_on_known_law() {
        // true OP of a single exponential channel at ratio 1 is 1 - e^{-1}
        let want = 1.0 - (-1.0f64).exp();
        let mut covered = 0;
        for rep in 0..100 {
            let est = estimate_op_fas(1, 1, &[1.0], 0.0, &link(1.0, 1.0), 10_000, 1000 + rep).unwrap();
            if (est.op - want).abs() <= est.ci_half_width {
                covered += 1;
            }
        }
        assert!(covered >= 90, "coverage {covered}/100");
    }

    #[test]
    fn invalid_inputs_rejected() {
        let b = BranchSpec::new(1, 1.0, 1, vec![1.0], 0.0).unwrap();
        assert!(estimate_op_mgc_multi(std::slice::from_ref(&b), &[1.0], 0, 1).is_err());
        assert!(estimate_op_mgc_multi(&[], &[1.0], 10, 1).is_err());
        assert!(estimate_op_mgc_multi(&[b], &[-1.0], 10, 1).is_err());
    }
}
