//! Parametric Poisson bootstrap of witness margins.
//!
//! Each replicate redraws every cell as `Poisson(observed count)`, recomputes
//! the witness margin, and the spread of the margins gives the uncertainty.
//! Replicate `i` draws from its own ChaCha stream keyed by `(seed, i)`, so
//! results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{stable_sum, CountTensor, Histogram, JointDistribution};
use crate::entropy::LogBase;
use crate::error::{Error, Result};
use crate::witness::{evaluate, Direction, WitnessResult};

/// Smallest replicate count accepted by [`witness_significance`].
pub const MIN_REPLICATES: usize = 100;

/// Redraws allowed per replicate before giving up on a nonzero total.
const MAX_REDRAWS: usize = 10_000;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed of `master` for the given key parts.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p)))
}

/// Generator for replicate `index` of the run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw every cell independently from `Poisson(count)`.
pub fn poisson_resample<R: Rng + ?Sized>(counts: &CountTensor, rng: &mut R) -> CountTensor {
    let draws = counts
        .counts()
        .iter()
        .map(|&c| {
            if c == 0 {
                0
            } else {
                let dist = Poisson::new(c as f64).expect("positive finite Poisson mean");
                dist.sample(rng) as u64
            }
        })
        .collect();
    CountTensor::new(counts.shape().to_vec(), draws).expect("resample keeps shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BootstrapConfig {
    pub n_boot: usize,
    pub seed: u64,
    /// Keep every replicate margin in the report.
    pub keep_margins: bool,
}

impl BootstrapConfig {
    pub fn new(n_boot: usize, seed: u64) -> Self {
        Self {
            n_boot,
            seed,
            keep_margins: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub n_boot: usize,
    pub seed: u64,
    /// Witness evaluated on the observed counts.
    pub point: WitnessResult,
    pub margin_mean: f64,
    pub margin_std: f64,
    /// `margin_mean / margin_std`; `None` when every replicate agrees.
    pub significance: Option<f64>,
    /// Replicates redrawn because a tensor came out with zero total.
    pub rejected: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margins: Option<Vec<f64>>,
}

fn normalize_all(hists: &[Histogram]) -> Result<Vec<JointDistribution>> {
    hists.iter().map(Histogram::normalize).collect()
}

fn one_replicate(
    pos: &[Histogram],
    mom: &[Histogram],
    direction: Direction,
    base: LogBase,
    seed: u64,
    index: u64,
) -> Result<(f64, usize)> {
    let mut rng = replicate_rng(seed, index);
    let mut rejected = 0;
    loop {
        let draw = |h: &Histogram, rng: &mut ChaCha8Rng| h.with_counts(poisson_resample(h.counts(), rng));
        let rp = pos.iter().map(|h| draw(h, &mut rng)).collect::<Result<Vec<_>>>()?;
        let rm = mom.iter().map(|h| draw(h, &mut rng)).collect::<Result<Vec<_>>>()?;
        if rp.iter().chain(&rm).any(|h| h.counts().total() == 0) {
            rejected += 1;
            if rejected >= MAX_REDRAWS {
                return Err(Error::ZeroTotal);
            }
            continue;
        }
        let r = evaluate(&normalize_all(&rp)?, &normalize_all(&rm)?, direction, base)?;
        return Ok((r.margin, rejected));
    }
}

/// Bootstrap the margin of one witness. Never fails on zero spread; the
/// significance is then `None`.
pub fn bootstrap(
    pos: &[Histogram],
    mom: &[Histogram],
    direction: Direction,
    base: LogBase,
    config: &BootstrapConfig,
) -> Result<BootstrapReport> {
    if config.n_boot < 2 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least 2 replicates, got {}",
            config.n_boot
        )));
    }
    for h in pos.iter().chain(mom) {
        if h.counts().total() == 0 {
            return Err(Error::ZeroTotal);
        }
    }
    let point = evaluate(&normalize_all(pos)?, &normalize_all(mom)?, direction, base)?;

    let results = (0..config.n_boot as u64)
        .into_par_iter()
        .map(|i| one_replicate(pos, mom, direction, base, config.seed, i))
        .collect::<Result<Vec<_>>>()?;
    let rejected = results.iter().map(|r| r.1).sum();
    let margins: Vec<f64> = results.into_iter().map(|r| r.0).collect();

    let n = margins.len() as f64;
    let mean = stable_sum(margins.iter().copied()) / n;
    let var = stable_sum(margins.iter().map(|m| (m - mean) * (m - mean))) / (n - 1.0);
    let std = var.sqrt();
    let significance = (std > 0.0).then(|| mean / std);

    let mut point = point;
    point.significance_sigma = significance;
    Ok(BootstrapReport {
        n_boot: config.n_boot,
        seed: config.seed,
        point,
        margin_mean: mean,
        margin_std: std,
        significance,
        rejected,
        margins: config.keep_margins.then_some(margins),
    })
}

/// Number of standard deviations by which the witness is violated
/// (negative when satisfied).
pub fn witness_significance(
    pos: &[Histogram],
    mom: &[Histogram],
    direction: Direction,
    base: LogBase,
    config: &BootstrapConfig,
) -> Result<BootstrapReport> {
    if config.n_boot < MIN_REPLICATES {
        return Err(Error::InvalidParameter(format!(
            "significance needs at least {MIN_REPLICATES} replicates, got {}",
            config.n_boot
        )));
    }
    let report = bootstrap(pos, mom, direction, base, config)?;
    if report.significance.is_none() {
        return Err(Error::DegenerateBootstrap {
            n_boot: config.n_boot,
        });
    }
    Ok(report)
}
