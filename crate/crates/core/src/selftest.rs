//! Built-in invariant suite run by `eprsteer selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boot::{bootstrap, BootstrapConfig};
use crate::coarse::{downsample_dist, downsample_histogram};
use crate::dist::{marginalize, JointDistribution};
use crate::entropy::{conditional_entropy, joint_entropy, marginal_entropy, mutual_information, LogBase};
use crate::error::Result;
use crate::grid::{AxisGrid, GridSpec, Observable, Party};
use crate::synth::{
    connection_check, discrete_bound_slack, discretize, within_cell_conditional_entropy, DoubleGaussian,
    Gaussian1d, SyntheticConfig, Uniform1d, REFERENCE_EXTENT_MOMENTUM, REFERENCE_EXTENT_POSITION,
};
use crate::witness::{evaluate, min_resolution, Direction};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn random_dist(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<JointDistribution> {
    let grid = GridSpec::new(
        Observable::Position,
        vec![AxisGrid::centered(rows, 1.0)?],
        vec![AxisGrid::centered(cols, 1.0)?],
    )?;
    let weights: Vec<f64> = (0..rows * cols)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        let mut w = weights;
        w[0] = 1.0;
        return JointDistribution::from_weights(grid, w);
    }
    JointDistribution::from_weights(grid, weights)
}

fn entropy_identities() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = LogBase::BITS;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (r, c) = (rng.random_range(2..=16), rng.random_range(2..=16));
        let d = random_dist(&mut rng, r, c)?;
        let h_ab = joint_entropy(&d, b).value;
        let (h_a, h_b) = (marginal_entropy(&d, Party::A, b).value, marginal_entropy(&d, Party::B, b).value);
        let (h_b_a, h_a_b) = (conditional_entropy(&d, Party::A, b).value, conditional_entropy(&d, Party::B, b).value);
        worst = worst
            .max((h_ab - h_a - h_b_a).abs())
            .max((h_a_b + h_b - h_b_a - h_a).abs())
            .max(-mutual_information(&d, b).value)
            .max(h_b_a - h_b);
    }
    Ok(Check {
        name: "entropy identities",
        passed: worst <= 1e-12,
        detail: format!("worst violation {worst:.2e} over 200 distributions"),
    })
}

fn connection() -> Result<Check> {
    let b = LogBase::BITS;
    let gauss = connection_check(&Gaussian1d { mean: 0.0, sigma: 1.0 }, &AxisGrid::centered(32, 16.0)?, b)?;
    let uniform = connection_check(&Uniform1d { lo: 0.0, hi: 3.0 }, &AxisGrid::new(6, 0.5, 0.0)?, b)?;
    let worst = gauss.max(uniform);
    Ok(Check {
        name: "discrete/continuous entropy connection",
        passed: worst < 1e-6,
        detail: format!("residual {worst:.2e}"),
    })
}

fn discrete_bounds() -> Result<Check> {
    let b = LogBase::BITS;
    let mut worst_slack = f64::INFINITY;
    let mut worst_cond = f64::NEG_INFINITY;
    for ratio in [1.0, 3.0, 30.0] {
        let s = DoubleGaussian::new(ratio * 1e-4, 1e-4)?;
        for obs in [Observable::Position, Observable::Momentum] {
            let density = s.density(obs);
            let extent = 12.0 * density.marginal_variance().sqrt();
            for n in [4, 8, 16] {
                let g = GridSpec::symmetric(obs, vec![AxisGrid::centered(n, extent)?])?;
                worst_slack = worst_slack.min(discrete_bound_slack(&s, obs, &g, b)?);
                let d = discretize(&density, &g)?;
                let rhs = within_cell_conditional_entropy(&density, &g, b)?
                    + conditional_entropy(&d.dist, Party::A, b).value;
                worst_cond = worst_cond.max(s.conditional_entropy(obs, b) - rhs);
            }
        }
    }
    Ok(Check {
        name: "discrete entropies bound continuous ones",
        passed: worst_slack >= -1e-6 && worst_cond <= 1e-6,
        detail: format!("min slack {worst_slack:.3e}, conditioning excess {worst_cond:.3e}"),
    })
}

fn cutoff() -> Result<Check> {
    let n = min_resolution(REFERENCE_EXTENT_POSITION, REFERENCE_EXTENT_MOMENTUM)?;
    Ok(Check {
        name: "resolution cutoff at reference extents",
        passed: n == 4,
        detail: format!("min_resolution = {n}"),
    })
}

fn data_processing() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let b = LogBase::BITS;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let n = 2 * rng.random_range(1..=8);
        let d = random_dist(&mut rng, n, n)?;
        let c = downsample_dist(&d, 2, 2)?;
        worst = worst.max(mutual_information(&c, b).value - mutual_information(&d, b).value);
    }
    Ok(Check {
        name: "coarse-graining never adds information",
        passed: worst <= 1e-12,
        detail: format!("largest increase {worst:.2e}"),
    })
}

fn symmetry_and_uncertainty() -> Result<Check> {
    let s = DoubleGaussian::new(1e-4, 1e-4)?;
    let mut symmetric = true;
    let mut product = 1.0;
    for (obs, extent) in [
        (Observable::Position, REFERENCE_EXTENT_POSITION),
        (Observable::Momentum, REFERENCE_EXTENT_MOMENTUM),
    ] {
        let g = GridSpec::symmetric(obs, vec![AxisGrid::centered(24, extent)?])?;
        let d = discretize(&s.density(obs), &g)?.dist;
        symmetric &= d.swap_parties().probs() == d.probs();
        let axis = g.axes(Party::B)[0];
        let m = marginalize(&d, Party::B);
        let mean: f64 = m.iter().enumerate().map(|(i, p)| p * axis.center(i)).sum();
        let var: f64 = m.iter().enumerate().map(|(i, p)| p * (axis.center(i) - mean).powi(2)).sum();
        product *= var.sqrt();
    }
    Ok(Check {
        name: "oracle party symmetry and uncertainty product",
        passed: symmetric && product >= 0.5 - 1e-9,
        detail: format!("exact symmetry {symmetric}, std product {product:.6}"),
    })
}

fn bootstrap_and_bases() -> Result<Check> {
    let cfg = SyntheticConfig {
        total_counts: 200_000,
        ..SyntheticConfig::default()
    };
    let (pos, mom) = cfg.histograms()?;
    let boot = BootstrapConfig::new(50, 11);
    let r1 = bootstrap(&pos, &mom, Direction::BGivenA, LogBase::BITS, &boot)?;
    let r2 = bootstrap(&pos, &mom, Direction::BGivenA, LogBase::BITS, &boot)?;
    let deterministic = r1 == r2;
    let mut consistent = true;
    for r in [3, 8, 24] {
        let f = 24 / r;
        let coarse = |hs: &[crate::dist::Histogram]| -> Result<Vec<JointDistribution>> {
            hs.iter().map(|h| downsample_histogram(h, f, f)?.normalize()).collect()
        };
        let (p, m) = (coarse(&pos)?, coarse(&mom)?);
        for dir in [Direction::BGivenA, Direction::AGivenB, Direction::Symmetric] {
            let signs: Vec<bool> = [LogBase::BITS, LogBase::NATS, LogBase::DITS]
                .iter()
                .map(|&b| evaluate(&p, &m, dir, b).map(|w| w.violated()))
                .collect::<Result<_>>()?;
            consistent &= signs.iter().all(|&s| s == signs[0]);
        }
    }
    Ok(Check {
        name: "bootstrap determinism and base invariance",
        passed: deterministic && consistent,
        detail: format!("identical reruns {deterministic}, same verdict in every base {consistent}"),
    })
}

/// Run every check.
pub fn run_selftest() -> Result<SelftestReport> {
    Ok(SelftestReport {
        checks: vec![
            entropy_identities()?,
            connection()?,
            discrete_bounds()?,
            cutoff()?,
            data_processing()?,
            symmetry_and_uncertainty()?,
            bootstrap_and_bases()?,
        ],
    })
}
