//! Acceptance criteria. Each test prints one `ACCEPTANCE <n> PASS|FAIL` line.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eprsteer::boot::{witness_significance, BootstrapConfig};
use eprsteer::coarse::downsample_dist;
use eprsteer::config::RunConfig;
use eprsteer::entropy::{conditional_entropy, joint_entropy, marginal_entropy, mutual_information};
use eprsteer::run::run_map;
use eprsteer::synth::{
    connection_check, discrete_bound_slack, Density1d, DoubleGaussian, Gaussian1d, GaussianMixture1d,
    SyntheticConfig, Uniform1d, REFERENCE_EXTENT_MOMENTUM, REFERENCE_EXTENT_POSITION,
};
use eprsteer::witness::{evaluate, min_resolution};
use eprsteer::{
    AxisGrid, Direction, EvaluationMode, GridSpec, Histogram, JointDistribution, LogBase, Observable, Party,
};

const IDENTITY_TOLERANCE: f64 = 1e-12;
const IDENTITY_RUNTIME: Duration = Duration::from_secs(10);
const CONNECTION_TOLERANCE: f64 = 1e-6;
const CONNECTION_RUNTIME: Duration = Duration::from_secs(30);
const DISCRETE_BOUND_TOLERANCE: f64 = 1e-6;
const SIGNIFICANCE_THRESHOLD: f64 = 3.0;
const SYNTHETIC_RUNTIME: Duration = Duration::from_secs(120);
const SYNTHETIC_REPLICATES: usize = 1000;
const NULL_DRAWS: usize = 100;
const NULL_REPLICATES: usize = 200;
const DATA_PROCESSING_TOLERANCE: f64 = 1e-12;

fn report(id: u32, passed: bool, what: &str, measured: String) {
    println!(
        "ACCEPTANCE {id} {}: {what} ({measured})",
        if passed { "PASS" } else { "FAIL" }
    );
}

fn random_dist(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> JointDistribution {
    let grid = GridSpec::new(
        Observable::Position,
        vec![AxisGrid::centered(rows, 1.0).unwrap()],
        vec![AxisGrid::centered(cols, 1.0).unwrap()],
    )
    .unwrap();
    // sparse, skewed weights so that zero cells and tiny cells both occur
    let sparsity = rng.random_range(0.0..0.6);
    let mut w: Vec<f64> = (0..rows * cols)
        .map(|_| {
            if rng.random_bool(sparsity) {
                0.0
            } else {
                rng.random::<f64>().powi(rng.random_range(1..6))
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    JointDistribution::from_weights(grid, w).unwrap()
}

#[test]
fn acceptance_1_entropy_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let b = LogBase::BITS;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (r, c) = (rng.random_range(2..=64), rng.random_range(2..=64));
        let d = random_dist(&mut rng, r, c);
        let h_ab = joint_entropy(&d, b).value;
        let h_a = marginal_entropy(&d, Party::A, b).value;
        let h_b = marginal_entropy(&d, Party::B, b).value;
        let h_b_given_a = conditional_entropy(&d, Party::A, b).value;
        let h_a_given_b = conditional_entropy(&d, Party::B, b).value;
        let chain = (h_ab - h_a - h_b_given_a).abs();
        let bayes = (h_a_given_b + h_b - h_b_given_a - h_a).abs();
        let mi_negative = -mutual_information(&d, b).value;
        let conditioning = h_b_given_a - h_b;
        worst = worst.max(chain).max(bayes).max(mi_negative).max(conditioning);
    }
    let elapsed = start.elapsed();
    let passed = worst <= IDENTITY_TOLERANCE && elapsed < IDENTITY_RUNTIME;
    report(
        1,
        passed,
        "chain rule, Bayes swap, I >= 0, H(B|A) <= H(B) on 1000 random distributions",
        format!("worst {worst:.2e} <= {IDENTITY_TOLERANCE:.0e}, {elapsed:.2?}"),
    );
    assert!(passed);
}

/// Centered axis of width `delta` windows covering at least `half` on each side.
fn covering_axis(delta: f64, half: f64) -> AxisGrid {
    let n = 2 * (half / delta).ceil() as usize;
    AxisGrid::new(n, delta, -(n as f64) * delta / 2.0).unwrap()
}

#[test]
fn acceptance_2_connection() {
    let start = Instant::now();
    let b = LogBase::BITS;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for delta in [0.1, 0.5, 1.0] {
        let mut densities: Vec<(Box<dyn Density1d>, AxisGrid)> = Vec::new();
        for sigma in [0.3, 1.0, 3.0] {
            densities.push((
                Box::new(Gaussian1d { mean: 0.0, sigma }),
                covering_axis(delta, 8.0 * sigma),
            ));
        }
        // support aligned with window edges
        densities.push((Box::new(Uniform1d { lo: -2.0, hi: 2.0 }), covering_axis(delta, 2.0)));
        densities.push((
            Box::new(GaussianMixture1d {
                components: vec![
                    (0.4, Gaussian1d { mean: -2.0, sigma: 0.5 }),
                    (0.6, Gaussian1d { mean: 1.5, sigma: 0.8 }),
                ],
            }),
            covering_axis(delta, 8.0),
        ));
        for (density, axis) in &densities {
            worst = worst.max(connection_check(density.as_ref(), axis, b).unwrap());
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    let passed = worst < CONNECTION_TOLERANCE && elapsed < CONNECTION_RUNTIME;
    report(
        2,
        passed,
        "h = sum P h_l + H for Gaussian, uniform and bimodal densities",
        format!("{cases} cases, worst residual {worst:.2e} < {CONNECTION_TOLERANCE:.0e}, {elapsed:.2?}"),
    );
    assert!(passed);
}

#[test]
fn acceptance_3_discrete_bound() {
    let b = LogBase::BITS;
    let mut worst = f64::INFINITY;
    let mut checks = 0;
    for i in 0..50 {
        let ratio = 100f64.powf(i as f64 / 49.0);
        let state = DoubleGaussian::new(ratio * 1e-4, 1e-4).unwrap();
        for obs in [Observable::Position, Observable::Momentum] {
            let extent = 12.0 * state.density(obs).marginal_variance().sqrt();
            for n in [4, 8, 16, 24] {
                let g = GridSpec::symmetric(obs, vec![AxisGrid::centered(n, extent).unwrap()]).unwrap();
                worst = worst.min(discrete_bound_slack(&state, obs, &g, b).unwrap());
                checks += 1;
            }
        }
    }
    let passed = worst >= -DISCRETE_BOUND_TOLERANCE;
    report(
        3,
        passed,
        "h(x_B|x_A) <= H(X_B|X_A) + log dx_B on 50 double-Gaussian states",
        format!("{checks} state/grid pairs, min slack {worst:.3e} bit"),
    );
    assert!(passed);
}

#[test]
fn acceptance_4_resolution_cutoff() {
    let n = min_resolution(REFERENCE_EXTENT_POSITION, REFERENCE_EXTENT_MOMENTUM).unwrap();
    let below = (REFERENCE_EXTENT_POSITION / 3.0) * (REFERENCE_EXTENT_MOMENTUM / 3.0);
    let at = (REFERENCE_EXTENT_POSITION / 4.0) * (REFERENCE_EXTENT_MOMENTUM / 4.0);
    let passed = n == 4 && below >= std::f64::consts::PI * std::f64::consts::E && at < std::f64::consts::PI * std::f64::consts::E;
    report(
        4,
        passed,
        "min_resolution at Lx = 1.04e-3 m, Lk = 1.00e5 1/m",
        format!("N = {n}; dx dk = {below:.3} at 3, {at:.3} at 4"),
    );
    assert!(passed);
}

fn synthetic_at(resolution: usize) -> (Vec<Histogram>, Vec<Histogram>) {
    SyntheticConfig {
        resolution,
        ..SyntheticConfig::default()
    }
    .histograms()
    .unwrap()
}

fn significance(pos: &[Histogram], mom: &[Histogram], d: Direction, n_boot: usize, seed: u64) -> (f64, f64) {
    let r = witness_significance(pos, mom, d, LogBase::BITS, &BootstrapConfig::new(n_boot, seed)).unwrap();
    (r.point.margin, r.significance.unwrap())
}

#[test]
fn acceptance_5_synthetic_pattern() {
    let start = Instant::now();
    let total_per_observable: u64 = SyntheticConfig::default().total_counts * SyntheticConfig::default().dims as u64;
    let (p24, m24) = synthetic_at(24);
    let (p8, m8) = synthetic_at(8);
    let (p3, m3) = synthetic_at(3);
    let n = SYNTHETIC_REPLICATES;
    let (cond24, cond24_sig) = significance(&p24, &m24, Direction::BGivenA, n, 5);
    let (cond3, cond3_sig) = significance(&p3, &m3, Direction::BGivenA, n, 5);
    let (sym8, sym8_sig) = significance(&p8, &m8, Direction::Symmetric, n, 5);
    let (sym24, sym24_sig) = significance(&p24, &m24, Direction::Symmetric, n, 5);
    let elapsed = start.elapsed();
    let passed = total_per_observable >= 1_000_000
        && cond24_sig > SIGNIFICANCE_THRESHOLD
        && cond3 < 0.0
        && sym8 < 0.0
        && sym24 > 0.0
        && sym24_sig > SIGNIFICANCE_THRESHOLD
        && elapsed < SYNTHETIC_RUNTIME;
    report(
        5,
        passed,
        "default synthetic counts: conditional witnessed at 24x24 only above 3x3, symmetric at 24x24 but not 8x8",
        format!(
            "conditional 24: {cond24:.3} bit / {cond24_sig:.1} sigma; conditional 3: {cond3:.3} bit / {cond3_sig:.1} sigma; \
             symmetric 8: {sym8:.3} bit / {sym8_sig:.1} sigma; symmetric 24: {sym24:.3} bit / {sym24_sig:.1} sigma; \
             {total_per_observable} counts per observable, {n} replicates, {elapsed:.2?}"
        ),
    );
    println!(
        "ACCEPTANCE 5 NOTE: the experimental 3.6-16.4 sigma figures need the original counts and are not reproduced; \
         the synthetic state has far higher statistics, hence larger significances"
    );
    assert!(passed);
}

#[test]
fn acceptance_6_separable_null() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let resolutions = [2, 3, 4, 6, 8, 12, 24];
    let mut false_positives = 0;
    let mut positive = 0;
    let mut largest = f64::NEG_INFINITY;
    for draw in 0..NULL_DRAWS {
        // both marginals well inside the viewing area
        let sigma = (rng.random_range(8e-5f64.ln()..1.25e-4f64.ln())).exp();
        let cfg = SyntheticConfig {
            sigma_plus: sigma,
            sigma_minus: sigma,
            resolution: resolutions[draw % resolutions.len()],
            tail_tolerance: 1e-6,
            seed: rng.random(),
            ..SyntheticConfig::default()
        };
        let (pos, mom) = cfg.histograms().unwrap();
        for d in [Direction::BGivenA, Direction::Symmetric] {
            let (_, s) = significance(&pos, &mom, d, NULL_REPLICATES, draw as u64);
            largest = largest.max(s);
            if s > 0.0 {
                positive += 1;
            }
            if s > SIGNIFICANCE_THRESHOLD {
                false_positives += 1;
            }
        }
    }
    let passed = false_positives == 0 && positive == 0;
    report(
        6,
        passed,
        "separable states never show positive significance",
        format!(
            "{NULL_DRAWS} draws x 2 witnesses, {positive} positive, {false_positives} above {SIGNIFICANCE_THRESHOLD} sigma, \
             largest {largest:.1} sigma, {:.2?}",
            start.elapsed()
        ),
    );
    assert!(passed);
}

#[test]
fn acceptance_7_data_processing() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let b = LogBase::BITS;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..500 {
        let (r, c) = (2 * rng.random_range(1..=32), 2 * rng.random_range(1..=32));
        let d = random_dist(&mut rng, r, c);
        let coarse = downsample_dist(&d, 2, 2).unwrap();
        worst = worst.max(mutual_information(&coarse, b).value - mutual_information(&d, b).value);
    }
    let passed = worst <= DATA_PROCESSING_TOLERANCE;
    report(
        7,
        passed,
        "downsampling both parties by 2 never increases mutual information",
        format!("500 distributions, largest increase {worst:.2e}"),
    );
    assert!(passed);
}

#[test]
fn acceptance_8_map_determinism() {
    let cfg = RunConfig {
        synthetic: Some(SyntheticConfig::default()),
        seed: 88,
        n_boot: 200,
        targets_a: Some(vec![2, 3, 4, 6, 8, 12, 24]),
        targets_b: Some(vec![2, 3, 4, 6, 8, 12, 24]),
        ..RunConfig::default()
    };
    let first = run_map(&cfg).unwrap();
    let second = run_map(&cfg).unwrap();
    let rows: Vec<&str> = first.lines().filter(|l| !l.starts_with('#')).collect();
    // every r_B in {2, 3} column must be non-violating
    let low_b_ok = rows[1..].iter().all(|row| {
        row.split(',')
            .skip(1)
            .take(2)
            .all(|v| v.parse::<f64>().map_or(true, |s| s <= 0.0))
    });
    let passed = first == second && rows.len() == 8 && low_b_ok;
    report(
        8,
        passed,
        "two identical run_map calls give byte-identical 7x7 CSVs",
        format!("{} bytes, identical {}, r_B < 4 columns non-violating {low_b_ok}", first.len(), first == second),
    );
    assert!(passed);
}

#[test]
fn acceptance_9_base_invariance() {
    let bases = [LogBase::BITS, LogBase::NATS, LogBase::DITS];
    let mut evaluations = 0;
    let mut disagreements = 0;
    for mode in [EvaluationMode::IndependentAxes, EvaluationMode::FullJoint] {
        for resolution in [2, 3, 4, 6, 8, 12, 24] {
            let cfg = SyntheticConfig {
                mode,
                resolution,
                ..SyntheticConfig::default()
            };
            let (pos, mom) = cfg.distributions().unwrap();
            let (hp, hm) = cfg.histograms().unwrap();
            let normalized = |hs: &[Histogram]| -> Vec<JointDistribution> {
                hs.iter().map(|h| h.normalize().unwrap()).collect()
            };
            let (sp, sm) = (normalized(&hp), normalized(&hm));
            for d in [Direction::BGivenA, Direction::AGivenB, Direction::Symmetric] {
                for (p, m) in [(&pos, &mom), (&sp, &sm)] {
                    let verdicts: Vec<bool> = bases
                        .iter()
                        .map(|&b| evaluate(p, m, d, b).unwrap().violated())
                        .collect();
                    evaluations += 1;
                    if verdicts.iter().any(|&v| v != verdicts[0]) {
                        disagreements += 1;
                    }
                }
            }
        }
    }
    let passed = disagreements == 0;
    report(
        9,
        passed,
        "violation verdicts agree in bases 2, e and 10",
        format!("{evaluations} evaluations x 3 bases, {disagreements} disagreements"),
    );
    assert!(passed);
}
