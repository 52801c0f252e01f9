//! Synthetic double-Gaussian biphoton source.
//!
//! Each transverse axis carries the amplitude
//!
//! ```text
//! psi(x_A, x_B) ~ exp(-(x_A + x_B)^2 / (4 s+^2)) * exp(-(x_A - x_B)^2 / (4 s-^2))
//! ```
//!
//! so `x_A + x_B ~ N(0, s+^2)` and `x_A - x_B ~ N(0, s-^2)` independently.
//! Its Fourier transform has the same form in wavenumber with the widths
//! `1/s+` and `1/s-`: `k_A + k_B ~ N(0, 1/s+^2)`, `k_A - k_B ~ N(0, 1/s-^2)`.
//! With `s- < s+` positions are correlated and momenta anticorrelated.
//!
//! Conditional variances follow directly:
//! `Var(x_B | x_A) = s+^2 s-^2 / (s+^2 + s-^2)` and
//! `Var(k_B | k_A) = 1 / (s+^2 + s-^2)`.

use std::f64::consts::{E, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boot::derive_seed;
use crate::dist::{stable_sum, CountTensor, Histogram, JointDistribution};
use crate::entropy::{conditional_entropy, entropy, LogBase};
use crate::error::{Error, Result};
use crate::grid::{AxisGrid, GridSpec, Observable, Party};
use crate::quad::{x_ln_x, Rule};
use crate::witness::EvaluationMode;

/// Position viewing extent of the reference experiment (m).
pub const REFERENCE_EXTENT_POSITION: f64 = 1.04e-3;
/// Momentum viewing extent of the reference experiment (1/m).
pub const REFERENCE_EXTENT_MOMENTUM: f64 = 1.00e5;

/// Largest density mass a grid may miss in [`discretize`].
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

/// One-dimensional probability density.
pub trait Density1d: Sync {
    fn density(&self, x: f64) -> f64;
    /// Smallest scale on which the density varies.
    fn length_scale(&self) -> f64;
    /// Closed-form differential entropy in nats, if known.
    fn entropy_nats(&self) -> Option<f64> {
        None
    }
}

/// Joint density of one coordinate of party A and one of party B.
pub trait Density2d: Sync {
    fn density(&self, a: f64, b: f64) -> f64;
    fn length_scale(&self) -> f64;
    /// `density(a, b) == density(b, a)` for all arguments.
    fn exchange_symmetric(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1d {
    pub mean: f64,
    pub sigma: f64,
}

impl Density1d for Gaussian1d {
    fn density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    fn length_scale(&self) -> f64 {
        self.sigma
    }

    fn entropy_nats(&self) -> Option<f64> {
        Some(0.5 * (2.0 * PI * E * self.sigma * self.sigma).ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform1d {
    pub lo: f64,
    pub hi: f64,
}

impl Density1d for Uniform1d {
    fn density(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    fn length_scale(&self) -> f64 {
        self.hi - self.lo
    }

    fn entropy_nats(&self) -> Option<f64> {
        Some((self.hi - self.lo).ln())
    }
}

/// Weighted sum of Gaussians; weights must sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture1d {
    pub components: Vec<(f64, Gaussian1d)>,
}

impl Density1d for GaussianMixture1d {
    fn density(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, g)| w * g.density(x)).sum()
    }

    fn length_scale(&self) -> f64 {
        self.components
            .iter()
            .map(|(_, g)| g.sigma)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Bivariate Gaussian with independent normal sum `a + b ~ N(0, sum_std^2)`
/// and difference `a - b ~ N(0, diff_std^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumDifferenceGaussian {
    pub sum_std: f64,
    pub diff_std: f64,
}

impl SumDifferenceGaussian {
    pub fn marginal_variance(&self) -> f64 {
        0.25 * (self.sum_std.powi(2) + self.diff_std.powi(2))
    }

    pub fn covariance(&self) -> f64 {
        0.25 * (self.sum_std.powi(2) - self.diff_std.powi(2))
    }

    pub fn conditional_variance(&self) -> f64 {
        let (s2, d2) = (self.sum_std.powi(2), self.diff_std.powi(2));
        s2 * d2 / (s2 + d2)
    }
}

impl Density2d for SumDifferenceGaussian {
    fn density(&self, a: f64, b: f64) -> f64 {
        let u = (a + b) / self.sum_std;
        let v = (a - b) / self.diff_std;
        (-0.5 * (u * u + v * v)).exp() / (PI * self.sum_std * self.diff_std)
    }

    fn length_scale(&self) -> f64 {
        self.conditional_variance().sqrt()
    }

    fn exchange_symmetric(&self) -> bool {
        true
    }
}

/// Double-Gaussian widths of one transverse axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleGaussian {
    /// Width of the `x_A + x_B` mode (m).
    pub sigma_plus: f64,
    /// Width of the `x_A - x_B` mode (m).
    pub sigma_minus: f64,
}

impl DoubleGaussian {
    pub fn new(sigma_plus: f64, sigma_minus: f64) -> Result<Self> {
        let ok = |s: f64| s > 0.0 && s.is_finite();
        if !(ok(sigma_plus) && ok(sigma_minus)) {
            return Err(Error::InvalidParameter(format!(
                "double-Gaussian widths must be positive, got {sigma_plus} and {sigma_minus}"
            )));
        }
        Ok(Self {
            sigma_plus,
            sigma_minus,
        })
    }

    pub fn is_entangled(&self) -> bool {
        self.sigma_plus != self.sigma_minus
    }

    /// Joint density of one observable.
    pub fn density(&self, observable: Observable) -> SumDifferenceGaussian {
        match observable {
            Observable::Position => SumDifferenceGaussian {
                sum_std: self.sigma_plus,
                diff_std: self.sigma_minus,
            },
            Observable::Momentum => SumDifferenceGaussian {
                sum_std: 1.0 / self.sigma_plus,
                diff_std: 1.0 / self.sigma_minus,
            },
        }
    }

    /// Joint position density (1/m^2).
    pub fn position_pdf(&self, x_a: f64, x_b: f64) -> f64 {
        self.density(Observable::Position).density(x_a, x_b)
    }

    /// Joint momentum density (m^2).
    pub fn momentum_pdf(&self, k_a: f64, k_b: f64) -> f64 {
        self.density(Observable::Momentum).density(k_a, k_b)
    }

    /// Differential entropy of B's coordinate given A's, `1/2 log(2 pi e var)`.
    pub fn conditional_entropy(&self, observable: Observable, base: LogBase) -> f64 {
        let var = self.density(observable).conditional_variance();
        base.from_nats(0.5 * (2.0 * PI * E * var).ln())
    }

    /// Differential entropy of one party's marginal.
    pub fn marginal_entropy(&self, observable: Observable, base: LogBase) -> f64 {
        let var = self.density(observable).marginal_variance();
        base.from_nats(0.5 * (2.0 * PI * E * var).ln())
    }
}

/// Widths for each of the `n` transverse axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleGaussianParams {
    axes: Vec<DoubleGaussian>,
}

impl DoubleGaussianParams {
    pub fn new(axes: Vec<DoubleGaussian>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "supported dimensions are 1 and 2, got {}",
                axes.len()
            )));
        }
        Ok(Self { axes })
    }

    /// The same widths on every one of `dims` axes.
    pub fn isotropic(dims: usize, axis: DoubleGaussian) -> Result<Self> {
        Self::new(vec![axis; dims])
    }

    pub fn axes(&self) -> &[DoubleGaussian] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn is_entangled(&self) -> bool {
        self.axes.iter().any(DoubleGaussian::is_entangled)
    }

    /// `h(x_B | x_A)` (or momentum analog) summed over axes; may be negative.
    pub fn analytic_conditional_entropy(&self, observable: Observable, base: LogBase) -> f64 {
        self.axes
            .iter()
            .map(|a| a.conditional_entropy(observable, base))
            .sum()
    }

    /// `h(x_B|x_A) + h(k_B|k_A)` of the continuous state.
    pub fn continuous_steering_sum(&self, base: LogBase) -> f64 {
        self.analytic_conditional_entropy(Observable::Position, base)
            + self.analytic_conditional_entropy(Observable::Momentum, base)
    }

    /// `n log(pi e)`; a continuous sum below this witnesses steering.
    pub fn continuous_steering_bound(&self, base: LogBase) -> f64 {
        self.dims() as f64 * base.log(PI * E)
    }
}

pub fn joint_position_pdf(axis: &DoubleGaussian, x_a: f64, x_b: f64) -> f64 {
    axis.position_pdf(x_a, x_b)
}

pub fn joint_momentum_pdf(axis: &DoubleGaussian, k_a: f64, k_b: f64) -> f64 {
    axis.momentum_pdf(k_a, k_b)
}

/// Discretized density together with the mass that fell outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretized {
    /// Cell probabilities renormalized over the grid.
    pub dist: JointDistribution,
    pub tail_mass: f64,
}

fn window_rules(axis: &AxisGrid, length_scale: f64) -> Vec<Rule> {
    (0..axis.n_windows())
        .map(|w| {
            let (lo, hi) = axis.window_bounds(w);
            Rule::resolving(lo, hi, length_scale)
        })
        .collect()
}

fn cell_mass(density: &dyn Density2d, ra: &Rule, rb: &Rule) -> f64 {
    ra.nodes
        .iter()
        .zip(&ra.weights)
        .map(|(&a, &wa)| {
            wa * rb
                .nodes
                .iter()
                .zip(&rb.weights)
                .map(|(&b, &wb)| wb * density.density(a, b))
                .sum::<f64>()
        })
        .sum()
}

fn require_one_dim(grid: &GridSpec) -> Result<(AxisGrid, AxisGrid)> {
    if grid.dims() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected a one-dimensional grid, got {} dimensions",
            grid.dims()
        )));
    }
    Ok((grid.axes(Party::A)[0], grid.axes(Party::B)[0]))
}

/// Integrate `density` over every cell of a one-dimensional grid.
pub fn discretize(density: &dyn Density2d, grid: &GridSpec) -> Result<Discretized> {
    discretize_with_tolerance(density, grid, DEFAULT_TAIL_TOLERANCE)
}

/// [`discretize`] with an explicit limit on the missed mass.
pub fn discretize_with_tolerance(
    density: &dyn Density2d,
    grid: &GridSpec,
    tail_tolerance: f64,
) -> Result<Discretized> {
    let (axis_a, axis_b) = require_one_dim(grid)?;
    let scale = density.length_scale();
    let rules_a = window_rules(&axis_a, scale);
    let rules_b = window_rules(&axis_b, scale);
    let (rows, cols) = (axis_a.n_windows(), axis_b.n_windows());
    let mirror = density.exchange_symmetric() && axis_a == axis_b;

    let computed: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|l| {
            let start = if mirror { l } else { 0 };
            (start..cols)
                .map(|m| cell_mass(density, &rules_a[l], &rules_b[m]))
                .collect()
        })
        .collect();
    let mut weights = vec![0.0; rows * cols];
    for (l, row) in computed.iter().enumerate() {
        let start = if mirror { l } else { 0 };
        for (offset, &p) in row.iter().enumerate() {
            let m = start + offset;
            weights[l * cols + m] = p;
            if mirror {
                weights[m * cols + l] = p;
            }
        }
    }

    let inside = stable_sum(weights.iter().copied());
    let tail_mass = (1.0 - inside).max(0.0);
    if tail_mass > tail_tolerance {
        return Err(Error::Truncation {
            tail_mass,
            tolerance: tail_tolerance,
        });
    }
    Ok(Discretized {
        dist: JointDistribution::from_weights(grid.clone(), weights)?,
        tail_mass,
    })
}

fn axis_grid(observable: Observable, grid: &GridSpec, i: usize) -> Result<GridSpec> {
    GridSpec::new(
        observable,
        vec![grid.axes(Party::A)[i]],
        vec![grid.axes(Party::B)[i]],
    )
}

/// Discretize the double-Gaussian state on a grid of one or two dimensions.
/// Two-dimensional grids get the full joint tensor, built from the
/// independent per-axis tensors.
pub fn discretize_model(
    params: &DoubleGaussianParams,
    observable: Observable,
    grid: &GridSpec,
    tail_tolerance: f64,
) -> Result<Discretized> {
    if grid.observable() != observable || grid.dims() != params.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{}-axis model on a {}-axis {:?} grid",
            params.dims(),
            grid.dims(),
            grid.observable()
        )));
    }
    let per_axis = (0..grid.dims())
        .map(|i| {
            discretize_with_tolerance(
                &params.axes()[i].density(observable),
                &axis_grid(observable, grid, i)?,
                tail_tolerance,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    if per_axis.len() == 1 {
        return Ok(per_axis.into_iter().next().expect("one axis"));
    }
    let inside: f64 = per_axis.iter().map(|d| 1.0 - d.tail_mass).product();
    let tail_mass = (1.0 - inside).max(0.0);
    if tail_mass > tail_tolerance {
        return Err(Error::Truncation {
            tail_mass,
            tolerance: tail_tolerance,
        });
    }
    let dists: Vec<JointDistribution> = per_axis.into_iter().map(|d| d.dist).collect();
    Ok(Discretized {
        dist: JointDistribution::from_independent_axes(&dists)?,
        tail_mass,
    })
}

/// Probability of each window of a 1-D density (not renormalized) and the
/// mass outside the axis.
pub fn window_probabilities(
    density: &dyn Density1d,
    axis: &AxisGrid,
    tail_tolerance: f64,
) -> Result<(Vec<f64>, f64)> {
    let probs: Vec<f64> = window_rules(axis, density.length_scale())
        .iter()
        .map(|r| r.integrate(|x| density.density(x)))
        .collect();
    let tail_mass = (1.0 - stable_sum(probs.iter().copied())).max(0.0);
    if tail_mass > tail_tolerance {
        return Err(Error::Truncation {
            tail_mass,
            tolerance: tail_tolerance,
        });
    }
    Ok((probs, tail_mass))
}

/// Residual `|h(x) - sum_l P_l h_l(x) - H(X)|` of the decomposition of a
/// differential entropy into within-window entropies and the discrete
/// entropy of the windows.
///
/// `h(x)` is the closed form when the density provides one and otherwise a
/// separate quadrature over the axis extent on panels not aligned with the
/// windows.
pub fn connection_check(density: &dyn Density1d, axis: &AxisGrid, base: LogBase) -> Result<f64> {
    let (probs, _) = window_probabilities(density, axis, DEFAULT_TAIL_TOLERANCE)?;
    let scale = density.length_scale();

    // P_l h_l = -int_l rho ln rho + P_l ln P_l
    let weighted_within: f64 = stable_sum(window_rules(axis, scale).iter().zip(&probs).map(
        |(rule, &p)| {
            let int_rho_ln_rho = rule.integrate(|x| x_ln_x(density.density(x)));
            if p < 1e-300 {
                0.0
            } else {
                -int_rho_ln_rho + p * p.ln()
            }
        },
    ));
    let discrete = -stable_sum(probs.iter().map(|&p| x_ln_x(p)));

    let continuous = match density.entropy_nats() {
        Some(h) => h,
        None => {
            let lo = axis.origin();
            let hi = lo + axis.extent();
            let panels = crate::quad::panels_for(hi - lo, scale) * 2 + 1;
            -Rule::composite(lo, hi, panels.max(axis.n_windows() + 1))
                .integrate(|x| x_ln_x(density.density(x)))
        }
    };
    Ok(base.from_nats((continuous - weighted_within - discrete).abs()))
}

/// `sum_{l,m} P(l, m) h_{lm}(b | a)`: the probability-weighted differential
/// entropy of B's coordinate given A's inside each cell.
pub fn within_cell_conditional_entropy(
    density: &dyn Density2d,
    grid: &GridSpec,
    base: LogBase,
) -> Result<f64> {
    let (axis_a, axis_b) = require_one_dim(grid)?;
    let scale = density.length_scale();
    let rules_a = window_rules(&axis_a, scale);
    let rules_b = window_rules(&axis_b, scale);

    // P h(b|a) = P [h(a, b) - h(a)] = int m ln m - int int rho ln rho,
    // where m(a) is the in-cell marginal of a.
    let terms: Vec<f64> = (0..axis_a.n_windows())
        .into_par_iter()
        .map(|l| {
            let ra = &rules_a[l];
            rules_b
                .iter()
                .map(|rb| {
                    let mut joint = 0.0;
                    let mut marginal = 0.0;
                    for (&a, &wa) in ra.nodes.iter().zip(&ra.weights) {
                        let mut m = 0.0;
                        let mut j = 0.0;
                        for (&b, &wb) in rb.nodes.iter().zip(&rb.weights) {
                            let rho = density.density(a, b);
                            m += wb * rho;
                            j += wb * x_ln_x(rho);
                        }
                        marginal += wa * x_ln_x(m);
                        joint += wa * j;
                    }
                    marginal - joint
                })
                .sum()
        })
        .collect();
    Ok(base.from_nats(stable_sum(terms)))
}

/// Slack of `h(x_B|x_A) <= H(X_B|X_A) + log dx_B` for one axis of the
/// model on a one-dimensional grid; nonnegative when the bound holds.
pub fn discrete_bound_slack(
    axis: &DoubleGaussian,
    observable: Observable,
    grid: &GridSpec,
    base: LogBase,
) -> Result<f64> {
    let (_, axis_b) = require_one_dim(grid)?;
    let d = discretize(&axis.density(observable), grid)?;
    let discrete = conditional_entropy(&d.dist, Party::A, base).value;
    Ok(discrete + base.log(axis_b.window_width()) - axis.conditional_entropy(observable, base))
}

/// Poisson means `total * p` of every cell.
pub fn expected_counts(dist: &JointDistribution, total: u64) -> Result<Vec<f64>> {
    if total == 0 {
        return Err(Error::ZeroTotal);
    }
    let t = total as f64;
    Ok(dist.probs().iter().map(|&p| t * p).collect())
}

/// One synthetic run: every cell drawn from `Poisson(total * p)`.
pub fn sample_counts<R: rand::Rng + ?Sized>(
    dist: &JointDistribution,
    total: u64,
    rng: &mut R,
) -> Result<CountTensor> {
    let counts = expected_counts(dist, total)?
        .into_iter()
        .map(|mean| {
            if mean <= 0.0 {
                0
            } else {
                Poisson::new(mean).expect("positive mean").sample(rng) as u64
            }
        })
        .collect();
    CountTensor::new(dist.grid().shape(), counts)
}

/// A synthetic experiment: state, viewing area, resolution and exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    /// Transverse dimensions per party (1 or 2).
    pub dims: usize,
    pub mode: EvaluationMode,
    /// Windows per axis.
    pub resolution: usize,
    pub extent_position: f64,
    pub extent_momentum: f64,
    /// Expected coincidences per recorded tensor.
    pub total_counts: u64,
    /// Largest density mass allowed outside the viewing area.
    pub tail_tolerance: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    /// Calibrated so that at the reference viewing area the
    /// conditional witness fails below 4 windows and holds at 24, and the
    /// mutual-information witness fails at 8 windows but holds at 24. The
    /// state is wide enough that about 0.4% of its momentum mass falls
    /// outside the viewing area, hence the loose tail tolerance.
    fn default() -> Self {
        Self {
            sigma_plus: 2.5e-4,
            sigma_minus: 3.0e-5,
            dims: 2,
            mode: EvaluationMode::IndependentAxes,
            resolution: 24,
            extent_position: REFERENCE_EXTENT_POSITION,
            extent_momentum: REFERENCE_EXTENT_MOMENTUM,
            total_counts: 1_000_000,
            tail_tolerance: 1e-2,
            seed: 2012,
        }
    }
}

/// Position and momentum tensors of one synthetic run.
pub type ObservablePair<T> = (Vec<T>, Vec<T>);

impl SyntheticConfig {
    pub fn params(&self) -> Result<DoubleGaussianParams> {
        DoubleGaussianParams::isotropic(
            self.dims,
            DoubleGaussian::new(self.sigma_plus, self.sigma_minus)?,
        )
    }

    fn extent(&self, observable: Observable) -> f64 {
        match observable {
            Observable::Position => self.extent_position,
            Observable::Momentum => self.extent_momentum,
        }
    }

    /// Grids of the recorded tensors of one observable: one per axis in
    /// independent-axes mode, a single `dims`-dimensional grid otherwise.
    pub fn grids(&self, observable: Observable) -> Result<Vec<GridSpec>> {
        let axis = AxisGrid::centered(self.resolution, self.extent(observable))?;
        match self.mode {
            EvaluationMode::IndependentAxes => (0..self.dims)
                .map(|_| GridSpec::symmetric(observable, vec![axis]))
                .collect(),
            EvaluationMode::FullJoint => {
                Ok(vec![GridSpec::symmetric(observable, vec![axis; self.dims])?])
            }
        }
    }

    fn discretized(&self, observable: Observable) -> Result<Vec<Discretized>> {
        let params = self.params()?;
        let grids = self.grids(observable)?;
        match self.mode {
            EvaluationMode::IndependentAxes => grids
                .iter()
                .zip(params.axes())
                .map(|(g, axis)| {
                    let single = DoubleGaussianParams::new(vec![*axis])?;
                    discretize_model(&single, observable, g, self.tail_tolerance)
                })
                .collect(),
            EvaluationMode::FullJoint => {
                Ok(vec![discretize_model(&params, observable, &grids[0], self.tail_tolerance)?])
            }
        }
    }

    /// Exact cell probabilities (no counting noise).
    pub fn distributions(&self) -> Result<ObservablePair<JointDistribution>> {
        let take = |v: Vec<Discretized>| v.into_iter().map(|d| d.dist).collect();
        Ok((
            take(self.discretized(Observable::Position)?),
            take(self.discretized(Observable::Momentum)?),
        ))
    }

    /// Poisson-sampled coincidence histograms, reproducible from `seed`.
    pub fn histograms(&self) -> Result<ObservablePair<Histogram>> {
        let (pos, mom) = self.distributions()?;
        let sample = |dists: Vec<JointDistribution>, tag: u64| -> Result<Vec<Histogram>> {
            dists
                .into_iter()
                .enumerate()
                .map(|(i, d)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[tag, i as u64]));
                    let counts = sample_counts(&d, self.total_counts, &mut rng)?;
                    Histogram::new(counts, d.grid().clone())
                })
                .collect()
        };
        Ok((sample(pos, 0)?, sample(mom, 1)?))
    }
}

/// Discrete entropy of a 1-D density's windows, renormalized.
pub fn window_entropy(density: &dyn Density1d, axis: &AxisGrid, base: LogBase) -> Result<f64> {
    let (probs, _) = window_probabilities(density, axis, DEFAULT_TAIL_TOLERANCE)?;
    let total = stable_sum(probs.iter().copied());
    let p: Vec<f64> = probs.iter().map(|x| x / total).collect();
    Ok(entropy(&p, base)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::marginalize;
    use approx::assert_abs_diff_eq;
    use statrs::function::erf::erf;

    fn grid_1d(obs: Observable, n: usize, extent: f64) -> GridSpec {
        GridSpec::symmetric(obs, vec![AxisGrid::centered(n, extent).unwrap()]).unwrap()
    }

    #[test]
    fn separable_state_factorizes() {
        let s = DoubleGaussian::new(2.0, 2.0).unwrap();
        let d = s.density(Observable::Position);
        assert_eq!(d.covariance(), 0.0);
        let g = Gaussian1d {
            mean: 0.0,
            sigma: d.marginal_variance().sqrt(),
        };
        for &(a, b) in &[(0.0, 0.0), (1.0, -0.5), (-2.0, 3.1)] {
            let prod = g.density(a) * g.density(b);
            assert!((s.position_pdf(a, b) - prod).abs() < 1e-14 * prod.max(1e-300));
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        let s = DoubleGaussian::new(2.5e-4, 3e-5).unwrap();
        for obs in [Observable::Position, Observable::Momentum] {
            let d = s.density(obs);
            let half = 8.0 * d.marginal_variance().sqrt();
            let rule = Rule::resolving(-half, half, d.length_scale());
            let total = rule.integrate(|a| rule.integrate(|b| d.density(a, b)));
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn conditional_variance_matches_quadrature() {
        // Var(x_B | x_A = a) from quadrature over b at several a.
        let s = DoubleGaussian::new(1.3, 0.4).unwrap();
        let d = s.density(Observable::Position);
        let rule = Rule::resolving(-12.0, 12.0, 0.1);
        for a in [-1.0, 0.0, 0.7] {
            let z = rule.integrate(|b| d.density(a, b));
            let mean = rule.integrate(|b| b * d.density(a, b)) / z;
            let var = rule.integrate(|b| (b - mean).powi(2) * d.density(a, b)) / z;
            let expected = 1.3f64.powi(2) * 0.4f64.powi(2) / (1.3f64.powi(2) + 0.4f64.powi(2));
            assert_abs_diff_eq!(var, expected, epsilon = 1e-10);
            assert_abs_diff_eq!(d.conditional_variance(), expected, epsilon = 1e-15);
        }
        let k = s.density(Observable::Momentum);
        assert_abs_diff_eq!(k.conditional_variance(), 1.0 / (1.3f64.powi(2) + 0.4f64.powi(2)), epsilon = 1e-14);
    }

    #[test]
    fn single_window_holds_all_mass() {
        let g = Gaussian1d { mean: 0.0, sigma: 1.0 };
        let axis = AxisGrid::centered(1, 16.0).unwrap();
        let (p, _) = window_probabilities(&g, &axis, DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn center_window_matches_erf() {
        let g = Gaussian1d { mean: 0.0, sigma: 1.0 };
        // width-1 windows: the centre window is [-1/2, 1/2]
        let axis = AxisGrid::centered(17, 17.0).unwrap();
        let (p, _) = window_probabilities(&g, &axis, DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_abs_diff_eq!(p[8], erf(0.5 / 2f64.sqrt()), epsilon = 1e-9);
        // width-2 windows: the centre window is [-1, 1], one standard deviation
        let axis = AxisGrid::centered(9, 18.0).unwrap();
        let (p, _) = window_probabilities(&g, &axis, DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_abs_diff_eq!(p[4], erf(1.0 / 2f64.sqrt()), epsilon = 1e-9);
        assert_abs_diff_eq!(p[4], 0.682_689_492_137_085_9, epsilon = 1e-13);
        assert_abs_diff_eq!(p[4], 0.6827, epsilon = 1e-4);
    }

    #[test]
    fn discretized_state_is_party_symmetric() {
        let s = DoubleGaussian::new(2.5e-4, 3e-5).unwrap();
        let g = grid_1d(Observable::Position, 12, REFERENCE_EXTENT_POSITION);
        let d = discretize_with_tolerance(&s.density(Observable::Position), &g, 1e-3)
            .unwrap()
            .dist;
        for l in 0..12 {
            for m in 0..12 {
                assert_eq!(d.get(l, m), d.get(m, l));
            }
        }
        assert_eq!(d.swap_parties().probs(), d.probs());
    }

    #[test]
    fn truncated_grid_is_rejected() {
        let s = DoubleGaussian::new(2.5e-4, 3e-5).unwrap();
        let g = grid_1d(Observable::Momentum, 24, REFERENCE_EXTENT_MOMENTUM);
        let err = discretize(&s.density(Observable::Momentum), &g).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
        let loose = discretize_with_tolerance(&s.density(Observable::Momentum), &g, 1e-2).unwrap();
        assert!(loose.tail_mass > 1e-6 && loose.tail_mass < 1e-2);
    }

    #[test]
    fn connection_uniform_and_single_window() {
        let u = Uniform1d { lo: -2.0, hi: 2.0 };
        let axis = AxisGrid::new(8, 0.5, -2.0).unwrap();
        assert!(connection_check(&u, &axis, LogBase::BITS).unwrap() < 1e-12);

        let g = Gaussian1d { mean: 0.0, sigma: 1.0 };
        let one = AxisGrid::centered(1, 20.0).unwrap();
        assert!(connection_check(&g, &one, LogBase::BITS).unwrap() < 1e-10);
    }

    #[test]
    fn connection_standard_gaussian() {
        let g = Gaussian1d { mean: 0.0, sigma: 1.0 };
        let axis = AxisGrid::centered(32, 16.0).unwrap();
        assert!(connection_check(&g, &axis, LogBase::BITS).unwrap() < 1e-6);
    }

    #[test]
    fn connection_rejects_truncated_axis() {
        let g = Gaussian1d { mean: 0.0, sigma: 1.0 };
        let axis = AxisGrid::centered(4, 4.0).unwrap();
        assert!(matches!(
            connection_check(&g, &axis, LogBase::BITS),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn separable_conditional_equals_unconditional() {
        let s = DoubleGaussian::new(0.7, 0.7).unwrap();
        for obs in [Observable::Position, Observable::Momentum] {
            assert_abs_diff_eq!(
                s.conditional_entropy(obs, LogBase::BITS),
                s.marginal_entropy(obs, LogBase::BITS),
                epsilon = 1e-14
            );
        }
        // marginal std of x_B is 0.7 / sqrt(2)
        let sigma_b: f64 = 0.7 / 2f64.sqrt();
        assert_abs_diff_eq!(
            s.conditional_entropy(Observable::Position, LogBase::BITS),
            0.5 * (2.0 * PI * E * sigma_b * sigma_b).log2(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn continuous_sum_saturates_only_when_separable() {
        let b = LogBase::BITS;
        let params = |ratio: f64| {
            DoubleGaussianParams::isotropic(1, DoubleGaussian::new(ratio * 1e-4, 1e-4).unwrap()).unwrap()
        };
        let sep = params(1.0);
        assert_abs_diff_eq!(
            sep.continuous_steering_sum(b),
            sep.continuous_steering_bound(b),
            epsilon = 1e-12
        );
        // gap equals log(2 s+ s- / (s+^2 + s-^2)) and closes as the ratio -> 1
        let mut last = f64::NEG_INFINITY;
        for ratio in [10.0, 3.0, 1.5, 1.1, 1.01, 1.001] {
            let p = params(ratio);
            let gap = p.continuous_steering_sum(b) - p.continuous_steering_bound(b);
            assert_abs_diff_eq!(gap, (2.0 * ratio / (ratio * ratio + 1.0)).log2(), epsilon = 1e-12);
            assert!(gap < 0.0 && gap > last);
            last = gap;
        }
        assert!(last > -1e-6);
        let strong = params(100.0);
        assert!(strong.continuous_steering_sum(b) < strong.continuous_steering_bound(b));
    }

    #[test]
    fn expected_counts_examples() {
        let g = grid_1d(Observable::Position, 2, 1.0);
        let u = JointDistribution::new(g.clone(), vec![0.25; 4]).unwrap();
        assert_eq!(expected_counts(&u, 400).unwrap(), vec![100.0; 4]);
        let delta = JointDistribution::new(g, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(expected_counts(&delta, 77).unwrap(), vec![0.0, 0.0, 77.0, 0.0]);
        assert!(expected_counts(&u, 0).is_err());
    }

    #[test]
    fn full_joint_model_matches_axis_product() {
        let params = DoubleGaussianParams::new(vec![
            DoubleGaussian::new(2.0, 0.5).unwrap(),
            DoubleGaussian::new(1.5, 0.6).unwrap(),
        ])
        .unwrap();
        let axis = AxisGrid::centered(6, 12.0).unwrap();
        let g = GridSpec::symmetric(Observable::Position, vec![axis, axis]).unwrap();
        let full = discretize_model(&params, Observable::Position, &g, 1e-6).unwrap();
        assert_eq!(full.dist.grid().shape(), vec![6, 6, 6, 6]);
        let mx = marginalize(&full.dist, Party::A);
        assert_abs_diff_eq!(mx.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn synthetic_histograms_are_reproducible() {
        let cfg = SyntheticConfig {
            resolution: 8,
            total_counts: 10_000,
            ..SyntheticConfig::default()
        };
        let (p1, m1) = cfg.histograms().unwrap();
        let (p2, m2) = cfg.histograms().unwrap();
        assert_eq!(p1, p2);
        assert_eq!(m1, m2);
        assert_eq!(p1.len(), 2);
        assert_ne!(p1[0].counts(), p1[1].counts());
    }
}
