//! Entropic steering inequalities evaluated on discrete position and
//! momentum distributions.
//!
//! Measurements are passed as slices: a single tensor per observable holds
//! the full joint distribution over all transverse dimensions, while one
//! one-dimensional tensor per axis treats the axes as statistically
//! independent, in which case per-axis entropies are summed.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::dist::JointDistribution;
use crate::entropy::{conditional_entropy, mutual_information, EntropyValue, LogBase};
use crate::error::{Error, Result};
use crate::grid::{AxisGrid, Observable, Party};

/// Minimum phase-space area of one window pair, `pi * e`.
pub const PI_E: f64 = PI * E;

/// Which inequality a [`WitnessResult`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// B steered by A: `H(X_B|X_A) + H(K_B|K_A)` against B's window widths.
    #[serde(rename = "B_given_A")]
    BGivenA,
    /// A steered by B.
    #[serde(rename = "A_given_B")]
    AGivenB,
    /// Mutual-information inequality, symmetric in the parties.
    #[serde(rename = "symmetric")]
    Symmetric,
}

impl Direction {
    /// `(conditioning party, steered party)` of a conditional witness.
    fn parties(self) -> Option<(Party, Party)> {
        match self {
            Direction::BGivenA => Some((Party::A, Party::B)),
            Direction::AGivenB => Some((Party::B, Party::A)),
            Direction::Symmetric => None,
        }
    }
}

/// How the left-hand side was assembled from the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationMode {
    /// One tensor per observable over every dimension.
    FullJoint,
    /// One 1-D tensor per axis; entropies summed over axes.
    IndependentAxes,
}

/// Both sides of one inequality. A positive `margin` always means the
/// inequality is violated, i.e. steering is witnessed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessResult {
    pub direction: Direction,
    pub mode: EvaluationMode,
    pub lhs: EntropyValue,
    pub bound: f64,
    pub margin: f64,
    pub significance_sigma: Option<f64>,
}

impl WitnessResult {
    pub fn base(&self) -> LogBase {
        self.lhs.base
    }

    pub fn violated(&self) -> bool {
        self.margin > 0.0
    }
}

/// Per-dimension bound `log(pi e / (dx dk))`; negative when the windows are
/// too coarse to witness anything.
pub fn per_dim_bound(dx: f64, dk: f64, base: LogBase) -> Result<f64> {
    if !(dx > 0.0 && dk > 0.0 && dx.is_finite() && dk.is_finite()) {
        return Err(Error::NonpositiveWindow { dx, dk });
    }
    Ok(base.log(PI_E / (dx * dk)))
}

/// Smallest number of windows `N` per axis such that `(Lx/N)(Lk/N) < pi e`.
pub fn min_resolution(lx: f64, lk: f64) -> Result<usize> {
    if !(lx > 0.0 && lk > 0.0 && lx.is_finite() && lk.is_finite()) {
        return Err(Error::NonpositiveExtent { lx, lk });
    }
    let below = |n: usize| (lx / n as f64) * (lk / n as f64) < PI_E;
    let mut n = (lx * lk / PI_E).sqrt().floor() as usize + 1;
    while n > 1 && below(n - 1) {
        n -= 1;
    }
    while !below(n) {
        n += 1;
    }
    Ok(n)
}

/// Check that position and momentum inputs pair up, and return the mode
/// together with the position/momentum axis pairs of every dimension.
fn pair_axes(
    pos: &[JointDistribution],
    mom: &[JointDistribution],
) -> Result<(EvaluationMode, Vec<[(AxisGrid, AxisGrid); 2]>)> {
    if pos.is_empty() || pos.len() != mom.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} position tensors vs {} momentum tensors",
            pos.len(),
            mom.len()
        )));
    }
    for d in pos {
        if d.grid().observable() != Observable::Position {
            return Err(Error::DimensionMismatch("position input has a momentum grid".into()));
        }
    }
    for d in mom {
        if d.grid().observable() != Observable::Momentum {
            return Err(Error::DimensionMismatch("momentum input has a position grid".into()));
        }
    }
    let mode = if pos.len() == 1 {
        EvaluationMode::FullJoint
    } else {
        if pos.len() > 2 || pos.iter().chain(mom).any(|d| d.grid().dims() != 1) {
            return Err(Error::DimensionMismatch(
                "independent-axes input needs one 1-D tensor per axis (at most 2 axes)".into(),
            ));
        }
        EvaluationMode::IndependentAxes
    };

    let mut pairs = Vec::new();
    for (p, m) in pos.iter().zip(mom) {
        if p.grid().dims() != m.grid().dims() {
            return Err(Error::DimensionMismatch(format!(
                "position grid has {} dimensions, momentum grid {}",
                p.grid().dims(),
                m.grid().dims()
            )));
        }
        for i in 0..p.grid().dims() {
            pairs.push([
                (p.grid().axes(Party::A)[i], m.grid().axes(Party::A)[i]),
                (p.grid().axes(Party::B)[i], m.grid().axes(Party::B)[i]),
            ]);
        }
    }
    Ok((mode, pairs))
}

fn party_slot(party: Party) -> usize {
    match party {
        Party::A => 0,
        Party::B => 1,
    }
}

/// `sum_i log(pi e / (dx_i dk_i))` over the steered party's windows.
pub fn conditional_bound(
    pos: &[JointDistribution],
    mom: &[JointDistribution],
    steered: Party,
    base: LogBase,
) -> Result<f64> {
    let (_, pairs) = pair_axes(pos, mom)?;
    pairs.iter().try_fold(0.0, |acc, pair| {
        let (x, k) = pair[party_slot(steered)];
        Ok(acc + per_dim_bound(x.window_width(), k.window_width(), base)?)
    })
}

/// Largest over the two parties of `log(prod_i Lx_i Lk_i / (pi e)^n)`.
pub fn symmetric_bound(
    pos: &[JointDistribution],
    mom: &[JointDistribution],
    base: LogBase,
) -> Result<f64> {
    let (_, pairs) = pair_axes(pos, mom)?;
    let for_party = |party: Party| -> f64 {
        pairs
            .iter()
            .map(|pair| {
                let (x, k) = pair[party_slot(party)];
                base.log(x.extent() * k.extent() / PI_E)
            })
            .sum()
    };
    Ok(for_party(Party::A).max(for_party(Party::B)))
}

/// Conditional-entropy steering inequality in the given direction.
pub fn conditional_witness(
    pos: &[JointDistribution],
    mom: &[JointDistribution],
    direction: Direction,
    base: LogBase,
) -> Result<WitnessResult> {
    let (conditioning, steered) = direction.parties().ok_or_else(|| {
        Error::InvalidParameter("conditional witness needs a B_given_A or A_given_B direction".into())
    })?;
    let (mode, _) = pair_axes(pos, mom)?;
    let bound = conditional_bound(pos, mom, steered, base)?;
    let lhs: f64 = pos
        .iter()
        .chain(mom)
        .map(|d| conditional_entropy(d, conditioning, base).value)
        .sum();
    Ok(WitnessResult {
        direction,
        mode,
        lhs: EntropyValue { value: lhs, base },
        bound,
        margin: bound - lhs,
        significance_sigma: None,
    })
}

/// Mutual-information steering inequality, symmetric between the parties.
pub fn symmetric_witness(
    pos: &[JointDistribution],
    mom: &[JointDistribution],
    base: LogBase,
) -> Result<WitnessResult> {
    let (mode, _) = pair_axes(pos, mom)?;
    let bound = symmetric_bound(pos, mom, base)?;
    let lhs: f64 = pos
        .iter()
        .chain(mom)
        .map(|d| mutual_information(d, base).value)
        .sum();
    Ok(WitnessResult {
        direction: Direction::Symmetric,
        mode,
        lhs: EntropyValue { value: lhs, base },
        bound,
        margin: lhs - bound,
        significance_sigma: None,
    })
}

/// Dispatch on `direction`.
pub fn evaluate(
    pos: &[JointDistribution],
    mom: &[JointDistribution],
    direction: Direction,
    base: LogBase,
) -> Result<WitnessResult> {
    match direction {
        Direction::Symmetric => symmetric_witness(pos, mom, base),
        d => conditional_witness(pos, mom, d, base),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::marginalize;
    use crate::entropy::entropy;
    use crate::grid::GridSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const LX: f64 = 1.04e-3;
    const LK: f64 = 1.00e5;

    fn reference_grid(observable: Observable, n: usize) -> GridSpec {
        let extent = match observable {
            Observable::Position => LX,
            Observable::Momentum => LK,
        };
        GridSpec::symmetric(observable, vec![AxisGrid::centered(n, extent).unwrap()]).unwrap()
    }

    fn diag(observable: Observable, n: usize) -> JointDistribution {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0 / n as f64;
        }
        JointDistribution::new(reference_grid(observable, n), v).unwrap()
    }

    fn uniform(observable: Observable, n: usize) -> JointDistribution {
        JointDistribution::new(reference_grid(observable, n), vec![1.0 / (n * n) as f64; n * n]).unwrap()
    }

    #[test]
    fn per_dim_bound_examples() {
        let b = LogBase::BITS;
        assert_abs_diff_eq!(per_dim_bound(PI, E, b).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(per_dim_bound(PI / 2.0, E, b).unwrap(), 1.0, epsilon = 1e-15);
        let v = per_dim_bound(LX / 24.0, LK / 24.0, b).unwrap();
        assert_abs_diff_eq!(v, (PI_E * 576.0 / 104.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 5.564, epsilon = 5e-4);
        assert!(matches!(
            per_dim_bound(0.0, 1.0, b),
            Err(Error::NonpositiveWindow { .. })
        ));
        assert!(per_dim_bound(1.0, -2.0, b).is_err());
    }

    #[test]
    fn product_state_is_not_steering() {
        let r = conditional_witness(
            &[uniform(Observable::Position, 8)],
            &[uniform(Observable::Momentum, 8)],
            Direction::BGivenA,
            LogBase::BITS,
        )
        .unwrap();
        assert_abs_diff_eq!(r.lhs.value, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.bound, (PI_E * 64.0 / 104.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.margin, r.bound - 6.0, epsilon = 1e-12);
        assert!(!r.violated());

        // two axes of the same product state: twice the bound and twice the lhs
        let two = conditional_witness(
            &[uniform(Observable::Position, 8), uniform(Observable::Position, 8)],
            &[uniform(Observable::Momentum, 8), uniform(Observable::Momentum, 8)],
            Direction::BGivenA,
            LogBase::BITS,
        )
        .unwrap();
        assert_abs_diff_eq!(two.bound, 2.0 * (PI_E * 64.0 / 104.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(two.bound, 4.788, epsilon = 5e-4);
        assert_abs_diff_eq!(two.lhs.value, 12.0, epsilon = 1e-12);
        assert!(!two.violated());
    }

    #[test]
    fn perfect_correlation_witnesses_from_four_windows() {
        for n in [2, 3, 4, 6, 8, 12, 24] {
            let r = conditional_witness(
                &[diag(Observable::Position, n)],
                &[diag(Observable::Momentum, n)],
                Direction::BGivenA,
                LogBase::BITS,
            )
            .unwrap();
            assert_eq!(r.lhs.value, 0.0);
            assert_eq!(r.margin, r.bound);
            assert_eq!(r.violated(), n >= 4, "n = {n}");
        }
    }

    #[test]
    fn symmetric_examples() {
        let b = LogBase::BITS;
        let r = symmetric_witness(
            &[diag(Observable::Position, 24)],
            &[diag(Observable::Momentum, 24)],
            b,
        )
        .unwrap();
        assert_abs_diff_eq!(r.lhs.value, 2.0 * 24f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.lhs.value, 9.170, epsilon = 5e-4);
        assert_abs_diff_eq!(r.bound, (104.0 / PI_E).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.bound, 3.606, epsilon = 5e-4);
        assert_abs_diff_eq!(r.margin, 5.564, epsilon = 5e-4);

        let p = symmetric_witness(
            &[uniform(Observable::Position, 24)],
            &[uniform(Observable::Momentum, 24)],
            b,
        )
        .unwrap();
        assert_abs_diff_eq!(p.lhs.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.margin, -p.bound, epsilon = 1e-12);
        assert!(p.margin < 0.0);
    }

    #[test]
    fn min_resolution_examples() {
        assert_eq!(min_resolution(LX, LK).unwrap(), 4);
        assert_eq!(min_resolution(PI, E).unwrap(), 2);
        assert_eq!(min_resolution(0.1, 1.0).unwrap(), 1);
        assert_eq!(min_resolution(4.0 * PI, 4.0 * E).unwrap(), 5);
        assert!(matches!(
            min_resolution(0.0, 1.0),
            Err(Error::NonpositiveExtent { .. })
        ));
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let p = diag(Observable::Position, 4);
        let m = diag(Observable::Momentum, 4);
        assert!(matches!(
            conditional_witness(&[p.clone()], &[], Direction::BGivenA, LogBase::BITS),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(conditional_witness(&[m.clone()], &[p.clone()], Direction::BGivenA, LogBase::BITS).is_err());
        assert!(conditional_witness(&[p], &[m], Direction::Symmetric, LogBase::BITS).is_err());
    }

    #[test]
    fn independent_axes_sum_per_axis() {
        let b = LogBase::BITS;
        let px = diag(Observable::Position, 8);
        let mx = uniform(Observable::Momentum, 8);
        let one = conditional_witness(&[px.clone()], &[mx.clone()], Direction::BGivenA, b).unwrap();
        let two = conditional_witness(
            &[px.clone(), px.clone()],
            &[mx.clone(), mx.clone()],
            Direction::BGivenA,
            b,
        )
        .unwrap();
        assert_eq!(two.mode, EvaluationMode::IndependentAxes);
        assert_abs_diff_eq!(two.lhs.value, 2.0 * one.lhs.value, epsilon = 1e-12);
        assert_abs_diff_eq!(two.bound, 2.0 * one.bound, epsilon = 1e-12);

        // the full 4-D tensor of independent axes gives the same answer
        let fp = JointDistribution::from_independent_axes(&[px.clone(), px]).unwrap();
        let fm = JointDistribution::from_independent_axes(&[mx.clone(), mx]).unwrap();
        let full = conditional_witness(&[fp], &[fm], Direction::BGivenA, b).unwrap();
        assert_eq!(full.mode, EvaluationMode::FullJoint);
        assert_abs_diff_eq!(full.lhs.value, two.lhs.value, epsilon = 1e-12);
        assert_abs_diff_eq!(full.bound, two.bound, epsilon = 1e-12);
    }

    fn random_pair(obs: Observable) -> impl Strategy<Value = JointDistribution> {
        let extent = match obs {
            Observable::Position => LX,
            Observable::Momentum => LK,
        };
        (1usize..7, 1usize..7).prop_flat_map(move |(na, nb)| {
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], na * nb)
                .prop_filter("nonzero", |v| v.iter().sum::<f64>() > 0.0)
                .prop_map(move |v| {
                    let g = GridSpec::new(
                        obs,
                        vec![AxisGrid::centered(na, extent).unwrap()],
                        vec![AxisGrid::centered(nb, extent * 1.3).unwrap()],
                    )
                    .unwrap();
                    JointDistribution::from_weights(g, v).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn asymmetry_identity(p in random_pair(Observable::Position), m in random_pair(Observable::Momentum)) {
            let b = LogBase::BITS;
            let ba = conditional_witness(&[p.clone()], &[m.clone()], Direction::BGivenA, b).unwrap();
            let ab = conditional_witness(&[p.clone()], &[m.clone()], Direction::AGivenB, b).unwrap();
            let h = |d: &JointDistribution, party| entropy(&marginalize(d, party), b).unwrap().value;
            let marg = h(&p, Party::A) + h(&m, Party::A) - h(&p, Party::B) - h(&m, Party::B);
            let bound_b = conditional_bound(&[p.clone()], &[m.clone()], Party::B, b).unwrap();
            let bound_a = conditional_bound(&[p.clone()], &[m.clone()], Party::A, b).unwrap();
            prop_assert!(((ba.margin - ab.margin) - (marg + bound_b - bound_a)).abs() <= 1e-12);
        }

        #[test]
        fn symmetric_witness_swap_invariant(p in random_pair(Observable::Position), m in random_pair(Observable::Momentum)) {
            let b = LogBase::BITS;
            let r = symmetric_witness(&[p.clone()], &[m.clone()], b).unwrap();
            let s = symmetric_witness(&[p.swap_parties()], &[m.swap_parties()], b).unwrap();
            prop_assert_eq!(r.bound, s.bound);
            prop_assert!((r.lhs.value - s.lhs.value).abs() <= 1e-12);
        }

        #[test]
        fn coarse_windows_never_witness(p in random_pair(Observable::Position), m in random_pair(Observable::Momentum)) {
            // every B window pair exceeds pi e when B has at most 3 windows
            let b = LogBase::BITS;
            let nb = p.cols().max(m.cols());
            prop_assume!(nb <= 3);
            let r = conditional_witness(&[p], &[m], Direction::BGivenA, b).unwrap();
            prop_assert!(r.bound < 0.0);
            prop_assert!(r.margin < 0.0);
        }
    }
}
