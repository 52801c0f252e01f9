//! Integer-factor downsampling and resolution sweeps.
//!
//! A factor `f` merges `f` adjacent windows of every axis of one party,
//! starting at window 0. Factors are per party and shared by both
//! observables, so `(r_A, r_B)` names the windows per axis each party ends
//! up with.

use std::ops::Add;

use rayon::prelude::*;
use serde::Serialize;

use crate::boot::{bootstrap, derive_seed, BootstrapConfig};
use crate::dist::{CountTensor, Histogram, JointDistribution};
use crate::entropy::LogBase;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Party};
use crate::witness::{evaluate, Direction, WitnessResult};

/// Sum blocks of `factors[i]` consecutive entries along each axis of a
/// row-major tensor.
pub fn block_sum<T>(shape: &[usize], values: &[T], factors: &[usize]) -> Result<(Vec<usize>, Vec<T>)>
where
    T: Copy + Default + Add<Output = T>,
{
    if shape.len() != factors.len() || shape.iter().product::<usize>() != values.len() {
        return Err(Error::ShapeMismatch {
            expected: shape.to_vec(),
            actual: vec![values.len()],
        });
    }
    for (&n, &f) in shape.iter().zip(factors) {
        if f == 0 || n % f != 0 {
            return Err(Error::NonDivisibleFactor { factor: f, windows: n });
        }
    }
    let new_shape: Vec<usize> = shape.iter().zip(factors).map(|(n, f)| n / f).collect();
    let mut out = vec![T::default(); new_shape.iter().product()];
    let mut index = vec![0usize; shape.len()];
    for &v in values {
        let mut flat = 0;
        for ((&i, &f), &n) in index.iter().zip(factors).zip(&new_shape) {
            flat = flat * n + i / f;
        }
        out[flat] = out[flat] + v;
        for axis in (0..shape.len()).rev() {
            index[axis] += 1;
            if index[axis] < shape[axis] {
                break;
            }
            index[axis] = 0;
        }
    }
    Ok((new_shape, out))
}

fn axis_factors(grid: &GridSpec, factor_a: usize, factor_b: usize) -> Vec<usize> {
    let mut f = vec![factor_a; grid.dims()];
    f.extend(std::iter::repeat(factor_b).take(grid.dims()));
    f
}

/// Merge windows of a count tensor; totals are preserved exactly.
pub fn downsample_counts(
    counts: &CountTensor,
    factor_a: usize,
    factor_b: usize,
    grid: &GridSpec,
) -> Result<(CountTensor, GridSpec)> {
    if counts.shape() != grid.shape().as_slice() {
        return Err(Error::ShapeMismatch {
            expected: grid.shape(),
            actual: counts.shape().to_vec(),
        });
    }
    let coarse = grid.coarsen(factor_a, factor_b)?;
    let (shape, summed) = block_sum(
        counts.shape(),
        counts.counts(),
        &axis_factors(grid, factor_a, factor_b),
    )?;
    Ok((CountTensor::new(shape, summed)?, coarse))
}

pub fn downsample_histogram(h: &Histogram, factor_a: usize, factor_b: usize) -> Result<Histogram> {
    let (counts, grid) = downsample_counts(h.counts(), factor_a, factor_b, h.grid())?;
    Histogram::new(counts, grid)
}

/// Merge windows of a probability tensor.
pub fn downsample_dist(dist: &JointDistribution, factor_a: usize, factor_b: usize) -> Result<JointDistribution> {
    let grid = dist.grid().coarsen(factor_a, factor_b)?;
    let (_, summed) = block_sum(
        &dist.grid().shape(),
        dist.probs(),
        &axis_factors(dist.grid(), factor_a, factor_b),
    )?;
    JointDistribution::new(grid, summed)
}

/// Windows per axis shared by every axis of every tensor.
fn base_resolution<'a>(grids: impl IntoIterator<Item = &'a GridSpec>) -> Result<usize> {
    let mut base = None;
    for g in grids {
        for axis in g.axes(Party::A).iter().chain(g.axes(Party::B)) {
            match base {
                None => base = Some(axis.n_windows()),
                Some(b) if b != axis.n_windows() => {
                    return Err(Error::InvalidGrid(format!(
                        "sweeps need one window count on every axis, found {b} and {}",
                        axis.n_windows()
                    )))
                }
                _ => {}
            }
        }
    }
    base.ok_or_else(|| Error::InvalidGrid("no tensors given".into()))
}

fn factor_for(base: usize, target: usize) -> Result<usize> {
    if target == 0 || base % target != 0 {
        return Err(Error::NonDivisibleFactor {
            factor: target,
            windows: base,
        });
    }
    Ok(base / target)
}

fn downsample_all(hists: &[Histogram], fa: usize, fb: usize) -> Result<Vec<Histogram>> {
    hists.iter().map(|h| downsample_histogram(h, fa, fb)).collect()
}

fn normalize_all(hists: &[Histogram]) -> Result<Vec<JointDistribution>> {
    hists.iter().map(Histogram::normalize).collect()
}

/// One `(r_A, r_B)` entry of an asymmetry map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub r_a: usize,
    pub r_b: usize,
    /// Point estimate; `significance_sigma` is filled when bootstrapped and
    /// the replicates were not all identical.
    pub result: WitnessResult,
    pub margin_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionSweep {
    pub base_resolution: usize,
    pub targets_a: Vec<usize>,
    pub targets_b: Vec<usize>,
    pub direction: Direction,
    /// Row-major over `targets_a` x `targets_b`.
    pub cells: Vec<SweepCell>,
}

impl ResolutionSweep {
    pub fn cell(&self, i_a: usize, i_b: usize) -> &SweepCell {
        &self.cells[i_a * self.targets_b.len() + i_b]
    }
}

/// Witness every pair of per-party resolutions, with bootstrap significance
/// when `n_boot > 0`. Each cell bootstraps from its own seed derived from
/// `(seed, r_A, r_B)`.
#[allow(clippy::too_many_arguments)]
pub fn asymmetry_map(
    pos: &[Histogram],
    mom: &[Histogram],
    targets_a: &[usize],
    targets_b: &[usize],
    direction: Direction,
    base: LogBase,
    n_boot: usize,
    seed: u64,
) -> Result<ResolutionSweep> {
    let n0 = base_resolution(pos.iter().chain(mom).map(Histogram::grid))?;
    for &r in targets_a.iter().chain(targets_b) {
        factor_for(n0, r)?;
    }
    if pos.iter().chain(mom).any(|h| h.counts().total() == 0) {
        return Err(Error::ZeroTotal);
    }
    let pairs: Vec<(usize, usize)> = targets_a
        .iter()
        .flat_map(|&a| targets_b.iter().map(move |&b| (a, b)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(r_a, r_b)| {
            let (fa, fb) = (factor_for(n0, r_a)?, factor_for(n0, r_b)?);
            let p = downsample_all(pos, fa, fb)?;
            let m = downsample_all(mom, fa, fb)?;
            let (result, margin_std) = if n_boot == 0 {
                (evaluate(&normalize_all(&p)?, &normalize_all(&m)?, direction, base)?, None)
            } else {
                let cfg = BootstrapConfig::new(n_boot, derive_seed(seed, &[r_a as u64, r_b as u64]));
                let report = bootstrap(&p, &m, direction, base, &cfg)?;
                (report.point, Some(report.margin_std))
            };
            Ok(SweepCell {
                r_a,
                r_b,
                result,
                margin_std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResolutionSweep {
        base_resolution: n0,
        targets_a: targets_a.to_vec(),
        targets_b: targets_b.to_vec(),
        direction,
        cells,
    })
}

/// One row of a resolution curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Windows per axis for both parties.
    pub resolution: usize,
    /// `1 / (dx_B dk_B)` of one axis (dimensionless).
    pub inverse_cell_area: f64,
    pub lhs: f64,
    pub bound: f64,
    pub margin: f64,
}

/// The conditional witness (B steered by A) at equal resolution for both
/// parties, one row per target.
pub fn resolution_curve(
    pos: &[Histogram],
    mom: &[Histogram],
    targets: &[usize],
    base: LogBase,
) -> Result<Vec<CurvePoint>> {
    let n0 = base_resolution(pos.iter().chain(mom).map(Histogram::grid))?;
    targets
        .iter()
        .map(|&r| {
            let f = factor_for(n0, r)?;
            let p = normalize_all(&downsample_all(pos, f, f)?)?;
            let m = normalize_all(&downsample_all(mom, f, f)?)?;
            let w = evaluate(&p, &m, Direction::BGivenA, base)?;
            let dx = p[0].grid().axes(Party::B)[0].window_width();
            let dk = m[0].grid().axes(Party::B)[0].window_width();
            Ok(CurvePoint {
                resolution: r,
                inverse_cell_area: 1.0 / (dx * dk),
                lhs: w.lhs.value,
                bound: w.bound,
                margin: w.margin,
            })
        })
        .collect()
}
