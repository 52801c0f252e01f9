//! Raw coincidence-count tensors and normalized joint distributions.
//!
//! Both store cells row-major with party-A axes first, so a tensor over a
//! grid with `n` dimensions per party is also a matrix whose rows are the
//! flattened A windows and whose columns are the flattened B windows.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Party};

/// Tolerance on the total probability of a [`JointDistribution`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Compensated (Neumaier) sum.
pub(crate) fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Nonnegative integer coincidence counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountTensor {
    shape: Vec<usize>,
    counts: Vec<u64>,
    total: u64,
}

impl CountTensor {
    pub fn new(shape: Vec<usize>, counts: Vec<u64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&s| s == 0) || shape.len() % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "count tensor shape must have an even number of positive extents, got {shape:?}"
            )));
        }
        let cells: usize = shape.iter().product();
        if cells != counts.len() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: vec![counts.len()],
            });
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or(Error::CountOverflow)?;
        Ok(Self {
            shape,
            counts,
            total,
        })
    }

    /// 2-D tensor from rows (party A) of columns (party B).
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidGrid("ragged count rows".into()));
        }
        Self::new(vec![n_rows, n_cols], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Add `k` to every cell (explicit Laplace smoothing).
    pub fn with_pseudocount(&self, k: u64) -> Result<Self> {
        let counts = self
            .counts
            .iter()
            .map(|&c| c.checked_add(k).ok_or(Error::CountOverflow))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.shape.clone(), counts)
    }

    /// Per-party sums over the other party's cells, given the number of
    /// flattened A cells (rows).
    pub fn party_sums(&self, rows: usize, party: Party) -> Vec<u64> {
        let cols = self.counts.len() / rows;
        match party {
            Party::A => self
                .counts
                .chunks_exact(cols)
                .map(|row| row.iter().sum())
                .collect(),
            Party::B => {
                let mut out = vec![0u64; cols];
                for row in self.counts.chunks_exact(cols) {
                    for (o, &c) in out.iter_mut().zip(row) {
                        *o += c;
                    }
                }
                out
            }
        }
    }
}

/// Coincidence counts together with the grid they were recorded on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    counts: CountTensor,
    grid: GridSpec,
}

impl Histogram {
    pub fn new(counts: CountTensor, grid: GridSpec) -> Result<Self> {
        if counts.shape() != grid.shape().as_slice() {
            return Err(Error::ShapeMismatch {
                expected: grid.shape(),
                actual: counts.shape().to_vec(),
            });
        }
        Ok(Self { counts, grid })
    }

    pub fn counts(&self) -> &CountTensor {
        &self.counts
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn normalize(&self) -> Result<JointDistribution> {
        normalize_counts(&self.counts, &self.grid)
    }

    /// Same grid, different counts of the same shape.
    pub fn with_counts(&self, counts: CountTensor) -> Result<Self> {
        Self::new(counts, self.grid.clone())
    }
}

/// One failed check found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// Cell count does not match the grid shape.
    Shape { expected: usize, actual: usize },
    /// A cell is negative or not finite.
    Negative { index: usize, value: f64 },
    /// Total probability differs from one; `deficit = 1 - sum`.
    Normalization { sum: f64, deficit: f64 },
}

/// Check the invariants of a joint distribution without constructing one.
/// Returns every failed check; an empty list means the data are valid.
pub fn validate(grid: &GridSpec, probs: &[f64]) -> Vec<Violation> {
    let mut report = Vec::new();
    let expected = grid.n_cells();
    if probs.len() != expected {
        report.push(Violation::Shape {
            expected,
            actual: probs.len(),
        });
    }
    for (index, &value) in probs.iter().enumerate() {
        if !(value >= 0.0 && value.is_finite()) {
            report.push(Violation::Negative { index, value });
        }
    }
    let sum = stable_sum(probs.iter().copied());
    if !((sum - 1.0).abs() <= NORMALIZATION_TOLERANCE) {
        report.push(Violation::Normalization {
            sum,
            deficit: 1.0 - sum,
        });
    }
    report
}

/// Normalized probability tensor over (A windows) x (B windows).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    grid: GridSpec,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(grid: GridSpec, probs: Vec<f64>) -> Result<Self> {
        match validate(&grid, &probs).into_iter().next() {
            None => Ok(Self { grid, probs }),
            Some(Violation::Shape { .. }) => Err(Error::ShapeMismatch {
                expected: grid.shape(),
                actual: vec![probs.len()],
            }),
            Some(Violation::Negative { index, value }) => {
                Err(Error::NegativeProbability { index, value })
            }
            Some(Violation::Normalization { sum, .. }) => Err(Error::NotNormalized(sum)),
        }
    }

    /// Rescale nonnegative weights to unit total.
    pub fn from_weights(grid: GridSpec, weights: Vec<f64>) -> Result<Self> {
        let sum = stable_sum(weights.iter().copied());
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::NotNormalized(sum));
        }
        Self::new(grid, weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Flattened A cells (matrix rows).
    pub fn rows(&self) -> usize {
        self.grid.party_cells(Party::A)
    }

    /// Flattened B cells (matrix columns).
    pub fn cols(&self) -> usize {
        self.grid.party_cells(Party::B)
    }

    /// Probability of flattened A cell `a` together with flattened B cell `b`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.cols() + b]
    }

    /// Same distribution with the parties exchanged.
    pub fn swap_parties(&self) -> Self {
        let (rows, cols) = (self.rows(), self.cols());
        let mut probs = vec![0.0; self.probs.len()];
        for a in 0..rows {
            for b in 0..cols {
                probs[b * rows + a] = self.probs[a * cols + b];
            }
        }
        Self {
            grid: self.grid.swapped(),
            probs,
        }
    }

    /// Full joint tensor of statistically independent axes: the cell
    /// probability is the product of the per-axis cell probabilities.
    /// Every input must be a one-dimensional joint distribution of the same
    /// observable.
    pub fn from_independent_axes(per_axis: &[JointDistribution]) -> Result<Self> {
        let first = per_axis
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no axes given".into()))?;
        let observable = first.grid.observable();
        if per_axis
            .iter()
            .any(|d| d.grid.dims() != 1 || d.grid.observable() != observable)
        {
            return Err(Error::DimensionMismatch(
                "independent axes must be one-dimensional tensors of one observable".into(),
            ));
        }
        let axes_a = per_axis.iter().map(|d| d.grid.axes(Party::A)[0]).collect();
        let axes_b = per_axis.iter().map(|d| d.grid.axes(Party::B)[0]).collect();
        let grid = GridSpec::new(observable, axes_a, axes_b)?;
        let shape = grid.shape();
        let k = per_axis.len();

        let mut probs = Vec::with_capacity(grid.n_cells());
        let mut index = vec![0usize; shape.len()];
        for _ in 0..grid.n_cells() {
            let p: f64 = per_axis
                .iter()
                .enumerate()
                .map(|(i, d)| d.get(index[i], index[k + i]))
                .product();
            probs.push(p);
            for pos in (0..shape.len()).rev() {
                index[pos] += 1;
                if index[pos] < shape[pos] {
                    break;
                }
                index[pos] = 0;
            }
        }
        Self::from_weights(grid, probs)
    }
}

/// Empirical frequencies `count / total`.
pub fn normalize_counts(counts: &CountTensor, grid: &GridSpec) -> Result<JointDistribution> {
    if counts.shape() != grid.shape().as_slice() {
        return Err(Error::ShapeMismatch {
            expected: grid.shape(),
            actual: counts.shape().to_vec(),
        });
    }
    if counts.total() == 0 {
        return Err(Error::ZeroTotal);
    }
    let total = counts.total() as f64;
    let probs = counts.counts().iter().map(|&c| c as f64 / total).collect();
    JointDistribution::new(grid.clone(), probs)
}

/// Marginal over one party's (flattened) windows.
pub fn marginalize(dist: &JointDistribution, party: Party) -> Vec<f64> {
    let (rows, cols) = (dist.rows(), dist.cols());
    match party {
        Party::A => dist
            .probs
            .chunks_exact(cols)
            .map(|row| stable_sum(row.iter().copied()))
            .collect(),
        Party::B => (0..cols)
            .map(|b| stable_sum((0..rows).map(|a| dist.probs[a * cols + b])))
            .collect(),
    }
}
