//! Measurement grids: equally spaced windows along each transverse axis of
//! each party, for either the position or the momentum observable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which conjugate observable a grid discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Position,
    Momentum,
}

impl Observable {
    /// SI unit of the axis coordinate.
    pub fn unit(self) -> &'static str {
        match self {
            Observable::Position => "m",
            Observable::Momentum => "1/m",
        }
    }
}

/// One of the two photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

/// Relative tolerance on `extent = n_windows * window_width` when both are given.
pub const EXTENT_TOLERANCE: f64 = 1e-9;

/// On-disk form of an axis: the width or the extent (or both, if they
/// agree); the origin defaults to an axis centred on zero.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisGridRepr {
    n_windows: usize,
    #[serde(default)]
    window_width: Option<f64>,
    #[serde(default)]
    extent: Option<f64>,
    #[serde(default)]
    origin: Option<f64>,
}

#[derive(Serialize)]
struct AxisGridOut {
    n_windows: usize,
    window_width: f64,
    extent: f64,
    origin: f64,
}

impl TryFrom<AxisGridRepr> for AxisGrid {
    type Error = Error;

    fn try_from(raw: AxisGridRepr) -> Result<Self> {
        if raw.n_windows == 0 {
            return Err(Error::InvalidGrid("axis needs at least one window".into()));
        }
        let n = raw.n_windows as f64;
        let width = match (raw.window_width, raw.extent) {
            (Some(w), Some(l)) => {
                if !((n * w - l).abs() <= EXTENT_TOLERANCE * l.abs()) {
                    return Err(Error::InvalidGrid(format!(
                        "extent {l} differs from {} windows of width {w}",
                        raw.n_windows
                    )));
                }
                w
            }
            (Some(w), None) => w,
            (None, Some(l)) => l / n,
            (None, None) => {
                return Err(Error::InvalidGrid(
                    "axis needs window_width or extent".into(),
                ))
            }
        };
        let origin = raw.origin.unwrap_or(-0.5 * n * width);
        AxisGrid::new(raw.n_windows, width, origin)
    }
}

impl Serialize for AxisGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AxisGridOut {
            n_windows: self.n_windows,
            window_width: self.window_width,
            extent: self.extent(),
            origin: self.origin,
        }
        .serialize(s)
    }
}

/// Discretization of one spatial axis into `n_windows` equal windows.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "AxisGridRepr")]
pub struct AxisGrid {
    n_windows: usize,
    window_width: f64,
    origin: f64,
}

impl AxisGrid {
    pub fn new(n_windows: usize, window_width: f64, origin: f64) -> Result<Self> {
        if n_windows == 0 {
            return Err(Error::InvalidGrid("axis needs at least one window".into()));
        }
        if !(window_width > 0.0 && window_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "window width must be positive and finite, got {window_width}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid(format!("origin must be finite, got {origin}")));
        }
        Ok(Self {
            n_windows,
            window_width,
            origin,
        })
    }

    /// Axis of total extent `extent` centred on zero.
    pub fn centered(n_windows: usize, extent: f64) -> Result<Self> {
        if n_windows == 0 {
            return Err(Error::InvalidGrid("axis needs at least one window".into()));
        }
        Self::new(n_windows, extent / n_windows as f64, -0.5 * extent)
    }

    pub fn n_windows(&self) -> usize {
        self.n_windows
    }

    pub fn window_width(&self) -> f64 {
        self.window_width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Total viewing extent `L = N * width`.
    pub fn extent(&self) -> f64 {
        self.n_windows as f64 * self.window_width
    }

    pub fn center(&self, window: usize) -> f64 {
        self.origin + (window as f64 + 0.5) * self.window_width
    }

    /// Lower and upper edge of a window.
    pub fn window_bounds(&self, window: usize) -> (f64, f64) {
        let lo = self.origin + window as f64 * self.window_width;
        (lo, lo + self.window_width)
    }

    /// Merge adjacent windows in blocks of `factor`, starting at window 0.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_windows % factor != 0 {
            return Err(Error::NonDivisibleFactor {
                factor,
                windows: self.n_windows,
            });
        }
        Self::new(
            self.n_windows / factor,
            self.window_width * factor as f64,
            self.origin,
        )
    }
}

#[derive(Deserialize)]
struct GridSpecRepr {
    observable: Observable,
    #[serde(default)]
    unit: Option<String>,
    axes_a: Vec<AxisGrid>,
    axes_b: Vec<AxisGrid>,
}

#[derive(Serialize)]
struct GridSpecOut<'a> {
    observable: Observable,
    unit: &'static str,
    axes_a: &'a [AxisGrid],
    axes_b: &'a [AxisGrid],
}

/// Per-party, per-dimension window structure for one observable.
///
/// Cells of tensors built on this grid are ordered row-major with the
/// party-A axes first, then the party-B axes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "GridSpecRepr")]
pub struct GridSpec {
    observable: Observable,
    axes_a: Vec<AxisGrid>,
    axes_b: Vec<AxisGrid>,
}

impl TryFrom<GridSpecRepr> for GridSpec {
    type Error = Error;

    fn try_from(raw: GridSpecRepr) -> Result<Self> {
        if let Some(unit) = &raw.unit {
            if unit != raw.observable.unit() {
                return Err(Error::InvalidGrid(format!(
                    "unit {unit:?} does not match {:?} axes ({})",
                    raw.observable,
                    raw.observable.unit()
                )));
            }
        }
        for axis in raw.axes_a.iter().chain(&raw.axes_b) {
            AxisGrid::new(axis.n_windows, axis.window_width, axis.origin)?;
        }
        GridSpec::new(raw.observable, raw.axes_a, raw.axes_b)
    }
}

impl Serialize for GridSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridSpecOut {
            observable: self.observable,
            unit: self.observable.unit(),
            axes_a: &self.axes_a,
            axes_b: &self.axes_b,
        }
        .serialize(s)
    }
}

impl GridSpec {
    pub fn new(observable: Observable, axes_a: Vec<AxisGrid>, axes_b: Vec<AxisGrid>) -> Result<Self> {
        if axes_a.len() != axes_b.len() {
            return Err(Error::InvalidGrid(format!(
                "party A has {} axes but party B has {}",
                axes_a.len(),
                axes_b.len()
            )));
        }
        if axes_a.is_empty() || axes_a.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "supported dimensions are 1 and 2, got {}",
                axes_a.len()
            )));
        }
        Ok(Self {
            observable,
            axes_a,
            axes_b,
        })
    }

    /// Same axis layout for both parties.
    pub fn symmetric(observable: Observable, axes: Vec<AxisGrid>) -> Result<Self> {
        Self::new(observable, axes.clone(), axes)
    }

    pub fn observable(&self) -> Observable {
        self.observable
    }

    /// Number of spatial dimensions per party.
    pub fn dims(&self) -> usize {
        self.axes_a.len()
    }

    pub fn axes(&self, party: Party) -> &[AxisGrid] {
        match party {
            Party::A => &self.axes_a,
            Party::B => &self.axes_b,
        }
    }

    /// Tensor shape: A window counts, then B window counts.
    pub fn shape(&self) -> Vec<usize> {
        self.axes_a
            .iter()
            .chain(&self.axes_b)
            .map(AxisGrid::n_windows)
            .collect()
    }

    /// Number of cells along the flattened axes of one party.
    pub fn party_cells(&self, party: Party) -> usize {
        self.axes(party).iter().map(AxisGrid::n_windows).product()
    }

    pub fn n_cells(&self) -> usize {
        self.party_cells(Party::A) * self.party_cells(Party::B)
    }

    /// Product of window widths of one party across all dimensions.
    pub fn cell_volume(&self, party: Party) -> f64 {
        self.axes(party).iter().map(AxisGrid::window_width).product()
    }

    /// Product of extents of one party across all dimensions.
    pub fn viewing_volume(&self, party: Party) -> f64 {
        self.axes(party).iter().map(AxisGrid::extent).product()
    }

    /// Grid with the two parties exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            observable: self.observable,
            axes_a: self.axes_b.clone(),
            axes_b: self.axes_a.clone(),
        }
    }

    /// Coarsen every A axis by `factor_a` and every B axis by `factor_b`.
    pub fn coarsen(&self, factor_a: usize, factor_b: usize) -> Result<Self> {
        let axes_a = self
            .axes_a
            .iter()
            .map(|a| a.coarsen(factor_a))
            .collect::<Result<Vec<_>>>()?;
        let axes_b = self
            .axes_b
            .iter()
            .map(|a| a.coarsen(factor_b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.observable, axes_a, axes_b)
    }
}
