//! Command implementations: each takes a validated [`RunConfig`] and returns
//! the report or file contents to write.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::boot::{witness_significance, BootstrapConfig};
use crate::coarse::{asymmetry_map, resolution_curve};
use crate::config::{MapValues, RunConfig};
use crate::dist::{Histogram, JointDistribution};
use crate::entropy::LogBase;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Party};
use crate::io::{ingest, load_manifest, write_data_set, DataSet, Quantity, LIBRARY_NAME, LIBRARY_VERSION};
use crate::witness::{evaluate, min_resolution, per_dim_bound, Direction, EvaluationMode, PI_E};

/// Load the configured counts (measured or synthetic), with any pseudocount.
pub fn load_data(cfg: &RunConfig) -> Result<DataSet> {
    cfg.validate()?;
    let data = if let Some(s) = &cfg.synthetic {
        let (position, momentum) = s.histograms()?;
        DataSet { position, momentum }
    } else {
        let input = cfg.input.as_ref().expect("validated");
        match &input.manifest {
            Some(m) => load_manifest(m)?,
            None => {
                let load = |files: &[crate::io::TensorFiles]| -> Result<Vec<Histogram>> {
                    files.iter().map(|f| ingest(&f.counts, &f.grid)).collect()
                };
                let d = DataSet {
                    position: load(&input.position)?,
                    momentum: load(&input.momentum)?,
                };
                d.check()?;
                d
            }
        }
    };
    if let Some(mode) = cfg.mode {
        if mode != data.mode() {
            return Err(Error::DimensionMismatch(format!(
                "requested {mode:?} but the data has {} tensor(s) per observable",
                data.position.len()
            )));
        }
    }
    if cfg.pseudocount > 0 {
        data.with_pseudocount(cfg.pseudocount)
    } else {
        Ok(data)
    }
}

fn normalize_all(hists: &[Histogram]) -> Result<Vec<JointDistribution>> {
    hists.iter().map(Histogram::normalize).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogBaseInfo {
    pub value: f64,
    pub unit: String,
}

impl From<LogBase> for LogBaseInfo {
    fn from(b: LogBase) -> Self {
        Self {
            value: b.value(),
            unit: b.unit(),
        }
    }
}

/// Resolution limits of one party on one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisBound {
    pub axis: usize,
    pub party: Party,
    pub window_position: Quantity,
    pub window_momentum: Quantity,
    /// `log(pi e / (dx dk))`.
    pub window_bound: Quantity,
    /// `log(Lx Lk / (pi e))`.
    pub viewing_bound: Quantity,
    /// Fewest windows per axis for which `dx dk < pi e` at these extents.
    pub min_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessEntry {
    pub direction: Direction,
    pub lhs: Quantity,
    pub bound: Quantity,
    pub margin: Quantity,
    pub violated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub n_boot: usize,
    pub seed: u64,
    pub margin_mean: Quantity,
    pub margin_std: Quantity,
    pub significance: Quantity,
    pub rejected_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub library: String,
    pub version: String,
    pub config_sha256: String,
    pub log_base: LogBaseInfo,
    pub mode: EvaluationMode,
    pub pi_e: f64,
    pub totals: Quantity,
    pub resolution_bounds: Vec<AxisBound>,
    pub witnesses: Vec<WitnessEntry>,
    pub position_grids: Vec<GridSpec>,
    pub momentum_grids: Vec<GridSpec>,
    pub config: RunConfig,
}

fn axis_bounds(data: &DataSet, base: LogBase) -> Result<Vec<AxisBound>> {
    // one axis pair per tensor axis, in the order the witness sums them
    let pairs = data.position.iter().zip(&data.momentum).flat_map(|(p, m)| {
        let (pg, mg) = (p.grid().clone(), m.grid().clone());
        (0..pg.dims()).map(move |i| (pg.clone(), mg.clone(), i))
    });
    let mut out = Vec::new();
    for (axis, (pg, mg, i)) in pairs.enumerate() {
        for party in [Party::A, Party::B] {
            let (x, k) = (pg.axes(party)[i], mg.axes(party)[i]);
            out.push(AxisBound {
                axis,
                party,
                window_position: Quantity::new(x.window_width(), pg.observable().unit()),
                window_momentum: Quantity::new(k.window_width(), mg.observable().unit()),
                window_bound: Quantity::entropy(per_dim_bound(x.window_width(), k.window_width(), base)?, base),
                viewing_bound: Quantity::entropy(base.log(x.extent() * k.extent() / PI_E), base),
                min_resolution: min_resolution(x.extent(), k.extent())?,
            });
        }
    }
    Ok(out)
}

/// Evaluate the configured witnesses, with bootstrap significance when
/// `n_boot > 0`.
pub fn run_witness(cfg: &RunConfig) -> Result<WitnessReport> {
    let data = load_data(cfg)?;
    let base = cfg.log_base;
    let pos = normalize_all(&data.position)?;
    let mom = normalize_all(&data.momentum)?;
    let witnesses = cfg
        .directions
        .iter()
        .map(|&direction| {
            let (point, bootstrap) = if cfg.n_boot == 0 {
                (evaluate(&pos, &mom, direction, base)?, None)
            } else {
                let r = witness_significance(
                    &data.position,
                    &data.momentum,
                    direction,
                    base,
                    &BootstrapConfig::new(cfg.n_boot, cfg.seed),
                )?;
                let summary = BootstrapSummary {
                    n_boot: r.n_boot,
                    seed: r.seed,
                    margin_mean: Quantity::entropy(r.margin_mean, base),
                    margin_std: Quantity::entropy(r.margin_std, base),
                    significance: Quantity::new(r.significance.expect("checked"), "sigma"),
                    rejected_replicates: r.rejected,
                };
                (r.point, Some(summary))
            };
            Ok(WitnessEntry {
                direction,
                lhs: Quantity::entropy(point.lhs.value, base),
                bound: Quantity::entropy(point.bound, base),
                margin: Quantity::entropy(point.margin, base),
                violated: point.violated(),
                bootstrap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total: u64 = data.position.iter().chain(&data.momentum).map(|h| h.counts().total()).sum();
    Ok(WitnessReport {
        library: LIBRARY_NAME.into(),
        version: LIBRARY_VERSION.into(),
        config_sha256: cfg.hash()?,
        log_base: base.into(),
        mode: data.mode(),
        pi_e: PI_E,
        totals: Quantity::new(total as f64, "coincidences"),
        resolution_bounds: axis_bounds(&data, base)?,
        witnesses,
        position_grids: data.position.iter().map(|h| h.grid().clone()).collect(),
        momentum_grids: data.momentum.iter().map(|h| h.grid().clone()).collect(),
        config: cfg.clone(),
    })
}

fn base_windows(data: &DataSet) -> usize {
    data.position[0].grid().axes(Party::A)[0].n_windows()
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn header(cfg: &RunConfig, out: &mut String) -> Result<()> {
    writeln!(out, "# {LIBRARY_NAME} {LIBRARY_VERSION}").ok();
    writeln!(out, "# config sha256 {}", cfg.hash()?).ok();
    writeln!(
        out,
        "# log base {} ({}); pi*e = {}",
        cfg.log_base.value(),
        cfg.log_base.unit(),
        PI_E
    )
    .ok();
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Matrix of witness values over `(r_A, r_B)`: rows are party A's windows
/// per axis, columns party B's.
pub fn run_map(cfg: &RunConfig) -> Result<String> {
    let data = load_data(cfg)?;
    let n0 = base_windows(&data);
    let targets_a = cfg.targets_a.clone().unwrap_or_else(|| divisors(n0));
    let targets_b = cfg.targets_b.clone().unwrap_or_else(|| divisors(n0));
    let direction = cfg.directions[0];
    let n_boot = match cfg.map_values {
        MapValues::Significance if cfg.n_boot < crate::boot::MIN_REPLICATES => {
            return Err(Error::InvalidParameter(format!(
                "a significance map needs at least {} bootstrap replicates",
                crate::boot::MIN_REPLICATES
            )))
        }
        MapValues::Significance => cfg.n_boot,
        MapValues::Margin => 0,
    };
    let sweep = asymmetry_map(
        &data.position,
        &data.momentum,
        &targets_a,
        &targets_b,
        direction,
        cfg.log_base,
        n_boot,
        cfg.seed,
    )?;

    let mut out = String::new();
    header(cfg, &mut out)?;
    let (what, unit) = match cfg.map_values {
        MapValues::Significance => ("significance", "sigma".to_string()),
        MapValues::Margin => ("margin", cfg.log_base.unit()),
    };
    let direction_name = serde_json::to_value(direction)?;
    writeln!(
        out,
        "# {what} [{unit}] of the {} witness; positive = violation; blank = undefined",
        direction_name.as_str().unwrap_or_default()
    )
    .ok();
    writeln!(out, "# rows: party A windows per axis; columns: party B windows per axis").ok();
    let cols: Vec<String> = targets_b.iter().map(usize::to_string).collect();
    writeln!(out, "r_a\\r_b,{}", cols.join(",")).ok();
    for (i, r_a) in targets_a.iter().enumerate() {
        let row: Vec<String> = (0..targets_b.len())
            .map(|j| {
                let c = sweep.cell(i, j);
                match cfg.map_values {
                    MapValues::Significance => fmt_opt(c.result.significance_sigma),
                    MapValues::Margin => c.result.margin.to_string(),
                }
            })
            .collect();
        writeln!(out, "{r_a},{}", row.join(",")).ok();
    }
    Ok(out)
}

/// Conditional witness at equal resolution for both parties.
pub fn run_curve(cfg: &RunConfig) -> Result<String> {
    let data = load_data(cfg)?;
    let targets = cfg.targets.clone().unwrap_or_else(|| divisors(base_windows(&data)));
    let curve = resolution_curve(&data.position, &data.momentum, &targets, cfg.log_base)?;
    let unit = cfg.log_base.unit();
    let mut out = String::new();
    header(cfg, &mut out)?;
    writeln!(
        out,
        "resolution [windows],inverse_cell_area [1],lhs [{unit}],bound [{unit}],margin [{unit}]"
    )
    .ok();
    for p in curve {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.resolution, p.inverse_cell_area, p.lhs, p.bound, p.margin
        )
        .ok();
    }
    Ok(out)
}

/// Write synthetic counts, grids and a manifest into `dir`.
pub fn run_synth(cfg: &RunConfig, dir: &Path) -> Result<PathBuf> {
    let s = cfg
        .synthetic
        .as_ref()
        .ok_or_else(|| Error::Config("synth needs synthetic parameters".into()))?;
    let data = load_data(cfg)?;
    let generator = serde_json::json!({
        "library": LIBRARY_NAME,
        "version": LIBRARY_VERSION,
        "config_sha256": cfg.hash()?,
        "synthetic": s,
    });
    write_data_set(dir, &data, Some(generator))
}
