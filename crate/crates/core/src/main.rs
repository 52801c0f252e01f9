use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eprsteer::config::{InputFiles, MapValues, RunConfig};
use eprsteer::io::{emit, TensorFiles};
use eprsteer::run::{run_curve, run_map, run_synth, run_witness};
use eprsteer::selftest::run_selftest;
use eprsteer::synth::SyntheticConfig;
use eprsteer::{Direction, Error, EvaluationMode, LogBase};

#[derive(Parser)]
#[command(name = "eprsteer", version, about = "Entropic EPR-steering witnesses for position/momentum histograms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate steering witnesses and write a JSON report.
    Witness {
        #[command(flatten)]
        common: Common,
    },
    /// Witness over a grid of per-party resolutions (CSV matrix).
    Map {
        #[command(flatten)]
        common: Common,
        /// Party-A windows per axis [default: all divisors of the base]
        #[arg(long, value_delimiter = ',')]
        targets_a: Option<Vec<usize>>,
        /// Party-B windows per axis [default: all divisors of the base]
        #[arg(long, value_delimiter = ',')]
        targets_b: Option<Vec<usize>>,
        /// Quantity written to each cell
        #[arg(long, value_enum)]
        values: Option<ValuesArg>,
    },
    /// Conditional witness against equal resolution of both parties (CSV).
    Curve {
        #[command(flatten)]
        common: Common,
        /// Windows per axis [default: all divisors of the base]
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<usize>>,
    },
    /// Write synthetic double-Gaussian counts, grids and a manifest.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Data manifest (JSON) listing count CSVs and grids
    #[arg(long, conflicts_with_all = ["pos", "mom", "synthetic"])]
    data: Option<PathBuf>,
    /// Position count CSV (repeat once per axis); grid read from NAME.grid.json
    #[arg(long, requires = "mom")]
    pos: Vec<PathBuf>,
    /// Momentum count CSV (repeat once per axis); grid read from NAME.grid.json
    #[arg(long, requires = "pos")]
    mom: Vec<PathBuf>,
    /// Use synthetic double-Gaussian counts
    #[arg(long)]
    synthetic: bool,
    /// Logarithm base: 2, e or 10
    #[arg(long, value_parser = parse_base)]
    base: Option<LogBase>,
    /// Bootstrap replicates (0 disables the bootstrap)
    #[arg(long)]
    boot: Option<usize>,
    /// Seed for the bootstrap and for synthetic sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Witness to evaluate (repeatable)
    #[arg(long, value_enum)]
    direction: Vec<DirectionArg>,
    /// Tensor layout for two transverse axes
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Counts added to every cell before analysis
    #[arg(long)]
    pseudocount: Option<u64>,
    /// Synthetic: windows per axis
    #[arg(long)]
    resolution: Option<usize>,
    /// Synthetic: transverse dimensions (1 or 2)
    #[arg(long)]
    dims: Option<usize>,
    /// Synthetic: expected coincidences per tensor
    #[arg(long)]
    counts: Option<u64>,
    /// Synthetic: width of the sum mode (m)
    #[arg(long)]
    sigma_plus: Option<f64>,
    /// Synthetic: width of the difference mode (m)
    #[arg(long)]
    sigma_minus: Option<f64>,
    /// Synthetic: largest density mass allowed outside the viewing area
    #[arg(long)]
    tail_tolerance: Option<f64>,
    /// Output file (directory for synth); stdout when omitted
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Ba,
    Ab,
    Sym,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    IndependentAxes,
    FullJoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum ValuesArg {
    Significance,
    Margin,
}

fn parse_base(s: &str) -> Result<LogBase, String> {
    match s {
        "2" => Ok(LogBase::BITS),
        "e" => Ok(LogBase::NATS),
        "10" => Ok(LogBase::DITS),
        _ => Err(format!("expected 2, e or 10, got {s:?}")),
    }
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.data {
            cfg.input = Some(InputFiles {
                manifest: Some(m.clone()),
                ..InputFiles::default()
            });
        } else if !self.pos.is_empty() {
            cfg.input = Some(InputFiles {
                manifest: None,
                position: self.pos.iter().map(TensorFiles::from_csv).collect(),
                momentum: self.mom.iter().map(TensorFiles::from_csv).collect(),
            });
        }
        if self.synthetic && cfg.synthetic.is_none() {
            cfg.synthetic = Some(SyntheticConfig::default());
        }
        if let Some(b) = self.base {
            cfg.log_base = b;
        }
        if let Some(n) = self.boot {
            cfg.n_boot = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.direction.is_empty() {
            cfg.directions = self
                .direction
                .iter()
                .map(|d| match d {
                    DirectionArg::Ba => Direction::BGivenA,
                    DirectionArg::Ab => Direction::AGivenB,
                    DirectionArg::Sym => Direction::Symmetric,
                })
                .collect();
        }
        let mode = self.mode.map(|m| match m {
            ModeArg::IndependentAxes => EvaluationMode::IndependentAxes,
            ModeArg::FullJoint => EvaluationMode::FullJoint,
        });
        if let Some(k) = self.pseudocount {
            cfg.pseudocount = k;
        }
        let synthetic_flags = self.resolution.is_some()
            || self.dims.is_some()
            || self.counts.is_some()
            || self.sigma_plus.is_some()
            || self.sigma_minus.is_some()
            || self.tail_tolerance.is_some();
        match cfg.synthetic.as_mut() {
            Some(s) => {
                if let Some(m) = mode {
                    s.mode = m;
                }
                if let Some(seed) = self.seed {
                    s.seed = seed;
                }
                s.resolution = self.resolution.unwrap_or(s.resolution);
                s.dims = self.dims.unwrap_or(s.dims);
                s.total_counts = self.counts.unwrap_or(s.total_counts);
                s.sigma_plus = self.sigma_plus.unwrap_or(s.sigma_plus);
                s.sigma_minus = self.sigma_minus.unwrap_or(s.sigma_minus);
                s.tail_tolerance = self.tail_tolerance.unwrap_or(s.tail_tolerance);
                if s.dims == 1 {
                    s.mode = EvaluationMode::FullJoint;
                }
            }
            None if synthetic_flags => {
                return Err(Error::Config("synthetic options need --synthetic".into()))
            }
            None => cfg.mode = mode.or(cfg.mode),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Witness { common } => {
            let report = run_witness(&common.config()?)?;
            let json = serde_json::to_string_pretty(&report)? + "\n";
            emit(common.out.as_deref(), &json)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Map {
            common,
            targets_a,
            targets_b,
            values,
        } => {
            let mut cfg = common.config()?;
            cfg.targets_a = targets_a.or(cfg.targets_a);
            cfg.targets_b = targets_b.or(cfg.targets_b);
            if let Some(v) = values {
                cfg.map_values = match v {
                    ValuesArg::Significance => MapValues::Significance,
                    ValuesArg::Margin => MapValues::Margin,
                };
            }
            cfg.validate()?;
            emit(common.out.as_deref(), &run_map(&cfg)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Curve { common, targets } => {
            let mut cfg = common.config()?;
            cfg.targets = targets.or(cfg.targets);
            cfg.validate()?;
            emit(common.out.as_deref(), &run_curve(&cfg)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth { mut common } => {
            let dir = common
                .out
                .clone()
                .ok_or_else(|| Error::Config("synth needs --out DIR".into()))?;
            common.synthetic = true;
            let manifest = run_synth(&common.config()?, &dir)?;
            println!("{}", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let report = run_selftest()?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
