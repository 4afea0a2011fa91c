//! Command-line surface and the TOML configuration schema.
//!
//! Every parameter is optional at parse time. The effective value is the
//! command-line flag, else the config file entry, else the built-in default,
//! so each parameter block is merged field by field before it is used.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "semiwave", version, about = "Experiments for semilinear waves with time-periodic metrics")]
pub struct Cli {
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides SEMIWAVE_OUTPUT_DIR and the config file.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Do not write the gnuplot script.
    #[arg(long, global = true)]
    pub no_plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strichartz exponents, k windows and the lifespan exponent.
    Exponents(ExponentsCmd),
    /// Linear propagation with norm monitoring and snapshots.
    Simulate(SimulateCmd),
    /// Picard iteration of the Duhamel map, checked against the direct solver.
    Picard(PicardCmd),
    /// Blow-up times over a sweep of data amplitudes.
    Lifespan(LifespanCmd),
    /// Null bicharacteristic fan and escape table.
    Rays(RaysCmd),
    /// Cutoff propagator decay over multiples of the period.
    Monodromy(MonodromyCmd),
    /// Empirical constants for the contraction budget.
    Calibrate(CalibrateCmd),
    /// Fast invariant checks.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exponents(_) => "exponents",
            Self::Simulate(_) => "simulate",
            Self::Picard(_) => "picard",
            Self::Lifespan(_) => "lifespan",
            Self::Rays(_) => "rays",
            Self::Monodromy(_) => "monodromy",
            Self::Calibrate(_) => "calibrate",
            Self::Selftest => "selftest",
        }
    }
}

macro_rules! mergeable {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            /// Field-wise `self.or(other)`.
            pub fn merge(self, other: Self) -> Self {
                Self { $($field: self.$field.or(other.$field)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Unit,
    StaticBump,
    PeriodicBump,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricArgs {
    /// Metric family.
    #[arg(long = "metric", value_enum)]
    pub family: Option<MetricKind>,
    /// Bump amplitude `A`.
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// Perturbation radius `ρ`.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Period `T` (also the cutoff period for static metrics).
    #[arg(long)]
    pub period: Option<f64>,
    /// Modulation depth `m` of the periodic bump.
    #[arg(long)]
    pub mod_depth: Option<f64>,
}
mergeable!(MetricArgs { family, amplitude, rho, period, mod_depth });

impl MetricArgs {
    pub fn defaults() -> Self {
        Self {
            family: Some(MetricKind::Unit),
            amplitude: Some(0.3),
            rho: Some(1.0),
            period: Some(1.0),
            mod_depth: Some(0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    Radial,
    Cartesian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// Dirichlet walls outside the domain of dependence.
    Dod,
    /// Periodic box `[-extent, extent]^dim`.
    Periodic,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridArgs {
    #[arg(long, value_enum)]
    pub layout: Option<LayoutKind>,
    /// Space dimension `n` (radial) or box dimension (cartesian).
    #[arg(long = "n", alias = "dim")]
    pub n: Option<usize>,
    /// Mesh width.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryKind>,
    /// Half-width of the periodic box.
    #[arg(long)]
    pub extent: Option<f64>,
}
mergeable!(GridArgs { layout, n, h, boundary, extent });

impl GridArgs {
    pub fn defaults() -> Self {
        Self {
            layout: Some(LayoutKind::Radial),
            n: Some(3),
            h: Some(0.02),
            boundary: Some(BoundaryKind::Dod),
            extent: Some(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignKind {
    Focusing,
    Defocusing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    Pure,
    Smoothed,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityArgs {
    /// Power `k` of the nonlinearity.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, value_enum)]
    pub sign: Option<SignKind>,
    #[arg(long, value_enum)]
    pub form: Option<FormKind>,
    /// Smoothing scale of the smoothed power.
    #[arg(long)]
    pub mu: Option<f64>,
}
mergeable!(NonlinearityArgs { k, sign, form, mu });

impl NonlinearityArgs {
    pub fn defaults() -> Self {
        Self { k: Some(4.0), sign: Some(SignKind::Focusing), form: Some(FormKind::Pure), mu: Some(0.1) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// Seeded wave-packet superposition.
    Packets,
    /// `u = χ(|x|)`, `u_t = 0`.
    Bump,
    /// Exact radial pulse (three dimensions).
    Pulse,
    /// Spatially constant `u = 1` (periodic grids).
    Constant,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataArgs {
    #[arg(long = "data", value_enum)]
    pub kind: Option<DataKind>,
    /// Energy-space norm of the data (sup norm for constant data).
    #[arg(long)]
    pub data_norm: Option<f64>,
}
mergeable!(DataArgs { kind, data_norm });

impl DataArgs {
    pub fn defaults(kind: DataKind) -> Self {
        Self { kind: Some(kind), data_norm: Some(0.2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeKind {
    Local,
    Global,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsCmd {
    /// Space dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Nonlinearity power.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeKind>,
    /// Largest dimension in the window table.
    #[arg(long)]
    pub table_max_n: Option<usize>,
}
mergeable!(ExponentsCmd { n, k, gamma, regime, table_max_n });

impl ExponentsCmd {
    pub fn defaults() -> Self {
        Self { n: None, k: None, gamma: Some(1.0), regime: Some(RegimeKind::Global), table_max_n: Some(10) }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// Final time.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Exponents `q` of the monitored `L^q` norms.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub q_list: Option<Vec<f64>>,
    /// Order of the `Ḣ^γ` norm (periodic cartesian grids only).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Approximate number of norm rows.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Number of snapshot intervals; 0 disables snapshots.
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Mesh widths of a resolution ladder rerunning the same setup.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub ladder: Option<Vec<f64>>,
}
mergeable!(SimulateArgs { horizon, q_list, gamma, rows, snapshots, ladder });

impl SimulateArgs {
    pub fn defaults() -> Self {
        Self { horizon: Some(2.0), q_list: Some(vec![8.0]), gamma: None, rows: Some(200), snapshots: Some(0), ladder: None }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub simulate: SimulateArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardArgs {
    /// Existence interval `[0, T1]`.
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Constants file written by `calibrate`; caps `T1` by the budget interval.
    #[arg(long)]
    pub constants: Option<PathBuf>,
}
mergeable!(PicardArgs { t1, tol, max_iters, constants });

impl PicardArgs {
    pub fn defaults() -> Self {
        Self { t1: Some(1.0), tol: Some(1e-10), max_iters: Some(50), constants: None }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardCmd {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub nonlinearity: NonlinearityArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub picard: PicardArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifespanArgs {
    /// Data amplitudes, strictly decreasing.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Blow-up threshold on `max |u|`.
    #[arg(long)]
    pub threshold: Option<f64>,
}
mergeable!(LifespanArgs { epsilons, horizon, threshold });

impl LifespanArgs {
    pub fn defaults() -> Self {
        Self { epsilons: None, horizon: Some(4.0), threshold: Some(1e6) }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifespanCmd {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub nonlinearity: NonlinearityArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub lifespan: LifespanArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaysArgs {
    /// Escape radii `R`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub r_values: Option<Vec<f64>>,
    #[arg(long)]
    pub n_rays: Option<usize>,
    /// Spatial dimension of the rays.
    #[arg(long)]
    pub ray_dim: Option<usize>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    /// RK4 step in `σ`.
    #[arg(long)]
    pub step: Option<f64>,
    /// Number of rays whose paths are written out.
    #[arg(long)]
    pub trace: Option<usize>,
}
mergeable!(RaysArgs { r_values, n_rays, ray_dim, sigma_max, step, trace });

impl RaysArgs {
    pub fn defaults() -> Self {
        Self {
            r_values: None,
            n_rays: Some(200),
            ray_dim: Some(3),
            sigma_max: Some(20.0),
            step: Some(0.002),
            trace: Some(0),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaysCmd {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub rays: RaysArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonodromyArgs {
    /// Numbers of periods `N`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    pub probes: Option<usize>,
    /// Power-iteration refinements per probe.
    #[arg(long)]
    pub refinements: Option<usize>,
    /// Grid size budget in nodes; larger `N` are skipped.
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Random states for the period-shift check; 0 disables it.
    #[arg(long)]
    pub periodicity_states: Option<usize>,
    /// `N` of the composed period-map check; 0 disables it.
    #[arg(long)]
    pub group_n: Option<usize>,
}
mergeable!(MonodromyArgs { n_values, probes, refinements, max_nodes, periodicity_states, group_n });

impl MonodromyArgs {
    pub fn defaults() -> Self {
        Self {
            n_values: Some(vec![0, 1, 2, 3, 4, 6, 8]),
            probes: Some(4),
            refinements: Some(5),
            max_nodes: Some(50_000_000),
            periodicity_states: Some(10),
            group_n: Some(3),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonodromyCmd {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub monodromy: MonodromyArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Data norm used for the budget round trip.
    #[arg(long)]
    pub g_norm: Option<f64>,
}
mergeable!(CalibrateArgs { trials, horizon, g_norm });

impl CalibrateArgs {
    pub fn defaults() -> Self {
        Self { trials: Some(8), horizon: Some(2.0), g_norm: Some(0.1) }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateCmd {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub nonlinearity: NonlinearityArgs,
    #[command(flatten)]
    pub calibrate: CalibrateArgs,
}

/// Schema of the TOML configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub metric: MetricArgs,
    #[serde(default)]
    pub grid: GridArgs,
    #[serde(default)]
    pub nonlinearity: NonlinearityArgs,
    #[serde(default)]
    pub data: DataArgs,
    #[serde(default)]
    pub exponents: ExponentsCmd,
    #[serde(default)]
    pub simulate: SimulateArgs,
    #[serde(default)]
    pub picard: PicardArgs,
    #[serde(default)]
    pub lifespan: LifespanArgs,
    #[serde(default)]
    pub rays: RaysArgs,
    #[serde(default)]
    pub monodromy: MonodromyArgs,
    #[serde(default)]
    pub calibrate: CalibrateArgs,
}

impl Command {
    /// Fills every unset parameter from the config file, then from the defaults.
    pub fn resolve(self, file: &ConfigFile) -> Command {
        let f = file.clone();
        let metric = |m: MetricArgs| m.merge(f.metric.clone()).merge(MetricArgs::defaults());
        let grid = |g: GridArgs| g.merge(f.grid.clone()).merge(GridArgs::defaults());
        let nl = |n: NonlinearityArgs| n.merge(f.nonlinearity.clone()).merge(NonlinearityArgs::defaults());
        let data = |d: DataArgs, kind| d.merge(f.data.clone()).merge(DataArgs::defaults(kind));
        match self {
            Self::Exponents(c) => Self::Exponents(c.merge(f.exponents.clone()).merge(ExponentsCmd::defaults())),
            Self::Simulate(c) => Self::Simulate(SimulateCmd {
                metric: metric(c.metric),
                grid: grid(c.grid),
                data: data(c.data, DataKind::Packets),
                simulate: c.simulate.merge(f.simulate.clone()).merge(SimulateArgs::defaults()),
            }),
            Self::Picard(c) => Self::Picard(PicardCmd {
                metric: metric(c.metric),
                grid: grid(c.grid),
                nonlinearity: nl(c.nonlinearity),
                data: data(c.data, DataKind::Packets),
                picard: c.picard.merge(f.picard.clone()).merge(PicardArgs::defaults()),
            }),
            Self::Lifespan(c) => Self::Lifespan(LifespanCmd {
                metric: metric(c.metric),
                grid: grid(c.grid),
                nonlinearity: nl(c.nonlinearity),
                data: data(c.data, DataKind::Bump),
                lifespan: c.lifespan.merge(f.lifespan.clone()).merge(LifespanArgs::defaults()),
            }),
            Self::Rays(c) => Self::Rays(RaysCmd {
                metric: metric(c.metric),
                rays: c.rays.merge(f.rays.clone()).merge(RaysArgs::defaults()),
            }),
            Self::Monodromy(c) => Self::Monodromy(MonodromyCmd {
                metric: metric(c.metric),
                grid: grid(c.grid),
                monodromy: c.monodromy.merge(f.monodromy.clone()).merge(MonodromyArgs::defaults()),
            }),
            Self::Calibrate(c) => {
                let calibration_grid = GridArgs { h: Some(0.04), ..GridArgs::default() };
                Self::Calibrate(CalibrateCmd {
                    metric: metric(c.metric),
                    grid: c.grid.merge(f.grid.clone()).merge(calibration_grid).merge(GridArgs::defaults()),
                    nonlinearity: nl(c.nonlinearity),
                    calibrate: c.calibrate.merge(f.calibrate.clone()).merge(CalibrateArgs::defaults()),
                })
            }
            Self::Selftest => Self::Selftest,
        }
    }

    /// The resolved parameter blocks, for the report.
    pub fn echo(&self) -> serde_json::Value {
        let value = match self {
            Self::Exponents(c) => serde_json::to_value(c),
            Self::Simulate(c) => serde_json::to_value(c),
            Self::Picard(c) => serde_json::to_value(c),
            Self::Lifespan(c) => serde_json::to_value(c),
            Self::Rays(c) => serde_json::to_value(c),
            Self::Monodromy(c) => serde_json::to_value(c),
            Self::Calibrate(c) => serde_json::to_value(c),
            Self::Selftest => Ok(serde_json::Value::Null),
        };
        value.unwrap_or(serde_json::Value::Null)
    }
}
