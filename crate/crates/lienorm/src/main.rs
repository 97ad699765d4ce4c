use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lienorm::commands::{self, ReportItem};
use lienorm::format::Metadata;
use lienorm::{CliError, Emit, Report, RunConfig};

#[derive(Parser)]
#[command(name = "lienorm", version, about = "Resonant normal forms and stability estimates for Earth-satellite secular dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the model Hamiltonian and write it with a manifest.
    Build(Common),
    /// Normalize and write the normal form, remainder and generators.
    Normalize(Common),
    /// Semimajor-axis stability estimates (J2 model).
    EstimateSemimajor(Common),
    /// Kozai-Lidov drift estimates and critical inclination (geolunisolar model).
    EstimateKozai(Common),
    /// Forced inclination over an altitude sweep.
    LaplacePlane(Common),
    /// Convexity, quasi-convexity and three-jet tests of the integrable part.
    Steepness(Common),
    /// Numerical integration from random initial conditions against the drift bounds.
    Oracle(Common),
    /// Reference tables and figure data across altitudes.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Csv,
    Json,
    Plotdata,
}

#[derive(Args)]
struct ReportArgs {
    /// Table number (1-9).
    #[arg(long, conflicts_with = "fig", required_unless_present = "fig")]
    table: Option<u32>,
    /// Figure number (1-7).
    #[arg(long)]
    fig: Option<u32>,
    /// Number of semimajor axes of figure 5.
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// `key = value` file overriding the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    emit: EmitArg,
    /// j2 or gls.
    #[arg(long)]
    model: Option<String>,
    /// Altitude above the equatorial radius, km.
    #[arg(long)]
    altitude_km: Option<f64>,
    /// Geocentric semimajor axis, km.
    #[arg(long)]
    a_star_km: Option<f64>,
    /// Semimajor axis, Earth radii.
    #[arg(long)]
    a_star: Option<f64>,
    /// Expansion order.
    #[arg(long = "N", short = 'N')]
    n: Option<u32>,
    /// Normalization order.
    #[arg(long = "M", short = 'M')]
    m: Option<u32>,
    /// Sign multiplying J2, +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    j2_sign: Option<f64>,
    /// Lower eccentricity bound of the estimate domain.
    #[arg(long)]
    e_min: Option<f64>,
    /// Upper eccentricity bound of the estimate domain.
    #[arg(long)]
    e_max: Option<f64>,
    /// Lower inclination bound of the estimate domain, rad.
    #[arg(long)]
    i_min: Option<f64>,
    /// Upper inclination bound of the estimate domain, rad.
    #[arg(long)]
    i_max: Option<f64>,
    /// Eccentricity grid points of the sup-norm.
    #[arg(long)]
    grid_e: Option<usize>,
    /// Inclination grid points of the sup-norm.
    #[arg(long)]
    grid_i: Option<usize>,
    /// Angle nodes per degree of freedom of the grid sup-norm.
    #[arg(long)]
    angle_nodes: Option<usize>,
    /// Points per axis of the steepness grid.
    #[arg(long)]
    steep_grid: Option<usize>,
    /// Highest grade of the J2 secular part used by the steepness tests (default: M).
    #[arg(long)]
    secular_grade_cap: Option<u32>,
    /// Threshold below which a determinant counts as zero.
    #[arg(long)]
    tol_zero: Option<f64>,
    /// Allowed semimajor-axis excursion, Earth radii.
    #[arg(long)]
    delta_a: Option<f64>,
    /// Allowed excursion of the action L.
    #[arg(long = "delta-L")]
    delta_l: Option<f64>,
    /// Remainder norm defining the critical inclination.
    #[arg(long)]
    i_crit_threshold: Option<f64>,
    /// Integration horizon, years.
    #[arg(long)]
    horizon: Option<f64>,
    /// Number of random initial conditions.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed of the initial-condition generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// First altitude of the sweep, km.
    #[arg(long)]
    sweep_from_km: Option<f64>,
    /// Last altitude of the sweep, km.
    #[arg(long)]
    sweep_to_km: Option<f64>,
    /// Number of evenly spaced sweep altitudes.
    #[arg(long)]
    sweep_count: Option<usize>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// use, off or refresh.
    #[arg(long)]
    cache: Option<String>,
}

impl Common {
    fn flags(&self) -> Metadata {
        let mut m = Metadata::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        let s = |v: Option<f64>| v.map(|x| x.to_string());
        let u = |v: Option<usize>| v.map(|x| x.to_string());
        put("model", self.model.clone());
        put("altitude_km", s(self.altitude_km));
        put("a_star_km", s(self.a_star_km));
        put("a_star", s(self.a_star));
        put("N", self.n.map(|x| x.to_string()));
        put("M", self.m.map(|x| x.to_string()));
        put("J2_sign", s(self.j2_sign));
        put("e_min", s(self.e_min));
        put("e_max", s(self.e_max));
        put("i_min", s(self.i_min));
        put("i_max", s(self.i_max));
        put("grid_e", u(self.grid_e));
        put("grid_i", u(self.grid_i));
        put("angle_nodes", u(self.angle_nodes));
        put("steep_grid", u(self.steep_grid));
        put("secular_grade_cap", self.secular_grade_cap.map(|x| x.to_string()));
        put("tol_zero", s(self.tol_zero));
        put("delta_a", s(self.delta_a));
        put("delta_L", s(self.delta_l));
        put("i_crit_threshold", s(self.i_crit_threshold));
        put("horizon", s(self.horizon));
        put("samples", u(self.samples));
        put("seed", self.seed.map(|x| x.to_string()));
        put("tol", s(self.tol));
        put("sweep_from_km", s(self.sweep_from_km));
        put("sweep_to_km", s(self.sweep_to_km));
        put("sweep_count", u(self.sweep_count));
        put("output", self.output.as_ref().map(|p| p.display().to_string()));
        put("cache", self.cache.clone());
        m
    }

    fn resolve(&self, command: &str) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?),
            None => None,
        };
        RunConfig::resolve(command, &self.flags(), file.as_deref())
    }

    fn emit(&self) -> Emit {
        match self.emit {
            EmitArg::Csv => Emit::Csv,
            EmitArg::Json => Emit::Json,
            EmitArg::Plotdata => Emit::Plotdata,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Build(c) => ("build", c),
        Command::Normalize(c) => ("normalize", c),
        Command::EstimateSemimajor(c) => ("estimate-semimajor", c),
        Command::EstimateKozai(c) => ("estimate-kozai", c),
        Command::LaplacePlane(c) => ("laplace-plane", c),
        Command::Steepness(c) => ("steepness", c),
        Command::Oracle(c) => ("oracle", c),
        Command::Report(r) => ("report", &r.common),
    };
    let cfg = common.resolve(name)?;
    let (report, stem): (Report, String) = match &cli.command {
        Command::Build(_) => (commands::cmd_build(&cfg)?, name.into()),
        Command::Normalize(_) => (commands::cmd_normalize(&cfg)?, name.into()),
        Command::EstimateSemimajor(_) => (commands::cmd_estimate_semimajor(&cfg)?, name.into()),
        Command::EstimateKozai(_) => (commands::cmd_estimate_kozai(&cfg)?, name.into()),
        Command::LaplacePlane(_) => (commands::cmd_laplace_plane(&cfg)?, name.into()),
        Command::Steepness(_) => (commands::cmd_steepness(&cfg)?, format!("steepness-{}", cfg.model.name())),
        Command::Oracle(_) => (commands::cmd_oracle(&cfg)?, format!("oracle-{}", cfg.model.name())),
        Command::Report(r) => {
            let (item, stem) = match (r.table, r.fig) {
                (Some(t), _) => (ReportItem::Table(t), format!("table{t}")),
                (None, Some(f)) => (ReportItem::Fig(f), format!("fig{f}")),
                (None, None) => return Err(CliError::Config("report needs --table or --fig".into())),
            };
            (commands::cmd_report(&cfg, item, r.points)?, stem)
        }
    };
    let emit = common.emit();
    let text = report.render(emit);
    lienorm::store::write_file(&cfg.output.join(format!("{stem}.{}", emit.extension())), &text)?;
    print!("{text}");
    if !report.violations.is_empty() {
        return Err(CliError::Tolerance(report.violations.join("; ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lienorm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
