mod config;
mod jobs;

use clap::{Args, Parser, Subcommand};
use config::{apply_overrides, Manifest};
use dissipator::experiments::data::InitialData;
use dissipator::experiments::plan::ExperimentPlan;
use dissipator::flow_fields::FieldKind;
use dissipator::{Domain, Error, Grid};
use jobs::{CheckJob, FieldJob, Job, ReportJob, SdeJob, SolveJob, Suite, SweepJob, SweepKind};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulate self-similar mixing flows and measure how fast they dissipate a passive scalar.
#[derive(Parser, Debug)]
#[command(name = "dissipator", version)]
struct Cli {
    /// Job file in manifest format; a previous run's manifest.toml reproduces that run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a job setting, e.g. `--set plan.kappas=[1e-2,1e-3]`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Root directory for run output.
    #[arg(long, env = "DISSIPATOR_OUT", default_value = "runs", global = true)]
    out: PathBuf,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for every random draw of the job.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Export a velocity snapshot.
    Field(FieldArgs),
    /// Solve the advection-diffusion equation once.
    Solve(SolveArgs),
    /// Monte Carlo values of the solution through stochastic characteristics.
    Sde(SdeArgs),
    /// Dissipation error over a list of diffusivities.
    Sweep(SweepArgs),
    /// Quantitative checks of the supporting estimates.
    Check(CheckArgs),
    /// Fit rates to every sweep.csv below a directory.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Cells across; the height follows from the aspect ratio.
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Cap on the number of stages.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args, Debug)]
struct FieldArgs {
    /// One of U, v, V, W, V-rev, zero.
    #[arg(long, value_parser = parse_field)]
    which: FieldKind,
    #[arg(long)]
    time: f64,
    #[command(flatten)]
    common: Common,
    /// Snapshot file, relative to the run directory.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_parser = parse_field, default_value = "V")]
    which: FieldKind,
    /// Initial data: a name such as `two-cell`, or an inline table such as `{kind="mode",kx=1,ky=0}`.
    #[arg(long, value_parser = parse_data, default_value = "two-cell")]
    data: InitialData,
    #[arg(long, default_value_t = 1e-3)]
    kappa: f64,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_domain, default_value = "torus")]
    domain: Domain,
    #[arg(long, default_value_t = 0.0)]
    start: f64,
    #[arg(long, default_value_t = 1.0)]
    end: f64,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<f64>,
}

#[derive(Args, Debug)]
struct SdeArgs {
    #[arg(long, value_parser = parse_field, default_value = "V")]
    which: FieldKind,
    #[arg(long, value_parser = parse_data, default_value = "two-cell")]
    data: InitialData,
    #[arg(long, default_value_t = 1e-3)]
    kappa: f64,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_domain, default_value = "box")]
    domain: Domain,
    /// Dirichlet value in the box.
    #[arg(long, default_value_t = 0.5)]
    boundary: f64,
    #[arg(long, default_value_t = 0.0)]
    start: f64,
    #[arg(long, default_value_t = 1.0)]
    end: f64,
    /// Points as `x,y`, repeatable; eight random interior points if absent.
    #[arg(long = "point", value_parser = parse_point)]
    points: Vec<[f64; 2]>,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Also solve the PDE and compare.
    #[arg(long)]
    compare: bool,
    /// Dump the path endpoints of the first point.
    #[arg(long)]
    dump: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_parser = parse_sweep_kind, default_value = "two-cell")]
    kind: SweepKind,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    kappas: Vec<f64>,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 4)]
    steps_per_pulse: usize,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, value_parser = parse_suite, default_value = "all")]
    suite: Suite,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3")]
    kappas: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Monte Carlo paths for the local-bound cross-check.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    dir: Option<PathBuf>,
}

fn parse_field(s: &str) -> Result<FieldKind, String> {
    FieldKind::parse(s).ok_or_else(|| {
        let names: Vec<_> = FieldKind::ALL.iter().map(|k| k.label()).collect();
        format!("unknown field `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    config::from_str_value(s)
}

fn parse_sweep_kind(s: &str) -> Result<SweepKind, String> {
    config::from_str_value(s)
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    config::from_str_value(s)
}

fn parse_data(s: &str) -> Result<InitialData, String> {
    if s.trim_start().starts_with('{') {
        config::from_inline_table(s)
    } else {
        config::from_inline_table(&format!("{{kind = \"{s}\"}}"))
    }
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok([p(x)?, p(y)?])
}

fn grid_size(width: usize) -> dissipator::Result<(usize, usize)> {
    let g = Grid::with_width(width)?;
    Ok((g.nx, g.ny))
}

impl Command {
    fn job(self, seed: u64) -> dissipator::Result<Job> {
        Ok(match self {
            Command::Field(a) => {
                let (nx, ny) = grid_size(a.common.grid)?;
                Job::Field(FieldJob {
                    which: a.which,
                    time: a.time,
                    alpha: a.common.alpha,
                    nx,
                    ny,
                    depth: a.common.depth,
                    export: a.export,
                })
            }
            Command::Solve(a) => {
                let (nx, ny) = grid_size(a.common.grid)?;
                Job::Solve(SolveJob {
                    which: a.which,
                    data: a.data,
                    kappa: a.kappa,
                    alpha: a.common.alpha,
                    nx,
                    ny,
                    depth: a.common.depth,
                    domain: a.domain,
                    boundary: Default::default(),
                    start: a.start,
                    end: a.end,
                    snapshot_times: a.snapshots,
                })
            }
            Command::Sde(a) => {
                let (nx, ny) = grid_size(a.common.grid)?;
                let points = if a.points.is_empty() { jobs::default_points(8, seed) } else { a.points };
                Job::Sde(SdeJob {
                    which: a.which,
                    data: a.data,
                    kappa: a.kappa,
                    alpha: a.common.alpha,
                    nx,
                    ny,
                    depth: a.common.depth,
                    domain: a.domain,
                    boundary: a.boundary,
                    start: a.start,
                    end: a.end,
                    points,
                    samples: a.samples,
                    seed,
                    compare: a.compare,
                    dump: a.dump,
                })
            }
            Command::Sweep(a) => {
                let id = config::label(&a.kind);
                let mut plan = ExperimentPlan::new(&id, a.common.alpha, &a.kappas, Grid::with_width(a.common.grid)?)?;
                plan.depth = a.common.depth;
                plan.seed = seed;
                plan.steps_per_pulse = a.steps_per_pulse;
                if a.kind == SweepKind::Universal {
                    plan.data = InitialData::TwoCellMeanZero;
                }
                Job::Sweep(SweepJob { kind: a.kind, library_level: 4, plan })
            }
            Command::Check(a) => {
                let (nx, ny) = grid_size(a.grid)?;
                Job::Check(CheckJob { suite: a.suite, alpha: a.alpha, kappas: a.kappas, nx, ny, seed, samples: a.samples })
            }
            Command::Report(a) => Job::Report(ReportJob {
                dir: a.dir.ok_or_else(|| Error::Argument("report needs --dir".into()))?,
            }),
        })
    }
}

fn run(cli: Cli) -> dissipator::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Argument(e.to_string()))?;
    }
    let manifest = match (&cli.config, cli.command) {
        (Some(path), None) => Manifest::load(path, &cli.overrides, cli.seed)?,
        (Some(_), Some(_)) => return Err(Error::Argument("give either --config or a subcommand, not both".into())),
        (None, Some(cmd)) => {
            let seed = cli.seed.unwrap_or(0);
            let job = apply_overrides(&cmd.job(seed)?, &cli.overrides)?;
            Manifest::new(seed, job)
        }
        (None, None) => return Err(Error::Argument("nothing to do; give a subcommand or --config".into())),
    };
    manifest.validate()?;
    let dir = manifest.job.out_dir().unwrap_or_else(|| cli.out.join(manifest.job.run_name()));
    eprintln!("{}: writing to {}", manifest.job.command(), dir.display());
    let record = manifest.job.run(&dir)?;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    for (k, v) in &record.summary {
        println!("{k} = {v}");
    }
    Manifest { record: Some(record), ..manifest }.save(&dir.join("manifest.toml"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Blowup { .. } => 2,
        _ => 1,
    }
}
