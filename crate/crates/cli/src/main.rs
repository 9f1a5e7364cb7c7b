use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrand_cli::config::{self, ConfigError, FunctionalMode, Grid, PovmConfig, SweepConfig};
use qrand_cli::sweep::{functional_csv, run_functional_sweep, run_sweep, sweep_csv};
use qrand_cli::table::write_atomic;
use qrand_cli::{exit, functional_svg, povm_report, solve_report, sweep_svg, white_noise_report};
use qrand_core::sdp::SolverOptions;
use qrand_core::white_noise::GnOptions;

#[derive(Parser)]
#[command(name = "qrand", version, about = "Certified randomness of quantum measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled scenario instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// CSV output; `-` or absent prints to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Hierarchy level of the moment relaxations.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    level: Option<u8>,
    /// Visibility grid START:STEP:END.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all hardware threads).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Chsh,
    Chsh3,
}

#[derive(Subcommand)]
enum Command {
    /// Full-statistics sweep over visibility at the selected levels.
    Sweep(SweepArgs),
    /// Device-independent sweep constrained only by a CHSH or CHSH3 value.
    Functional {
        #[command(flatten)]
        args: SweepArgs,
        /// Overrides the file's functional.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Upper bounds on g_N for the maximally mixed qubit.
    WhiteNoise {
        /// Ensemble sizes, 2..=12.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        n: Vec<usize>,
        #[arg(long, default_value_t = qrand_core::white_noise::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep weights uniform instead of optimizing them.
        #[arg(long)]
        uniform_weights: bool,
        /// Also report the uniform half-sphere spread for these sizes.
        #[arg(long, value_delimiter = ',')]
        hemisphere: Vec<usize>,
    },
    /// Rank bound and SDP check for a POVM on the maximally mixed state.
    Povm {
        #[arg(long)]
        config: Option<PathBuf>,
        /// sic, trine or projective.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
    },
    /// Solves an SDPA sparse-format file.
    Solve { file: PathBuf },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn source_text(path: Option<&Path>, preset: Option<&str>) -> Result<Option<String>, Failure> {
    match (path, preset) {
        (Some(p), _) => Ok(Some(config::read(p)?)),
        (None, Some(name)) => config::preset(name)
            .map(|t| Some(t.to_string()))
            .ok_or_else(|| Failure::Config(format!("unknown preset `{name}`"))),
        (None, None) => Ok(None),
    }
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, Failure> {
    let mut cfg = match source_text(args.config.as_deref(), args.preset.as_deref())? {
        Some(text) => SweepConfig::from_toml(&text)?,
        None => SweepConfig::default(),
    };
    if let Some(g) = &args.grid {
        cfg.grid = Grid::parse(g)?;
    }
    if let Some(k) = args.level {
        cfg.level = k as usize;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.out.is_some() {
        cfg.csv = args.out.clone();
    }
    if args.svg.is_some() {
        cfg.svg = args.svg.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(csv: &str, svg: Option<String>, cfg: &SweepConfig) -> Result<(), Failure> {
    match cfg.csv.as_deref() {
        Some(p) if p != Path::new("-") => write_atomic(p, csv).map_err(|e| Failure::Runtime(e.to_string()))?,
        _ => print!("{csv}"),
    }
    if let (Some(p), Some(svg)) = (cfg.svg.as_deref(), svg) {
        write_atomic(p, &svg).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let runtime = |e: qrand_core::Error| Failure::Runtime(e.to_string());
    match cli.command {
        Command::Sweep(args) => {
            let cfg = sweep_config(&args)?;
            if cfg.functional != FunctionalMode::FullStatistics {
                return Err(Failure::Config("config selects a functional; use the `functional` subcommand".into()));
            }
            let rows = run_sweep(&cfg, args.jobs).map_err(runtime)?;
            let gap = cfg.solver.gap_tol;
            emit(&sweep_csv(&rows, gap), cfg.svg.as_ref().map(|_| sweep_svg(&rows)), &cfg)?;
            let bad: Vec<_> = rows.iter().filter(|r| r.status(gap) != "ok").collect();
            for r in &bad {
                eprintln!("V = {}: {}", r.v, r.status(gap));
            }
            Ok(if bad.is_empty() { exit::SUCCESS } else { exit::PARTIAL_FAILURE })
        }
        Command::Functional { args, mode } => {
            let mut cfg = sweep_config(&args)?;
            if let Some(m) = mode {
                cfg.functional = match m {
                    Mode::Chsh => FunctionalMode::Chsh,
                    Mode::Chsh3 => FunctionalMode::Chsh3,
                };
                if args.config.is_none() && args.preset.is_none() {
                    cfg.target = cfg.functional.default_target();
                }
            }
            if cfg.functional == FunctionalMode::FullStatistics {
                return Err(Failure::Config("choose a functional with --mode or in the config".into()));
            }
            let rows = run_functional_sweep(&cfg, args.jobs).map_err(runtime)?;
            let gap = cfg.solver.gap_tol;
            emit(&functional_csv(&rows, gap), cfg.svg.as_ref().map(|_| functional_svg(&rows, cfg.functional)), &cfg)?;
            let bad: Vec<_> = rows.iter().filter(|r| r.status(gap) != "ok").collect();
            for r in &bad {
                eprintln!("V = {}: {}", r.v, r.status(gap));
            }
            Ok(if bad.is_empty() { exit::SUCCESS } else { exit::PARTIAL_FAILURE })
        }
        Command::WhiteNoise { n, restarts, seed, uniform_weights, hemisphere } => {
            let opts = GnOptions { restarts, seed, co_optimize_weights: !uniform_weights, ..Default::default() };
            let report = white_noise_report(&n, &opts, &hemisphere).map_err(|e| Failure::Config(e.to_string()))?;
            print!("{report}");
            Ok(exit::SUCCESS)
        }
        Command::Povm { config: path, preset } => {
            let text = source_text(path.as_deref(), preset.as_deref())?
                .ok_or_else(|| Failure::Config("give --config or --preset".into()))?;
            let cfg = PovmConfig::from_toml(&text)?;
            let (report, ok) = povm_report(&cfg, &SolverOptions::default()).map_err(runtime)?;
            print!("{report}");
            Ok(if ok { exit::SUCCESS } else { exit::PARTIAL_FAILURE })
        }
        Command::Solve { file } => {
            let text = config::read(&file)?;
            let (report, ok) = solve_report(&text, &SolverOptions::default()).map_err(|e| match e {
                qrand_core::Error::Parse { .. } | qrand_core::Error::MalformedSdp(_) => Failure::Config(e.to_string()),
                e => Failure::Runtime(e.to_string()),
            })?;
            print!("{report}");
            Ok(if ok { exit::SUCCESS } else { exit::PARTIAL_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG_ERROR } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(c) => c,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            exit::CONFIG_ERROR
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            exit::RUNTIME_ERROR
        }
    };
    ExitCode::from(code as u8)
}
